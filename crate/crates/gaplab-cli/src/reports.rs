//! Report emission: a machine-readable JSON document and a human table.
//! The JSON is a pure function of (config, seed), so identical runs produce
//! byte-identical files.

use anyhow::{Context, Result};
use serde::Serialize;
use std::path::Path;

use gaplab_core::report::{CheckStatus, VerificationReport};

use crate::config::RunConfig;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
pub struct ReportDocument<'a> {
    pub tool: &'static str,
    pub format_version: u32,
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub reports: &'a [VerificationReport],
    pub summary: Summary,
    /// Extra structured payloads (trajectory rows, probe profiles, ...),
    /// ordered for deterministic serialization.
    pub extras: Vec<(String, serde_json::Value)>,
}

#[derive(Serialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
}

pub fn summarize(reports: &[VerificationReport]) -> Summary {
    let passed = reports.iter().filter(|r| r.passed()).count();
    Summary {
        passed,
        failed: reports.len() - passed,
    }
}

pub fn all_passed(reports: &[VerificationReport]) -> bool {
    reports.iter().all(|r| r.passed())
}

pub fn write_structured(
    path: &Path,
    command: &str,
    config: &RunConfig,
    reports: &[VerificationReport],
    extras: Vec<(String, serde_json::Value)>,
) -> Result<()> {
    let doc = ReportDocument {
        tool: "gaplab",
        format_version: FORMAT_VERSION,
        command,
        config,
        reports,
        summary: summarize(reports),
        extras,
    };
    let mut text = serde_json::to_string_pretty(&doc).context("serializing report document")?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn print_table(reports: &[VerificationReport]) {
    // Ignore write failures (e.g. stdout piped into a closed reader).
    let _ = try_print_table(reports);
}

fn try_print_table(reports: &[VerificationReport]) -> std::io::Result<()> {
    use std::io::Write;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(
        out,
        "{:<34} {:<6} {:>14} {:>12} {:>9}",
        "check", "status", "margin", "tolerance", "samples"
    )?;
    for r in reports {
        let status = match r.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
        };
        writeln!(
            out,
            "{:<34} {:<6} {:>14.6e} {:>12.3e} {:>9}",
            r.name, status, r.margin, r.tolerance, r.samples
        )?;
        for (k, v) in &r.metadata {
            writeln!(out, "    {k} = {v}")?;
        }
    }
    let s = summarize(reports);
    writeln!(out, "passed {} / {}", s.passed, s.passed + s.failed)
}
