//! Ground-state artifact: versioned plain-text format so the simulator can
//! run without re-solving. Floats are written with 17 significant digits,
//! which round-trips f64 exactly.

use anyhow::{anyhow, bail, Context, Result};
use std::fmt::Write as _;
use std::path::Path;

use gaplab_core::eigensolver::{Eigen1d, Grid1, Grid2, GroundState};

const MAGIC: &str = "gaplab-ground-state";
const VERSION: u32 = 1;

pub enum GroundStateArtifact {
    TwoD(GroundState),
    OneD(Eigen1d),
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Canonical one-line domain fingerprint stored in the artifact, so a
/// simulate run cannot silently pair a field with the wrong geometry.
pub fn domain_fingerprint(cfg: &crate::config::RunConfig) -> String {
    let d = &cfg.domain;
    let mut s = d.kind.clone();
    let mut push = |name: &str, v: Option<f64>| {
        if let Some(v) = v {
            let _ = write!(s, " {name}={}", fmt_f(v));
        }
    };
    push("length", d.length);
    push("radius", d.radius);
    push("a", d.a);
    push("b", d.b);
    push("width", d.width);
    push("height", d.height);
    if let Some(v) = &d.vertices {
        let _ = write!(s, " vertices=");
        for (k, x) in v.iter().enumerate() {
            if k > 0 {
                let _ = write!(s, ",");
            }
            let _ = write!(s, "{}", fmt_f(*x));
        }
    }
    s
}

pub fn save(path: &Path, artifact: &GroundStateArtifact, fingerprint: &str) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} v{VERSION}");
    let _ = writeln!(out, "domain {fingerprint}");
    match artifact {
        GroundStateArtifact::TwoD(gs) => {
            let g = gs.grid();
            let (nx, ny) = g.shape();
            let o = g.origin();
            let _ = writeln!(out, "dim 2");
            let _ = writeln!(out, "origin {} {}", fmt_f(o[0]), fmt_f(o[1]));
            let _ = writeln!(out, "h {}", fmt_f(g.spacing()));
            let _ = writeln!(out, "shape {nx} {ny}");
            let _ = writeln!(out, "lambda {} {}", fmt_f(gs.lambda0), fmt_f(gs.lambda1));
            let _ = writeln!(
                out,
                "residual {} {}",
                fmt_f(gs.residual0),
                fmt_f(gs.residual1)
            );
            let _ = writeln!(out, "nodes {}", g.node_count());
            for (k, &(i, j)) in g.nodes().iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{i} {j} {} {}",
                    fmt_f(gs.phi0[k]),
                    fmt_f(gs.phi1[k])
                );
            }
        }
        GroundStateArtifact::OneD(eig) => {
            let g = eig.grid();
            let _ = writeln!(out, "dim 1");
            let _ = writeln!(out, "length {}", fmt_f(2.0 * g.half_length()));
            let _ = writeln!(out, "lambda {} {}", fmt_f(eig.lambda0), fmt_f(eig.lambda1));
            let _ = writeln!(
                out,
                "residual {} {}",
                fmt_f(eig.residual0),
                fmt_f(eig.residual1)
            );
            let _ = writeln!(out, "nodes {}", g.node_count());
            for k in 0..g.node_count() {
                let _ = writeln!(out, "{} {}", fmt_f(eig.phi0[k]), fmt_f(eig.phi1[k]));
            }
        }
    }
    std::fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

struct LineReader<'a> {
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> LineReader<'a> {
    fn next(&mut self) -> Result<&'a str> {
        self.line_no += 1;
        self.lines
            .next()
            .ok_or_else(|| anyhow!("artifact truncated at line {}", self.line_no))
    }

    fn expect_key(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let line = self.next()?;
        let mut parts = line.split_whitespace();
        let head = parts.next().unwrap_or("");
        if head != key {
            bail!(
                "artifact line {}: expected {key:?}, found {head:?}",
                self.line_no
            );
        }
        Ok(parts.collect())
    }
}

fn parse_f(s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|e| anyhow!("bad float {s:?}: {e}"))
}

pub fn load(path: &Path, expected_fingerprint: &str) -> Result<GroundStateArtifact> {
    let text = std::fs::read_to_string(path).with_context(|| {
        format!(
            "cannot read ground-state artifact {} (run `gaplab eigensolve` first)",
            path.display()
        )
    })?;
    let mut r = LineReader {
        lines: text.lines(),
        line_no: 0,
    };
    let header = r.next()?;
    if header != format!("{MAGIC} v{VERSION}") {
        bail!("unrecognized artifact header {header:?}");
    }
    let dom = r.expect_key("domain")?.join(" ");
    if dom != expected_fingerprint {
        bail!(
            "artifact was solved for domain {dom:?} but the config says {expected_fingerprint:?}; re-run `gaplab eigensolve`"
        );
    }
    let dim: usize = r.expect_key("dim")?[0].parse()?;
    match dim {
        2 => {
            let o = r.expect_key("origin")?;
            let origin = [parse_f(o[0])?, parse_f(o[1])?];
            let h = parse_f(r.expect_key("h")?[0])?;
            let s = r.expect_key("shape")?;
            let (nx, ny): (usize, usize) = (s[0].parse()?, s[1].parse()?);
            let l = r.expect_key("lambda")?;
            let (l0, l1) = (parse_f(l[0])?, parse_f(l[1])?);
            let res = r.expect_key("residual")?;
            let (r0, r1) = (parse_f(res[0])?, parse_f(res[1])?);
            let count: usize = r.expect_key("nodes")?[0].parse()?;
            let mut mask = vec![false; nx * ny];
            let mut rows = Vec::with_capacity(count);
            for _ in 0..count {
                let line = r.next()?;
                let mut p = line.split_whitespace();
                let i: usize = p.next().ok_or_else(|| anyhow!("short node row"))?.parse()?;
                let j: usize = p.next().ok_or_else(|| anyhow!("short node row"))?.parse()?;
                let phi0 = parse_f(p.next().ok_or_else(|| anyhow!("short node row"))?)?;
                let phi1 = parse_f(p.next().ok_or_else(|| anyhow!("short node row"))?)?;
                if i >= nx || j >= ny {
                    bail!("node ({i},{j}) outside shape {nx}x{ny}");
                }
                mask[j * nx + i] = true;
                rows.push((i as u32, j as u32, phi0, phi1));
            }
            let grid = Grid2::from_mask_fn(origin, h, nx, ny, |i, j| mask[j * nx + i])
                .map_err(|e| anyhow!("artifact grid invalid: {e}"))?;
            // Node order in the file must match grid enumeration order.
            if grid.node_count() != rows.len() {
                bail!("artifact node count mismatch");
            }
            let mut phi0 = Vec::with_capacity(rows.len());
            let mut phi1 = Vec::with_capacity(rows.len());
            for (k, &(i, j)) in grid.nodes().iter().enumerate() {
                let row = rows[k];
                if (row.0, row.1) != (i, j) {
                    bail!("artifact node order mismatch at index {k}");
                }
                phi0.push(row.2);
                phi1.push(row.3);
            }
            let gs = GroundState::from_parts(grid, l0, l1, phi0, phi1, r0, r1)
                .map_err(|e| anyhow!("artifact ground state invalid: {e}"))?;
            Ok(GroundStateArtifact::TwoD(gs))
        }
        1 => {
            let length = parse_f(r.expect_key("length")?[0])?;
            let l = r.expect_key("lambda")?;
            let (l0, l1) = (parse_f(l[0])?, parse_f(l[1])?);
            let res = r.expect_key("residual")?;
            let (r0, r1) = (parse_f(res[0])?, parse_f(res[1])?);
            let count: usize = r.expect_key("nodes")?[0].parse()?;
            let mut phi0 = Vec::with_capacity(count);
            let mut phi1 = Vec::with_capacity(count);
            for _ in 0..count {
                let line = r.next()?;
                let mut p = line.split_whitespace();
                phi0.push(parse_f(p.next().ok_or_else(|| anyhow!("short row"))?)?);
                phi1.push(parse_f(p.next().ok_or_else(|| anyhow!("short row"))?)?);
            }
            let grid = Grid1::new(length, count).map_err(|e| anyhow!("artifact grid: {e}"))?;
            let eig = Eigen1d::from_parts(grid, l0, l1, phi0, phi1, r0, r1)
                .map_err(|e| anyhow!("artifact eigenpair invalid: {e}"))?;
            Ok(GroundStateArtifact::OneD(eig))
        }
        other => bail!("unsupported artifact dimension {other}"),
    }
}
