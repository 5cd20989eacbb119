//! Pass/fail records with margins: every checker returns one of these.

use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum CheckStatus {
    Pass,
    Fail,
}

/// Outcome of a single inequality check.
///
/// `margin` is the signed distance to violation (positive = inequality holds
/// with room to spare); the check passes iff `margin >= -tolerance`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerificationReport {
    pub name: String,
    pub status: CheckStatus,
    pub margin: f64,
    pub tolerance: f64,
    pub samples: u64,
    /// Ordered key/value pairs (grid spacing, time step, seeds, fitted
    /// constants, ...). A vector rather than a map so that serialization
    /// order is deterministic.
    pub metadata: Vec<(String, String)>,
}

impl VerificationReport {
    pub fn evaluate(name: &str, margin: f64, tolerance: f64, samples: u64) -> Self {
        let status = if margin >= -tolerance {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        VerificationReport {
            name: String::from(name),
            status,
            margin,
            tolerance,
            samples,
            metadata: Vec::new(),
        }
    }

    /// Force-fail a check that could not be evaluated (solver failure etc.).
    pub fn failed(name: &str, reason: &str) -> Self {
        let mut r = VerificationReport {
            name: String::from(name),
            status: CheckStatus::Fail,
            margin: f64::NEG_INFINITY,
            tolerance: 0.0,
            samples: 0,
            metadata: Vec::new(),
        };
        r.push_meta("error", reason);
        r
    }

    pub fn push_meta(&mut self, key: &str, value: impl core::fmt::Display) {
        self.metadata
            .push((String::from(key), alloc::format!("{value}")));
    }

    pub fn with_meta(mut self, key: &str, value: impl core::fmt::Display) -> Self {
        self.push_meta(key, value);
        self
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}
