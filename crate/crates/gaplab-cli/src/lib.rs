//! Library surface of the command-line tool, kept separate from the binary so
//! the integration and acceptance suites can drive it in-process.

// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifact;
pub mod commands;
pub mod config;
pub mod reports;

pub use commands::{execute, Command, RunError};
pub use config::RunConfig;

/// Thread-count override honored by the Monte Carlo drivers.
pub const THREADS_ENV: &str = "GAPLAB_THREADS";

/// Install the global rayon pool according to `GAPLAB_THREADS`, if set.
/// Safe to call more than once; later calls are ignored.
pub fn init_threads() {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}
