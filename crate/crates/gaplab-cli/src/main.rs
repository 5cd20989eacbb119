use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use gaplab_cli::{commands, config::RunConfig, init_threads, Command};

/// Spectral-gap laboratory: Dirichlet ground states on convex planar domains,
/// reflection-coupled diffusions, and gap/log-concavity inequality checks.
///
/// Exit codes: 0 all selected checks pass, 1 check failure, 2 usage or config
/// error, 3 solver failure.
#[derive(Parser)]
#[command(name = "gaplab", version, about)]
struct Cli {
    /// Path to the run configuration (TOML).
    #[arg(short, long, global = true, default_value = "gaplab.toml")]
    config: PathBuf,

    /// Override grid.h from the config.
    #[arg(long, global = true)]
    h: Option<f64>,

    /// Override grid.n_1d from the config.
    #[arg(long, global = true)]
    n_1d: Option<usize>,

    /// Override sim.dt from the config.
    #[arg(long, global = true)]
    dt: Option<f64>,

    /// Override sim.seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override sim.n_traj from the config.
    #[arg(long, global = true)]
    n_traj: Option<u32>,

    /// Override output.dir from the config.
    #[arg(long, global = true)]
    output_dir: Option<String>,

    /// Add an output format (table, structured, raw-paths); repeatable.
    #[arg(long = "format", global = true)]
    formats: Vec<String>,

    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Solve the two lowest Dirichlet eigenpairs and write the artifact.
    Eigensolve,
    /// Check the log-concavity modulus of the ground state on a pair sweep.
    VerifyModulus,
    /// Run a reflection-coupled trajectory ensemble (and step statistics).
    Simulate,
    /// Check the sine contraction and the compensated-drift inequality.
    Contraction,
    /// Check the spectral gap bound and the coupling-based gap estimate.
    GapReport,
    /// Probe the drift condition and chord behavior near the boundary.
    Boundary,
    /// Run the full suite.
    All,
}

fn apply_overrides(cfg: &mut RunConfig, cli: &Cli) {
    if let Some(h) = cli.h {
        cfg.grid.h = h;
    }
    if let Some(n) = cli.n_1d {
        cfg.grid.n_1d = n;
    }
    if let Some(dt) = cli.dt {
        cfg.sim.dt = dt;
    }
    if let Some(seed) = cli.seed {
        cfg.sim.seed = seed;
    }
    if let Some(n) = cli.n_traj {
        cfg.sim.n_traj = n;
    }
    if let Some(dir) = &cli.output_dir {
        cfg.output.dir = dir.clone();
    }
    for f in &cli.formats {
        if !cfg.output.formats.contains(f) {
            cfg.output.formats.push(f.clone());
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    let mut cfg = match RunConfig::load(&cli.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("gaplab: {e:#}");
            return ExitCode::from(2);
        }
    };
    apply_overrides(&mut cfg, &cli);
    if let Err(e) = cfg.validate() {
        eprintln!("gaplab: {e:#}");
        return ExitCode::from(2);
    }
    let cmd = match cli.command {
        Sub::Eigensolve => Command::Eigensolve,
        Sub::VerifyModulus => Command::VerifyModulus,
        Sub::Simulate => Command::Simulate,
        Sub::Contraction => Command::Contraction,
        Sub::GapReport => Command::GapReport,
        Sub::Boundary => Command::Boundary,
        Sub::All => Command::All,
    };
    match commands::execute(cmd, &cfg) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("gaplab: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
