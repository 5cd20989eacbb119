//! Subcommand implementations. One subcommand per process; Monte Carlo
//! ensembles fan out over rayon with index-ordered streams, so results do not
//! depend on scheduling.

use anyhow::{anyhow, Result};
use rayon::prelude::*;
use std::path::{Path, PathBuf};

use gaplab_core::coupling::{
    frozen_step_stats, simulate, simulate_observed, stream_rng, CouplingError,
    CouplingTrajectory, Outcome, SimConfig, STREAM_GAP_PAIRS, STREAM_PAIR_SAMPLING,
    STREAM_PER_PAIR, STREAM_PROBES,
};
use gaplab_core::domain::{sample_interior, ConvexDomain, Geometry, Interval, PlanarDomain};
use gaplab_core::eigensolver::{
    assemble, lowest_eigenpairs, residual_pde_gradient, residual_pde_gradient_1d, solve_1d,
    solve_interval, Eigen1d, GroundState, SolverError,
};
use gaplab_core::groundfield::{
    boundary_profile, normal_anchors, DriftField, FieldError, GridField1, GridField2,
    RatioField1, RatioField2,
};
use gaplab_core::potential::{check_convexity_modulus, Potential};
use gaplab_core::report::VerificationReport;
use gaplab_core::vecn;
use gaplab_core::verify::{
    boundary_divergence_profile, estimate_gap_from_coupling, near_diagonal_scan, sin_chord_inequality,
    supermartingale_check, verify_contraction, verify_drift_condition, verify_gap_1d,
    verify_gap_2d, verify_log_concavity_modulus, xi_dynamics_reports, DiscretizationClass,
    GapEstimate, PairEnsemble,
};

use crate::artifact::{self, GroundStateArtifact};
use crate::config::RunConfig;
use crate::reports;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Eigensolve,
    VerifyModulus,
    Simulate,
    Contraction,
    GapReport,
    Boundary,
    All,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eigensolve => "eigensolve",
            Command::VerifyModulus => "verify-modulus",
            Command::Simulate => "simulate",
            Command::Contraction => "contraction",
            Command::GapReport => "gap-report",
            Command::Boundary => "boundary",
            Command::All => "all",
        }
    }
}

/// Errors sorted by exit code: usage/config problems exit 2, solver failures 3.
#[derive(Debug)]
pub enum RunError {
    Usage(anyhow::Error),
    Solver(anyhow::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => 2,
            RunError::Solver(_) => 3,
        }
    }

    pub fn message(&self) -> String {
        match self {
            RunError::Usage(e) => format!("{e:#}"),
            RunError::Solver(e) => format!("solver failure: {e:#}"),
        }
    }
}

fn usage(e: impl Into<anyhow::Error>) -> RunError {
    RunError::Usage(e.into())
}

fn solver(e: SolverError) -> RunError {
    RunError::Solver(anyhow!("{e}"))
}

fn sim_err(e: CouplingError) -> RunError {
    RunError::Solver(anyhow!("{e}"))
}

// ---------------------------------------------------------------------------
// Solved state
// ---------------------------------------------------------------------------

enum Solved {
    TwoD {
        domain: PlanarDomain,
        potential: Potential<2>,
        gs: GroundState,
    },
    OneD {
        interval: Interval,
        potential: Potential<1>,
        eig: Eigen1d,
    },
}

impl Solved {
    fn diameter(&self) -> f64 {
        match self {
            Solved::TwoD { domain, .. } => domain.diameter(),
            Solved::OneD { interval, .. } => interval.diameter(),
        }
    }

    fn spacing(&self) -> f64 {
        match self {
            Solved::TwoD { gs, .. } => gs.grid().spacing(),
            Solved::OneD { eig, .. } => eig.grid().spacing(),
        }
    }

    fn gap(&self) -> f64 {
        match self {
            Solved::TwoD { gs, .. } => gs.gap(),
            Solved::OneD { eig, .. } => eig.gap(),
        }
    }
}

fn solve_fresh(cfg: &RunConfig) -> Result<Solved, RunError> {
    match cfg.domain().map_err(usage)? {
        ConvexDomain::Interval(interval) => {
            let potential = cfg.potential_1d().map_err(usage)?;
            let n = cfg.grid.n_1d;
            let eig = if matches!(potential, Potential::Zero) {
                solve_1d(interval.length(), &cfg.comparison_potential(), n).map_err(solver)?
            } else {
                solve_interval(interval.length(), &potential, n).map_err(solver)?
            };
            Ok(Solved::OneD {
                interval,
                potential,
                eig,
            })
        }
        ConvexDomain::Planar(domain) => {
            let potential = cfg.potential_2d().map_err(usage)?;
            let op = assemble(&domain, &potential, cfg.grid.h).map_err(solver)?;
            let gs = lowest_eigenpairs(&op).map_err(solver)?;
            Ok(Solved::TwoD {
                domain,
                potential,
                gs,
            })
        }
    }
}

fn artifact_path(cfg: &RunConfig) -> PathBuf {
    Path::new(&cfg.output.dir).join("ground_state.txt")
}

fn load_solved(cfg: &RunConfig) -> Result<Solved, RunError> {
    let fp = artifact::domain_fingerprint(cfg);
    let loaded = artifact::load(&artifact_path(cfg), &fp).map_err(usage)?;
    match (loaded, cfg.domain().map_err(usage)?) {
        (GroundStateArtifact::TwoD(gs), ConvexDomain::Planar(domain)) => Ok(Solved::TwoD {
            domain,
            potential: cfg.potential_2d().map_err(usage)?,
            gs,
        }),
        (GroundStateArtifact::OneD(eig), ConvexDomain::Interval(interval)) => Ok(Solved::OneD {
            interval,
            potential: cfg.potential_1d().map_err(usage)?,
            eig,
        }),
        _ => Err(usage(anyhow!(
            "artifact dimension does not match the configured domain"
        ))),
    }
}

fn save_artifact(cfg: &RunConfig, solved: &Solved) -> Result<(), RunError> {
    std::fs::create_dir_all(&cfg.output.dir)
        .map_err(|e| usage(anyhow!("cannot create output dir: {e}")))?;
    let fp = artifact::domain_fingerprint(cfg);
    let art = match solved {
        Solved::TwoD { gs, .. } => GroundStateArtifact::TwoD(gs.clone()),
        Solved::OneD { eig, .. } => GroundStateArtifact::OneD(eig.clone()),
    };
    artifact::save(&artifact_path(cfg), &art, &fp).map_err(usage)
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

pub fn par_ensemble<const N: usize, F, G>(
    field: &F,
    geom: &G,
    cfg: &SimConfig,
    x0: &[f64; N],
    y0: &[f64; N],
    stream_base: u64,
    d1: Option<f64>,
) -> Result<Vec<CouplingTrajectory>, RunError>
where
    F: DriftField<N> + Sync,
    G: Geometry<N> + Sync,
{
    (0..cfg.n_traj as u64)
        .into_par_iter()
        .map(|i| simulate(field, geom, cfg, x0, y0, stream_base + i, d1))
        .collect::<Result<Vec<_>, _>>()
        .map_err(sim_err)
}

pub fn par_ensemble_observed<const N: usize, F, G, O>(
    field: &F,
    geom: &G,
    cfg: &SimConfig,
    x0: &[f64; N],
    y0: &[f64; N],
    stream_base: u64,
    observable: &O,
) -> Result<PairEnsemble, RunError>
where
    F: DriftField<N> + Sync,
    G: Geometry<N> + Sync,
    O: Fn(&[f64; N]) -> Result<f64, FieldError> + Sync,
{
    let both: Vec<(CouplingTrajectory, Vec<[f64; 2]>)> = (0..cfg.n_traj as u64)
        .into_par_iter()
        .map(|i| simulate_observed(field, geom, cfg, x0, y0, stream_base + i, observable))
        .collect::<Result<Vec<_>, _>>()
        .map_err(sim_err)?;
    let mut trajectories = Vec::with_capacity(both.len());
    let mut observables = Vec::with_capacity(both.len());
    for (t, o) in both {
        trajectories.push(t);
        observables.push(o);
    }
    Ok(PairEnsemble {
        trajectories,
        observables,
    })
}

/// Nominal record times of the configured simulation.
fn record_times(sim: &SimConfig) -> Vec<f64> {
    let step = sim.dt * sim.record_stride as f64;
    let count = (sim.horizon / step).floor() as usize;
    (0..=count).map(|k| k as f64 * step).collect()
}

/// Start pair: configured, or a symmetric pair on the first axis through the
/// center of the bounding box.
fn start_pair<const N: usize, G: Geometry<N>>(
    cfg: &RunConfig,
    geom: &G,
) -> Result<([f64; N], [f64; N]), RunError> {
    let parse = |v: &Option<Vec<f64>>, name: &str| -> Result<Option<[f64; N]>, RunError> {
        match v {
            None => Ok(None),
            Some(xs) if xs.len() == N => {
                let mut out = [0.0; N];
                out.copy_from_slice(xs);
                Ok(Some(out))
            }
            Some(xs) => Err(usage(anyhow!(
                "verify.{name} must have {N} coordinates, got {}",
                xs.len()
            ))),
        }
    };
    match (parse(&cfg.verify.x0, "x0")?, parse(&cfg.verify.y0, "y0")?) {
        (Some(x0), Some(y0)) => {
            if !geom.contains(&x0) || !geom.contains(&y0) {
                return Err(usage(anyhow!("verify.x0/verify.y0 must be interior")));
            }
            Ok((x0, y0))
        }
        (None, None) => {
            let (lo, hi) = geom.bounding_box();
            let mut c = [0.0; N];
            for k in 0..N {
                c[k] = 0.5 * (lo[k] + hi[k]);
            }
            let offset = 0.15 * (hi[0] - lo[0]);
            let mut x0 = c;
            x0[0] += offset;
            let mut y0 = c;
            y0[0] -= offset;
            if !geom.contains(&x0) || !geom.contains(&y0) {
                return Err(usage(anyhow!(
                    "no interior default start pair; set verify.x0 and verify.y0"
                )));
            }
            Ok((x0, y0))
        }
        _ => Err(usage(anyhow!(
            "verify.x0 and verify.y0 must be given together"
        ))),
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// Print a status line, ignoring a closed stdout.
fn say(line: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{line}");
}

type PointPairs<const N: usize> = Vec<([f64; N], [f64; N])>;

pub struct CommandOutput {
    pub reports: Vec<VerificationReport>,
    pub extras: Vec<(String, serde_json::Value)>,
}

pub fn execute(cmd: Command, cfg: &RunConfig) -> Result<i32, RunError> {
    let out = match cmd {
        Command::Eigensolve => cmd_eigensolve(cfg)?,
        Command::VerifyModulus => cmd_verify_modulus(cfg)?,
        Command::Simulate => cmd_simulate(cfg)?,
        Command::Contraction => cmd_contraction(cfg)?,
        Command::GapReport => cmd_gap_report(cfg)?,
        Command::Boundary => cmd_boundary(cfg)?,
        Command::All => cmd_all(cfg)?,
    };
    emit(cmd, cfg, &out)?;
    Ok(if reports::all_passed(&out.reports) { 0 } else { 1 })
}

fn emit(cmd: Command, cfg: &RunConfig, out: &CommandOutput) -> Result<(), RunError> {
    if cfg.wants("table") {
        reports::print_table(&out.reports);
    }
    if cfg.wants("structured") {
        std::fs::create_dir_all(&cfg.output.dir)
            .map_err(|e| usage(anyhow!("cannot create output dir: {e}")))?;
        let path = Path::new(&cfg.output.dir).join(format!("report_{}.json", cmd.name()));
        reports::write_structured(&path, cmd.name(), cfg, &out.reports, out.extras.clone())
            .map_err(usage)?;
    }
    Ok(())
}

fn cmd_eigensolve(cfg: &RunConfig) -> Result<CommandOutput, RunError> {
    let solved = solve_fresh(cfg)?;
    save_artifact(cfg, &solved)?;
    let (l0, l1, r0, r1) = match &solved {
        Solved::TwoD { gs, .. } => (gs.lambda0, gs.lambda1, gs.residual0, gs.residual1),
        Solved::OneD { eig, .. } => (eig.lambda0, eig.lambda1, eig.residual0, eig.residual1),
    };
    let d = solved.diameter();
    say(&format!(
        "lambda0 = {l0:.8}  lambda1 = {l1:.8}  gap = {:.8}  bound 3pi^2/D^2 = {:.8}",
        l1 - l0,
        gaplab_core::verify::gap_bound(d)
    ));
    let mut residual = VerificationReport::evaluate(
        "eigenpair_residual",
        1e-8 - r0.max(r1),
        0.0,
        2,
    );
    residual.push_meta("lambda0", l0);
    residual.push_meta("lambda1", l1);
    residual.push_meta("residual0", r0);
    residual.push_meta("residual1", r1);
    residual.push_meta("h", solved.spacing());

    // PDE residual probe for the derived gradient equation.
    let pde = pde_residual_report(cfg, &solved)?;
    Ok(CommandOutput {
        reports: vec![residual, pde],
        extras: Vec::new(),
    })
}

fn pde_residual_report(cfg: &RunConfig, solved: &Solved) -> Result<VerificationReport, RunError> {
    match solved {
        Solved::TwoD {
            domain,
            potential,
            gs,
        } => {
            let h = gs.grid().spacing();
            // Bulk samples: the C·h residual model holds at fixed physical
            // depth, while log φ₀ derivatives blow up toward the wall.
            let margin = (6.0 * h).max(0.1 * domain.diameter());
            let mut rng = stream_rng(cfg.sim.seed, STREAM_PROBES);
            let samples = sample_interior(domain, margin, 64, &mut rng)
                .map_err(|e| usage(anyhow!("sampling failed: {e}")))?;
            Ok(residual_pde_gradient(gs, potential, &samples))
        }
        Solved::OneD {
            interval,
            potential,
            eig,
        } => {
            let half = 0.5 * interval.length();
            let samples: Vec<f64> = (1..10).map(|k| -0.8 * half + 0.16 * half * k as f64).collect();
            let vp = |z: f64| potential.grad(&[z])[0];
            Ok(residual_pde_gradient_1d(eig, vp, &samples))
        }
    }
}

fn convexity_report<const N: usize, G: Geometry<N>>(
    cfg: &RunConfig,
    geom: &G,
    v: &Potential<N>,
) -> Result<VerificationReport, RunError> {
    let mut rng = stream_rng(cfg.sim.seed, STREAM_PAIR_SAMPLING);
    let pts = sample_interior(geom, 0.0, 256, &mut rng)
        .map_err(|e| usage(anyhow!("sampling failed: {e}")))?;
    let pairs: Vec<_> = pts.chunks_exact(2).map(|c| (c[0], c[1])).collect();
    Ok(check_convexity_modulus(v, &pairs))
}

fn modulus_pairs<const N: usize, G: Geometry<N>>(
    geom: &G,
    h: f64,
    count: usize,
    seed: u64,
) -> Result<PointPairs<N>, RunError> {
    let mut rng = stream_rng(seed, STREAM_PAIR_SAMPLING);
    let pts = sample_interior(geom, 5.0 * h, 2 * count, &mut rng)
        .map_err(|e| usage(anyhow!("pair sampling failed: {e}")))?;
    Ok(pts
        .chunks_exact(2)
        .map(|c| (c[0], c[1]))
        .filter(|(x, y)| vecn::dist(x, y) >= 2.0 * h)
        .collect())
}

fn cmd_verify_modulus(cfg: &RunConfig) -> Result<CommandOutput, RunError> {
    let solved = load_solved(cfg)?;
    let h = solved.spacing();
    let d = solved.diameter();
    let tol = cfg.verify.modulus_tol_factor * h;
    let mut reports = Vec::new();
    match &solved {
        Solved::TwoD {
            domain,
            potential,
            gs,
        } => {
            reports.push(convexity_report(cfg, domain, potential)?);
            let field = GridField2::new(domain, gs);
            let pairs = modulus_pairs(domain, h, cfg.verify.pairs, cfg.sim.seed)?;
            let mut r = verify_log_concavity_modulus(&field, d, &pairs, tol);
            r.push_meta("h", h);
            r.push_meta("seed", cfg.sim.seed);
            reports.push(r);
        }
        Solved::OneD {
            interval,
            potential,
            eig,
        } => {
            reports.push(convexity_report(cfg, interval, potential)?);
            let field = GridField1::new(eig);
            let pairs = modulus_pairs(interval, h, cfg.verify.pairs, cfg.sim.seed)?;
            let mut r = verify_log_concavity_modulus(&field, d, &pairs, tol);
            r.push_meta("h", h);
            r.push_meta("seed", cfg.sim.seed);
            reports.push(r);
        }
    }
    Ok(CommandOutput {
        reports,
        extras: Vec::new(),
    })
}

fn outcome_label(o: &Outcome) -> String {
    match o {
        Outcome::Coupled { tau } => format!("coupled tau={tau:.10e}"),
        Outcome::Boundary { sigma } => format!("boundary sigma={sigma:.10e}"),
        Outcome::Horizon => "horizon".to_string(),
    }
}

fn write_raw_paths(cfg: &RunConfig, trajs: &[CouplingTrajectory]) -> Result<(), RunError> {
    use std::fmt::Write as _;
    std::fs::create_dir_all(&cfg.output.dir)
        .map_err(|e| usage(anyhow!("cannot create output dir: {e}")))?;
    const BATCH: usize = 256;
    for (b, chunk) in trajs.chunks(BATCH).enumerate() {
        let mut text = String::new();
        let _ = writeln!(text, "# gaplab raw paths v1");
        let _ = writeln!(text, "# columns: time xi chord_F");
        for (k, t) in chunk.iter().enumerate() {
            let _ = writeln!(
                text,
                "# trajectory {} {} final_time={:.10e}",
                b * BATCH + k,
                outcome_label(&t.outcome),
                t.final_time
            );
            for i in 0..t.times.len() {
                let _ = writeln!(
                    text,
                    "{:.10e} {:.10e} {:.10e}",
                    t.times[i], t.xi[i], t.chord[i]
                );
            }
        }
        let path = Path::new(&cfg.output.dir).join(format!("paths_{b:04}.tsv"));
        std::fs::write(&path, text)
            .map_err(|e| usage(anyhow!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn ensemble_summary(cfg: &RunConfig, trajs: &[CouplingTrajectory]) -> VerificationReport {
    let n = trajs.len() as f64;
    let coupled = trajs
        .iter()
        .filter(|t| matches!(t.outcome, Outcome::Coupled { .. }))
        .count();
    let boundary = trajs
        .iter()
        .filter(|t| matches!(t.outcome, Outcome::Boundary { .. }))
        .count();
    let mean_tau: f64 = trajs
        .iter()
        .filter_map(|t| match t.outcome {
            Outcome::Coupled { tau } => Some(tau),
            _ => None,
        })
        .sum::<f64>()
        / (coupled.max(1) as f64);
    let sim = cfg.sim_config();
    let mut r = VerificationReport::evaluate("simulation_summary", 0.0, 0.0, trajs.len() as u64);
    r.push_meta("coupled_fraction", coupled as f64 / n);
    r.push_meta("boundary_fraction", boundary as f64 / n);
    r.push_meta("mean_coupling_time", mean_tau);
    r.push_meta("dt", sim.dt);
    r.push_meta("eta", sim.eta);
    r.push_meta("eta_safety_factor", sim.eta_safety_factor());
    r.push_meta("delta", sim.delta);
    r.push_meta("seed", sim.seed);
    r
}

fn cmd_simulate(cfg: &RunConfig) -> Result<CommandOutput, RunError> {
    let solved = load_solved(cfg)?;
    let sim = cfg.sim_config();
    let mut reports = Vec::new();
    let trajs = match &solved {
        Solved::TwoD { domain, gs, .. } => {
            let field = GridField2::new(domain, gs);
            let (x0, y0) = start_pair::<2, _>(cfg, domain)?;
            let trajs = par_ensemble(&field, domain, &sim, &x0, &y0, 0, None)?;
            // Frozen-state one-step statistics at the start pair.
            let mut rng = stream_rng(sim.seed, STREAM_PROBES);
            let stats = frozen_step_stats(&field, &x0, &y0, sim.dt, 100_000, &mut rng)
                .map_err(sim_err)?;
            let (drift, var) = xi_dynamics_reports(&stats);
            reports.push(drift);
            reports.push(var);
            trajs
        }
        Solved::OneD { interval, eig, .. } => {
            let field = GridField1::new(eig);
            let (x0, y0) = start_pair::<1, _>(cfg, interval)?;
            let trajs = par_ensemble(&field, interval, &sim, &x0, &y0, 0, None)?;
            let mut rng = stream_rng(sim.seed, STREAM_PROBES);
            let stats = frozen_step_stats(&field, &x0, &y0, sim.dt, 100_000, &mut rng)
                .map_err(sim_err)?;
            let (drift, var) = xi_dynamics_reports(&stats);
            reports.push(drift);
            reports.push(var);
            trajs
        }
    };
    reports.insert(0, ensemble_summary(cfg, &trajs));
    if cfg.wants("raw-paths") {
        write_raw_paths(cfg, &trajs)?;
    }
    Ok(CommandOutput {
        reports,
        extras: Vec::new(),
    })
}

fn contraction_outputs<const N: usize, F, G>(
    cfg: &RunConfig,
    field: &F,
    geom: &G,
    d: f64,
) -> Result<CommandOutput, RunError>
where
    F: DriftField<N> + Sync,
    G: Geometry<N> + Sync,
{
    let sim = cfg.sim_config();
    let (x0, y0) = start_pair::<N, _>(cfg, geom)?;
    let d1 = cfg.verify.d1_factor * d;
    let trajs = par_ensemble(field, geom, &sim, &x0, &y0, 0, Some(d1))?;
    let times = record_times(&sim);
    let check = verify_contraction(d, &trajs, &times);
    let mut reports = vec![check.domination.clone(), check.rate.clone()];

    let mut sm = supermartingale_check(&trajs, d1);
    sm.push_meta("d1_factor", cfg.verify.d1_factor);
    reports.push(sm);

    // Sensitivity of the compensated-drift check to the D1 margin, at reduced
    // ensemble size.
    let d1s = cfg.verify.d1_sensitivity_factor * d;
    let sens_cfg = SimConfig {
        n_traj: (sim.n_traj / 5).max(200u32.min(sim.n_traj)),
        ..sim
    };
    let sens = par_ensemble(field, geom, &sens_cfg, &x0, &y0, 0, Some(d1s))?;
    let mut sm2 = supermartingale_check(&sens, d1s);
    sm2.name = "supermartingale_drift_sensitivity".to_string();
    sm2.push_meta("d1_factor", cfg.verify.d1_sensitivity_factor);
    reports.push(sm2);

    let rows = serde_json::to_value(&check.rows).map_err(|e| usage(anyhow!("{e}")))?;
    Ok(CommandOutput {
        reports,
        extras: vec![("contraction_rows".to_string(), rows)],
    })
}

fn cmd_contraction(cfg: &RunConfig) -> Result<CommandOutput, RunError> {
    let solved = load_solved(cfg)?;
    let d = solved.diameter();
    match &solved {
        Solved::TwoD { domain, gs, .. } => {
            let field = GridField2::new(domain, gs);
            contraction_outputs::<2, _, _>(cfg, &field, domain, d)
        }
        Solved::OneD { interval, eig, .. } => {
            let field = GridField1::new(eig);
            contraction_outputs::<1, _, _>(cfg, &field, interval, d)
        }
    }
}

fn gap_estimate_outputs<const N: usize, F, G, O>(
    cfg: &RunConfig,
    field: &F,
    geom: &G,
    v0: &O,
    d: f64,
    reference_gap: f64,
) -> Result<GapEstimate, RunError>
where
    F: DriftField<N> + Sync,
    G: Geometry<N> + Sync,
    O: Fn(&[f64; N]) -> Result<f64, FieldError> + Sync,
{
    let sim0 = cfg.sim_config();
    let sim = SimConfig {
        n_traj: cfg.verify.gap_traj.unwrap_or(sim0.n_traj),
        ..sim0
    };
    // Candidate pairs ranked by observable separation, deterministically.
    let mut rng = stream_rng(sim.seed, STREAM_GAP_PAIRS);
    let margin = 0.075 * d;
    let candidates = sample_interior(geom, margin, 8 * cfg.verify.gap_pairs.max(1), &mut rng)
        .map_err(|e| usage(anyhow!("gap pair sampling failed: {e}")))?;
    let mut scored: Vec<(usize, [f64; N], [f64; N], f64)> = Vec::new();
    for (idx, c) in candidates.chunks_exact(2).enumerate() {
        if vecn::dist(&c[0], &c[1]) < 0.1 * d {
            continue;
        }
        if let (Ok(a), Ok(b)) = (v0(&c[0]), v0(&c[1])) {
            scored.push((idx, c[0], c[1], (a - b).abs()));
        }
    }
    scored.sort_by(|p, q| q.3.partial_cmp(&p.3).unwrap().then(p.0.cmp(&q.0)));
    scored.truncate(cfg.verify.gap_pairs.max(1));
    if scored.is_empty() {
        return Err(usage(anyhow!("no usable start pairs for the gap estimate")));
    }

    let times = record_times(&sim);
    let mut ensembles = Vec::new();
    for (p, (_, x0, y0, _)) in scored.iter().enumerate() {
        let ens = par_ensemble_observed(
            field,
            geom,
            &sim,
            x0,
            y0,
            p as u64 * STREAM_PER_PAIR,
            v0,
        )?;
        ensembles.push(ens);
    }
    Ok(estimate_gap_from_coupling(
        &ensembles,
        d,
        &times,
        Some((reference_gap, 0.10)),
    ))
}

fn cmd_gap_report(cfg: &RunConfig) -> Result<CommandOutput, RunError> {
    let solved = solve_fresh(cfg)?;
    save_artifact(cfg, &solved)?;
    let d = solved.diameter();
    let mut reports = Vec::new();

    match &solved {
        Solved::TwoD {
            domain,
            potential,
            gs,
        } => {
            reports.push(convexity_report(cfg, domain, potential)?);
            let class = match domain {
                PlanarDomain::Rectangle(r) => DiscretizationClass::AlignedRectangle {
                    min_side: r.width().min(r.height()),
                },
                _ => DiscretizationClass::CurvedBoundary,
            };
            reports.push(verify_gap_2d(gs, d, class));
            reports.push(sin_chord_inequality(d, 4096));
            let field = GridField2::new(domain, gs);
            match RatioField2::new(domain, gs) {
                Ok(v0) => {
                    let est = gap_estimate_outputs::<2, _, _, _>(
                        cfg,
                        &field,
                        domain,
                        &|x: &[f64; 2]| v0.value(x),
                        d,
                        gs.gap(),
                    )?;
                    reports.push(est.lower_bound.clone());
                    if let Some(vs) = &est.vs_reference {
                        reports.push(vs.clone());
                    }
                }
                Err(e) => {
                    reports.push(VerificationReport::failed(
                        "coupling_gap_lower_bound",
                        &format!("ratio observable unavailable: {e}"),
                    ));
                }
            }
        }
        Solved::OneD {
            interval,
            potential,
            eig,
        } => {
            reports.push(convexity_report(cfg, interval, potential)?);
            reports.push(verify_gap_1d(eig, interval.length()));
            reports.push(sin_chord_inequality(d, 4096));
            let field = GridField1::new(eig);
            match RatioField1::new(eig) {
                Ok(v0) => {
                    let est = gap_estimate_outputs::<1, _, _, _>(
                        cfg,
                        &field,
                        interval,
                        &|x: &[f64; 1]| v0.value(x[0]),
                        d,
                        eig.gap(),
                    )?;
                    reports.push(est.lower_bound.clone());
                    if let Some(vs) = &est.vs_reference {
                        reports.push(vs.clone());
                    }
                }
                Err(e) => {
                    reports.push(VerificationReport::failed(
                        "coupling_gap_lower_bound",
                        &format!("ratio observable unavailable: {e}"),
                    ));
                }
            }
        }
    }

    let gap = solved.gap();
    say(&format!(
        "gap = {gap:.6}  bound = {:.6}  margin = {:+.6}",
        gaplab_core::verify::gap_bound(d),
        gap - gaplab_core::verify::gap_bound(d)
    ));
    Ok(CommandOutput {
        reports,
        extras: Vec::new(),
    })
}

fn cmd_boundary(cfg: &RunConfig) -> Result<CommandOutput, RunError> {
    let solved = load_solved(cfg)?;
    let h = solved.spacing();
    let d = solved.diameter();
    let mut reports = Vec::new();
    let mut extras = Vec::new();
    match &solved {
        Solved::TwoD { domain, gs, .. } => {
            let field = GridField2::new(domain, gs);
            let mut rng = stream_rng(cfg.sim.seed, STREAM_PROBES);
            let anchors = normal_anchors(domain, 32, &mut rng)
                .map_err(|e| usage(anyhow!("anchor sampling failed: {e}")))?;
            let rhos: Vec<f64> = [16.0, 12.0, 8.0, 6.0, 5.0, 4.0, 3.0]
                .iter()
                .map(|m| m * h)
                .collect();
            let inner_band = 5.0 * h;

            reports.push(verify_drift_condition(&field, &anchors, &rhos, inner_band));

            let profile = boundary_profile(&field, &anchors, &rhos);
            let mut worst_np: f64 = 0.0;
            let mut worst_hess = f64::NEG_INFINITY;
            for p in &profile.probes {
                if p.rho <= inner_band {
                    worst_np = worst_np.max((p.normal_product - 1.0).abs());
                    worst_hess = worst_hess.max(p.scaled_normal_hessian);
                }
            }
            let mut np_report = VerificationReport::evaluate(
                "boundary_normal_product",
                0.15 - worst_np,
                0.0,
                profile.lines,
            );
            np_report.push_meta("inner_band", inner_band);
            np_report.push_meta("worst_deviation_from_1", worst_np);
            reports.push(np_report);

            let mut hess_report = VerificationReport::evaluate(
                "boundary_hessian_scaling",
                -worst_hess - 0.1,
                0.0,
                profile.lines,
            );
            hess_report.push_meta("max_scaled_normal_hessian", worst_hess);
            hess_report.push_meta("negativity_floor", 0.1);
            let (t0, t1) = profile.gradient_norm_range;
            hess_report.push_meta("theta0_hat", t0);
            hess_report.push_meta("theta1_hat", t1);
            reports.push(hess_report);

            extras.push((
                "boundary_profile".to_string(),
                serde_json::to_value(&profile).map_err(|e| usage(anyhow!("{e}")))?,
            ));

            // Chord divergence along the first anchor line, bulk point fixed.
            let (b, n) = anchors[0];
            let y = start_pair::<2, _>(cfg, domain)?.0;
            let sweep: Vec<(f64, [f64; 2])> = (0..12)
                .map(|k| {
                    let rho = (24.0 * h) * 0.82f64.powi(k);
                    (rho, vecn::axpy(&b, rho, &n))
                })
                .filter(|(rho, _)| *rho >= 3.0 * h)
                .collect();
            reports.push(boundary_divergence_profile(&field, &y, &sweep, 0.1));

            // Near-diagonal continuity scan.
            let pairs = near_diagonal_pairs(domain, h, d, cfg.sim.seed)?;
            reports.push(near_diagonal_scan(&field, &pairs, 10.0 * h));
        }
        Solved::OneD { interval, eig, .. } => {
            let field = GridField1::new(eig);
            let half = 0.5 * interval.length();
            let rhos: Vec<f64> = [16.0, 12.0, 8.0, 6.0, 5.0, 4.0, 3.0]
                .iter()
                .map(|m| m * h)
                .collect();
            let inner_band = 5.0 * h;
            let mut worst_drift = f64::INFINITY;
            let mut worst_np: f64 = 0.0;
            let mut worst_hess = f64::NEG_INFINITY;
            for &rho in &rhos {
                let z = half - rho;
                if let Ok(g) = field.log_gradient_raw(z) {
                    let np = -(rho * g);
                    if rho <= inner_band {
                        worst_drift = worst_drift.min(2.0 * np);
                        worst_np = worst_np.max((np - 1.0).abs());
                    }
                }
                if let Ok(hs) = field.hessian_probe(half - rho) {
                    if rho <= inner_band {
                        worst_hess = worst_hess.max(rho * hs);
                    }
                }
            }
            let mut drift = VerificationReport::evaluate(
                "boundary_drift_condition",
                worst_drift - 1.5,
                0.0,
                rhos.len() as u64,
            );
            drift.push_meta("inner_band", inner_band);
            drift.push_meta("limit", 2.0);
            reports.push(drift);
            let mut np = VerificationReport::evaluate(
                "boundary_normal_product",
                0.15 - worst_np,
                0.0,
                rhos.len() as u64,
            );
            np.push_meta("worst_deviation_from_1", worst_np);
            reports.push(np);
            let mut hess = VerificationReport::evaluate(
                "boundary_hessian_scaling",
                -worst_hess - 0.1,
                0.0,
                rhos.len() as u64,
            );
            hess.push_meta("max_scaled_normal_hessian", worst_hess);
            reports.push(hess);

            let sweep: Vec<(f64, [f64; 1])> = (0..12)
                .map(|k| {
                    let rho = (24.0 * h) * 0.82f64.powi(k);
                    (rho, [half - rho])
                })
                .filter(|(rho, _)| *rho >= 3.0 * h)
                .collect();
            reports.push(boundary_divergence_profile(&field, &[0.0], &sweep, 0.1));

            let pairs = near_diagonal_pairs(interval, h, d, cfg.sim.seed)?;
            reports.push(near_diagonal_scan(&field, &pairs, 10.0 * h));
        }
    }
    Ok(CommandOutput { reports, extras })
}

fn near_diagonal_pairs<const N: usize, G: Geometry<N>>(
    geom: &G,
    h: f64,
    d: f64,
    seed: u64,
) -> Result<PointPairs<N>, RunError> {
    let mut rng = stream_rng(seed, STREAM_PAIR_SAMPLING + 7);
    let pts = sample_interior(geom, 10.0 * h, 2048, &mut rng)
        .map_err(|e| usage(anyhow!("sampling failed: {e}")))?;
    let mut pairs = Vec::new();
    for c in pts.chunks_exact(2) {
        let dir = vecn::sub(&c[1], &c[0]);
        let len = vecn::norm(&dir);
        if len < 1e-12 {
            continue;
        }
        let s = (0.04 * d / len).min(1.0);
        let y = vecn::axpy(&c[0], s, &dir);
        if geom.contains(&y) && vecn::dist(&c[0], &y) > 2.0 * h {
            pairs.push((c[0], y));
        }
    }
    Ok(pairs)
}

fn cmd_all(cfg: &RunConfig) -> Result<CommandOutput, RunError> {
    let eig_out = cmd_eigensolve(cfg)?;
    let modulus = cmd_verify_modulus(cfg)?;
    let gap = cmd_gap_report(cfg)?;
    let contraction = cmd_contraction(cfg)?;
    let boundary = cmd_boundary(cfg)?;
    let simulate = cmd_simulate(cfg)?;

    let mut reports = eig_out.reports;
    let mut extras = eig_out.extras;
    for out in [modulus, gap, contraction, boundary, simulate] {
        reports.extend(out.reports);
        extras.extend(out.extras);
    }
    Ok(CommandOutput { reports, extras })
}
