//! Monte Carlo behavior of the coupled pair and the top-level verifiers,
//! at reduced ensemble sizes. Seeds are fixed; tolerances leave room for
//! Monte Carlo noise at these sizes.

use gaplab_core::coupling::{
    frozen_step_stats, simulate, simulate_ensemble, stream_rng, SimConfig, Outcome,
    STREAM_PAIR_SAMPLING, STREAM_PROBES,
};
use gaplab_core::domain::{sample_interior, Disk, Geometry, Interval};
use gaplab_core::eigensolver::{assemble, lowest_eigenpairs, solve_1d};
use gaplab_core::groundfield::{normal_anchors, GridField1, GridField2};
use gaplab_core::potential::{Potential, Potential1d};
use gaplab_core::verify::{
    boundary_divergence_profile, near_diagonal_scan, supermartingale_check, verify_contraction,
    verify_drift_condition, verify_log_concavity_modulus, xi_dynamics_reports,
};

use std::f64::consts::PI;

fn disk_ground_state(h: f64) -> (Disk, gaplab_core::GroundState) {
    let disk = Disk::new(1.0).unwrap();
    let gs = lowest_eigenpairs(&assemble(&disk, &Potential::Zero, h).unwrap()).unwrap();
    (disk, gs)
}

#[test]
fn disk_pairs_couple_with_high_probability() {
    let (disk, gs) = disk_ground_state(1.0 / 64.0);
    let field = GridField2::new(&disk, &gs);
    let cfg = SimConfig {
        dt: 1e-4,
        eta: 0.06,
        delta: 1e-3,
        horizon: 5.0,
        n_traj: 300,
        seed: 2024,
        record_stride: 1000,
    };
    let trajs = simulate_ensemble(&field, &disk, &cfg, &[0.3, 0.0], &[-0.3, 0.0], None).unwrap();
    let coupled = trajs
        .iter()
        .filter(|t| matches!(t.outcome, Outcome::Coupled { .. }))
        .count();
    assert!(
        coupled as f64 >= 0.99 * cfg.n_traj as f64,
        "coupled only {coupled}/{}",
        cfg.n_traj
    );
    // The separation never exceeds the diameter, at any record.
    let d = disk.diameter();
    for t in &trajs {
        assert!(t.xi.iter().all(|&xi| xi >= 0.0 && 2.0 * xi <= d + 1e-12));
    }
}

#[test]
fn boundary_outcomes_shrink_with_delta() {
    // Start near the wall so the wall threshold actually matters.
    let (disk, gs) = disk_ground_state(1.0 / 64.0);
    let field = GridField2::new(&disk, &gs);
    let base = SimConfig {
        dt: 1e-4,
        eta: 0.06,
        delta: 1e-2,
        horizon: 0.05,
        n_traj: 200,
        seed: 7,
        record_stride: 100,
    };
    let frac = |delta: f64| {
        let cfg = SimConfig { delta, ..base };
        let trajs =
            simulate_ensemble(&field, &disk, &cfg, &[0.96, 0.0], &[0.0, 0.3], None).unwrap();
        trajs
            .iter()
            .filter(|t| matches!(t.outcome, Outcome::Boundary { .. }))
            .count() as f64
            / cfg.n_traj as f64
    };
    let loose = frac(1e-2);
    let tight = frac(1e-3);
    assert!(
        loose >= tight,
        "boundary fraction must shrink with delta: {loose} vs {tight}"
    );
    assert!(loose > 0.0, "test needs some boundary events to have teeth");
}

#[test]
fn exchange_symmetry_in_distribution() {
    let (disk, gs) = disk_ground_state(1.0 / 64.0);
    let field = GridField2::new(&disk, &gs);
    let cfg = SimConfig {
        dt: 1e-4,
        eta: 0.06,
        delta: 1e-3,
        horizon: 0.05,
        n_traj: 200,
        seed: 5150,
        record_stride: 100,
    };
    let (x0, y0) = ([0.4, 0.1], [-0.3, -0.2]);
    let a = simulate_ensemble(&field, &disk, &cfg, &x0, &y0, None).unwrap();
    let b = simulate_ensemble(&field, &disk, &cfg, &y0, &x0, None).unwrap();
    let t = 0.04;
    let mean = |trajs: &[gaplab_core::coupling::CouplingTrajectory]| {
        trajs.iter().map(|tr| tr.xi_at(t)).sum::<f64>() / trajs.len() as f64
    };
    let (ma, mb) = (mean(&a), mean(&b));
    let var = |trajs: &[gaplab_core::coupling::CouplingTrajectory], m: f64| {
        trajs
            .iter()
            .map(|tr| (tr.xi_at(t) - m) * (tr.xi_at(t) - m))
            .sum::<f64>()
            / (trajs.len() as f64 - 1.0)
    };
    let pooled_se = ((var(&a, ma) + var(&b, mb)) / cfg.n_traj as f64).sqrt();
    assert!(
        (ma - mb).abs() <= 5.0 * pooled_se,
        "means {ma} vs {mb}, pooled se {pooled_se}"
    );
}

#[test]
fn frozen_state_step_statistics_match_the_separation_equation() {
    let (disk, gs) = disk_ground_state(1.0 / 64.0);
    let field = GridField2::new(&disk, &gs);
    let mut rng = stream_rng(99, STREAM_PROBES);
    let stats = frozen_step_stats(
        &field,
        &[0.3, 0.1],
        &[-0.2, -0.1],
        1e-5,
        50_000,
        &mut rng,
    )
    .unwrap();
    let (drift, var) = xi_dynamics_reports(&stats);
    assert!(drift.passed(), "{drift:?}");
    assert!(var.passed(), "{var:?}");
}

#[test]
fn interval_contraction_saturates_at_the_sharp_rate() {
    // The 1D zero-potential case is the equality case of the contraction:
    // E sin(pi xi/D) decays at exactly 3 pi^2 / D^2.
    let eig = solve_1d(1.0, &Potential1d::zero(), 1000).unwrap();
    let field = GridField1::new(&eig);
    let interval = Interval::new(1.0).unwrap();
    let cfg = SimConfig {
        dt: 1e-5,
        eta: 0.02,
        delta: 1e-3,
        horizon: 0.12,
        n_traj: 400,
        seed: 31,
        record_stride: 500,
    };
    let trajs = simulate_ensemble(&field, &interval, &cfg, &[0.25], &[-0.25], None).unwrap();
    let times: Vec<f64> = (0..=24).map(|k| k as f64 * 0.005).collect();
    let check = verify_contraction(1.0, &trajs, &times);
    assert!(check.domination.passed(), "{:?}", check.domination);
    assert!(check.rate.passed(), "{:?}", check.rate);
    let sharp = 3.0 * PI * PI;
    assert!(
        (check.fitted_rate - sharp).abs() < 6.0,
        "fitted {} vs sharp {sharp} (stderr {})",
        check.fitted_rate,
        check.rate_stderr
    );
    // t = 0 is the equality case of the bound itself.
    let row0 = &check.rows[0];
    assert!((row0.estimate - row0.bound).abs() < 1e-12);
}

#[test]
fn supermartingale_drift_is_nonnegative_on_the_disk() {
    let (disk, gs) = disk_ground_state(1.0 / 64.0);
    let field = GridField2::new(&disk, &gs);
    let d = disk.diameter();
    let cfg = SimConfig {
        dt: 1e-4,
        eta: 0.06,
        delta: 1e-3,
        horizon: 0.3,
        n_traj: 300,
        seed: 1213,
        record_stride: 200,
    };
    let trajs = simulate_ensemble(
        &field,
        &disk,
        &cfg,
        &[0.35, 0.05],
        &[-0.3, -0.1],
        Some(1.05 * d),
    )
    .unwrap();
    let report = supermartingale_check(&trajs, 1.05 * d);
    assert!(report.passed(), "{report:?}");
}

#[test]
fn modulus_holds_on_disk_and_fails_under_a_tightened_bound() {
    let (disk, gs) = disk_ground_state(1.0 / 64.0);
    let field = GridField2::new(&disk, &gs);
    let h = 1.0 / 64.0;
    let mut rng = stream_rng(404, STREAM_PAIR_SAMPLING);
    let pts = sample_interior(&disk, 5.0 * h, 4000, &mut rng).unwrap();
    let pairs: Vec<_> = pts
        .chunks_exact(2)
        .map(|c| (c[0], c[1]))
        .filter(|(x, y)| gaplab_core::vecn::dist(x, y) >= 2.0 * h)
        .collect();
    let report = verify_log_concavity_modulus(&field, disk.diameter(), &pairs, 10.0 * h);
    assert!(report.passed(), "{report:?}");

    // Negative control on the 1D equality case: shrinking D must break it.
    let eig = solve_1d(1.0, &Potential1d::zero(), 1000).unwrap();
    let field1 = GridField1::new(&eig);
    let pairs1: Vec<([f64; 1], [f64; 1])> = (1..40)
        .map(|k| {
            let z = 0.012 * k as f64;
            ([z], [-z])
        })
        .collect();
    let good = verify_log_concavity_modulus(&field1, 1.0, &pairs1, 10.0 / 1001.0);
    assert!(good.passed(), "{good:?}");
    let control = verify_log_concavity_modulus(&field1, 0.9, &pairs1, 10.0 / 1001.0);
    assert!(!control.passed(), "negative control must fail: {control:?}");
}

#[test]
fn quadratic_potential_only_strengthens_the_modulus() {
    let disk = Disk::new(1.0).unwrap();
    let v = Potential::quadratic(2.0, [0.0, 0.0]).unwrap();
    let gs = lowest_eigenpairs(&assemble(&disk, &v, 1.0 / 64.0).unwrap()).unwrap();
    let field = GridField2::new(&disk, &gs);
    let h = 1.0 / 64.0;
    let mut rng = stream_rng(405, STREAM_PAIR_SAMPLING);
    let pts = sample_interior(&disk, 5.0 * h, 2000, &mut rng).unwrap();
    let pairs: Vec<_> = pts.chunks_exact(2).map(|c| (c[0], c[1])).collect();
    let report = verify_log_concavity_modulus(&field, disk.diameter(), &pairs, 10.0 * h);
    assert!(report.passed(), "{report:?}");
}

#[test]
fn drift_condition_exceeds_threshold_near_the_wall() {
    let (disk, gs) = disk_ground_state(1.0 / 128.0);
    let field = GridField2::new(&disk, &gs);
    let mut rng = stream_rng(11, STREAM_PROBES);
    let anchors = normal_anchors(&disk, 24, &mut rng).unwrap();
    let rhos = [0.1, 0.07, 0.05, 0.035];
    let report = verify_drift_condition(&field, &anchors, &rhos, 0.05);
    assert!(report.passed(), "{report:?}");
}

#[test]
fn chord_diverges_logarithmically_at_the_wall() {
    // 1D: y in the bulk, x pushed into the wall.
    let eig = solve_1d(1.0, &Potential1d::zero(), 1000).unwrap();
    let field1 = GridField1::new(&eig);
    let sweep: Vec<(f64, [f64; 1])> = (0..14)
        .map(|k| {
            let rho = 0.2 * 0.8f64.powi(k);
            (rho, [0.5 - rho])
        })
        .collect();
    let r = boundary_divergence_profile(&field1, &[0.0], &sweep, 0.1);
    assert!(r.passed(), "{r:?}");

    // Disk: same along the +x normal line.
    let (disk, gs) = disk_ground_state(1.0 / 128.0);
    let field = GridField2::new(&disk, &gs);
    let sweep2: Vec<(f64, [f64; 2])> = (0..12)
        .map(|k| {
            let rho = 0.15 * 0.82f64.powi(k);
            (rho, [1.0 - rho, 0.0])
        })
        .collect();
    let r2 = boundary_divergence_profile(&field, &[-0.3, 0.0], &sweep2, 0.1);
    assert!(r2.passed(), "{r2:?}");
}

#[test]
fn near_diagonal_pairs_have_small_chord_diff() {
    let (disk, gs) = disk_ground_state(1.0 / 64.0);
    let field = GridField2::new(&disk, &gs);
    let h = 1.0 / 64.0;
    let d = disk.diameter();
    let mut rng = stream_rng(606, STREAM_PAIR_SAMPLING);
    let pts = sample_interior(&disk, 10.0 * h, 2000, &mut rng).unwrap();
    let mut pairs = Vec::new();
    for c in pts.chunks_exact(2) {
        let dir = gaplab_core::vecn::sub(&c[1], &c[0]);
        let len = gaplab_core::vecn::norm(&dir);
        if len < 1e-9 {
            continue;
        }
        // Rescale the second point to lie within 0.05 D of the first.
        let s = 0.04 * d / len.max(0.04 * d);
        let y = gaplab_core::vecn::axpy(&c[0], s, &dir);
        if disk.contains(&y) {
            pairs.push((c[0], y));
        }
    }
    let report = near_diagonal_scan(&field, &pairs, 10.0 * h);
    assert!(report.passed(), "{report:?}");
}

#[test]
fn observed_simulation_reports_the_ratio_observable() {
    let (disk, gs) = disk_ground_state(1.0 / 64.0);
    let field = GridField2::new(&disk, &gs);
    let v0 = gaplab_core::groundfield::RatioField2::new(&disk, &gs).unwrap();
    let cfg = SimConfig {
        dt: 1e-4,
        eta: 0.06,
        delta: 1e-3,
        horizon: 0.02,
        n_traj: 4,
        seed: 77,
        record_stride: 50,
    };
    let (traj, obs) = gaplab_core::coupling::simulate_observed(
        &field,
        &disk,
        &cfg,
        &[0.3, 0.0],
        &[-0.3, 0.0],
        0,
        &|x: &[f64; 2]| v0.value(x),
    )
    .unwrap();
    assert_eq!(traj.times.len(), obs.len());
    assert!(obs.iter().all(|pair| pair[0].is_finite() && pair[1].is_finite()));
}

#[test]
fn observed_simulation_is_consistent_with_plain_simulation() {
    let (disk, gs) = disk_ground_state(1.0 / 64.0);
    let field = GridField2::new(&disk, &gs);
    let cfg = SimConfig {
        dt: 1e-4,
        eta: 0.06,
        delta: 1e-3,
        horizon: 0.02,
        n_traj: 1,
        seed: 78,
        record_stride: 50,
    };
    let plain = simulate(&field, &disk, &cfg, &[0.3, 0.0], &[-0.3, 0.0], 0, None).unwrap();
    let (observed, _) = gaplab_core::coupling::simulate_observed(
        &field,
        &disk,
        &cfg,
        &[0.3, 0.0],
        &[-0.3, 0.0],
        0,
        &|_x: &[f64; 2]| Ok(0.0),
    )
    .unwrap();
    assert_eq!(plain, observed);
}

#[test]
fn eta_refinement_leaves_contraction_statistics_unchanged() {
    // The discrete coupling collapses pairs at distance eta instead of 0; the
    // bias this introduces is measured by refinement: halving eta (with dt
    // scaled down to keep eta >= 4 sqrt(2 dt)) must leave E sin(pi xi/D)
    // unchanged within Monte Carlo error.
    let (disk, gs) = disk_ground_state(1.0 / 64.0);
    let field = GridField2::new(&disk, &gs);
    let coarse = SimConfig {
        dt: 1e-5,
        eta: 4.0 * (2.0e-5f64).sqrt(),
        delta: 1e-3,
        horizon: 0.1,
        n_traj: 1200,
        seed: 2718,
        record_stride: 1000,
    };
    let fine = SimConfig {
        dt: 2.5e-6,
        eta: 2.0 * (2.0e-5f64).sqrt(),
        record_stride: 4000,
        ..coarse
    };
    assert!(fine.validate().is_ok());
    let (x0, y0) = ([0.3, 0.0], [-0.3, 0.0]);
    let run = |cfg: &SimConfig| simulate_ensemble(&field, &disk, cfg, &x0, &y0, None).unwrap();
    let (a, b) = (run(&coarse), run(&fine));
    let d = disk.diameter();
    for t in [0.05, 0.1] {
        let stat = |trajs: &[gaplab_core::coupling::CouplingTrajectory]| {
            let n = trajs.len() as f64;
            let vals: Vec<f64> = trajs
                .iter()
                .map(|tr| (std::f64::consts::PI * tr.xi_at(t) / d).sin())
                .collect();
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            (mean, (var / n).sqrt())
        };
        let (ma, sa) = stat(&a);
        let (mb, sb) = stat(&b);
        let se = (sa * sa + sb * sb).sqrt();
        assert!(
            (ma - mb).abs() <= 4.0 * se + 1e-9,
            "t={t}: {ma} vs {mb} (se {se})"
        );
    }
}
