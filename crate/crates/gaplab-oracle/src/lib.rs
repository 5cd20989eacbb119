//! Reference computations used as independent checks by the test suites.
//!
//! Everything here is deliberately primitive: power series summed until they
//! stop moving in f64, plus plain bisection. The point is to have expected
//! values whose derivation shares no code with the solvers under test.

/// Bessel function of the first kind, order 0, by its power series.
///
/// Accurate to close to machine precision for |x| <= 12, which covers the
/// first few zeros comfortably.
pub fn j0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        let kf = k as f64;
        term *= -q / (kf * kf);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}

/// Bessel function of the first kind, order 1, by its power series.
pub fn j1(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 0.5 * x;
    let mut sum = term;
    for k in 1..64 {
        let kf = k as f64;
        term *= -q / (kf * (kf + 1.0));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}

/// Bisection for a root of `f` in `[lo, hi]`; requires a sign change.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let flo = f(lo);
    assert!(
        flo * f(hi) < 0.0,
        "bisect: no sign change on [{lo}, {hi}]"
    );
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) * flo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// First positive zero of J0 (the Dirichlet ground-state frequency of the unit disk).
pub fn j0_first_zero() -> f64 {
    bisect(j0, 2.0, 3.0, 1e-15)
}

/// First positive zero of J1.
pub fn j1_first_zero() -> f64 {
    bisect(j1, 3.0, 4.5, 1e-15)
}

/// Log-derivative of the radial disk ground state r -> J0(k r), i.e. k J0'(kr)/J0(kr).
pub fn disk_log_gradient_radial(k: f64, r: f64) -> f64 {
    -k * j1(k * r) / j0(k * r)
}
