//! Convex potentials V with analytic gradients, and the convexity-modulus check.
//!
//! Potentials are closed-form only, so the gradient carries no discretization
//! noise into the chord checks.

use alloc::vec::Vec;

use crate::report::VerificationReport;
use crate::vecn::{self, Point};

/// Tolerance for the convexity modulus: the chord form of a convex potential
/// is nonnegative up to floating-point rounding.
pub const CONVEXITY_TOL: f64 = 1e-12;

/// A potential on R^N. Variants are public; `validate` checks the convexity
/// invariant (quadratic curvature >= 0), so a deliberately invalid value can
/// still be constructed for negative-control tests.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential<const N: usize> {
    Zero,
    /// V(x) = curvature * |x - center|²
    Quadratic { curvature: f64, center: Point<N> },
    /// V(x) = <gradient, x>
    Linear { gradient: Point<N> },
    Sum(Vec<Potential<N>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialError {
    NegativeCurvature,
    NotFinite,
}

impl core::fmt::Display for PotentialError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PotentialError::NegativeCurvature => {
                write!(f, "quadratic potential requires curvature >= 0")
            }
            PotentialError::NotFinite => write!(f, "potential coefficients must be finite"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PotentialError {}

impl<const N: usize> Potential<N> {
    pub fn quadratic(curvature: f64, center: Point<N>) -> Result<Self, PotentialError> {
        let v = Potential::Quadratic { curvature, center };
        v.validate()?;
        Ok(v)
    }

    pub fn linear(gradient: Point<N>) -> Result<Self, PotentialError> {
        let v = Potential::Linear { gradient };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<(), PotentialError> {
        match self {
            Potential::Zero => Ok(()),
            Potential::Quadratic { curvature, center } => {
                if !curvature.is_finite() || !vecn::is_finite(center) {
                    Err(PotentialError::NotFinite)
                } else if *curvature < 0.0 {
                    Err(PotentialError::NegativeCurvature)
                } else {
                    Ok(())
                }
            }
            Potential::Linear { gradient } => {
                if vecn::is_finite(gradient) {
                    Ok(())
                } else {
                    Err(PotentialError::NotFinite)
                }
            }
            Potential::Sum(terms) => {
                for t in terms {
                    t.validate()?;
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: &Point<N>) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Quadratic { curvature, center } => {
                let d = vecn::sub(x, center);
                curvature * vecn::dot(&d, &d)
            }
            Potential::Linear { gradient } => vecn::dot(gradient, x),
            Potential::Sum(terms) => terms.iter().map(|t| t.eval(x)).sum(),
        }
    }

    pub fn grad(&self, x: &Point<N>) -> Point<N> {
        match self {
            Potential::Zero => [0.0; N],
            Potential::Quadratic { curvature, center } => {
                vecn::scale(&vecn::sub(x, center), 2.0 * curvature)
            }
            Potential::Linear { gradient } => *gradient,
            Potential::Sum(terms) => {
                let mut g = [0.0; N];
                for t in terms {
                    g = vecn::add(&g, &t.grad(x));
                }
                g
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Potential::Zero => true,
            Potential::Sum(terms) => terms.iter().all(|t| t.is_zero()),
            _ => false,
        }
    }
}

/// Chord form of the convexity of V: for each pair asserts
/// `<∇V(x) - ∇V(y), (x-y)/|x-y|> >= -CONVEXITY_TOL`.
/// The report margin is the minimum of the chord form over the pairs.
pub fn check_convexity_modulus<const N: usize>(
    v: &Potential<N>,
    pairs: &[(Point<N>, Point<N>)],
) -> VerificationReport {
    let mut margin = f64::INFINITY;
    for (x, y) in pairs {
        let chord = vecn::sub(x, y);
        let len = vecn::norm(&chord);
        if len == 0.0 {
            continue;
        }
        let dg = vecn::sub(&v.grad(x), &v.grad(y));
        margin = margin.min(vecn::dot(&dg, &chord) / len);
    }
    if !margin.is_finite() {
        margin = 0.0;
    }
    VerificationReport::evaluate("potential_convexity_modulus", margin, CONVEXITY_TOL, pairs.len() as u64)
}

/// Even one-dimensional comparison potential on [-D/2, D/2], stored as
/// coefficients of z^0, z^2, z^4, ... so the evenness invariant holds by
/// construction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Potential1d {
    even_coeffs: Vec<f64>,
}

impl Potential1d {
    pub fn zero() -> Self {
        Potential1d::default()
    }

    /// Coefficients of the even powers: `coeffs[k]` multiplies z^(2k).
    pub fn from_even_coeffs(even_coeffs: Vec<f64>) -> Self {
        Potential1d { even_coeffs }
    }

    pub fn eval(&self, z: f64) -> f64 {
        let zz = z * z;
        let mut acc = 0.0;
        for &c in self.even_coeffs.iter().rev() {
            acc = acc * zz + c;
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.even_coeffs.iter().all(|&c| c == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{sample_interior, Disk};
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eval_closed_forms() {
        let q: Potential<2> = Potential::quadratic(1.0, [0.0, 0.0]).unwrap();
        assert_eq!(q.eval(&[1.0, 1.0]), 2.0);
        assert_eq!(q.grad(&[1.0, 1.0]), [2.0, 2.0]);

        let l: Potential<2> = Potential::linear([1.0, 0.0]).unwrap();
        assert_eq!(l.eval(&[0.3, 9.0]), 0.3);
        assert_eq!(l.grad(&[123.0, -4.0]), [1.0, 0.0]);

        let z: Potential<2> = Potential::Zero;
        assert_eq!(z.eval(&[5.0, -3.0]), 0.0);
        assert_eq!(z.grad(&[5.0, -3.0]), [0.0, 0.0]);
    }

    #[test]
    fn negative_curvature_rejected_by_validate_only() {
        assert_eq!(
            Potential::<2>::quadratic(-1.0, [0.0, 0.0]),
            Err(PotentialError::NegativeCurvature)
        );
        // Direct construction bypasses the invariant, for negative controls.
        let bad = Potential::Quadratic {
            curvature: -1.0,
            center: [0.0, 0.0],
        };
        assert!(bad.validate().is_err());
        let r = check_convexity_modulus(&bad, &[([1.0, 0.0], [0.0, 0.0])]);
        assert!(!r.passed());
        assert!((r.margin + 2.0).abs() < 1e-12);
    }

    #[test]
    fn convexity_modulus_passes_for_convex_kinds() {
        let disk = Disk::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts = sample_interior(&disk, 0.0, 64, &mut rng).unwrap();
        let pairs: Vec<_> = pts
            .chunks_exact(2)
            .map(|c| (c[0], c[1]))
            .collect();
        for v in [
            Potential::Zero,
            Potential::quadratic(1.0, [0.1, -0.2]).unwrap(),
            Potential::linear([0.5, 2.0]).unwrap(),
            Potential::Sum(vec![
                Potential::quadratic(0.5, [0.0, 0.0]).unwrap(),
                Potential::linear([1.0, 0.0]).unwrap(),
            ]),
        ] {
            let r = check_convexity_modulus(&v, &pairs);
            assert!(r.passed(), "{:?}", v);
        }
    }

    #[test]
    fn quadratic_pair_example() {
        let q: Potential<2> = Potential::quadratic(1.0, [0.0, 0.0]).unwrap();
        let r = check_convexity_modulus(&q, &[([1.0, 0.0], [0.0, 0.0])]);
        assert!(r.passed());
        assert!((r.margin - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let v: Potential<2> = Potential::Sum(vec![
            Potential::quadratic(0.7, [0.3, -0.1]).unwrap(),
            Potential::linear([-0.4, 1.1]).unwrap(),
        ]);
        let disk = Disk::new(2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let step = 1e-4;
        for x in sample_interior(&disk, 0.0, 100, &mut rng).unwrap() {
            let g = v.grad(&x);
            for k in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[k] += step;
                xm[k] -= step;
                let fd = (v.eval(&xp) - v.eval(&xm)) / (2.0 * step);
                assert!((g[k] - fd).abs() <= 1e-6, "component {k}: {} vs {}", g[k], fd);
            }
        }
    }

    #[test]
    fn even_polynomial_is_even() {
        let vt = Potential1d::from_even_coeffs(vec![0.5, 1.0, -0.25]);
        for z in [0.0, 0.2, 0.5, 1.3] {
            assert_eq!(vt.eval(z), vt.eval(-z));
        }
        assert_eq!(vt.eval(1.0), 0.5 + 1.0 - 0.25);
        assert!(Potential1d::zero().is_zero());
    }
}
