//! Numerical laboratory for the spectral gap of Dirichlet Schrödinger operators
//! `-Δ + V` on convex planar domains.
//!
//! The crate computes discrete ground states on uniform grids, evaluates the
//! drift field `∇log φ₀` in continuous space, simulates the reflection-coupled
//! diffusion pair driven by `2∇log φ₀`, and checks the quantitative
//! inequalities relating the two: the gap bound `λ₁ - λ₀ ≥ 3π²/D²`, the
//! log-concavity modulus of the ground state, the sine contraction of the
//! coupled pair, and the boundary asymptotics of the drift.
//!
//! The crate is `no_std`-compatible (with `alloc`); disable the default `std`
//! feature and float intrinsics are routed through `libm`. File formats, the
//! CLI, and parallel ensemble drivers live in the companion `gaplab-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` rejects NaN along with nonpositive values; `x <= 0.0` would
// silently accept NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod coupling;
pub mod domain;
pub mod eigensolver;
pub mod groundfield;
pub mod potential;
pub mod report;
pub mod vecn;
pub mod verify;

mod math;

pub use domain::{ConvexDomain, Geometry, GeometryError, PlanarDomain};
pub use eigensolver::{Eigen1d, GroundState};
pub use potential::{Potential, Potential1d};
pub use report::{CheckStatus, VerificationReport};
