//! Dirichlet discretization of -Δ+V on a uniform grid and the two lowest
//! eigenpairs, in one and two dimensions.

mod grid;
mod operator;
mod solve;

pub use grid::{Grid1, Grid2};
pub use operator::{assemble, DiscreteOperator, TridiagOperator};
pub use solve::{
    lowest_eigenpairs, residual_pde_gradient, residual_pde_gradient_1d, solve_1d, solve_interval,
    Eigen1d, GroundState,
};

use alloc::string::String;

#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    /// Grid has fewer than the minimum number of interior nodes.
    DegenerateGrid,
    /// Interior mask splits into disconnected components.
    DisconnectedMask,
    /// Eigeniteration did not reach the residual target; carries diagnostics.
    NoConvergence(String),
    /// Ground state failed positivity or ordering invariants.
    BadGroundState(String),
}

impl core::fmt::Display for SolverError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SolverError::DegenerateGrid => write!(f, "grid has too few interior nodes"),
            SolverError::DisconnectedMask => write!(f, "interior mask is disconnected"),
            SolverError::NoConvergence(d) => write!(f, "eigensolver did not converge: {d}"),
            SolverError::BadGroundState(d) => write!(f, "ground state invariant violated: {d}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SolverError {}
