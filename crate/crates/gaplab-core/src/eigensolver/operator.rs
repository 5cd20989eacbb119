//! Discrete operators: 5-point Laplacian plus potential diagonal in 2D,
//! the tridiagonal analogue in 1D.

use alloc::vec::Vec;

use super::grid::{Grid1, Grid2};
use super::SolverError;
use crate::domain::Geometry;
use crate::potential::{Potential, Potential1d};

/// Symmetric sparse operator  (A u)_k = (4 u_k - Σ_nbr u_nbr)/h² + V_k u_k
/// with homogeneous Dirichlet values outside the interior mask.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    grid: Grid2,
    /// Combined diagonal 4/h² + V at the node.
    diag: Vec<f64>,
    inv_h2: f64,
}

/// Assemble -Δ+V over the interior mask of `geom` with spacing `h`.
pub fn assemble<G: Geometry<2>>(
    geom: &G,
    v: &Potential<2>,
    h: f64,
) -> Result<DiscreteOperator, SolverError> {
    let grid = Grid2::new(geom, h)?;
    Ok(DiscreteOperator::from_grid(grid, v))
}

impl DiscreteOperator {
    pub fn from_grid(grid: Grid2, v: &Potential<2>) -> Self {
        let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
        let diag = (0..grid.node_count())
            .map(|k| 4.0 * inv_h2 + v.eval(&grid.node_position(k)))
            .collect();
        DiscreteOperator { grid, diag, inv_h2 }
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let nbrs = self.grid.neighbors();
        for k in 0..x.len() {
            let mut s = self.diag[k] * x[k];
            let nb = nbrs[k];
            for &m in &nb {
                if m >= 0 {
                    s -= self.inv_h2 * x[m as usize];
                }
            }
            out[k] = s;
        }
    }

    /// Gershgorin bounds (lower, upper) on the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (d, nb) in self.diag.iter().zip(self.grid.neighbors()) {
            let degree = nb.iter().filter(|&&m| m >= 0).count() as f64;
            let radius = degree * self.inv_h2;
            lo = lo.min(d - radius);
            hi = hi.max(d + radius);
        }
        (lo, hi)
    }
}

/// Tridiagonal operator (A u)_k = (2 u_k - u_{k-1} - u_{k+1})/h² + V_k u_k on
/// the interval grid.
#[derive(Debug, Clone)]
pub struct TridiagOperator {
    grid: Grid1,
    diag: Vec<f64>,
    inv_h2: f64,
}

impl TridiagOperator {
    /// Assemble with the even comparison potential.
    pub fn new(grid: Grid1, vt: &Potential1d) -> Self {
        let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
        let diag = (0..grid.node_count())
            .map(|k| 2.0 * inv_h2 + vt.eval(grid.node_position(k)))
            .collect();
        TridiagOperator { grid, diag, inv_h2 }
    }

    /// Assemble with a general (not necessarily even) 1D potential.
    pub fn with_potential(grid: Grid1, v: &Potential<1>) -> Self {
        let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
        let diag = (0..grid.node_count())
            .map(|k| 2.0 * inv_h2 + v.eval(&[grid.node_position(k)]))
            .collect();
        TridiagOperator { grid, diag, inv_h2 }
    }

    pub fn grid(&self) -> &Grid1 {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        for k in 0..n {
            let mut s = self.diag[k] * x[k];
            if k > 0 {
                s -= self.inv_h2 * x[k - 1];
            }
            if k + 1 < n {
                s -= self.inv_h2 * x[k + 1];
            }
            out[k] = s;
        }
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..n {
            let degree = if k == 0 || k + 1 == n { 1.0 } else { 2.0 };
            let radius = degree * self.inv_h2;
            lo = lo.min(self.diag[k] - radius);
            hi = hi.max(self.diag[k] + radius);
        }
        (lo, hi)
    }

    /// Solve (A - shift) x = b by the Thomas algorithm. The shifted matrix
    /// must be positive definite (shift below the spectrum).
    pub fn solve_shifted(&self, shift: f64, b: &[f64], x: &mut [f64]) {
        let n = b.len();
        let off = -self.inv_h2;
        // Forward elimination into scratch copies of the diagonal and rhs.
        let mut c = Vec::with_capacity(n); // modified super-diagonal factors
        let mut d = Vec::with_capacity(n); // modified rhs
        let mut denom = self.diag[0] - shift;
        c.push(off / denom);
        d.push(b[0] / denom);
        for k in 1..n {
            denom = (self.diag[k] - shift) - off * c[k - 1];
            c.push(off / denom);
            d.push((b[k] - off * d[k - 1]) / denom);
        }
        x[n - 1] = d[n - 1];
        for k in (0..n - 1).rev() {
            x[k] = d[k] - c[k] * x[k + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Disk, Rectangle};
    use alloc::vec;

    #[test]
    fn interval_operator_is_the_standard_stencil() {
        let g = Grid1::new(1.0, 9).unwrap();
        let op = TridiagOperator::new(g, &Potential1d::zero());
        let h2 = 0.1 * 0.1;
        let mut out = vec![0.0; 9];
        // Constant vector: interior rows give 0, end rows feel the boundary.
        let ones = vec![1.0; 9];
        op.apply(&ones, &mut out);
        for (k, v) in out.iter().enumerate().take(8).skip(1) {
            assert!(v.abs() < 1e-9, "row {k}: {v}");
        }
        assert!((out[0] - 1.0 / h2).abs() < 1e-9);
    }

    #[test]
    fn rectangle_center_row_sums_to_zero() {
        let r = Rectangle::new(1.0, 1.0).unwrap();
        let op = assemble(&r, &Potential::Zero, 0.25).unwrap();
        // 3x3 interior; center node has all four neighbors interior, so the
        // Laplacian row applied to a constant vanishes.
        let ones = vec![1.0; op.n()];
        let mut out = vec![0.0; op.n()];
        op.apply(&ones, &mut out);
        let center = op.grid().index_at(3, 3).unwrap(); // lattice (3,3) = (0.5, 0.5)
        assert!(out[center].abs() < 1e-9);
    }

    #[test]
    fn quadratic_potential_lands_on_the_diagonal() {
        let d = Disk::new(1.0).unwrap();
        let h = 1.0 / 16.0;
        let op = assemble(&d, &Potential::quadratic(1.0, [0.0, 0.0]).unwrap(), h).unwrap();
        for k in (0..op.n()).step_by(37) {
            let p = op.grid().node_position(k);
            let expect = 4.0 / (h * h) + p[0] * p[0] + p[1] * p[1];
            assert!((op.diag()[k] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn thomas_solves_shifted_systems() {
        let g = Grid1::new(1.0, 32).unwrap();
        let op = TridiagOperator::new(g, &Potential1d::zero());
        let b: Vec<f64> = (0..32).map(|k| (k as f64 * 0.37).sin()).collect();
        let mut x = vec![0.0; 32];
        op.solve_shifted(-1.0, &b, &mut x);
        let mut back = vec![0.0; 32];
        op.apply(&x, &mut back);
        for k in 0..32 {
            back[k] += x[k]; // add shift*x back: (A - (-1)) x = Ax + x
            assert!((back[k] - b[k]).abs() < 1e-9);
        }
    }
}
