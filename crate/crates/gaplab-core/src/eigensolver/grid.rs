//! Uniform grids with an interior mask over a convex domain.

use alloc::vec;
use alloc::vec::Vec;

use super::SolverError;
use crate::domain::Geometry;
use crate::vecn::Point;

#[allow(unused_imports)]
use crate::math::F64Ext;

pub const MIN_INTERIOR_NODES: usize = 9;

/// Uniform 2D grid covering the bounding box of a domain. Nodes strictly
/// inside the domain are "interior" and carry unknowns; every other node is a
/// homogeneous Dirichlet value.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2 {
    origin: [f64; 2],
    h: f64,
    nx: usize,
    ny: usize,
    /// Full-lattice node -> interior index, or -1.
    index_map: Vec<i32>,
    /// Interior index -> (i, j) lattice coordinates.
    nodes: Vec<(u32, u32)>,
    /// Interior index -> interior indices of the W, E, S, N neighbors (-1 = Dirichlet).
    neighbors: Vec<[i32; 4]>,
}

impl Grid2 {
    pub fn new<G: Geometry<2>>(geom: &G, h: f64) -> Result<Self, SolverError> {
        assert!(h > 0.0 && h.is_finite(), "grid spacing must be positive");
        let (lo, hi) = geom.bounding_box();
        // One spacing of padding so boundary-adjacent stencils always have a
        // lattice node to reference.
        let origin = [lo[0] - h, lo[1] - h];
        let nx = ((hi[0] - origin[0]) / h + 1.0 + 0.5).floor() as usize + 1;
        let ny = ((hi[1] - origin[1]) / h + 1.0 + 0.5).floor() as usize + 1;
        let mask = |i: usize, j: usize| {
            let x = [origin[0] + h * i as f64, origin[1] + h * j as f64];
            geom.contains(&x)
        };
        Self::from_mask_fn(origin, h, nx, ny, mask)
    }

    /// Build from an explicit mask predicate over lattice coordinates.
    pub fn from_mask_fn<F: Fn(usize, usize) -> bool>(
        origin: [f64; 2],
        h: f64,
        nx: usize,
        ny: usize,
        mask: F,
    ) -> Result<Self, SolverError> {
        let mut index_map = vec![-1i32; nx * ny];
        let mut nodes = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                if mask(i, j) {
                    index_map[j * nx + i] = nodes.len() as i32;
                    nodes.push((i as u32, j as u32));
                }
            }
        }
        if nodes.len() < MIN_INTERIOR_NODES {
            return Err(SolverError::DegenerateGrid);
        }
        let at = |i: i64, j: i64| -> i32 {
            if i < 0 || j < 0 || i >= nx as i64 || j >= ny as i64 {
                -1
            } else {
                index_map[(j as usize) * nx + (i as usize)]
            }
        };
        let neighbors: Vec<[i32; 4]> = nodes
            .iter()
            .map(|&(i, j)| {
                let (i, j) = (i as i64, j as i64);
                [at(i - 1, j), at(i + 1, j), at(i, j - 1), at(i, j + 1)]
            })
            .collect();
        let grid = Grid2 {
            origin,
            h,
            nx,
            ny,
            index_map,
            nodes,
            neighbors,
        };
        grid.check_connected()?;
        Ok(grid)
    }

    /// Flood-fill check that the interior mask is a single component.
    fn check_connected(&self) -> Result<(), SolverError> {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        let mut queue = Vec::with_capacity(n);
        queue.push(0usize);
        seen[0] = true;
        let mut count = 0usize;
        while let Some(k) = queue.pop() {
            count += 1;
            for &nb in &self.neighbors[k] {
                if nb >= 0 && !seen[nb as usize] {
                    seen[nb as usize] = true;
                    queue.push(nb as usize);
                }
            }
        }
        if count != n {
            return Err(SolverError::DisconnectedMask);
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[(u32, u32)] {
        &self.nodes
    }

    pub fn neighbors(&self) -> &[[i32; 4]] {
        &self.neighbors
    }

    pub fn node_position(&self, k: usize) -> Point<2> {
        let (i, j) = self.nodes[k];
        [
            self.origin[0] + self.h * i as f64,
            self.origin[1] + self.h * j as f64,
        ]
    }

    /// Interior index of lattice node (i, j), if interior.
    pub fn index_at(&self, i: i64, j: i64) -> Option<usize> {
        if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
            return None;
        }
        let v = self.index_map[(j as usize) * self.nx + (i as usize)];
        (v >= 0).then_some(v as usize)
    }

    /// Cell containing `x`: lower-left lattice coords plus fractional offsets.
    pub fn locate(&self, x: &Point<2>) -> Option<(i64, i64, f64, f64)> {
        let fx = (x[0] - self.origin[0]) / self.h;
        let fy = (x[1] - self.origin[1]) / self.h;
        if !fx.is_finite() || !fy.is_finite() {
            return None;
        }
        let i = fx.floor();
        let j = fy.floor();
        Some((i as i64, j as i64, fx - i, fy - j))
    }
}

/// Interior nodes of the symmetric interval (-L/2, L/2):
/// z_k = -L/2 + (k+1) h with h = L/(n+1).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1 {
    half_length: f64,
    n: usize,
}

impl Grid1 {
    pub fn new(length: f64, n: usize) -> Result<Self, SolverError> {
        if n < MIN_INTERIOR_NODES {
            return Err(SolverError::DegenerateGrid);
        }
        assert!(length > 0.0 && length.is_finite());
        Ok(Grid1 {
            half_length: 0.5 * length,
            n,
        })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / (self.n as f64 + 1.0)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn node_position(&self, k: usize) -> f64 {
        -self.half_length + self.spacing() * (k as f64 + 1.0)
    }
}
