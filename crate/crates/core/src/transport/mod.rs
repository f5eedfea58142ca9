//! Stationary discrete-ordinates transport: fields on phase space, the
//! Henyey-Greenstein kernel, long-characteristics sweeps and the linear
//! solvers built on them.

mod operator;
mod phase;
mod solve;

use std::sync::Arc;

pub use operator::TransportOperator;
pub use phase::{hg_density, PhaseFunction};
pub use solve::{Boundary, RteSystem, SolveMethod, SolveReport, SolverOptions};

use crate::error::{Error, Result};
use crate::grid::{AngularGrid, SpatialGrid};

/// Spatial grid, angular grid and ray step shared by every field and operator.
#[derive(Clone, Debug)]
pub struct PhaseSpace {
    grid: Arc<SpatialGrid>,
    angular: Arc<AngularGrid>,
    step: f64,
    entry_samples: usize,
}

impl PhaseSpace {
    /// Ray step defaults to the lattice spacing.
    pub fn new(grid: SpatialGrid, angular: AngularGrid) -> Self {
        let step = grid.spacing();
        Self { grid: Arc::new(grid), angular: Arc::new(angular), step, entry_samples: 1 }
    }

    pub fn with_step(mut self, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter(format!("ray step must be positive, got {step}")));
        }
        self.step = step;
        Ok(self)
    }

    /// Boundary data at each ray entry is averaged over `samples` equally
    /// spaced directions spanning the ray's angular cell; 1 samples the entry point only.
    pub fn with_entry_samples(mut self, samples: usize) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidParameter("entry samples must be at least 1".into()));
        }
        self.entry_samples = samples;
        Ok(self)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn angular(&self) -> &AngularGrid {
        &self.angular
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn entry_samples(&self) -> usize {
        self.entry_samples
    }

    pub fn num_nodes(&self) -> usize {
        self.grid.num_nodes()
    }

    pub fn num_dirs(&self) -> usize {
        self.angular.len()
    }

    /// Number of unknowns `nodes x directions`.
    pub fn len(&self) -> usize {
        self.num_nodes() * self.num_dirs()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether both spaces use the very same grid objects.
    pub fn shares_grid_with(&self, other: &PhaseSpace) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid)
    }
}

/// Scalar function on `nodes x directions`, stored direction-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceField {
    nodes: usize,
    dirs: usize,
    data: Vec<f64>,
}

impl PhaseSpaceField {
    pub fn zeros(space: &PhaseSpace) -> Self {
        Self { nodes: space.num_nodes(), dirs: space.num_dirs(), data: vec![0.0; space.len()] }
    }

    pub fn from_vec(space: &PhaseSpace, data: Vec<f64>) -> Result<Self> {
        if data.len() != space.len() {
            return Err(Error::ShapeMismatch(format!(
                "field has {} values, phase space has {}",
                data.len(),
                space.len()
            )));
        }
        Ok(Self { nodes: space.num_nodes(), dirs: space.num_dirs(), data })
    }

    /// Field `f(x_i, v_k)` sampled from a closure of node and direction index.
    pub fn from_fn<F: FnMut(usize, usize) -> f64>(space: &PhaseSpace, mut f: F) -> Self {
        let n = space.num_nodes();
        let data = (0..space.len()).map(|idx| f(idx % n, idx / n)).collect();
        Self { nodes: n, dirs: space.num_dirs(), data }
    }

    /// Angle-independent field built from a nodal one.
    pub fn isotropic(space: &PhaseSpace, nodal: &[f64]) -> Result<Self> {
        if nodal.len() != space.num_nodes() {
            return Err(Error::ShapeMismatch("nodal field length differs from node count".into()));
        }
        Ok(Self::from_fn(space, |i, _| nodal[i]))
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes
    }

    pub fn num_dirs(&self) -> usize {
        self.dirs
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[k * self.nodes + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, k: usize, value: f64) {
        self.data[k * self.nodes + i] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Values of direction `k` over all nodes.
    pub fn direction(&self, k: usize) -> &[f64] {
        &self.data[k * self.nodes..(k + 1) * self.nodes]
    }

    /// `f(x, v_k) -> f(x, v_{k-})`, i.e. `f(x, -v)`.
    pub fn reversed(&self) -> Self {
        let mut data = vec![0.0; self.data.len()];
        let half = self.dirs / 2;
        for k in 0..self.dirs {
            let km = (k + half) % self.dirs;
            data[k * self.nodes..(k + 1) * self.nodes].copy_from_slice(self.direction(km));
        }
        Self { nodes: self.nodes, dirs: self.dirs, data }
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Euclidean inner product of the raw values.
    pub fn dot(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// `sum_k f(x_i, v_k) w` at every node.
    pub fn angular_integral(&self, weight: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.nodes];
        for k in 0..self.dirs {
            for (o, v) in out.iter_mut().zip(self.direction(k)) {
                *o += v;
            }
        }
        out.iter_mut().for_each(|o| *o *= weight);
        out
    }

    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|v| *v *= c);
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        for (y, v) in self.data.iter_mut().zip(&x.data) {
            *y += a * v;
        }
    }
}

#[cfg(test)]
mod tests;
