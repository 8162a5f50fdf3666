//! Semi-implicit linear system: operator, Schur-complement preconditioner with a
//! column-smoothed multigrid, and a flexible GCR outer iteration.

mod krylov;
mod multigrid;
mod operator;
mod schur;

pub use krylov::{conjugate_gradient, gcr, SolveStats};
pub use multigrid::{Multigrid, MultigridLevel};
pub use operator::{build_linear_operator, LinearOperator};
pub use schur::SchurPreconditioner;

use crate::error::{DycoreError, Result};
use crate::fem::{Layout, StateVector};

/// Reference state x* = (ρ*, θ*, Π*) about which 𝓛 is built.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceState {
    pub rho: Vec<f64>,
    pub theta: Vec<f64>,
    pub exner: Vec<f64>,
}

impl ReferenceState {
    pub fn from_state(x: &StateVector) -> Self {
        Self { rho: x.rho.clone(), theta: x.theta.clone(), exner: x.exner.clone() }
    }
}

/// Offsets of the u, ρ, θ, Π blocks in a concatenated vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    pub rho: usize,
    pub theta: usize,
    pub exner: usize,
    pub end: usize,
}

impl BlockLayout {
    pub fn new(layout: &Layout) -> Self {
        let rho = layout.nfaces;
        let theta = rho + layout.ncells;
        let exner = theta + layout.ntheta;
        Self { rho, theta, exner, end: exner + layout.ncells }
    }

    pub fn total(&self) -> usize {
        self.end
    }

    pub fn ranges(&self) -> [std::ops::Range<usize>; 4] {
        [0..self.rho, self.rho..self.theta, self.theta..self.exner, self.exner..self.end]
    }

    pub fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64], &'a [f64]) {
        let [a, b, c, d] = self.ranges();
        (&x[a], &x[b], &x[c], &x[d])
    }

    pub fn concat(&self, u: &[f64], rho: &[f64], theta: &[f64], exner: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.end);
        x.extend_from_slice(u);
        x.extend_from_slice(rho);
        x.extend_from_slice(theta);
        x.extend_from_slice(exner);
        x
    }
}

/// Off-centring, tolerance and preconditioner settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tau_u: f64,
    pub tau_rho: f64,
    pub tau_theta: f64,
    /// Relative tolerance on each block of the weighted residual.
    pub tolerance: f64,
    pub restart: usize,
    pub max_iterations: usize,
    pub mg_levels: usize,
    pub pre_sweeps: usize,
    pub post_sweeps: usize,
    pub coarse_sweeps: usize,
    /// Velocity scale used to nondimensionalise momentum residuals.
    pub sound_speed: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tau_u: 0.5,
            tau_rho: 1.0,
            tau_theta: 1.0,
            tolerance: 1e-6,
            restart: 20,
            max_iterations: 100,
            mg_levels: 4,
            pre_sweeps: 2,
            post_sweeps: 2,
            coarse_sweeps: 8,
            sound_speed: 340.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("tau_u", self.tau_u), ("tau_rho", self.tau_rho), ("tau_theta", self.tau_theta)] {
            if !(t > 0.0 && t <= 1.0) {
                return Err(DycoreError::Config(format!("{name} must lie in (0, 1], got {t}")));
            }
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(DycoreError::Config(format!("solver tolerance must lie in (0, 1), got {}", self.tolerance)));
        }
        if self.restart == 0 || self.max_iterations == 0 || self.mg_levels == 0 {
            return Err(DycoreError::Config("restart, iteration cap and multigrid levels must be positive".into()));
        }
        if self.coarse_sweeps == 0 {
            return Err(DycoreError::Config("coarse level needs at least one sweep".into()));
        }
        Ok(())
    }
}
