//! Iterated semi-implicit time step: predictors, outer transport loop, inner
//! quasi-Newton loop.

use std::sync::Arc;

use log::info;
use rayon::prelude::*;

use crate::constants::PhysicalConstants;
use crate::error::{DycoreError, Result};
use crate::fem::{eos_residual, FemOperators, Layout, StateVector};
use crate::mesh::{CubedSphereMesh, GaussRule};
use crate::solver::{build_linear_operator, conjugate_gradient, gcr, LinearOperator, ReferenceState, SchurPreconditioner, SolverConfig};
use crate::sparse::CsrMatrix;
use crate::transport::{advect_then_flux, advect_vector, strang_advect, FvGrid, HorizontalStencils, TransportConfig};

/// Damping profile μ(z), z the height above the sphere.
pub type DampingProfile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct TimesteppingConfig {
    pub dt: f64,
    pub alpha: f64,
    pub outer: usize,
    pub inner: usize,
    pub solver: SolverConfig,
    pub transport: TransportConfig,
    /// Clipping for the θ transport; ρ and u are never clipped.
    pub theta_monotone: bool,
    pub damping: Option<DampingProfile>,
}

impl std::fmt::Debug for TimesteppingConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TimesteppingConfig")
            .field("dt", &self.dt)
            .field("alpha", &self.alpha)
            .field("outer", &self.outer)
            .field("inner", &self.inner)
            .field("solver", &self.solver)
            .field("transport", &self.transport)
            .field("theta_monotone", &self.theta_monotone)
            .field("damping", &self.damping.is_some())
            .finish()
    }
}

impl TimesteppingConfig {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            alpha: 0.5,
            outer: 2,
            inner: 2,
            solver: SolverConfig::default(),
            transport: TransportConfig::default(),
            theta_monotone: false,
            damping: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(DycoreError::Config(format!("time step must be positive, got {}", self.dt)));
        }
        if !(0.5..=1.0).contains(&self.alpha) {
            return Err(DycoreError::Config(format!("off-centring alpha must lie in [0.5, 1], got {}", self.alpha)));
        }
        if self.outer == 0 || self.inner == 0 {
            return Err(DycoreError::Config("outer and inner loop counts must be at least 1".into()));
        }
        self.solver.validate()?;
        self.transport.validate()
    }
}

/// Residuals of the four prognostic equations.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualVector {
    pub u: Vec<f64>,
    pub rho: Vec<f64>,
    pub theta: Vec<f64>,
    pub exner: Vec<f64>,
}

/// Outputs of the transport calls of one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportIncrements {
    /// Time-integrated flux divergence of ρ^p, per cell (volume-integrated).
    pub rho_flux: Vec<f64>,
    /// θ after advection of θ^p.
    pub theta_advected: Vec<f64>,
    /// Weak advective increment of u, R_u^A.
    pub u_advection: Vec<f64>,
}

/// Explicit half-step estimates (u^p, ρ^p, θ^p).
#[derive(Debug, Clone, PartialEq)]
pub struct Predictors {
    pub u: Vec<f64>,
    pub rho: Vec<f64>,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveRecord {
    pub outer: usize,
    pub inner: usize,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepStats {
    pub solves: Vec<SolveRecord>,
}

impl StepStats {
    pub fn total_iterations(&self) -> usize {
        self.solves.iter().map(|s| s.iterations).sum()
    }

    pub fn max_iterations(&self) -> usize {
        self.solves.iter().map(|s| s.iterations).max().unwrap_or(0)
    }
}

/// ū^{1/2} = (u^{(o)} + u^n) / 2.
pub fn advecting_wind(u_outer: &[f64], u_n: &[f64]) -> Vec<f64> {
    u_outer.iter().zip(u_n).map(|(a, b)| 0.5 * (a + b)).collect()
}

/// Sets the ρ and θ residuals to zero from the second inner iteration on
/// (`inner` counts from 0).
pub fn zero_transport_residuals(r: &mut ResidualVector, inner: usize) {
    if inner >= 1 {
        r.rho.iter_mut().for_each(|v| *v = 0.0);
        r.theta.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Per-column tridiagonal systems of a Wθ mass matrix, solved by the Thomas algorithm.
#[derive(Debug, Clone)]
struct ColumnTridiagonal {
    nlev: usize,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl ColumnTridiagonal {
    fn new(a: &CsrMatrix, nlev: usize) -> Self {
        let n = a.nrows();
        let (mut lower, mut diag, mut upper) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j == i {
                    diag[i] = v;
                } else if j + 1 == i && i % nlev != 0 {
                    lower[i] = v;
                } else if j == i + 1 && j % nlev != 0 {
                    upper[i] = v;
                } else {
                    debug_assert!(v == 0.0, "Wθ mass matrix couples across columns");
                }
            }
        }
        Self { nlev, lower, diag, upper }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = self.nlev;
        let mut x = vec![0.0; b.len()];
        x.par_chunks_mut(m).enumerate().for_each(|(col, x)| {
            let base = col * m;
            let mut c = vec![0.0; m];
            let mut d = vec![0.0; m];
            for k in 0..m {
                let i = base + k;
                let (a, prev_c, prev_d) = if k > 0 { (self.lower[i], c[k - 1], d[k - 1]) } else { (0.0, 0.0, 0.0) };
                let den = self.diag[i] - a * prev_c;
                c[k] = self.upper[i] / den;
                d[k] = (b[i] - a * prev_d) / den;
            }
            x[m - 1] = d[m - 1];
            for k in (0..m - 1).rev() {
                x[k] = d[k] - c[k] * x[k + 1];
            }
        });
        x
    }
}

/// Everything needed to advance a state: mesh, operators, transport grids and settings.
pub struct Model {
    pub mesh: CubedSphereMesh,
    pub layout: Layout,
    pub ops: FemOperators,
    pub constants: PhysicalConstants,
    pub config: TimesteppingConfig,
    pub cells: FvGrid,
    pub interfaces: FvGrid,
    mtheta_columns: ColumnTridiagonal,
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model").field("mesh", &self.mesh.summary()).field("config", &self.config).finish()
    }
}

impl Model {
    /// Builds operators for `mesh`. `rotating` selects Ω from the constants or Ω = 0.
    pub fn new(mesh: CubedSphereMesh, constants: PhysicalConstants, rotating: bool, config: TimesteppingConfig) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&mesh);
        let omega = if rotating { constants.rotation_vector() } else { [0.0; 3] };
        let rule = GaussRule::tensor(2);
        let mu = config.damping.clone();
        let mu_ref = mu.as_ref().map(|f| f.as_ref() as &(dyn Fn(f64) -> f64 + Sync));
        let ops = FemOperators::new(&mesh, &layout, &rule, omega, constants.gravity, constants.cp, mu_ref);
        let stencils = Arc::new(HorizontalStencils::new(mesh.horizontal(), config.transport.degree)?);
        let cells = FvGrid::cells_with(&mesh, config.transport.degree, stencils.clone());
        let interfaces = FvGrid::interfaces_with(&mesh, config.transport.degree, stencils);
        let mtheta_columns = ColumnTridiagonal::new(&ops.mtheta, mesh.layers() + 1);
        Ok(Self { mesh, layout, ops, constants, config, cells, interfaces, mtheta_columns })
    }

    /// S = −M_C u + DᵀΦ + G^θ Π, with the fixed boundary rows zeroed.
    pub fn wave_tendency(&self, x: &StateVector) -> Vec<f64> {
        let mut s = self.ops.wave_tendency(&self.layout, &x.u, &x.theta, &x.exner);
        for f in self.layout.boundary_faces() {
            s[f] = 0.0;
        }
        s
    }

    pub fn solve_mass_w2(&self, b: &[f64]) -> Result<Vec<f64>> {
        conjugate_gradient(&self.ops.m2, b, 1e-13, 500)
    }

    pub fn compute_predictors(&self, x: &StateVector) -> Result<Predictors> {
        let c = (1.0 - self.config.alpha) * self.config.dt;
        let mut u = x.u.clone();
        let mut rho = x.rho.clone();
        if c != 0.0 {
            let du = self.solve_mass_w2(&self.wave_tendency(x))?;
            for (u, d) in u.iter_mut().zip(&du) {
                *u += c * d;
            }
            let div = self.ops.d.mul_vec(&x.u);
            for k in 0..rho.len() {
                rho[k] -= c * x.rho[k] * div[k] / self.ops.volumes[k];
            }
        }
        Ok(Predictors { u, rho, theta: x.theta.clone() })
    }

    /// Transport of the predictors by the advecting wind ū.
    pub fn transport(&self, p: &Predictors, wind: &[f64]) -> Result<TransportIncrements> {
        let dt = self.config.dt;
        let cfg = &self.config.transport;
        let cell_wind = self.cells.wind_from_w2(&self.layout, wind);
        let rho = advect_then_flux(&self.cells, &cell_wind, &p.rho, dt, cfg)?;
        let theta_wind = self.interfaces.wind_from_w2(&self.layout, wind);
        let theta_cfg = TransportConfig { monotone: self.config.theta_monotone, ..cfg.clone() };
        let theta = strang_advect(&self.interfaces, &theta_wind, &p.theta, dt, &theta_cfg)?;
        let u = advect_vector(&self.cells, &self.ops, &self.layout, &p.u, &cell_wind, dt, cfg)?;
        Ok(TransportIncrements { rho_flux: rho.divergence, theta_advected: theta, u_advection: u.weak })
    }

    pub fn compute_residuals(
        &self,
        xk: &StateVector,
        xn: &StateVector,
        s_n: &[f64],
        p: &Predictors,
        t: &TransportIncrements,
    ) -> ResidualVector {
        let (dt, alpha) = (self.config.dt, self.config.alpha);
        let du: Vec<f64> = xk.u.iter().zip(&xn.u).map(|(a, b)| a - b).collect();
        let mut ru = self.ops.m2.mul_vec(&du);
        let s_k = self.wave_tendency(xk);
        for f in 0..ru.len() {
            ru[f] -= dt * (alpha * s_k[f] + (1.0 - alpha) * s_n[f]) + dt * t.u_advection[f];
        }
        if self.ops.mmu.nnz() > 0 {
            self.ops.mmu.mul_vec_add(dt, &xk.u, &mut ru);
        }
        for f in self.layout.boundary_faces() {
            ru[f] = 0.0;
        }
        let rho = (0..self.layout.ncells).map(|k| self.ops.volumes[k] * (xk.rho[k] - xn.rho[k]) + t.rho_flux[k]).collect();
        let dtheta: Vec<f64> =
            (0..self.layout.ntheta).map(|i| xk.theta[i] - xn.theta[i] - (t.theta_advected[i] - p.theta[i])).collect();
        let theta = self.ops.mtheta.mul_vec(&dtheta);
        let exner = eos_residual(&self.layout, &self.constants, &xk.exner, &xk.rho, &xk.theta);
        ResidualVector { u: ru, rho, theta, exner }
    }

    pub fn linear_operator(&self, reference: &ReferenceState) -> Result<(LinearOperator<'_>, SchurPreconditioner)> {
        let op = build_linear_operator(&self.layout, &self.ops, reference, &self.constants, self.config.dt, &self.config.solver)?;
        let pre = SchurPreconditioner::new(&op, self.mesh.n(), &self.config.solver)?;
        Ok((op, pre))
    }

    /// Solves 𝓛 x′ = −𝓡 and returns x′. ρ′ and θ′ are recomputed from u′ by
    /// exact inversion of their rows, which keeps mass conservation independent
    /// of the Krylov tolerance.
    pub fn solve_increment(
        &self,
        op: &LinearOperator,
        pre: &SchurPreconditioner,
        r: &ResidualVector,
    ) -> Result<(StateVector, crate::solver::SolveStats)> {
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<f64>>();
        let b = op.blocks.concat(&neg(&r.u), &neg(&r.rho), &neg(&r.theta), &r.exner);
        let (x, stats) = gcr(op, pre, &b, &self.config.solver)?;
        let (u, _, _, exner) = op.blocks.split(&x);
        let div = op.mass_flux_divergence(u);
        let rho = (0..self.layout.ncells).map(|k| (-r.rho[k] - op.tau_rho * op.dt * div[k]) / self.ops.volumes[k]).collect();
        let mut rhs = neg(&r.theta);
        op.pt2v.mul_vec_add(-op.tau_theta * op.dt, u, &mut rhs);
        let theta = self.mtheta_columns.solve(&rhs);
        Ok((StateVector { u: u.to_vec(), rho, theta, exner: exner.to_vec() }, stats))
    }

    /// Advances x^n by one step. `step` only labels telemetry and errors.
    pub fn step(&self, xn: &StateVector, step: usize) -> Result<(StateVector, StepStats)> {
        self.step_inner(xn, step).map_err(|e| DycoreError::Step { step, source: Box::new(e) })
    }

    fn step_inner(&self, xn: &StateVector, step: usize) -> Result<(StateVector, StepStats)> {
        let reference = ReferenceState::from_state(xn);
        let (op, pre) = self.linear_operator(&reference)?;
        let s_n = self.wave_tendency(xn);
        let predictors = self.compute_predictors(xn)?;
        let mut xk = xn.clone();
        let mut stats = StepStats::default();
        for o in 0..self.config.outer {
            let wind = advecting_wind(&xk.u, &xn.u);
            let increments = self.transport(&predictors, &wind)?;
            for i in 0..self.config.inner {
                let mut r = self.compute_residuals(&xk, xn, &s_n, &predictors, &increments);
                zero_transport_residuals(&mut r, i);
                let (dx, s) = self.solve_increment(&op, &pre, &r)?;
                info!("solver: step={step} outer={o} inner={i} iters={} res={:.3e}", s.iterations, s.residual);
                stats.solves.push(SolveRecord { outer: o, inner: i, iterations: s.iterations, residual: s.residual });
                add_assign(&mut xk.u, &dx.u);
                add_assign(&mut xk.rho, &dx.rho);
                add_assign(&mut xk.theta, &dx.theta);
                add_assign(&mut xk.exner, &dx.exner);
            }
        }
        if let Some(field) = xk.first_non_finite() {
            return Err(DycoreError::NonFinite { field, step });
        }
        Ok((xk, stats))
    }
}

fn add_assign(a: &mut [f64], b: &[f64]) {
    for (a, b) in a.iter_mut().zip(b) {
        *a += b;
    }
}
