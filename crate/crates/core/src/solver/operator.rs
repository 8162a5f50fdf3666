//! The four-block semi-implicit operator 𝓛(x*).

use nalgebra::Vector3;

use super::{BlockLayout, ReferenceState, SolverConfig};
use crate::constants::PhysicalConstants;
use crate::error::Result;
use crate::fem::{assemble_gradient, assemble_projections, face_average, sample_equation_of_state, EosOperators, FemOperators, Layout};
use crate::sparse::CsrMatrix;

/// 𝓛 assembled about a reference state. G, P_{2vθ} and P_{θ2v} are stored bare;
/// the τΔt factors are applied in [`LinearOperator::apply`].
#[derive(Debug, Clone)]
pub struct LinearOperator<'a> {
    pub layout: &'a Layout,
    pub ops: &'a FemOperators,
    pub blocks: BlockLayout,
    /// M₂ + Δt M_μ + τ_u Δt M_C.
    pub m2muc: CsrMatrix,
    pub g: CsrMatrix,
    pub p2v: CsrMatrix,
    pub pt2v: CsrMatrix,
    /// ρ* averaged onto faces.
    pub rho_face: Vec<f64>,
    pub eos: EosOperators,
    pub dt: f64,
    pub tau_u: f64,
    pub tau_rho: f64,
    pub tau_theta: f64,
    /// Per-row weights that make every block of a residual dimensionless.
    pub weights: Vec<f64>,
}

/// Builds 𝓛(x*) for a time step Δt.
pub fn build_linear_operator<'a>(
    layout: &'a Layout,
    ops: &'a FemOperators,
    reference: &ReferenceState,
    constants: &PhysicalConstants,
    dt: f64,
    cfg: &SolverConfig,
) -> Result<LinearOperator<'a>> {
    let eos = sample_equation_of_state(layout, constants, &reference.exner, &reference.rho, &reference.theta)?;
    let mut m2muc = ops.m2.clone();
    if ops.mmu.nnz() > 0 {
        m2muc = m2muc.add(1.0, &ops.mmu, dt);
    }
    if ops.mc.nnz() > 0 {
        m2muc = m2muc.add(1.0, &ops.mc, cfg.tau_u * dt);
    }
    let g = assemble_gradient(layout, &reference.theta, constants.cp);
    let (p2v, pt2v) = assemble_projections(layout, &reference.exner, &reference.theta, constants.cp);
    let blocks = BlockLayout::new(layout);
    let weights = residual_weights(layout, ops, reference, &blocks, cfg.sound_speed);
    Ok(LinearOperator {
        layout,
        ops,
        blocks,
        m2muc,
        g,
        p2v,
        pt2v,
        rho_face: face_average(layout, &reference.rho),
        eos,
        dt,
        tau_u: cfg.tau_u,
        tau_rho: cfg.tau_rho,
        tau_theta: cfg.tau_theta,
        weights,
    })
}

fn residual_weights(layout: &Layout, ops: &FemOperators, reference: &ReferenceState, b: &BlockLayout, c_ref: f64) -> Vec<f64> {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let rho_ref = mean(&reference.rho);
    let theta_ref = mean(&reference.theta);
    let m2d = ops.m2.diagonal();
    let mtd = ops.mtheta.diagonal();
    // face area from an adjacent cell: V / |J e_normal|
    let mut area = vec![1.0; layout.nfaces];
    for cell in 0..layout.ncells {
        let j = &ops.centre_j[cell];
        for (slot, &(f, _)) in layout.cell_faces(cell).iter().enumerate() {
            let dir = Vector3::ith(slot / 2, 1.0);
            area[f] = ops.volumes[cell] / (j * dir).norm();
        }
    }
    let mut w = vec![0.0; b.total()];
    for f in 0..layout.nfaces {
        w[f] = if layout.is_boundary(f) { 1.0 } else { 1.0 / (m2d[f] * area[f] * c_ref) };
    }
    for c in 0..layout.ncells {
        w[b.rho + c] = 1.0 / (ops.volumes[c] * rho_ref);
        w[b.exner + c] = 1.0;
    }
    for i in 0..layout.ntheta {
        w[b.theta + i] = 1.0 / (mtd[i] * theta_ref);
    }
    w
}

impl LinearOperator<'_> {
    /// D(ρ* u) for a W2 vector.
    pub fn mass_flux_divergence(&self, u: &[f64]) -> Vec<f64> {
        let flux: Vec<f64> = u.iter().zip(&self.rho_face).map(|(a, b)| a * b).collect();
        self.ops.d.mul_vec(&flux)
    }

    /// E^θ θ′ on W3: 1/(2θ*) times the sum of a cell's two Wθ values.
    pub fn apply_e_theta(&self, theta: &[f64]) -> Vec<f64> {
        (0..self.layout.ncells)
            .map(|c| {
                let (b, t) = self.layout.cell_theta(c);
                self.eos.e_theta[c] * (theta[b] + theta[t])
            })
            .collect()
    }

    /// E^θ as an explicit W3 × Wθ matrix.
    pub fn e_theta_matrix(&self) -> CsrMatrix {
        let mut t = Vec::with_capacity(2 * self.layout.ncells);
        for c in 0..self.layout.ncells {
            let (b, tp) = self.layout.cell_theta(c);
            t.push((c, b, self.eos.e_theta[c]));
            t.push((c, tp, self.eos.e_theta[c]));
        }
        CsrMatrix::from_triplets(self.layout.ncells, self.layout.ntheta, &t)
    }

    /// y = 𝓛 x for a concatenated (u, ρ, θ, Π) vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let b = &self.blocks;
        let (u, rho, theta, exner) = b.split(x);
        let mut y = vec![0.0; b.total()];
        {
            let (yu, rest) = y.split_at_mut(b.rho);
            self.m2muc.mul_vec_into(u, yu);
            self.p2v.mul_vec_add(-self.tau_u * self.dt, theta, yu);
            self.g.mul_vec_add(-self.tau_u * self.dt, exner, yu);
            let (yr, rest) = rest.split_at_mut(b.theta - b.rho);
            let div = self.mass_flux_divergence(u);
            for c in 0..yr.len() {
                yr[c] = self.ops.volumes[c] * rho[c] + self.tau_rho * self.dt * div[c];
            }
            let (yt, yp) = rest.split_at_mut(b.exner - b.theta);
            self.ops.mtheta.mul_vec_into(theta, yt);
            self.pt2v.mul_vec_add(self.tau_theta * self.dt, u, yt);
            let et = self.apply_e_theta(theta);
            for c in 0..yp.len() {
                yp[c] = self.eos.e_pi[c] * exner[c] - self.eos.e_rho[c] * rho[c] - et[c];
            }
        }
        y
    }

    /// Dense copy of 𝓛, for small meshes in tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.blocks.total();
        let mut cols = Vec::with_capacity(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            cols.push(self.apply(&e));
            e[j] = 0.0;
        }
        (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
    }
}
