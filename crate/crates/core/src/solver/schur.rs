//! Approximate Schur-complement preconditioner for 𝓛.
//!
//! u and θ masses are lumped (Coriolis dropped), θ′ and u′ are eliminated
//! in favour of Π′, and the resulting Helmholtz operator H is inverted
//! approximately with one multigrid V-cycle.

use super::{LinearOperator, Multigrid, SolverConfig};
use crate::error::{DycoreError, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone)]
pub struct SchurPreconditioner {
    /// Lumped M₂ + Δt M_μ plus the buoyancy correction, inverted.
    pub b_inv: Vec<f64>,
    pub mtheta_inv: Vec<f64>,
    pub volume_inv: Vec<f64>,
    /// Helmholtz operator.
    pub h: CsrMatrix,
    /// Π-row coupling to u′ after elimination.
    pub c: CsrMatrix,
    pub mg: Multigrid,
}

/// Σ_j |A_ij|, which does not depend on the orientation convention of the faces.
fn lump(a: &CsrMatrix) -> Vec<f64> {
    (0..a.nrows()).map(|i| a.row(i).map(|(_, v)| v.abs()).sum()).collect()
}

fn invert(d: &[f64]) -> Result<Vec<f64>> {
    d.iter()
        .enumerate()
        .map(|(i, &v)| if v > 0.0 && v.is_finite() { Ok(1.0 / v) } else { Err(DycoreError::Lumping(i)) })
        .collect()
}

impl SchurPreconditioner {
    pub fn new(op: &LinearOperator, mesh_n: usize, cfg: &SolverConfig) -> Result<Self> {
        let layout = op.layout;
        let (tu, tr, tt, dt) = (op.tau_u, op.tau_rho, op.tau_theta, op.dt);
        let mut mu = op.ops.m2.clone();
        if op.ops.mmu.nnz() > 0 {
            mu = mu.add(1.0, &op.ops.mmu, dt);
        }
        let mu_d = lump(&mu);
        let mtheta_inv = invert(&lump(&op.ops.mtheta))?;
        // diag(P_{2vθ} Mθ⁻¹ P_{θ2v}): P_{2vθ} has one entry per vertical face
        let coupling = op.p2v.scaled(None, Some(&mtheta_inv)).matmul(&op.pt2v);
        let b: Vec<f64> = (0..layout.nfaces)
            .map(|f| {
                if layout.is_boundary(f) {
                    1.0
                } else {
                    mu_d[f] + tu * tt * dt * dt * coupling.get(f, f).max(0.0)
                }
            })
            .collect();
        let b_inv = invert(&b)?;
        let volume_inv = invert(&op.ops.volumes)?;

        let e_rho_v: Vec<f64> = op.eos.e_rho.iter().zip(&volume_inv).map(|(e, v)| e * v).collect();
        let c_rho = op.ops.d.scaled(Some(&e_rho_v), Some(&op.rho_face));
        let c_theta = op.e_theta_matrix().scaled(None, Some(&mtheta_inv)).matmul(&op.pt2v);
        let c = c_rho.add(tr * dt, &c_theta, tt * dt);
        let cbg = c.scaled(None, Some(&b_inv)).matmul(&op.g);
        let h = CsrMatrix::diagonal_matrix(&op.eos.e_pi).add(1.0, &cbg, tu * dt);
        let mg = Multigrid::new(&h, mesh_n, layout.layers, cfg)?;
        Ok(Self { b_inv, mtheta_inv, volume_inv, h, c, mg })
    }

    /// z ≈ 𝓛⁻¹ r.
    pub fn apply(&self, op: &LinearOperator, r: &[f64]) -> Vec<f64> {
        let bl = &op.blocks;
        let (ru, rr, rt, rp) = bl.split(r);
        let (tu, tr, tt, dt) = (op.tau_u, op.tau_rho, op.tau_theta, op.dt);
        let mt_rt: Vec<f64> = rt.iter().zip(&self.mtheta_inv).map(|(a, b)| a * b).collect();
        let mut ru_t = ru.to_vec();
        op.p2v.mul_vec_add(tu * dt, &mt_rt, &mut ru_t);

        let bru: Vec<f64> = ru_t.iter().zip(&self.b_inv).map(|(a, b)| a * b).collect();
        let et = op.apply_e_theta(&mt_rt);
        let mut rhs: Vec<f64> = (0..rp.len()).map(|k| rp[k] + op.eos.e_rho[k] * self.volume_inv[k] * rr[k] + et[k]).collect();
        self.c.mul_vec_add(-1.0, &bru, &mut rhs);
        let pi = self.mg.solve(&rhs);

        let mut u = ru_t;
        op.g.mul_vec_add(tu * dt, &pi, &mut u);
        for (a, b) in u.iter_mut().zip(&self.b_inv) {
            *a *= b;
        }
        let mut theta = rt.to_vec();
        op.pt2v.mul_vec_add(-tt * dt, &u, &mut theta);
        for (a, b) in theta.iter_mut().zip(&self.mtheta_inv) {
            *a *= b;
        }
        let div = op.mass_flux_divergence(&u);
        let rho: Vec<f64> = (0..rr.len()).map(|k| (rr[k] - tr * dt * div[k]) * self.volume_inv[k]).collect();
        bl.concat(&u, &rho, &theta, &pi)
    }
}
