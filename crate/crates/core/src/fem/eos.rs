//! Nodal sampling of the equation of state and its linearisation.

use rayon::prelude::*;

use super::Layout;
use crate::constants::PhysicalConstants;
use crate::error::{DycoreError, Result};

/// Diagonal entries of E^Π, E^ρ and the per-dof entry of E^θ (applied to both Wθ dofs of a cell).
#[derive(Debug, Clone, PartialEq)]
pub struct EosOperators {
    pub e_pi: Vec<f64>,
    pub e_rho: Vec<f64>,
    pub e_theta: Vec<f64>,
    pub residual: Vec<f64>,
}

fn cell_theta(layout: &Layout, theta: &[f64], cell: usize) -> f64 {
    let (b, t) = layout.cell_theta(cell);
    0.5 * (theta[b] + theta[t])
}

/// 1 − p₀ Π^{(1−κ)/κ} / (R ρ θ) at every cell centre.
pub fn eos_residual(layout: &Layout, c: &PhysicalConstants, exner: &[f64], rho: &[f64], theta: &[f64]) -> Vec<f64> {
    let e = c.eos_exponent();
    (0..layout.ncells)
        .into_par_iter()
        .map(|k| 1.0 - c.p0 * exner[k].powf(e) / (c.rd * rho[k] * cell_theta(layout, theta, k)))
        .collect()
}

/// Samples the linearised equation of state about (Π*, ρ*, θ*).
pub fn sample_equation_of_state(
    layout: &Layout,
    c: &PhysicalConstants,
    exner: &[f64],
    rho: &[f64],
    theta: &[f64],
) -> Result<EosOperators> {
    for k in 0..layout.ncells {
        let th = cell_theta(layout, theta, k);
        for (field, v) in [("exner", exner[k]), ("rho", rho[k]), ("theta", th)] {
            if !(v > 0.0) {
                return Err(DycoreError::State { field, cell: k, value: v });
            }
        }
    }
    let e = c.eos_exponent();
    let mut ops = EosOperators {
        e_pi: Vec::with_capacity(layout.ncells),
        e_rho: Vec::with_capacity(layout.ncells),
        e_theta: Vec::with_capacity(layout.ncells),
        residual: Vec::with_capacity(layout.ncells),
    };
    for k in 0..layout.ncells {
        let th = cell_theta(layout, theta, k);
        let ratio = c.p0 * exner[k].powf(e) / (c.rd * rho[k] * th);
        ops.e_pi.push(e * ratio / exner[k]);
        ops.e_rho.push(1.0 / rho[k]);
        ops.e_theta.push(0.5 / th);
        ops.residual.push(1.0 - ratio);
    }
    Ok(ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{CubedSphereMesh, VerticalMeshSpec};

    #[test]
    fn consistent_state_has_zero_residual_and_doubled_density_half() {
        let mesh = CubedSphereMesh::flat(3, 6.371e6, VerticalMeshSpec::uniform(1.0e4, 1)).unwrap();
        let layout = Layout::new(&mesh);
        let c = PhysicalConstants::default();
        let rho0 = c.p0 / (c.rd * 300.0);
        let theta = vec![300.0; layout.ntheta];
        let exner = vec![1.0; layout.ncells];
        let ops = sample_equation_of_state(&layout, &c, &exner, &vec![rho0; layout.ncells], &theta).unwrap();
        assert!(ops.residual.iter().all(|r| r.abs() < 1e-14));
        assert!((ops.e_rho[0] - 1.0 / rho0).abs() < 1e-14);
        let r2 = eos_residual(&layout, &c, &exner, &vec![2.0 * rho0; layout.ncells], &theta);
        assert!((r2[0] - 0.5).abs() < 1e-14);
        let bad = sample_equation_of_state(&layout, &c, &exner, &vec![-1.0; layout.ncells], &theta);
        assert!(matches!(bad, Err(DycoreError::State { field: "rho", cell: 0, .. })));
    }
}
