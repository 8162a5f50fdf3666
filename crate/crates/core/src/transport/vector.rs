//! Advection of the velocity through its Cartesian components.

use nalgebra::Vector3;

use super::{strang_advect, FvGrid, GridWind, TransportConfig};
use crate::error::Result;
use crate::fem::{FemOperators, Layout};

/// Advective tendency of the Cartesian velocity in every cell and its weak form on W2.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorAdvection {
    /// 𝓐 per cell, (χ̇^p − χ̇^{adv}) / Δt.
    pub tendency: Vec<Vector3<f64>>,
    /// R_u^A = −⟨J v̂, 𝓐⟩.
    pub weak: Vec<f64>,
}

/// Pushes `u_p` to cell-centre Cartesian components, advects each one as a W3 scalar
/// and maps the resulting increments back to W2.
pub fn advect_vector(
    grid: &FvGrid,
    ops: &FemOperators,
    layout: &Layout,
    u_p: &[f64],
    wind: &GridWind,
    dt: f64,
    cfg: &TransportConfig,
) -> Result<VectorAdvection> {
    let chi_dot = ops.centre_velocity(layout, u_p);
    let mut tendency = vec![Vector3::zeros(); layout.ncells];
    for comp in 0..3 {
        let s: Vec<f64> = chi_dot.iter().map(|v| v[comp]).collect();
        if s.iter().all(|&v| v == 0.0) {
            continue;
        }
        let out = strang_advect(grid, wind, &s, dt, cfg)?;
        for (c, t) in tendency.iter_mut().enumerate() {
            t[comp] = (s[c] - out[c]) / dt;
        }
    }
    let weak = ops.weak_vector(layout, &tendency).into_iter().map(|v| -v).collect();
    Ok(VectorAdvection { tendency, weak })
}
