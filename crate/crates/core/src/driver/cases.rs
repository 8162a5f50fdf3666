//! Initial conditions: resting atmosphere over a cosine mountain range and
//! zonal flow over a Gaussian hill.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::constants::PhysicalConstants;
use crate::fem::{project_vector_potential, Layout, StateVector};
use crate::mesh::{great_circle_distance, panel, CubedSphereMesh};

pub const RESTING_H0: f64 = 2000.0;
pub const RESTING_RM: f64 = 3.0 * PI / 4.0;
pub const RESTING_ZETA: f64 = PI / 16.0;
pub const RESTING_CENTRE: (f64, f64) = (3.0 * PI / 2.0, 0.0);
pub const RESTING_T0: f64 = 300.0;
pub const RESTING_LAPSE: f64 = 0.0065;

pub const HILL_H0: f64 = 2000.0;
pub const HILL_ZETA: f64 = 1.5e6;
pub const HILL_CENTRE: (f64, f64) = (-PI / 2.0, PI / 6.0);
pub const HILL_U0: f64 = 20.0;
pub const HILL_T: f64 = 288.0;
pub const HILL_PP: f64 = 93_000.0;

/// Surface height of the resting-atmosphere mountain range at (λ, φ).
pub fn resting_orography(lon: f64, lat: f64) -> f64 {
    let rm = great_circle_distance(lon, lat, RESTING_CENTRE.0, RESTING_CENTRE.1);
    if rm < RESTING_RM {
        let c = (PI * rm / RESTING_ZETA).cos();
        0.5 * RESTING_H0 * (1.0 + (PI * rm / RESTING_RM).cos()) * c * c
    } else {
        0.0
    }
}

/// Surface height of the Gaussian hill on a sphere of radius `a`.
pub fn gaussian_orography(lon: f64, lat: f64, a: f64) -> f64 {
    let rm = great_circle_distance(lon, lat, HILL_CENTRE.0, HILL_CENTRE.1);
    HILL_H0 * (-(a * rm / HILL_ZETA).powi(2)).exp()
}

/// Surface pressure of the Gaussian-hill case at latitude φ and surface height z_s.
pub fn gaussian_surface_pressure(lat: f64, zs: f64, c: &PhysicalConstants) -> f64 {
    let a = c.radius;
    let cos2 = lat.cos().powi(2);
    HILL_PP * ((2.0 * c.omega * a + HILL_U0) * HILL_U0 / (2.0 * c.rd * HILL_T) * cos2).exp() * (-zs * c.gravity / (c.rd * HILL_T)).exp()
}

/// Thermodynamic fields from analytic p(λ, φ, z) and T(z). θ is sampled at the Wθ
/// dofs; Π is sampled in the lowest cell and integrated upwards with the discrete
/// hydrostatic relation c_p θ_f (Π_K − Π_L) = Φ_L − Φ_K; ρ follows from the equation
/// of state.
pub fn hydrostatic_state(
    mesh: &CubedSphereMesh,
    layout: &Layout,
    c: &PhysicalConstants,
    pressure: &dyn Fn(f64, f64, f64) -> f64,
    temperature: &dyn Fn(f64) -> f64,
) -> StateVector {
    let m = mesh.layers();
    let mut x = StateVector::zeros(layout);
    for col in 0..mesh.ncolumns() {
        let (lon, lat) = panel::lon_lat(&mesh.horizontal().column_centre(col));
        for k in 0..=m {
            let z = mesh.level_height(col, k);
            x.theta[layout.theta_dof(col, k)] = temperature(z) / c.exner(pressure(lon, lat, z));
        }
        let z0 = mesh.cell_centre_height(col * m);
        x.exner[col * m] = c.exner(pressure(lon, lat, z0));
        for k in 1..m {
            let dz = mesh.cell_centre_height(col * m + k) - mesh.cell_centre_height(col * m + k - 1);
            let th = x.theta[layout.theta_dof(col, k)];
            x.exner[col * m + k] = x.exner[col * m + k - 1] - c.gravity * dz / (c.cp * th);
        }
        for k in 0..m {
            let (b, t) = layout.cell_theta(col * m + k);
            x.rho[col * m + k] = c.density(x.exner[col * m + k], 0.5 * (x.theta[b] + x.theta[t]));
        }
    }
    x
}

pub fn resting_atmosphere(mesh: &CubedSphereMesh, layout: &Layout, c: &PhysicalConstants) -> StateVector {
    let t = |z: f64| RESTING_T0 - RESTING_LAPSE * z;
    let expo = c.gravity / (c.rd * RESTING_LAPSE);
    let p = move |_: f64, _: f64, z: f64| c.p0 * (t(z) / RESTING_T0).powf(expo);
    hydrostatic_state(mesh, layout, c, &p, &t)
}

pub fn gaussian_hill(mesh: &CubedSphereMesh, layout: &Layout, c: &PhysicalConstants) -> StateVector {
    let t = |_: f64| HILL_T;
    let p = |_: f64, lat: f64, z: f64| gaussian_surface_pressure(lat, z, c);
    let mut x = hydrostatic_state(mesh, layout, c, &p, &t);
    x.u = rigid_rotation_flux(mesh, layout, HILL_U0 / c.radius);
    x
}

/// Face fluxes of the solid-body rotation ω ẑ × x (zonal speed ω r cos φ).
pub fn rigid_rotation_flux(mesh: &CubedSphereMesh, layout: &Layout, omega: f64) -> Vec<f64> {
    let w = Vector3::new(0.0, 0.0, omega);
    // radial gauge (ω·x) x: curl is ω × x and the circulations cancel far less
    project_vector_potential(mesh, layout, &move |x: &Vector3<f64>| w.dot(x) * x)
}
