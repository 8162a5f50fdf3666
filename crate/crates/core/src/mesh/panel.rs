//! Equiangular panel geometry: rotations, basis vectors, point maps and point location.

use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::{Matrix3, Vector3};

use crate::error::{DycoreError, Result};

/// Rotation matrices R₁…R₆, row major.
const ROTATIONS: [[f64; 9]; 6] = [
    [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
    [0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    [-1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, -1.0, -1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, -1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0],
    [0.0, -1.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0],
];

/// A point in panel coordinates: panel number (1-based), equiangular (ξ, η) and radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelCoord {
    pub panel: usize,
    pub xi: f64,
    pub eta: f64,
    pub r: f64,
}

impl PanelCoord {
    pub fn new(panel: usize, xi: f64, eta: f64, r: f64) -> Result<Self> {
        if !(1..=6).contains(&panel) {
            return Err(DycoreError::PanelIndex(panel));
        }
        let tol = 1e-12;
        if xi.abs() > FRAC_PI_4 + tol || eta.abs() > FRAC_PI_4 + tol || !(r > 0.0) {
            return Err(DycoreError::Config(format!("panel coordinate out of bounds: ξ={xi}, η={eta}, r={r}")));
        }
        Ok(Self { panel, xi, eta, r })
    }
}

/// Literal rotation matrix for panel `i` in 1..=6.
pub fn panel_rotation(i: usize) -> Result<Matrix3<f64>> {
    if !(1..=6).contains(&i) {
        return Err(DycoreError::PanelIndex(i));
    }
    Ok(rotation(i - 1))
}

/// Zero-based variant used internally.
pub(crate) fn rotation(p: usize) -> Matrix3<f64> {
    Matrix3::from_row_slice(&ROTATIONS[p])
}

/// Columns e_ξ, e_η, e_r in the panel's unrotated frame.
pub fn unrotated_basis(xi: f64, eta: f64, r: f64) -> Matrix3<f64> {
    let tx = xi.tan();
    let te = eta.tan();
    let rho2 = 1.0 + tx * tx + te * te;
    let rho = rho2.sqrt();
    let s = r / (rho2 * rho);
    let cx = 1.0 + tx * tx;
    let ce = 1.0 + te * te;
    let e_xi = Vector3::new(-tx, ce, -tx * te) * (s * cx);
    let e_eta = Vector3::new(-te, -tx * te, cx) * (s * ce);
    let e_r = Vector3::new(1.0, tx, te) / rho;
    Matrix3::from_columns(&[e_xi, e_eta, e_r])
}

/// ∂χ/∂ξ for a panel coordinate: R_i [e_ξ e_η e_r].
pub fn panel_basis(p: &PanelCoord) -> Matrix3<f64> {
    rotation(p.panel - 1) * unrotated_basis(p.xi, p.eta, p.r)
}

/// Geocentric Cartesian position of (ξ, η, r) on zero-based panel `p`.
///
/// ξ and η may lie outside ±π/4; the map is the analytic extension of the panel.
pub fn point(p: usize, xi: f64, eta: f64, r: f64) -> Vector3<f64> {
    let tx = xi.tan();
    let te = eta.tan();
    let rho = (1.0 + tx * tx + te * te).sqrt();
    rotation(p) * Vector3::new(1.0, tx, te) * (r / rho)
}

/// Zero-based panel and (ξ, η) of a Cartesian direction.
pub fn locate(x: &Vector3<f64>) -> (usize, f64, f64) {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for p in 0..6 {
        // first component of R_pᵀ x
        let v = rotation(p).column(0).dot(x);
        if v > best_val {
            best_val = v;
            best = p;
        }
    }
    let local = rotation(best).transpose() * x;
    let xi = (local[1] / local[0]).atan();
    let eta = (local[2] / local[0]).atan();
    (best, xi, eta)
}

/// Longitude in (−π, π] and latitude of a Cartesian point.
pub fn lon_lat(x: &Vector3<f64>) -> (f64, f64) {
    let lon = x[1].atan2(x[0]);
    let lat = (x[2] / x.norm()).clamp(-1.0, 1.0).asin();
    (lon, lat)
}

pub fn unit_from_lon_lat(lon: f64, lat: f64) -> Vector3<f64> {
    Vector3::new(lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin())
}

/// Local eastward unit vector.
pub fn east(lon: f64) -> Vector3<f64> {
    Vector3::new(-lon.sin(), lon.cos(), 0.0)
}

/// Local northward unit vector.
pub fn north(lon: f64, lat: f64) -> Vector3<f64> {
    Vector3::new(-lat.sin() * lon.cos(), -lat.sin() * lon.sin(), lat.cos())
}

/// Great-circle distance in radians between (λ₁, φ₁) and (λ₂, φ₂).
pub fn great_circle_distance(lon1: f64, lat1: f64, lon2: f64, lat2: f64) -> f64 {
    let c = lat1.sin() * lat2.sin() + lat1.cos() * lat2.cos() * (lon2 - lon1).cos();
    c.clamp(-1.0, 1.0).acos().clamp(0.0, PI)
}

/// Square root of the average cell area of a Cn mesh on a sphere of radius `a`.
pub fn average_grid_spacing(n: usize, a: f64) -> f64 {
    (4.0 * PI * a * a / (6.0 * (n * n) as f64)).sqrt()
}
