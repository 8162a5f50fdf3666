//! Interpolation of column fields onto a regular latitude-longitude grid.
//!
//! Each target point is located on its panel; the four nearest column centres
//! (following coordinate lines across seams) are mapped into that panel's
//! extended (ξ, η) and the point is inverted bilinearly in that quad. Next to a
//! cube corner only three centres exist and barycentric weights are used.
//! Weights are clamped and renormalised so the interpolation is convex.

use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::{Matrix2, Vector2, Vector3};

use crate::mesh::{panel, HorizontalMesh};

#[derive(Debug, Clone, PartialEq)]
pub struct LatLonGrid {
    pub nlat: usize,
    pub nlon: usize,
    /// Up to four (column, weight) pairs per grid point, row-major (lat, lon).
    stencils: Vec<Vec<(usize, f64)>>,
}

/// Latitude of row `i`: cell-centred between the poles.
pub fn grid_latitude(i: usize, nlat: usize) -> f64 {
    -PI / 2.0 + (i as f64 + 0.5) * PI / nlat as f64
}

/// Longitude of column `j`, starting at −π.
pub fn grid_longitude(j: usize, nlon: usize) -> f64 {
    -PI + j as f64 * 2.0 * PI / nlon as f64
}

fn extended_coords(p: usize, x: &Vector3<f64>) -> Vector2<f64> {
    let local = panel::rotation(p).transpose() * x;
    Vector2::new((local[1] / local[0]).atan(), (local[2] / local[0]).atan())
}

fn bilinear_inverse(q: Vector2<f64>, c: [Vector2<f64>; 4]) -> (f64, f64) {
    let (mut s, mut t) = (0.5, 0.5);
    for _ in 0..20 {
        let f = (1.0 - s) * (1.0 - t) * c[0] + s * (1.0 - t) * c[1] + (1.0 - s) * t * c[2] + s * t * c[3] - q;
        let ds = (1.0 - t) * (c[1] - c[0]) + t * (c[3] - c[2]);
        let dt = (1.0 - s) * (c[2] - c[0]) + s * (c[3] - c[1]);
        let jac = Matrix2::from_columns(&[ds, dt]);
        let Some(inv) = jac.try_inverse() else { break };
        let step = inv * f;
        s -= step[0];
        t -= step[1];
        if step.norm() < 1e-14 {
            break;
        }
    }
    (s, t)
}

/// Unclamped barycentric coordinates.
fn barycentric(q: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>, c: Vector2<f64>) -> [f64; 3] {
    let m = Matrix2::from_columns(&[b - a, c - a]);
    let l = m.try_inverse().map(|inv| inv * (q - a)).unwrap_or(Vector2::new(1.0 / 3.0, 1.0 / 3.0));
    [1.0 - l[0] - l[1], l[0], l[1]]
}

/// Clamps to nonnegative and renormalises.
fn convex(w: &[f64]) -> Vec<f64> {
    let w: Vec<f64> = w.iter().map(|v| v.max(0.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

/// Weights of the centres of the 2×2 block at extended indices (fi, fj), and how far
/// outside the block the point lies (0 when inside).
fn block_weights(h: &HorizontalMesh, p: usize, q: Vector2<f64>, fi: isize, fj: isize) -> Option<(Vec<(usize, f64)>, f64)> {
    let mut pts: Vec<(usize, Vector2<f64>)> = Vec::with_capacity(4);
    for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
        if let Some(col) = h.virtual_column(p, fi + di, fj + dj) {
            pts.push((col, extended_coords(p, &h.column_centre(col))));
        }
    }
    let (w, outside) = match pts.len() {
        4 => {
            let (s, t) = bilinear_inverse(q, [pts[0].1, pts[1].1, pts[2].1, pts[3].1]);
            let outside = [-s, s - 1.0, -t, t - 1.0].into_iter().fold(0.0f64, f64::max);
            let (s, t) = (s.clamp(0.0, 1.0), t.clamp(0.0, 1.0));
            (vec![(1.0 - s) * (1.0 - t), s * (1.0 - t), (1.0 - s) * t, s * t], outside)
        }
        3 => {
            let l = barycentric(q, pts[0].1, pts[1].1, pts[2].1);
            (convex(&l), l.iter().fold(0.0f64, |a, v| a.max(-v)))
        }
        _ => return None,
    };
    Some((pts.iter().zip(w).map(|(&(c, _), w)| (c, w)).collect(), outside))
}

/// Convex interpolation weights of the column centres around direction `x`.
pub fn point_stencil(h: &HorizontalMesh, x: &Vector3<f64>) -> Vec<(usize, f64)> {
    let (p, xi, eta) = panel::locate(x);
    let q = Vector2::new(xi, eta);
    let fi = ((xi + FRAC_PI_4) / h.dxi() - 0.5).floor() as isize;
    let fj = ((eta + FRAC_PI_4) / h.dxi() - 0.5).floor() as isize;
    // beyond a seam the neighbour's coordinate lines bend, so the enclosing block may be
    // one row or column over
    let mut best: Option<(Vec<(usize, f64)>, f64)> = None;
    for (a, b) in [(0, 0), (0, 1), (0, -1), (1, 0), (-1, 0), (1, 1), (1, -1), (-1, 1), (-1, -1)] {
        if let Some((w, out)) = block_weights(h, p, q, fi + a, fj + b) {
            if best.as_ref().is_none_or(|(_, o)| out < *o - 1e-12) {
                let inside = out <= 1e-12;
                best = Some((w, out));
                if inside {
                    break;
                }
            }
        }
    }
    best.map(|(w, _)| w).unwrap_or_else(|| vec![(h.locate_column(x).0, 1.0)])
}

impl LatLonGrid {
    pub fn new(h: &HorizontalMesh, nlat: usize, nlon: usize) -> Self {
        let mut stencils = Vec::with_capacity(nlat * nlon);
        for i in 0..nlat {
            for j in 0..nlon {
                let x = panel::unit_from_lon_lat(grid_longitude(j, nlon), grid_latitude(i, nlat));
                stencils.push(point_stencil(h, &x));
            }
        }
        Self { nlat, nlon, stencils }
    }

    /// Interpolates one value per column.
    pub fn interpolate(&self, column_values: &[f64]) -> Vec<f64> {
        self.stencils.iter().map(|st| st.iter().map(|&(c, w)| w * column_values[c]).sum()).collect()
    }

    /// Interpolates level `k` of a column-major field with `nlev` values per column.
    pub fn interpolate_level(&self, field: &[f64], nlev: usize, k: usize) -> Vec<f64> {
        self.stencils.iter().map(|st| st.iter().map(|&(c, w)| w * field[c * nlev + k]).sum()).collect()
    }
}
