//! Upwind polynomial reconstruction of face values.
//!
//! Horizontally a polynomial in 1, x, …, x^d, y, …, y^d is fit by least squares
//! to the cell averages of a cross of cells centred on the upwind cell, in gnomonic tangent-plane
//! coordinates whose x axis points at the face being reconstructed. Vertically a
//! degree-d polynomial in height is fit through d + 1 cells centred on the upwind
//! cell, shifted inwards near the boundaries.

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{DycoreError, Result};
use crate::mesh::{panel, HorizontalMesh, Side, SIDES};

/// Cached horizontal stencils and weights, shared by every level.
#[derive(Debug, Clone)]
pub struct HorizontalStencils {
    npts: usize,
    cols: Vec<usize>,
    weights: Vec<f64>,
}

/// Columns of the cross stencil: the centre first, then arms of length d/2 in W, E, S, N order.
fn cross_stencil(h: &HorizontalMesh, col: usize, arm: usize) -> Vec<usize> {
    let mut out = vec![col];
    for side in SIDES {
        let (mut c, mut s) = (col, side);
        for _ in 0..arm {
            let (next, entry) = h.neighbour(c, s);
            c = next;
            s = entry.opposite();
            out.push(c);
        }
    }
    out
}

fn tangent_coords(centre: &Vector3<f64>, p: &Vector3<f64>) -> Vector3<f64> {
    p / p.dot(centre) - centre
}

fn basis_row(x: f64, y: f64, degree: usize) -> Vec<f64> {
    let mut r = Vec::with_capacity(2 * degree + 1);
    r.push(1.0);
    for p in 1..=degree as i32 {
        r.push(x.powi(p));
    }
    for p in 1..=degree as i32 {
        r.push(y.powi(p));
    }
    r
}

/// Weights w with Σ w_i s_i = p(x_face) for the least-squares fit p of basis
/// 1, x^1..x^d, y^1..y^d to point values at `points`.
pub fn least_squares_weights(points: &[(f64, f64)], target: (f64, f64), degree: usize) -> Option<Vec<f64>> {
    let rows: Vec<Vec<f64>> = points.iter().map(|&(x, y)| basis_row(x, y, degree)).collect();
    fit_weights(&rows, target, degree)
}

/// As [`least_squares_weights`], but each stencil value is matched to the basis
/// averaged over weighted sample points of its cell.
pub fn least_squares_average_weights(cells: &[Vec<((f64, f64), f64)>], target: (f64, f64), degree: usize) -> Option<Vec<f64>> {
    let rows: Vec<Vec<f64>> = cells
        .iter()
        .map(|samples| {
            let total: f64 = samples.iter().map(|s| s.1).sum();
            let mut r = vec![0.0; 2 * degree + 1];
            for &((x, y), w) in samples {
                for (ri, b) in r.iter_mut().zip(basis_row(x, y, degree)) {
                    *ri += w * b / total;
                }
            }
            r
        })
        .collect();
    fit_weights(&rows, target, degree)
}

fn fit_weights(rows: &[Vec<f64>], target: (f64, f64), degree: usize) -> Option<Vec<f64>> {
    let nb = 2 * degree + 1;
    if rows.len() < nb {
        return None;
    }
    let a = DMatrix::from_fn(rows.len(), nb, |i, j| rows[i][j]);
    // column scaling keeps the normal equations well conditioned
    let scale: Vec<f64> = (0..nb).map(|j| a.column(j).norm().max(f64::MIN_POSITIVE)).collect();
    let a = DMatrix::from_fn(rows.len(), nb, |i, j| a[(i, j)] / scale[j]);
    let chol = (a.transpose() * &a).cholesky()?;
    let t = basis_row(target.0, target.1, degree);
    let z = chol.solve(&DVector::from_fn(nb, |j, _| t[j] / scale[j]));
    let w = &a * z;
    w.iter().all(|v| v.is_finite()).then(|| w.iter().copied().collect())
}

/// 3×3 Gauss samples of a column's spherical quadrilateral with area weights.
fn column_samples(h: &HorizontalMesh, col: usize) -> Vec<(Vector3<f64>, f64)> {
    let (p, i, j) = h.column_index(col);
    let g = [0.5 - 0.5 * 0.6f64.sqrt(), 0.5, 0.5 + 0.5 * 0.6f64.sqrt()];
    let gw = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    let mut out = Vec::with_capacity(9);
    for b in 0..3 {
        for a in 0..3 {
            let xi = h.node_angle(i) + g[a] * h.dxi();
            let eta = h.node_angle(j) + g[b] * h.dxi();
            let (tx, te) = (xi.tan(), eta.tan());
            let rho2 = 1.0 + tx * tx + te * te;
            let area = (1.0 + tx * tx) * (1.0 + te * te) / (rho2 * rho2.sqrt());
            out.push((panel::point(p, xi, eta, 1.0), gw[a] * gw[b] * area));
        }
    }
    out
}

impl HorizontalStencils {
    pub fn new(h: &HorizontalMesh, degree: usize) -> Result<Self> {
        if degree % 2 != 0 {
            return Err(DycoreError::Config(format!("reconstruction degree must be even, got {degree}")));
        }
        let arm = degree / 2;
        let npts = 4 * arm + 1;
        let ncol = h.ncolumns();
        let mut cols = Vec::with_capacity(ncol * npts);
        let mut weights = Vec::with_capacity(ncol * 4 * npts);
        for col in 0..ncol {
            let stencil = cross_stencil(h, col, arm);
            let centre = h.column_centre(col);
            let samples: Vec<Vec<(Vector3<f64>, f64)>> = stencil.iter().map(|&c| column_samples(h, c)).collect();
            for side in SIDES {
                if degree == 0 {
                    weights.push(1.0);
                    continue;
                }
                let face = tangent_coords(&centre, &h.side_midpoint(col, side));
                let xa = face.normalize();
                let ya = centre.cross(&xa);
                let local = |p: &Vector3<f64>| {
                    let q = tangent_coords(&centre, p);
                    (q.dot(&xa), q.dot(&ya))
                };
                let cells: Vec<Vec<((f64, f64), f64)>> =
                    samples.iter().map(|smp| smp.iter().map(|(x, w)| (local(x), *w)).collect()).collect();
                let w = least_squares_average_weights(&cells, local(&h.side_midpoint(col, side)), degree)
                    .ok_or_else(|| DycoreError::StencilDegeneracy(format!("column {col} side {side:?}")))?;
                weights.extend(w);
            }
            cols.extend(stencil);
        }
        Ok(Self { npts, cols, weights })
    }

    pub fn npts(&self) -> usize {
        self.npts
    }

    pub fn stencil(&self, col: usize) -> &[usize] {
        &self.cols[col * self.npts..(col + 1) * self.npts]
    }

    pub fn weights(&self, col: usize, side: Side) -> &[f64] {
        let o = (col * 4 + side.index()) * self.npts;
        &self.weights[o..o + self.npts]
    }

    /// Value at the `side` face of upwind column `col`, level `k`. Written in
    /// differences from the centre so that constants come back bitwise.
    pub fn value(&self, s: &[f64], nlev: usize, col: usize, side: Side, k: usize) -> f64 {
        let w = self.weights(col, side);
        let s0 = s[col * nlev + k];
        s0 + self.stencil(col)[1..].iter().zip(&w[1..]).map(|(&c, wi)| wi * (s[c * nlev + k] - s0)).sum::<f64>()
    }

    /// Range of the stencil values at level `k`.
    pub fn bounds(&self, s: &[f64], nlev: usize, col: usize, k: usize) -> (f64, f64) {
        self.stencil(col).iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| {
            let v = s[c * nlev + k];
            (lo.min(v), hi.max(v))
        })
    }
}

/// Cached vertical stencils: for every interface of every column, the fit from
/// the cell below and from the cell above.
#[derive(Debug, Clone)]
pub struct VerticalStencils {
    nlev: usize,
    npts: usize,
    start: Vec<usize>,
    weights: Vec<f64>,
}

/// Lagrange weights of the polynomial through `xs` evaluated at `x`.
pub fn lagrange_weights(xs: &[f64], x: f64) -> Vec<f64> {
    (0..xs.len())
        .map(|i| {
            xs.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &xj)| (x - xj) / (xs[i] - xj))
                .product()
        })
        .collect()
}

/// First level of the d+1 point stencil centred on `upwind`, shifted to stay in 0..nlev.
pub fn vertical_stencil_start(upwind: usize, degree: usize, nlev: usize) -> usize {
    let half = degree / 2;
    upwind.saturating_sub(half).min(nlev - degree - 1)
}

impl VerticalStencils {
    /// `centres` holds ncol × nlev point heights, `interfaces` ncol × (nlev+1) interface heights.
    pub fn new(centres: &[f64], interfaces: &[f64], nlev: usize, degree: usize) -> Result<Self> {
        if nlev < degree + 1 {
            return Err(DycoreError::Config(format!(
                "vertical reconstruction of degree {degree} needs at least {} levels, got {nlev}",
                degree + 1
            )));
        }
        let ncol = centres.len() / nlev;
        let npts = degree + 1;
        let mut start = Vec::with_capacity(ncol * (nlev + 1) * 2);
        let mut weights = Vec::with_capacity(ncol * (nlev + 1) * 2 * npts);
        for col in 0..ncol {
            let zc = &centres[col * nlev..(col + 1) * nlev];
            for j in 0..=nlev {
                let zf = interfaces[col * (nlev + 1) + j];
                for upwind in [j.max(1) - 1, j.min(nlev - 1)] {
                    let s0 = vertical_stencil_start(upwind, degree, nlev);
                    start.push(s0);
                    weights.extend(lagrange_weights(&zc[s0..s0 + npts], zf));
                }
            }
        }
        Ok(Self { nlev, npts, start, weights })
    }

    /// Value at interface `j` of a column from the cell below (`from_above = false`) or above.
    pub fn value(&self, s: &[f64], col: usize, j: usize, from_above: bool) -> f64 {
        let idx = (col * (self.nlev + 1) + j) * 2 + from_above as usize;
        let s0 = self.start[idx];
        let w = &self.weights[idx * self.npts..(idx + 1) * self.npts];
        let base = col * self.nlev + s0;
        let v0 = s[base];
        v0 + w[1..].iter().enumerate().map(|(i, wi)| wi * (s[base + i + 1] - v0)).sum::<f64>()
    }

    pub fn bounds(&self, s: &[f64], col: usize, j: usize, from_above: bool) -> (f64, f64) {
        let idx = (col * (self.nlev + 1) + j) * 2 + from_above as usize;
        let base = col * self.nlev + self.start[idx];
        s[base..base + self.npts].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_fit_reproduces_quadratics() {
        let pts = [(0.0, 0.0), (-1.0, 0.1), (1.1, -0.05), (0.05, -0.9), (-0.02, 1.2)];
        let f = |x: f64, y: f64| 2.0 - 0.5 * x + 0.3 * y + 0.7 * x * x - 0.2 * y * y;
        let w = least_squares_weights(&pts, (0.5, 0.02), 2).unwrap();
        let v: f64 = pts.iter().zip(&w).map(|(p, wi)| wi * f(p.0, p.1)).sum();
        assert!((v - f(0.5, 0.02)).abs() < 1e-12);
    }

    #[test]
    fn shifted_boundary_stencil_evaluates_the_same_polynomial() {
        let zc = [50.0, 150.0, 250.0, 350.0, 450.0];
        let zf = [0.0, 100.0, 200.0, 300.0, 400.0, 500.0];
        let vs = VerticalStencils::new(&zc, &zf, 5, 2).unwrap();
        let p = |z: f64| 1.0 + 0.01 * z - 3e-5 * z * z;
        let s: Vec<f64> = zc.iter().map(|&z| p(z)).collect();
        for j in 0..=5 {
            for above in [false, true] {
                assert!((vs.value(&s, 0, j, above) - p(zf[j])).abs() < 1e-12);
            }
        }
        assert_eq!(vertical_stencil_start(0, 2, 5), 0);
        assert_eq!(vertical_stencil_start(4, 2, 5), 2);
        assert!(VerticalStencils::new(&zc[..2], &zf[..3], 2, 2).is_err());
    }
}
