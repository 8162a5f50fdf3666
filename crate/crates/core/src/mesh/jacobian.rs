//! The Q1 coordinate field and the factorised Jacobian J = (∂χ/∂ξ)(∂ξ/∂χ̂).

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use super::panel;
use super::CubedSphereMesh;
use crate::error::Result;

/// Vertex values of (ξ, η, r) on one cell. Vertex `v` sits at
/// χ̂ = (v & 1, (v >> 1) & 1, (v >> 2) & 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellCoords {
    /// Zero-based panel.
    pub panel: usize,
    pub xi: [f64; 8],
    pub eta: [f64; 8],
    pub r: [f64; 8],
}

/// The two Jacobian factors, their product and its determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellJacobian {
    pub dchi_dxi: Matrix3<f64>,
    pub dxi_dchihat: Matrix3<f64>,
    pub j: Matrix3<f64>,
    pub det: f64,
}

/// Cell extents and terrain slopes at a cell centre.
///
/// `tan_slope_xi` is (∂r/∂x̂)/Δξ so that the (r, x̂) entry of ∂ξ/∂χ̂ is Δξ tan δ_ξ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMetrics {
    pub dxi: f64,
    pub deta: f64,
    pub dr: f64,
    pub tan_slope_xi: f64,
    pub tan_slope_eta: f64,
}

fn weights(c: [f64; 3]) -> [f64; 8] {
    let mut w = [0.0; 8];
    for (v, wv) in w.iter_mut().enumerate() {
        let f = |bit: usize, x: f64| if bit == 1 { x } else { 1.0 - x };
        *wv = f(v & 1, c[0]) * f((v >> 1) & 1, c[1]) * f((v >> 2) & 1, c[2]);
    }
    w
}

fn weight_gradients(c: [f64; 3]) -> [[f64; 3]; 8] {
    let mut g = [[0.0; 3]; 8];
    for (v, gv) in g.iter_mut().enumerate() {
        let bits = [v & 1, (v >> 1) & 1, (v >> 2) & 1];
        let f = |d: usize| if bits[d] == 1 { c[d] } else { 1.0 - c[d] };
        let df = |d: usize| if bits[d] == 1 { 1.0 } else { -1.0 };
        gv[0] = df(0) * f(1) * f(2);
        gv[1] = f(0) * df(1) * f(2);
        gv[2] = f(0) * f(1) * df(2);
    }
    g
}

impl CellCoords {
    /// Trilinear interpolant (ξ, η, r) at χ̂.
    pub fn eval(&self, c: [f64; 3]) -> (f64, f64, f64) {
        let w = weights(c);
        let mut out = (0.0, 0.0, 0.0);
        for v in 0..8 {
            out.0 += w[v] * self.xi[v];
            out.1 += w[v] * self.eta[v];
            out.2 += w[v] * self.r[v];
        }
        out
    }

    /// ∂(ξ, η, r)/∂χ̂ from the trilinear interpolant.
    pub fn dxi_dchihat(&self, c: [f64; 3]) -> Matrix3<f64> {
        let g = weight_gradients(c);
        let mut m = Matrix3::zeros();
        for v in 0..8 {
            for d in 0..3 {
                m[(0, d)] += self.xi[v] * g[v][d];
                m[(1, d)] += self.eta[v] * g[v][d];
                m[(2, d)] += self.r[v] * g[v][d];
            }
        }
        m
    }

    pub fn point(&self, c: [f64; 3]) -> Vector3<f64> {
        let (xi, eta, r) = self.eval(c);
        panel::point(self.panel, xi, eta, r)
    }

    pub fn jacobian(&self, c: [f64; 3]) -> CellJacobian {
        let (xi, eta, r) = self.eval(c);
        let dchi_dxi = panel::rotation(self.panel) * panel::unrotated_basis(xi, eta, r);
        let dxi_dchihat = self.dxi_dchihat(c);
        let j = dchi_dxi * dxi_dchihat;
        CellJacobian { dchi_dxi, dxi_dchihat, j, det: j.determinant() }
    }

    pub fn metrics(&self) -> CellMetrics {
        let m = self.dxi_dchihat([0.5; 3]);
        CellMetrics {
            dxi: m[(0, 0)],
            deta: m[(1, 1)],
            dr: m[(2, 2)],
            tan_slope_xi: m[(2, 0)] / m[(0, 0)],
            tan_slope_eta: m[(2, 1)] / m[(1, 1)],
        }
    }
}

/// Tensor-product Gauss–Legendre rule on the unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    points: Vec<([f64; 3], f64)>,
}

impl GaussRule {
    /// `n` points per direction, 1 ≤ n ≤ 3.
    pub fn tensor(n: usize) -> Self {
        let (x, w): (Vec<f64>, Vec<f64>) = match n {
            1 => (vec![0.5], vec![1.0]),
            2 => {
                let d = 0.5 / 3f64.sqrt();
                (vec![0.5 - d, 0.5 + d], vec![0.5, 0.5])
            }
            3 => {
                let d = 0.5 * (0.6f64).sqrt();
                (vec![0.5 - d, 0.5, 0.5 + d], vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])
            }
            _ => panic!("Gauss rule with {n} points per direction is not tabulated"),
        };
        let mut points = Vec::with_capacity(n * n * n);
        for c in 0..n {
            for b in 0..n {
                for a in 0..n {
                    points.push(([x[a], x[b], x[c]], w[a] * w[b] * w[c]));
                }
            }
        }
        Self { points }
    }

    pub fn points(&self) -> &[([f64; 3], f64)] {
        &self.points
    }
}

/// Jacobians of every cell at a fixed set of reference points.
#[derive(Debug, Clone)]
pub struct JacobianField {
    points: Vec<[f64; 3]>,
    data: Vec<CellJacobian>,
}

impl JacobianField {
    pub fn new(mesh: &CubedSphereMesh, points: &[[f64; 3]]) -> Result<Self> {
        let data: Result<Vec<Vec<CellJacobian>>> = (0..mesh.ncells())
            .into_par_iter()
            .map(|cell| points.iter().map(|&p| mesh.cell_jacobian(cell, p)).collect())
            .collect();
        Ok(Self { points: points.to_vec(), data: data?.into_iter().flatten().collect() })
    }

    pub fn at_centres(mesh: &CubedSphereMesh) -> Result<Self> {
        Self::new(mesh, &[[0.5; 3]])
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn get(&self, cell: usize, point: usize) -> &CellJacobian {
        &self.data[cell * self.points.len() + point]
    }

    pub fn min_det(&self) -> f64 {
        self.data.iter().map(|j| j.det).fold(f64::INFINITY, f64::min)
    }
}
