//! Flexible GCR in a weighted norm, and Jacobi-preconditioned CG for mass matrices.

use super::{LinearOperator, SchurPreconditioner, SolverConfig};
use crate::error::{DycoreError, Result};
use crate::sparse::{axpy, dot, norm, CsrMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final weighted residual relative to the initial one.
    pub residual: f64,
    /// Relative weighted residual of each of the u, ρ, θ, Π blocks.
    pub block_residuals: [f64; 4],
    /// Relative residual after every iteration.
    pub trace: Vec<f64>,
}

fn wdot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * w * a * b).sum()
}

fn wnorm(w: &[f64], a: &[f64]) -> f64 {
    wdot(w, a, a).sqrt()
}

/// Solves 𝓛 x = b with right-preconditioned, restarted GCR. Converged when every
/// block of the weighted residual is below `tolerance` times the weighted norm of b.
pub fn gcr(op: &LinearOperator, pre: &SchurPreconditioner, b: &[f64], cfg: &SolverConfig) -> Result<(Vec<f64>, SolveStats)> {
    let w = &op.weights;
    let ranges = op.blocks.ranges();
    let mut x = vec![0.0; b.len()];
    let mut r = b.to_vec();
    let r0 = wnorm(w, &r);
    let block_norms = |r: &[f64]| ranges.clone().map(|rg| wnorm(&w[rg.clone()], &r[rg]) / r0);
    if r0 == 0.0 {
        return Ok((x, SolveStats { iterations: 0, residual: 0.0, block_residuals: [0.0; 4], trace: vec![] }));
    }
    if !r0.is_finite() {
        return Err(DycoreError::SolverFailure { iterations: 0, residual: r0, reason: "non-finite right-hand side", trace: vec![] });
    }
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        let mut zs: Vec<Vec<f64>> = Vec::with_capacity(cfg.restart);
        let mut qs: Vec<Vec<f64>> = Vec::with_capacity(cfg.restart);
        for _ in 0..cfg.restart {
            let mut z = pre.apply(op, &r);
            let mut q = op.apply(&z);
            for (zj, qj) in zs.iter().zip(&qs) {
                let beta = wdot(w, &q, qj);
                axpy(-beta, qj, &mut q);
                axpy(-beta, zj, &mut z);
            }
            let nq = wnorm(w, &q);
            if !(nq > 0.0 && nq.is_finite()) {
                let res = wnorm(w, &r) / r0;
                return Err(DycoreError::SolverFailure { iterations, residual: res, reason: "search direction broke down", trace });
            }
            q.iter_mut().for_each(|v| *v /= nq);
            z.iter_mut().for_each(|v| *v /= nq);
            let alpha = wdot(w, &r, &q);
            axpy(alpha, &z, &mut x);
            axpy(-alpha, &q, &mut r);
            iterations += 1;
            let res = wnorm(w, &r) / r0;
            trace.push(res);
            let blocks = block_norms(&r);
            if blocks.iter().all(|&v| v <= cfg.tolerance) {
                return Ok((x, SolveStats { iterations, residual: res, block_residuals: blocks, trace }));
            }
            if iterations >= cfg.max_iterations {
                return Err(DycoreError::SolverFailure { iterations, residual: res, reason: "iteration cap reached", trace });
            }
            zs.push(z);
            qs.push(q);
        }
    }
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive definite matrix.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], tol: f64, max_iterations: usize) -> Result<Vec<f64>> {
    let dinv: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut x = vec![0.0; b.len()];
    let bn = norm(b);
    if bn == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut trace = Vec::new();
    for it in 0..max_iterations {
        let ap = a.mul_vec(&p);
        let alpha = rz / dot(&p, &ap);
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let res = norm(&r) / bn;
        trace.push(res);
        if res <= tol {
            return Ok(x);
        }
        if !res.is_finite() {
            return Err(DycoreError::SolverFailure { iterations: it + 1, residual: res, reason: "non-finite residual", trace });
        }
        z = r.iter().zip(&dinv).map(|(r, d)| r * d).collect();
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (p, z) in p.iter_mut().zip(&z) {
            *p = z + beta * *p;
        }
    }
    let res = trace.last().copied().unwrap_or(1.0);
    Err(DycoreError::SolverFailure { iterations: max_iterations, residual: res, reason: "iteration cap reached", trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cg_solves_tridiagonal() {
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let xe: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&xe);
        let x = conjugate_gradient(&a, &b, 1e-12, 200).unwrap();
        for (a, b) in x.iter().zip(&xe) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
