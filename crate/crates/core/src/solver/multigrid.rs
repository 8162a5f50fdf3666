//! Horizontal-aggregation multigrid with vertical-line block Gauss–Seidel smoothing.

use nalgebra::{DMatrix, DVector};

use super::SolverConfig;
use crate::error::{DycoreError, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone)]
pub struct MultigridLevel {
    /// Panel resolution of this level.
    pub n: usize,
    pub layers: usize,
    pub a: CsrMatrix,
    /// Piecewise-constant prolongation from the next coarser level, if any.
    pub prolong: Option<CsrMatrix>,
    restrict: Option<CsrMatrix>,
    /// Inverse of every diagonal column block.
    columns: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone)]
pub struct Multigrid {
    pub levels: Vec<MultigridLevel>,
    pre: usize,
    post: usize,
    coarse: usize,
}

/// Maps cells of an n-panel mesh onto the n/2-panel mesh by 2×2 column aggregation.
fn aggregation(n: usize, layers: usize) -> CsrMatrix {
    let nc = n / 2;
    let mut t = Vec::with_capacity(6 * n * n * layers);
    for p in 0..6 {
        for j in 0..n {
            for i in 0..n {
                let fine = p * n * n + j * n + i;
                let coarse = p * nc * nc + (j / 2) * nc + i / 2;
                for k in 0..layers {
                    t.push((fine * layers + k, coarse * layers + k, 1.0));
                }
            }
        }
    }
    CsrMatrix::from_triplets(6 * n * n * layers, 6 * nc * nc * layers, &t)
}

fn column_factors(a: &CsrMatrix, layers: usize) -> Result<Vec<DMatrix<f64>>> {
    let ncol = a.nrows() / layers;
    (0..ncol)
        .map(|c| {
            let base = c * layers;
            let mut block = DMatrix::zeros(layers, layers);
            for r in 0..layers {
                for (j, v) in a.row(base + r) {
                    if j >= base && j < base + layers {
                        block[(r, j - base)] = v;
                    }
                }
            }
            block.try_inverse().ok_or(DycoreError::Lumping(base))
        })
        .collect()
}

impl MultigridLevel {
    fn new(n: usize, layers: usize, a: CsrMatrix) -> Result<Self> {
        let columns = column_factors(&a, layers)?;
        Ok(Self { n, layers, a, prolong: None, restrict: None, columns })
    }

    /// One Gauss–Seidel sweep over whole columns, in forward or reverse column order.
    fn sweep(&self, b: &[f64], x: &mut [f64], reverse: bool) {
        let m = self.layers;
        let ncol = self.columns.len();
        let mut r = DVector::zeros(m);
        let mut sol = DVector::zeros(m);
        for idx in 0..ncol {
            let c = if reverse { ncol - 1 - idx } else { idx };
            let base = c * m;
            for k in 0..m {
                let mut s = b[base + k];
                for (j, v) in self.a.row(base + k) {
                    if j < base || j >= base + m {
                        s -= v * x[j];
                    }
                }
                r[k] = s;
            }
            sol.gemv(1.0, &self.columns[c], &r, 0.0);
            x[base..base + m].copy_from_slice(sol.as_slice());
        }
    }

    fn residual(&self, b: &[f64], x: &[f64]) -> Vec<f64> {
        let mut r = b.to_vec();
        self.a.mul_vec_add(-1.0, x, &mut r);
        r
    }
}

impl Multigrid {
    /// Builds the hierarchy by Galerkin coarsening while the panel resolution halves
    /// to at least 3, up to `cfg.mg_levels` levels.
    pub fn new(a: &CsrMatrix, n: usize, layers: usize, cfg: &SolverConfig) -> Result<Self> {
        let mut levels = vec![MultigridLevel::new(n, layers, a.clone())?];
        while levels.len() < cfg.mg_levels {
            let last = levels.last().unwrap();
            let n = last.n;
            if n % 2 != 0 || n / 2 < 3 {
                break;
            }
            let p = aggregation(n, layers);
            let pt = p.transpose();
            let coarse = pt.matmul(&last.a).matmul(&p);
            let level = MultigridLevel::new(n / 2, layers, coarse)?;
            let last = levels.last_mut().unwrap();
            last.prolong = Some(p);
            last.restrict = Some(pt);
            levels.push(level);
        }
        Ok(Self { levels, pre: cfg.pre_sweeps, post: cfg.post_sweeps, coarse: cfg.coarse_sweeps })
    }

    pub fn nlevels(&self) -> usize {
        self.levels.len()
    }

    /// One V-cycle from a zero initial guess.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.cycle(0, b)
    }

    fn cycle(&self, l: usize, b: &[f64]) -> Vec<f64> {
        let lev = &self.levels[l];
        let mut x = vec![0.0; b.len()];
        if l + 1 == self.levels.len() {
            for s in 0..self.coarse {
                lev.sweep(b, &mut x, s % 2 == 1);
            }
            return x;
        }
        for _ in 0..self.pre {
            lev.sweep(b, &mut x, false);
        }
        let r = lev.residual(b, &x);
        let rc = lev.restrict.as_ref().unwrap().mul_vec(&r);
        let ec = self.cycle(l + 1, &rc);
        lev.prolong.as_ref().unwrap().mul_vec_add(1.0, &ec, &mut x);
        for _ in 0..self.post {
            lev.sweep(b, &mut x, true);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 7-point Laplacian-plus-identity on a 6-panel array of columns, ignoring seams.
    fn model(n: usize, m: usize) -> CsrMatrix {
        let idx = |p: usize, j: usize, i: usize, k: usize| ((p * n + j) * n + i) * m + k;
        let mut t = Vec::new();
        for p in 0..6 {
            for j in 0..n {
                for i in 0..n {
                    for k in 0..m {
                        let r = idx(p, j, i, k);
                        t.push((r, r, 7.0));
                        if i > 0 { t.push((r, idx(p, j, i - 1, k), -1.0)); }
                        if i + 1 < n { t.push((r, idx(p, j, i + 1, k), -1.0)); }
                        if j > 0 { t.push((r, idx(p, j - 1, i, k), -1.0)); }
                        if j + 1 < n { t.push((r, idx(p, j + 1, i, k), -1.0)); }
                        if k > 0 { t.push((r, idx(p, j, i, k - 1), -1.0)); }
                        if k + 1 < m { t.push((r, idx(p, j, i, k + 1), -1.0)); }
                    }
                }
            }
        }
        CsrMatrix::from_triplets(6 * n * n * m, 6 * n * n * m, &t)
    }

    #[test]
    fn hierarchy_depth_and_reduction() {
        let a = model(12, 4);
        let mg = Multigrid::new(&a, 12, 4, &SolverConfig::default()).unwrap();
        assert_eq!(mg.levels.iter().map(|l| l.n).collect::<Vec<_>>(), vec![12, 6, 3]);
        let b: Vec<f64> = (0..a.nrows()).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let mut x = vec![0.0; b.len()];
        let r0 = crate::sparse::norm(&b);
        for _ in 0..5 {
            let r = mg.levels[0].residual(&b, &x);
            let e = mg.solve(&r);
            crate::sparse::axpy(1.0, &e, &mut x);
        }
        let r = crate::sparse::norm(&mg.levels[0].residual(&b, &x));
        assert!(r < 1e-4 * r0, "{r} vs {r0}");
    }
}
