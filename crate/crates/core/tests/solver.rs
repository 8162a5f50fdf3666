use dycore::driver::{build_model, initial_state, Case, ExperimentConfig};
use dycore::solver::{gcr, ReferenceState};
use dycore::sparse::norm;
use dycore::timestepper::Model;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model(case: Case, n: usize, layers: usize, dt: f64) -> Model {
    let mut cfg = ExperimentConfig::for_case(case, n);
    cfg.layers = layers;
    cfg.dt = dt;
    build_model(&cfg).unwrap()
}

fn random(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// A right-hand side with every block at its natural scale.
fn scaled_rhs(model: &Model, seed: u64) -> Vec<f64> {
    let l = &model.layout;
    let b = random(l.nfaces + 2 * l.ncells + l.ntheta, seed);
    let (nf, nc, nt) = (l.nfaces, l.ncells, l.ntheta);
    let mut out = b.clone();
    for f in 0..nf {
        out[f] = if l.is_boundary(f) { 0.0 } else { b[f] * 1e12 };
    }
    for k in 0..nc {
        out[nf + k] = b[nf + k] * 1e10 * model.ops.volumes[k] / 1e15;
    }
    for i in 0..nt {
        out[nf + nc + i] = b[nf + nc + i] * 1e14;
    }
    for k in 0..nc {
        out[nf + nc + nt + k] = b[nf + nc + nt + k] * 1e-4;
    }
    out
}

#[test]
fn gcr_agrees_with_a_dense_direct_solve() {
    let m = model(Case::GaussianHill, 3, 3, 900.0);
    let x = initial_state(&m, Case::GaussianHill);
    let (op, pre) = m.linear_operator(&ReferenceState::from_state(&x)).unwrap();
    let n = op.blocks.total();
    let dense = op.to_dense();
    let a = DMatrix::from_fn(n, n, |i, j| dense[i][j]);
    let b = scaled_rhs(&m, 11);
    let exact = a.clone().lu().solve(&DVector::from_column_slice(&b)).unwrap();
    let mut cfg = m.config.solver.clone();
    cfg.tolerance = 1e-11;
    cfg.max_iterations = 400;
    let (sol, stats) = gcr(&op, &pre, &b, &cfg).unwrap();
    for (rg, name) in op.blocks.ranges().into_iter().zip(["u", "rho", "theta", "exner"]) {
        let e: Vec<f64> = rg.clone().map(|i| sol[i] - exact[i]).collect();
        let s: Vec<f64> = rg.clone().map(|i| exact[i]).collect();
        let rel = norm(&e) / norm(&s);
        assert!(rel < 1e-6, "{name}: {rel:e} after {} iterations", stats.iterations);
    }
}

#[test]
fn helmholtz_operator_has_a_positive_diagonal() {
    let m = model(Case::GaussianHill, 6, 5, 1800.0);
    let x = initial_state(&m, Case::GaussianHill);
    let (_, pre) = m.linear_operator(&ReferenceState::from_state(&x)).unwrap();
    let d = pre.h.diagonal();
    assert!(d.iter().all(|&v| v > 0.0 && v.is_finite()));
    assert_eq!(pre.mg.nlevels(), 2);
}

#[test]
fn one_v_cycle_reduces_the_helmholtz_residual() {
    let m = model(Case::RestingAtmosphere, 24, 10, 600.0);
    let x = initial_state(&m, Case::RestingAtmosphere);
    let (_, pre) = m.linear_operator(&ReferenceState::from_state(&x)).unwrap();
    assert_eq!(pre.mg.nlevels(), 4);
    let b = random(pre.h.nrows(), 5);
    let e = pre.mg.solve(&b);
    let mut r = b.clone();
    pre.h.mul_vec_add(-1.0, &e, &mut r);
    let factor = norm(&b) / norm(&r);
    assert!(factor >= 4.0, "reduction {factor}");
}

#[test]
fn resting_state_solve_converges_quickly() {
    let m = model(Case::RestingAtmosphere, 12, 10, 600.0);
    let x = initial_state(&m, Case::RestingAtmosphere);
    let (op, pre) = m.linear_operator(&ReferenceState::from_state(&x)).unwrap();
    let b = scaled_rhs(&m, 3);
    let (_, stats) = gcr(&op, &pre, &b, &m.config.solver).unwrap();
    assert!(stats.iterations <= 30, "{} iterations", stats.iterations);
    assert!(stats.block_residuals.iter().all(|&r| r <= m.config.solver.tolerance));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn operator_and_preconditioner_are_linear(seed in any::<u64>(), a in -3.0f64..3.0) {
        let m = model(Case::GaussianHill, 3, 3, 900.0);
        let x = initial_state(&m, Case::GaussianHill);
        let (op, pre) = m.linear_operator(&ReferenceState::from_state(&x)).unwrap();
        let v1 = scaled_rhs(&m, seed);
        let v2 = scaled_rhs(&m, seed ^ 0xabc);
        let mix: Vec<f64> = v1.iter().zip(&v2).map(|(p, q)| a * p + q).collect();
        let apply_op = |v: &[f64]| op.apply(v);
        let apply_pre = |v: &[f64]| pre.apply(&op, v);
        let maps: [&dyn Fn(&[f64]) -> Vec<f64>; 2] = [&apply_op, &apply_pre];
        for f in maps {
            let (y1, y2, ym) = (f(&v1), f(&v2), f(&mix));
            let scale = norm(&ym) + norm(&y1) + norm(&y2);
            let err: Vec<f64> = (0..ym.len()).map(|i| ym[i] - a * y1[i] - y2[i]).collect();
            prop_assert!(norm(&err) <= 1e-12 * scale);
        }
    }
}
