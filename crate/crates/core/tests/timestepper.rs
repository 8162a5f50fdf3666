use dycore::driver::{build_model, diagnostics, initial_state, Case, ExperimentConfig};
use dycore::fem::eos_residual;
use dycore::mesh::CubedSphereMesh;
use dycore::solver::ReferenceState;
use dycore::timestepper::{advecting_wind, zero_transport_residuals, Model, ResidualVector};

fn hill_model(n: usize, layers: usize, outer: usize, inner: usize) -> Model {
    let mut cfg = ExperimentConfig::for_case(Case::GaussianHill, n);
    cfg.layers = layers;
    cfg.outer = outer;
    cfg.inner = inner;
    build_model(&cfg).unwrap()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

/// max |Mθ(θ¹ − θⁿ − (θ_adv − θ^p)) + τΔt P_{θ2v}(u¹ − uⁿ)| relative to the size of its terms.
fn theta_relation_defect(model: &Model, xn: &dycore::fem::StateVector, x1: &dycore::fem::StateVector) -> f64 {
    let (op, _) = model.linear_operator(&ReferenceState::from_state(xn)).unwrap();
    let p = model.compute_predictors(xn).unwrap();
    let t = model.transport(&p, &advecting_wind(&xn.u, &xn.u)).unwrap();
    let d: Vec<f64> =
        (0..xn.theta.len()).map(|i| x1.theta[i] - xn.theta[i] - (t.theta_advected[i] - p.theta[i])).collect();
    let mut r = model.ops.mtheta.mul_vec(&d);
    let du: Vec<f64> = x1.u.iter().zip(&xn.u).map(|(a, b)| a - b).collect();
    let coupling = op.pt2v.mul_vec(&du);
    let tdt = op.tau_theta * op.dt;
    for (r, c) in r.iter_mut().zip(&coupling) {
        *r += tdt * c;
    }
    let scale = max_abs(&coupling) * tdt + max_abs(&model.ops.mtheta.mul_vec(&d));
    max_abs(&r) / scale
}

#[test]
fn inner_iterations_keep_the_centred_implicit_theta_relation() {
    for inner in 1..=3 {
        let m = hill_model(4, 4, 1, inner);
        let xn = initial_state(&m, Case::GaussianHill);
        let (x1, stats) = m.step(&xn, 1).unwrap();
        assert_eq!(stats.solves.len(), inner);
        let defect = theta_relation_defect(&m, &xn, &x1);
        assert!(defect < 1e-12, "inner {inner}: {defect:e}");
    }
}

/// Scalar toy: θ' + τΔt u'·g = R_θ on a few points, with u following an arbitrary inner
/// sequence. With zeroing the result is centred implicit in the final u; without it the
/// mismatch (u^{(k)} − u^{(o)})·g appears.
#[test]
fn residual_zeroing_removes_the_inner_loop_inconsistency() {
    let (dt, tau) = (2.0, 0.5);
    let g = [0.3, -1.1, 0.7];
    let theta_n = [1.0, 2.0, 3.0];
    let u_n = [0.5, 0.25, -0.4];
    let u_seq = [[0.9, 0.1, -0.2], [1.3, -0.2, 0.1], [0.7, 0.4, -0.9]];
    for inner in 1..=3 {
        for zeroing in [true, false] {
            let u_outer = u_n;
            let wind = advecting_wind(&u_outer, &u_n);
            let (mut theta, mut u) = (theta_n, u_n);
            for k in 0..inner {
                let rt: Vec<f64> = (0..3).map(|i| -(theta[i] - theta_n[i] + dt * wind[i] * g[i])).collect();
                let mut r = ResidualVector { u: vec![0.0; 3], rho: vec![0.0; 3], theta: rt, exner: vec![0.0; 3] };
                if zeroing {
                    zero_transport_residuals(&mut r, k);
                }
                let u_next = u_seq[k];
                for i in 0..3 {
                    theta[i] += r.theta[i] - tau * dt * (u_next[i] - u[i]) * g[i];
                }
                u = u_next;
            }
            let defect = (0..3)
                .map(|i| (theta[i] - theta_n[i] + 0.5 * dt * (u[i] + u_n[i]) * g[i]).abs())
                .fold(0.0, f64::max);
            if zeroing || inner == 1 {
                assert!(defect < 1e-12, "inner {inner}: {defect:e}");
            } else {
                assert!(defect > 1e-3, "inner {inner} without zeroing should be inconsistent");
            }
        }
    }
}

#[test]
fn flat_resting_state_is_a_fixed_point() {
    let mut cfg = ExperimentConfig::for_case(Case::RestingAtmosphere, 6);
    cfg.layers = 6;
    let mesh = CubedSphereMesh::flat(6, cfg.constants.radius, cfg.vertical_spec()).unwrap();
    let m = Model::new(mesh, cfg.constants, false, cfg.timestepping()).unwrap();
    let x0 = dycore::driver::resting_atmosphere(&m.mesh, &m.layout, &m.constants);
    let mut x = x0.clone();
    for step in 1..=3 {
        x = m.step(&x, step).unwrap().0;
    }
    let w = dycore::driver::wind_components(&m, &x);
    assert!(max_abs(&w.0) < 1e-9 && max_abs(&w.1) < 1e-9);
    let drift = x.exner.iter().zip(&x0.exner).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-9, "{drift:e}");
}

#[test]
fn hill_steps_conserve_mass_and_keep_the_equation_of_state() {
    let m = hill_model(6, 5, 2, 2);
    let mut x = initial_state(&m, Case::GaussianHill);
    let m0 = diagnostics(&m, &x, 0, None).mass;
    for step in 1..=3 {
        let (next, stats) = m.step(&x, step).unwrap();
        assert_eq!(stats.solves.len(), 4);
        x = next;
        let mass = diagnostics(&m, &x, step, None).mass;
        assert!(((mass - m0) / m0).abs() < 1e-12 * step as f64, "step {step}");
    }
    let eos = eos_residual(&m.layout, &m.constants, &x.exner, &x.rho, &x.theta);
    assert!(max_abs(&eos) < 1e-5, "{:e}", max_abs(&eos));
}
