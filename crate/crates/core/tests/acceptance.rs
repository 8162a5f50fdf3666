//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use dycore::driver::advection::{run_advection, AdvectionCase, AdvectionSetup, InitialShape};
use dycore::driver::{
    build_model, gaussian_orography, height_of_pressure, initial_state, read_checkpoint, run, Case, ExperimentConfig,
    RunOptions,
};
use dycore::fem::{assemble_divergence, assemble_gradient, coriolis_matrix, project_vector_potential, Layout};
use dycore::mesh::{average_grid_spacing, panel, CubedSphereMesh, GaussRule, VerticalMeshSpec};
use dycore::solver::{gcr, ReferenceState};
use dycore::sparse::dot;
use dycore::timestepper::{advecting_wind, zero_transport_residuals, Model, ResidualVector};
use dycore::transport::{advect_then_flux, courant_numbers, FvGrid, TransportConfig};
use dycore::PhysicalConstants;
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const A: f64 = 6_371_229.0;

type Outcome = (bool, String);

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

fn grid_spacing() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, km) in [(96, 96.0), (448, 20.6), (896, 10.3), (48, 192.1)] {
        let d = average_grid_spacing(n, A) / 1000.0;
        ok &= (d - km).abs() <= 0.1;
        parts.push(format!("C{n} {d:.2} km"));
    }
    (ok, parts.join(", "))
}

fn composed_map(mesh: &CubedSphereMesh, cell: usize, c: [f64; 3]) -> Vector3<f64> {
    let co = mesh.cell_coords(cell);
    let (mut xi, mut eta, mut r) = (0.0, 0.0, 0.0);
    for v in 0..8 {
        let w: f64 = (0..3).map(|d| if (v >> d) & 1 == 1 { c[d] } else { 1.0 - c[d] }).product();
        xi += w * co.xi[v];
        eta += w * co.eta[v];
        r += w * co.r[v];
    }
    panel::point(co.panel, xi, eta, r)
}

fn jacobian() -> Outcome {
    let oro = |lon: f64, lat: f64| gaussian_orography(lon, lat, A);
    let spec = VerticalMeshSpec::uniform(32_000.0, 4);
    let meshes = [CubedSphereMesh::flat(12, A, spec.clone()).unwrap(), CubedSphereMesh::new(12, A, spec, Some(&oro)).unwrap()];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut panels = [0usize; 6];
    for i in 0..1000 {
        let mesh = &meshes[i % 2];
        let cell = rng.gen_range(0..mesh.ncells());
        panels[mesh.cell_coords(cell).panel] += 1;
        let c = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
        let j = mesh.cell_jacobian(cell, c).unwrap().j;
        let h = 1e-5;
        let mut fd = Matrix3::zeros();
        for d in 0..3 {
            let (mut p, mut m) = (c, c);
            p[d] += h;
            m[d] -= h;
            fd.set_column(d, &((composed_map(mesh, cell, p) - composed_map(mesh, cell, m)) / (2.0 * h)));
        }
        worst = worst.max((j - fd).norm() / fd.norm());
    }
    (worst <= 1e-6 && panels.iter().all(|&k| k > 0), format!("max relative error {worst:.2e} over 1000 points, per panel {panels:?}"))
}

/// C24L4 shell, solid-body wind about a tilted axis, Courant 0.8, 200 steps.
fn shell_transport() -> (f64, f64, f64) {
    let mesh = CubedSphereMesh::flat(24, A, VerticalMeshSpec::uniform(10_000.0, 4)).unwrap();
    let layout = Layout::new(&mesh);
    let grid = FvGrid::cells(&mesh, 2).unwrap();
    let w = Vector3::new(1.0, 1.0, 1.0).normalize() * 2.0 * PI / (12.0 * 86_400.0);
    let u = project_vector_potential(&mesh, &layout, &move |x: &Vector3<f64>| w.dot(x) * x);
    let wind = grid.wind_from_w2(&layout, &u);
    let dt = 0.8 / courant_numbers(&grid, &wind, 1.0).0;
    let cfg = TransportConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut one = vec![1.0; grid.len()];
    let mut s: Vec<f64> = (0..grid.len()).map(|_| rng.gen::<f64>()).collect();
    let mass = |s: &[f64]| s.iter().zip(&grid.volumes).map(|(a, v)| a * v).sum::<f64>();
    let m0 = mass(&s);
    let mut drift = 0.0f64;
    for _ in 0..200 {
        one = advect_then_flux(&grid, &wind, &one, dt, &cfg).unwrap().s;
        s = advect_then_flux(&grid, &wind, &s, dt, &cfg).unwrap().s;
        drift = drift.max(((mass(&s) - m0) / m0).abs());
    }
    let err = one.iter().fold(0.0f64, |a, v| a.max((v - 1.0).abs()));
    (err, drift, courant_numbers(&grid, &wind, dt).0)
}

fn transport_order() -> Outcome {
    let l2: Vec<f64> = [12, 24, 48].iter().map(|&n| run_advection(&AdvectionSetup::new(AdvectionCase::SolidBody, n)).unwrap().l2).collect();
    let coarse = (l2[0] / l2[1]).log2();
    let fine = (l2[1] / l2[2]).log2();
    (
        fine >= 1.8,
        format!("l2 C12/C24/C48 {:.3e}/{:.3e}/{:.3e}, order C12-C24 {coarse:.2}, C24-C48 {fine:.2} (finest pair is the observed order)", l2[0], l2[1], l2[2]),
    )
}

fn monotonicity() -> Outcome {
    let mut setup = AdvectionSetup::new(AdvectionCase::SolidBody, 24);
    setup.shape = InitialShape::SlottedCylinder;
    setup.transport.monotone = true;
    setup.advective = true;
    let r = run_advection(&setup).unwrap();
    let (lo, hi) = r.initial_range;
    let ok = r.range.0 >= lo && r.range.1 <= hi;
    (ok, format!("initial [{lo}, {hi}], extremes over the revolution [{:.3e}, {:.17}]", r.range.0, r.range.1))
}

fn mimetic() -> Outcome {
    let oro = |lon: f64, lat: f64| gaussian_orography(lon, lat, A);
    let mesh = CubedSphereMesh::new(6, A, VerticalMeshSpec::uniform(20_000.0, 4), Some(&oro)).unwrap();
    let layout = Layout::new(&mesh);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u: Vec<f64> = (0..layout.nfaces).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mc = coriolis_matrix(&mesh, &layout, &GaussRule::tensor(3), [0.0, 0.0, 2.0 * 7.292e-5]);
    let cu = mc.mul_vec(&u);
    let scale: f64 = cu.iter().zip(&u).map(|(a, b)| (a * b).abs()).sum();
    let skew = dot(&u, &cu).abs() / scale;
    let d = assemble_divergence(&layout);
    let dt = d.transpose();
    // every interior face leaves one cell and enters another with the same weight
    let mut unpaired = 0;
    for f in 0..layout.nfaces {
        let e: Vec<f64> = dt.row(f).map(|(_, v)| v).collect();
        let paired = e.len() == 2 && e[0] + e[1] == 0.0 && e[0] != 0.0;
        if !(paired || layout.is_boundary(f)) {
            unpaired += 1;
        }
    }
    let c = PhysicalConstants::default();
    let g = assemble_gradient(&layout, &vec![300.0; layout.ntheta], c.cp);
    let pi: Vec<f64> = (0..layout.ncells).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (gp, dp) = (g.mul_vec(&pi), dt.mul_vec(&pi));
    let gerr = gp.iter().zip(&dp).map(|(a, b)| (a - c.cp * 300.0 * b).abs()).fold(0.0, f64::max) / (c.cp * 300.0 * max_abs(&dp));
    (
        skew <= 1e-12 && unpaired == 0 && gerr <= 1e-12,
        format!("Coriolis skewness {skew:.1e}, unpaired interior faces {unpaired}, gradient vs scaled transpose {gerr:.1e}"),
    )
}

/// Scalar centred-implicit toy plus the θ relation of the full model on C4L4 over a hill.
fn inner_loop() -> Outcome {
    let (dt, tau) = (2.0, 0.5);
    let g = [0.3, -1.1, 0.7];
    let theta_n = [1.0, 2.0, 3.0];
    let u_n = [0.5, 0.25, -0.4];
    let u_seq = [[0.9, 0.1, -0.2], [1.3, -0.2, 0.1], [0.7, 0.4, -0.9]];
    let mut toy = 0.0f64;
    for inner in 1..=3 {
        let (mut theta, mut u) = (theta_n, u_n);
        for k in 0..inner {
            let rt: Vec<f64> = (0..3).map(|i| -(theta[i] - theta_n[i] + dt * u_n[i] * g[i])).collect();
            let mut r = ResidualVector { u: vec![0.0; 3], rho: vec![0.0; 3], theta: rt, exner: vec![0.0; 3] };
            zero_transport_residuals(&mut r, k);
            for i in 0..3 {
                theta[i] += r.theta[i] - tau * dt * (u_seq[k][i] - u[i]) * g[i];
            }
            u = u_seq[k];
        }
        toy = toy.max((0..3).map(|i| (theta[i] - theta_n[i] + 0.5 * dt * (u[i] + u_n[i]) * g[i]).abs()).fold(0.0, f64::max));
    }
    let mut full = 0.0f64;
    for inner in 1..=3 {
        let mut cfg = ExperimentConfig::for_case(Case::GaussianHill, 4);
        cfg.layers = 4;
        cfg.outer = 1;
        cfg.inner = inner;
        let m = build_model(&cfg).unwrap();
        let xn = initial_state(&m, Case::GaussianHill);
        let x1 = m.step(&xn, 1).unwrap().0;
        full = full.max(theta_defect(&m, &xn, &x1));
    }
    (toy <= 1e-12 && full <= 1e-12, format!("scalar toy {toy:.1e}, full model {full:.1e} for 1 to 3 inner iterations"))
}

fn theta_defect(model: &Model, xn: &dycore::fem::StateVector, x1: &dycore::fem::StateVector) -> f64 {
    let (op, _) = model.linear_operator(&ReferenceState::from_state(xn)).unwrap();
    let p = model.compute_predictors(xn).unwrap();
    let t = model.transport(&p, &advecting_wind(&xn.u, &xn.u)).unwrap();
    let d: Vec<f64> = (0..xn.theta.len()).map(|i| x1.theta[i] - xn.theta[i] - (t.theta_advected[i] - p.theta[i])).collect();
    let md = model.ops.mtheta.mul_vec(&d);
    let du: Vec<f64> = x1.u.iter().zip(&xn.u).map(|(a, b)| a - b).collect();
    let coupling = op.pt2v.mul_vec(&du);
    let tdt = op.tau_theta * op.dt;
    let r: Vec<f64> = md.iter().zip(&coupling).map(|(a, c)| a + tdt * c).collect();
    max_abs(&r) / (max_abs(&coupling) * tdt + max_abs(&md))
}

fn window_max(v: &[f64], from: usize, to: usize) -> f64 {
    v[from..to].iter().cloned().fold(0.0, f64::max)
}

fn resting() -> Outcome {
    let mut cfg = ExperimentConfig::for_case(Case::RestingAtmosphere, 24);
    cfg.layers = 15;
    cfg.dt = 600.0;
    cfg.steps = 288;
    let out = run(&cfg, &RunOptions::default()).unwrap();
    let r = &out.records;
    let m0 = r[0].mass;
    let mass = r.iter().map(|x| ((x.mass - m0) / m0).abs()).fold(0.0, f64::max);
    let u: Vec<f64> = r.iter().map(|x| x.max_u).collect();
    let w: Vec<f64> = r.iter().map(|x| x.max_w).collect();
    // final day split into quarters: the last may not exceed the first by more than 10%
    let (q0, q3) = ((144, 180), (252, 289));
    let grow = |v: &[f64]| window_max(v, q3.0, q3.1) / window_max(v, q0.0, q0.1);
    let (gu, gw) = (grow(&u), grow(&w));
    let wmax = window_max(&w, 0, w.len());
    let ok = mass <= 1e-9 && wmax < 0.1 && gu <= 1.1 && gw <= 1.1 && u.iter().all(|v| v.is_finite());
    (
        ok,
        format!(
            "mass drift {mass:.1e}, max|w| {wmax:.2e} m/s, max|u| {:.3e} m/s at day 1 and {:.3e} at day 2, final-day growth u x{gu:.2} w x{gw:.2}",
            u[144], u[288]
        ),
    )
}

fn hill() -> Outcome {
    let mut cfg = ExperimentConfig::for_case(Case::GaussianHill, 24);
    cfg.layers = 10;
    cfg.dt = 900.0;
    cfg.steps = 192;
    let out = run(&cfg, &RunOptions::default()).unwrap();
    let m = build_model(&cfg).unwrap();
    let x0 = initial_state(&m, Case::GaussianHill);
    let finite = [&out.state.u, &out.state.rho, &out.state.theta, &out.state.exner].iter().all(|v| v.iter().all(|x| x.is_finite()));
    let m0 = out.records[0].mass;
    let mass = out.records.iter().map(|x| ((x.mass - m0) / m0).abs()).fold(0.0, f64::max);
    let (z0, z1) = (height_of_pressure(&m, &x0, 70_000.0), height_of_pressure(&m, &out.state, 70_000.0));
    let (mut lee, mut far) = (0.0f64, 0.0f64);
    for col in 0..m.mesh.ncolumns() {
        let dz = (z1[col] - z0[col]).abs();
        let (lon, lat) = panel::lon_lat(&m.mesh.horizontal().column_centre(col));
        let dlon = (lon + PI / 2.0 + PI).rem_euclid(2.0 * PI) - PI;
        if (0.0..=PI / 2.0).contains(&dlon) && (0.0..=PI / 3.0).contains(&lat) {
            lee = lee.max(dz);
        } else if lat < -PI / 6.0 {
            far = far.max(dz);
        }
    }
    let ok = finite && mass <= 1e-9 && lee.is_finite() && lee > 5.0 * far;
    (ok, format!("finite {finite}, mass drift {mass:.1e}, lee |dz700| {lee:.2} m, southern far field {far:.3} m (ratio {:.1})", lee / far))
}

fn solver_iterations(n: usize, layers: usize, dt: f64) -> (usize, bool) {
    let mut cfg = ExperimentConfig::for_case(Case::RestingAtmosphere, n);
    cfg.layers = layers;
    cfg.dt = dt;
    let m = build_model(&cfg).unwrap();
    let x = initial_state(&m, Case::RestingAtmosphere);
    let (op, pre) = m.linear_operator(&ReferenceState::from_state(&x)).unwrap();
    let l = &m.layout;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut b = vec![0.0; op.blocks.total()];
    for (i, v) in b.iter_mut().enumerate() {
        let r: f64 = rng.gen_range(-1.0..1.0);
        *v = if i < l.nfaces {
            if l.is_boundary(i) { 0.0 } else { r * 1e12 }
        } else if i < l.nfaces + l.ncells {
            r * 1e10 * m.ops.volumes[i - l.nfaces] / 1e15
        } else if i < l.nfaces + l.ncells + l.ntheta {
            r * 1e14
        } else {
            r * 1e-4
        };
    }
    let (_, stats) = gcr(&op, &pre, &b, &m.config.solver).unwrap();
    (stats.iterations, stats.block_residuals.iter().all(|&r| r <= 1e-6))
}

fn solver() -> Outcome {
    let (k12, conv) = solver_iterations(12, 10, 600.0);
    let k: Vec<usize> = [6, 12, 24].iter().map(|&n| solver_iterations(n, 10, 14_400.0 / n as f64).0).collect();
    let growth = k[2] as f64 / k[0] as f64;
    (
        k12 <= 30 && conv && growth < 1.5,
        format!("C12L10 {k12} iterations; fixed Courant C6/C12/C24 {}/{}/{} (growth x{growth:.2})", k[0], k[1], k[2]),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::for_case(Case::GaussianHill, 6);
    cfg.layers = 5;
    cfg.steps = 6;
    let full = run(&cfg, &RunOptions::default()).unwrap();
    let ck = dir.path().join("half.ck");
    let first = run(&cfg, &RunOptions { steps: Some(3), checkpoint: Some(ck.clone()), ..Default::default() }).unwrap();
    let step = read_checkpoint(&ck).unwrap().0.step;
    let second = run(&cfg, &RunOptions { restart: Some(ck), ..Default::default() }).unwrap();
    let joined: Vec<_> = first.records.iter().chain(&second.records).cloned().collect();
    let same = joined == full.records && second.state == full.state;
    (same && step == 3, format!("6 steps vs 3 + restart + 3 on C6L5: diagnostics and state identical {same}"))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("grid spacing table", grid_spacing),
        ("Jacobian vs finite differences", jacobian),
        ("constant preservation", || {
            let (err, _, c) = shell_transport();
            (err <= 1e-12, format!("max|s-1| {err:.1e} after 200 steps at Courant {c:.2}"))
        }),
        ("conservation", || {
            let (_, drift, _) = shell_transport();
            (drift <= 1e-11, format!("max relative mass change {drift:.1e} over 200 steps"))
        }),
        ("transport order", transport_order),
        ("monotonicity", monotonicity),
        ("mimetic identities", mimetic),
        ("inner-loop consistency", inner_loop),
        ("resting atmosphere C24L15", resting),
        ("Gaussian hill C24L10", hill),
        ("solver regression", solver),
        ("checkpoint determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let (ok, detail) = f();
        if !ok {
            failed += 1;
        }
        println!("criterion {id:>2} {name}: {} ({detail}) [{:.1} s]", if ok { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
