use dycore::driver::{gaussian_orography, resting_atmosphere};
use dycore::fem::{
    assemble_divergence, assemble_gradient, coriolis_matrix, eos_residual, mass_w2, project_vector_potential,
    sample_equation_of_state, Layout,
};
use dycore::mesh::{CubedSphereMesh, GaussRule, VerticalMeshSpec};
use dycore::sparse::dot;
use dycore::PhysicalConstants;
use nalgebra::Vector3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const A: f64 = 6_371_229.0;

fn hill_mesh(n: usize, layers: usize) -> CubedSphereMesh {
    let oro = |lon: f64, lat: f64| gaussian_orography(lon, lat, A);
    CubedSphereMesh::new(n, A, VerticalMeshSpec::quadratic(20_000.0, layers, 1.0), Some(&oro)).unwrap()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

fn random(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn curl_of_a_potential_is_divergence_free_over_orography() {
    let mesh = hill_mesh(6, 4);
    let layout = Layout::new(&mesh);
    let d = assemble_divergence(&layout);
    let b = Vector3::new(0.3, -1.2, 0.7);
    let u = project_vector_potential(&mesh, &layout, &move |x: &Vector3<f64>| {
        Vector3::new(x.y * x.z, b.dot(x), -x.x) / A
    });
    let umax = max_abs(&u);
    assert!(umax > 0.0);
    let dmax = max_abs(&d.mul_vec(&u));
    assert!(dmax <= 1e-12 * umax, "{dmax:e} vs {umax:e}");
}

#[test]
fn gradient_of_constant_theta_is_scaled_divergence_transpose() {
    let mesh = hill_mesh(6, 4);
    let layout = Layout::new(&mesh);
    let c = PhysicalConstants::default();
    let theta = vec![300.0; layout.ntheta];
    let g = assemble_gradient(&layout, &theta, c.cp);
    let dt = assemble_divergence(&layout).transpose();
    let pi = random(layout.ncells, 4);
    let lhs = g.mul_vec(&pi);
    let rhs = dt.mul_vec(&pi);
    for (a, b) in lhs.iter().zip(&rhs) {
        assert!((a - c.cp * 300.0 * b).abs() <= 1e-12 * c.cp * 300.0);
    }
}

#[test]
fn linearised_equation_of_state_matches_finite_differences() {
    let mesh = CubedSphereMesh::flat(4, A, VerticalMeshSpec::uniform(10_000.0, 3)).unwrap();
    let layout = Layout::new(&mesh);
    let c = PhysicalConstants::default();
    let x = resting_atmosphere(&mesh, &layout, &c);
    let ops = sample_equation_of_state(&layout, &c, &x.exner, &x.rho, &x.theta).unwrap();
    let r0 = eos_residual(&layout, &c, &x.exner, &x.rho, &x.theta);
    assert!(r0.iter().all(|r| r.abs() < 1e-12));
    let h = 1e-7;
    let dp = random(layout.ncells, 1);
    let dr = random(layout.ncells, 2);
    let dth = random(layout.ntheta, 3);
    let exner: Vec<f64> = x.exner.iter().zip(&dp).map(|(v, d)| v + h * d * v).collect();
    let rho: Vec<f64> = x.rho.iter().zip(&dr).map(|(v, d)| v + h * d * v).collect();
    let theta: Vec<f64> = x.theta.iter().zip(&dth).map(|(v, d)| v + h * d * v).collect();
    let r1 = eos_residual(&layout, &c, &exner, &rho, &theta);
    for k in 0..layout.ncells {
        let (b, t) = layout.cell_theta(k);
        let lin = -(ops.e_pi[k] * (exner[k] - x.exner[k])
            - ops.e_rho[k] * (rho[k] - x.rho[k])
            - ops.e_theta[k] * (theta[b] - x.theta[b] + theta[t] - x.theta[t]));
        assert!((r1[k] - lin).abs() < 1e-12, "cell {k}: {} vs {lin}", r1[k]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn divergence_sums_telescope(seed in any::<u64>()) {
        let mesh = CubedSphereMesh::flat(3, 1.0, VerticalMeshSpec::uniform(0.1, 2)).unwrap();
        let layout = Layout::new(&mesh);
        let d = assemble_divergence(&layout);
        let u = random(layout.nfaces, seed);
        let total: f64 = d.mul_vec(&u).iter().sum();
        let scale: f64 = u.iter().map(|v| v.abs()).sum();
        prop_assert!(total.abs() <= 1e-13 * scale, "{:e}", total);
    }

    #[test]
    fn mass_matrix_is_symmetric_positive_and_coriolis_is_skew(seed in any::<u64>()) {
        let mesh = hill_mesh(3, 2);
        let layout = Layout::new(&mesh);
        let rule = GaussRule::tensor(3);
        let m2 = mass_w2(&mesh, &layout, &rule);
        let mc = coriolis_matrix(&mesh, &layout, &rule, [0.0, 0.0, 2.0 * 7.292e-5]);
        let u = random(layout.nfaces, seed);
        let v = random(layout.nfaces, seed.wrapping_add(1));
        let uv = dot(&u, &m2.mul_vec(&v));
        let vu = dot(&v, &m2.mul_vec(&u));
        prop_assert!((uv - vu).abs() <= 1e-12 * (uv.abs() + vu.abs() + dot(&u, &m2.mul_vec(&u))));
        prop_assert!(dot(&u, &m2.mul_vec(&u)) > 0.0);
        let cu = mc.mul_vec(&u);
        let scale: f64 = cu.iter().zip(&u).map(|(a, b)| (a * b).abs()).sum();
        prop_assert!(dot(&u, &cu).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE));
    }
}
