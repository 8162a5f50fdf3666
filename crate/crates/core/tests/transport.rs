use dycore::fem::{project_vector_potential, Layout};
use dycore::mesh::{CubedSphereMesh, VerticalMeshSpec};
use dycore::transport::{advect_then_flux, courant_numbers, strang_advect, FvGrid, GridWind, TransportConfig};
use nalgebra::Vector3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const A: f64 = 6_371_229.0;

fn setup(n: usize, layers: usize) -> (CubedSphereMesh, Layout) {
    let mesh = CubedSphereMesh::flat(n, A, VerticalMeshSpec::uniform(10_000.0, layers)).unwrap();
    let layout = Layout::new(&mesh);
    (mesh, layout)
}

/// A tilted rotation plus an overturning part whose potential vanishes on the top and
/// bottom shells, so the wind is discretely divergence free with closed boundaries.
fn swirl(mesh: &CubedSphereMesh, layout: &Layout, grid: &FvGrid) -> GridWind {
    let w = Vector3::new(0.4, -0.3, 1.0).normalize() * 20.0 / A;
    let c = Vector3::new(0.0, 1.0, 0.5);
    let top = mesh.top();
    let u = project_vector_potential(mesh, layout, &move |x: &Vector3<f64>| {
        let h = (std::f64::consts::PI * (x.norm() - A) / top).sin();
        w.dot(x) * x + 0.01 * h * c.cross(x)
    });
    grid.wind_from_w2(layout, &u)
}

fn random_field(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()
}

#[test]
fn constant_field_is_preserved_by_a_divergence_free_wind() {
    let (mesh, layout) = setup(8, 3);
    let grid = FvGrid::cells(&mesh, 2).unwrap();
    let wind = swirl(&mesh, &layout, &grid);
    let div = grid.wind_divergence(&wind);
    let dmax = div.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cfg = TransportConfig::default();
    let mut s = vec![1.0; grid.len()];
    let dt = 0.8 / courant_numbers(&grid, &wind, 1.0).0;
    for _ in 0..10 {
        s = advect_then_flux(&grid, &wind, &s, dt, &cfg).unwrap().s;
    }
    let err = s.iter().fold(0.0f64, |a, v| a.max((v - 1.0).abs()));
    assert!(err < 1e-12, "{err:e} (max divergence {dmax:e})");
}

#[test]
fn interface_grid_advection_keeps_constants() {
    let (mesh, layout) = setup(6, 4);
    let grid = FvGrid::interfaces(&mesh, 2).unwrap();
    let wind = swirl(&mesh, &layout, &grid);
    let s = vec![3.5; grid.len()];
    let dt = 0.5 / courant_numbers(&grid, &wind, 1.0).0;
    let out = strang_advect(&grid, &wind, &s, dt, &TransportConfig::default()).unwrap();
    assert!(out.iter().all(|v| (v - 3.5).abs() < 1e-12));
}

#[test]
fn courant_cap_is_enforced() {
    let (mesh, layout) = setup(6, 3);
    let grid = FvGrid::cells(&mesh, 2).unwrap();
    let wind = swirl(&mesh, &layout, &grid);
    let cfg = TransportConfig { max_substeps: 2, ..TransportConfig::default() };
    let dt = 5.0 / courant_numbers(&grid, &wind, 1.0).0;
    assert!(advect_then_flux(&grid, &wind, &vec![1.0; grid.len()], dt, &cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn flux_form_conserves_mass(seed in any::<u64>(), courant in 0.1f64..1.6) {
        let (mesh, layout) = setup(4, 3);
        let grid = FvGrid::cells(&mesh, 2).unwrap();
        let wind = swirl(&mesh, &layout, &grid);
        let s0 = random_field(grid.len(), seed);
        let dt = courant / courant_numbers(&grid, &wind, 1.0).0;
        let out = advect_then_flux(&grid, &wind, &s0, dt, &TransportConfig::default()).unwrap();
        let mass = |s: &[f64]| s.iter().zip(&grid.volumes).map(|(a, v)| a * v).sum::<f64>();
        let rel = (mass(&out.s) - mass(&s0)).abs() / mass(&s0);
        prop_assert!(rel < 1e-13, "{:e}", rel);
        let div_total: f64 = out.divergence.iter().sum();
        prop_assert!(div_total.abs() < 1e-13 * mass(&s0));
    }

    #[test]
    fn unlimited_transport_is_linear(seed in any::<u64>(), a in -2.0f64..2.0) {
        let (mesh, layout) = setup(4, 3);
        let grid = FvGrid::cells(&mesh, 2).unwrap();
        let wind = swirl(&mesh, &layout, &grid);
        let cfg = TransportConfig::default();
        let dt = 0.9 / courant_numbers(&grid, &wind, 1.0).0;
        let s1 = random_field(grid.len(), seed);
        let s2 = random_field(grid.len(), seed ^ 0x5555);
        let mix: Vec<f64> = s1.iter().zip(&s2).map(|(x, y)| a * x + y).collect();
        let t1 = advect_then_flux(&grid, &wind, &s1, dt, &cfg).unwrap().s;
        let t2 = advect_then_flux(&grid, &wind, &s2, dt, &cfg).unwrap().s;
        let tm = advect_then_flux(&grid, &wind, &mix, dt, &cfg).unwrap().s;
        for i in 0..tm.len() {
            prop_assert!((tm[i] - (a * t1[i] + t2[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn clipped_advective_form_keeps_the_initial_bounds(seed in any::<u64>()) {
        let (mesh, layout) = setup(4, 3);
        let grid = FvGrid::cells(&mesh, 2).unwrap();
        let wind = swirl(&mesh, &layout, &grid);
        let cfg = TransportConfig { monotone: true, ..TransportConfig::default() };
        let dt = 0.9 / courant_numbers(&grid, &wind, 1.0).0;
        let mut s: Vec<f64> = random_field(grid.len(), seed).iter().map(|v| if *v > 0.5 { 1.0 } else { 0.0 }).collect();
        for _ in 0..5 {
            s = strang_advect(&grid, &wind, &s, dt, &cfg).unwrap();
            prop_assert!(s.iter().all(|v| *v >= -1e-12 && *v <= 1.0 + 1e-12));
        }
    }
}
