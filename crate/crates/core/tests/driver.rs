use std::process::Command;

use dycore::driver::latlon::{grid_latitude, grid_longitude};
use dycore::driver::{read_checkpoint, run, Case, ExperimentConfig, LatLonGrid, RunOptions};
use dycore::mesh::{panel, HorizontalMesh};
use dycore::DycoreError;
use proptest::prelude::*;

fn smooth(lon: f64, lat: f64) -> f64 {
    2.0 + lat.sin() + 0.5 * lat.cos() * (lon - 0.3).cos()
}

fn interpolation_error(n: usize) -> f64 {
    let h = HorizontalMesh::new(n, 1.0).unwrap();
    let values: Vec<f64> = (0..h.ncolumns())
        .map(|c| {
            let (lon, lat) = panel::lon_lat(&h.column_centre(c));
            smooth(lon, lat)
        })
        .collect();
    let grid = LatLonGrid::new(&h, 4 * n, 8 * n);
    let out = grid.interpolate(&values);
    let mut err = 0.0f64;
    for i in 0..grid.nlat {
        for j in 0..grid.nlon {
            let e = out[i * grid.nlon + j] - smooth(grid_longitude(j, grid.nlon), grid_latitude(i, grid.nlat));
            err = err.max(e.abs());
        }
    }
    err
}

#[test]
fn lat_lon_interpolation_converges_across_seams_and_corners() {
    let (e6, e12, e24) = (interpolation_error(6), interpolation_error(12), interpolation_error(24));
    assert!(e12 < 0.4 * e6 && e24 < 0.4 * e12, "{e6:e} {e12:e} {e24:e}");
}

#[test]
fn config_round_trips_and_rejects_unknown_keys() {
    let mut cfg = ExperimentConfig::for_case(Case::GaussianHill, 8);
    cfg.layers = 7;
    cfg.solver.tolerance = 3e-7;
    cfg.output.csv = true;
    assert_eq!(ExperimentConfig::parse(&cfg.to_ini()).unwrap(), cfg);
    let bad = cfg.to_ini().replace("[solver]", "[solver]\ntolerence = 1e-6");
    match ExperimentConfig::parse(&bad) {
        Err(DycoreError::Config(msg)) => assert!(msg.contains("tolerence"), "{msg}"),
        other => panic!("expected a config error, got {other:?}"),
    }
    assert!(ExperimentConfig::parse("[experiment]\ncase = vortex\n").is_err());
    let mut c = cfg.clone();
    c.dt = -1.0;
    assert!(c.validate().is_err());
}

fn small_hill() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_case(Case::GaussianHill, 4);
    cfg.layers = 4;
    cfg.steps = 4;
    cfg
}

#[test]
fn restart_reproduces_diagnostics_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_hill();
    let full = run(&cfg, &RunOptions::default()).unwrap();
    let ck = dir.path().join("half.ck");
    let first = run(&cfg, &RunOptions { steps: Some(2), checkpoint: Some(ck.clone()), ..Default::default() }).unwrap();
    let (h, _) = read_checkpoint(&ck).unwrap();
    assert_eq!(h.step, 2);
    let second = run(&cfg, &RunOptions { restart: Some(ck), ..Default::default() }).unwrap();
    let joined: Vec<_> = first.records.iter().chain(&second.records).cloned().collect();
    assert_eq!(joined, full.records);
    assert_eq!(second.state, full.state);
}

#[test]
fn run_writes_diagnostics_and_gridded_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_hill();
    cfg.steps = 2;
    cfg.output.cadence = 2;
    cfg.output.csv = true;
    run(&cfg, &RunOptions { output: Some(dir.path().to_path_buf()), ..Default::default() }).unwrap();
    let diag = std::fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 4);
    let bin = std::fs::read(dir.path().join("state_000002.bin")).unwrap();
    let text = String::from_utf8_lossy(&bin);
    assert!(text.starts_with("dycore-grid 1\nstep 2\n"));
    assert!(dir.path().join("state_000000.csv").exists());
}

#[test]
fn cli_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_dycore");
    let ok = Command::new(exe).args(["mesh-info", "--n", "4", "--layers", "2"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("cells 192"));
    let missing = Command::new(exe).args(["run", "--config", "/nonexistent/x.ini"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
    let bad = Command::new(exe).args(["transport", "--case", "vortex"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let cfl = Command::new(exe).args(["transport", "--n", "24", "--steps", "1"]).output().unwrap();
    assert_eq!(cfl.status.code(), Some(3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn interpolation_of_a_constant_is_exact(c in -1e3f64..1e3, n in 3usize..8) {
        let h = HorizontalMesh::new(n, 1.0).unwrap();
        let grid = LatLonGrid::new(&h, 2 * n, 4 * n);
        let out = grid.interpolate(&vec![c; h.ncolumns()]);
        prop_assert!(out.iter().all(|v| (v - c).abs() <= 1e-12 * c.abs().max(1.0)));
    }
}
