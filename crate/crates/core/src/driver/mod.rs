//! Experiment setup, diagnostics, output and the run loop.

pub mod advection;
pub mod cases;
pub mod config;
pub mod latlon;
pub mod output;

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::PathBuf;

use log::info;

use crate::error::{DycoreError, Result};
use crate::fem::StateVector;
use crate::mesh::{panel, CubedSphereMesh};
use crate::timestepper::{Model, StepStats};

pub use cases::{gaussian_hill, gaussian_orography, gaussian_surface_pressure, resting_atmosphere, resting_orography};
pub use config::{Case, ExperimentConfig, OutputConfig};
pub use latlon::LatLonGrid;
pub use output::{read_checkpoint, write_checkpoint, CheckpointHeader, GriddedField};

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    /// Σ ρ V (kg).
    pub mass: f64,
    /// Minimum surface pressure (hPa).
    pub min_surface_pressure: f64,
    pub max_w: f64,
    pub max_u: f64,
    pub solver_iterations: usize,
    pub max_solver_iterations: usize,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str = "step,time_s,mass_kg,min_ps_hpa,max_abs_w,max_abs_u,solver_iters,max_solver_iters";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{:?},{:e},{:.6},{:e},{:e},{},{}",
            self.step,
            self.time,
            self.mass,
            self.min_surface_pressure,
            self.max_w,
            self.max_u,
            self.solver_iterations,
            self.max_solver_iterations
        )
    }
}

/// Radial (w) and zonal (u) components of the physical velocity at every cell centre.
pub fn wind_components(model: &Model, x: &StateVector) -> (Vec<f64>, Vec<f64>) {
    let v = model.ops.centre_velocity(&model.layout, &x.u);
    let mut w = Vec::with_capacity(v.len());
    let mut u = Vec::with_capacity(v.len());
    for (c, v) in v.iter().enumerate() {
        let p = model.mesh.cell_point(c, [0.5; 3]);
        let (lon, _) = panel::lon_lat(&p);
        w.push(v.dot(&(p / p.norm())));
        u.push(v.dot(&panel::east(lon)));
    }
    (w, u)
}

/// Surface pressure (Pa) per column, from Π extrapolated linearly in height from the
/// two lowest cells to the surface.
pub fn surface_pressure(model: &Model, x: &StateVector) -> Vec<f64> {
    let mesh = &model.mesh;
    let m = mesh.layers();
    (0..mesh.ncolumns())
        .map(|col| {
            let c0 = col * m;
            let pi = if m > 1 {
                let (z0, z1) = (mesh.cell_centre_height(c0), mesh.cell_centre_height(c0 + 1));
                let zs = mesh.surface_height(col);
                x.exner[c0] + (x.exner[c0 + 1] - x.exner[c0]) * (zs - z0) / (z1 - z0)
            } else {
                x.exner[c0]
            };
            model.constants.pressure(pi)
        })
        .collect()
}

/// Height (m above the sphere) of the pressure surface `p` per column, linear in ln p
/// between cell centres; NaN where the column does not reach it.
pub fn height_of_pressure(model: &Model, x: &StateVector, p: f64) -> Vec<f64> {
    let mesh = &model.mesh;
    let m = mesh.layers();
    let ps = surface_pressure(model, x);
    (0..mesh.ncolumns())
        .map(|col| {
            let mut zp = mesh.surface_height(col);
            let mut lp = ps[col].ln();
            for k in 0..m {
                let z = mesh.cell_centre_height(col * m + k);
                let l = model.constants.pressure(x.exner[col * m + k]).ln();
                if l <= p.ln() && lp >= p.ln() {
                    return zp + (z - zp) * (lp - p.ln()) / (lp - l);
                }
                zp = z;
                lp = l;
            }
            f64::NAN
        })
        .collect()
}

pub fn diagnostics(model: &Model, x: &StateVector, step: usize, stats: Option<&StepStats>) -> DiagnosticsRecord {
    let mass = x.rho.iter().zip(&model.ops.volumes).map(|(r, v)| r * v).sum();
    let ps = surface_pressure(model, x);
    let (w, u) = wind_components(model, x);
    let absmax = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    DiagnosticsRecord {
        step,
        time: step as f64 * model.config.dt,
        mass,
        min_surface_pressure: ps.iter().cloned().fold(f64::INFINITY, f64::min) / 100.0,
        max_w: absmax(&w),
        max_u: absmax(&u),
        solver_iterations: stats.map_or(0, |s| s.total_iterations()),
        max_solver_iterations: stats.map_or(0, |s| s.max_iterations()),
    }
}

pub fn build_mesh(cfg: &ExperimentConfig) -> Result<CubedSphereMesh> {
    let a = cfg.constants.radius;
    match cfg.case {
        Case::RestingAtmosphere => CubedSphereMesh::new(cfg.n, a, cfg.vertical_spec(), Some(&resting_orography)),
        Case::GaussianHill => {
            let oro = move |lon: f64, lat: f64| gaussian_orography(lon, lat, a);
            CubedSphereMesh::new(cfg.n, a, cfg.vertical_spec(), Some(&oro))
        }
    }
}

pub fn build_model(cfg: &ExperimentConfig) -> Result<Model> {
    cfg.validate()?;
    Model::new(build_mesh(cfg)?, cfg.constants, cfg.case.rotating(), cfg.timestepping())
}

pub fn initial_state(model: &Model, case: Case) -> StateVector {
    match case {
        Case::RestingAtmosphere => resting_atmosphere(&model.mesh, &model.layout, &model.constants),
        Case::GaussianHill => gaussian_hill(&model.mesh, &model.layout, &model.constants),
    }
}

/// Interpolated output fields of a state.
pub fn gridded_fields(model: &Model, grid: &LatLonGrid, x: &StateVector) -> Vec<GriddedField> {
    let m = model.mesh.layers();
    let (w, u) = wind_components(model, x);
    let levels = |f: &[f64], nlev: usize| (0..nlev).map(|k| grid.interpolate_level(f, nlev, k)).collect::<Vec<_>>();
    let ps: Vec<f64> = surface_pressure(model, x).iter().map(|p| p / 100.0).collect();
    let z700 = height_of_pressure(model, x, 70_000.0);
    vec![
        GriddedField { name: "rho", data: levels(&x.rho, m) },
        GriddedField { name: "theta", data: levels(&x.theta, m + 1) },
        GriddedField { name: "exner", data: levels(&x.exner, m) },
        GriddedField { name: "u", data: levels(&u, m) },
        GriddedField { name: "w", data: levels(&w, m) },
        GriddedField { name: "ps_hpa", data: vec![grid.interpolate(&ps)] },
        GriddedField { name: "z700", data: vec![grid.interpolate(&z700)] },
    ]
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    /// Overrides the configured number of steps (the final step index).
    pub steps: Option<usize>,
    pub output: Option<PathBuf>,
    /// Written at the end of the run.
    pub checkpoint: Option<PathBuf>,
    pub restart: Option<PathBuf>,
    /// Print every diagnostics line to stdout.
    pub echo: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub records: Vec<DiagnosticsRecord>,
    pub state: StateVector,
    pub step: usize,
}

/// Initialises (or restarts), steps and writes diagnostics and output.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary> {
    let model = build_model(cfg)?;
    let last = opts.steps.unwrap_or(cfg.steps);
    let (mut x, first) = match &opts.restart {
        Some(path) => {
            let (h, x) = read_checkpoint(path)?;
            if h.n != cfg.n || h.layers != cfg.layers || h.radius != cfg.constants.radius || h.constants != cfg.constants {
                return Err(DycoreError::Checkpoint("checkpoint mesh or constants do not match the configuration".into()));
            }
            if x.u.len() != model.layout.nfaces || x.rho.len() != model.layout.ncells || x.theta.len() != model.layout.ntheta {
                return Err(DycoreError::Checkpoint("checkpoint field sizes do not match the mesh".into()));
            }
            (x, h.step)
        }
        None => (initial_state(&model, cfg.case), 0),
    };
    let outdir = opts.output.clone().or_else(|| cfg.output.directory.clone());
    let mut diag_file = match &outdir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join("diagnostics.csv");
            let append = opts.restart.is_some() && path.exists();
            let mut f = OpenOptions::new().create(true).write(true).append(append).truncate(!append).open(path)?;
            if !append {
                writeln!(f, "{}", DiagnosticsRecord::CSV_HEADER)?;
            }
            Some(f)
        }
        None => None,
    };
    let grid = match (&outdir, cfg.output.cadence) {
        (Some(_), c) if c > 0 => Some(LatLonGrid::new(model.mesh.horizontal(), cfg.output.nlat, cfg.output.nlon)),
        _ => None,
    };
    if opts.echo {
        println!("{}", DiagnosticsRecord::CSV_HEADER);
    }
    let mut records = Vec::new();
    let mut emit = |rec: DiagnosticsRecord, x: &StateVector| -> Result<()> {
        info!("{}", rec.csv_line());
        if opts.echo {
            println!("{}", rec.csv_line());
        }
        if let Some(f) = diag_file.as_mut() {
            writeln!(f, "{}", rec.csv_line())?;
        }
        if let (Some(grid), Some(dir)) = (&grid, &outdir) {
            if rec.step % cfg.output.cadence == 0 {
                let fields = gridded_fields(&model, grid, x);
                output::write_gridded(&dir.join(format!("state_{:06}.bin", rec.step)), grid, rec.step, rec.time, &fields)?;
                if cfg.output.csv {
                    output::write_gridded_csv(&dir.join(format!("state_{:06}.csv", rec.step)), grid, &fields)?;
                }
            }
        }
        records.push(rec);
        Ok(())
    };
    if opts.restart.is_none() {
        emit(diagnostics(&model, &x, 0, None), &x)?;
    }
    for step in first + 1..=last {
        let (next, stats) = model.step(&x, step)?;
        x = next;
        emit(diagnostics(&model, &x, step, Some(&stats)), &x)?;
    }
    let step = last.max(first);
    if let Some(path) = &opts.checkpoint {
        let h = CheckpointHeader { n: cfg.n, layers: cfg.layers, radius: cfg.constants.radius, constants: cfg.constants, step };
        write_checkpoint(path, &h, &x)?;
    }
    Ok(RunSummary { records, state: x, step })
}
