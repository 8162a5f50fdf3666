//! Standalone scalar advection experiments on a flat shell.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::Vector3;

use crate::error::{DycoreError, Result};
use crate::fem::{project_vector_potential, Layout};
use crate::mesh::{panel, CubedSphereMesh, VerticalMeshSpec};
use crate::transport::{advect_then_flux, courant_numbers, strang_advect, FvGrid, GridWind, TransportConfig};

/// Twelve days, in seconds.
pub const PERIOD: f64 = 12.0 * 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdvectionCase {
    /// Rotation about an axis through two cube corners (the bell crosses panel corners).
    SolidBody,
    /// Time-reversing deformational flow; the initial field is recovered after one period.
    Deformational,
}

impl FromStr for AdvectionCase {
    type Err = DycoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "solid-body" => Ok(Self::SolidBody),
            "deformational" => Ok(Self::Deformational),
            _ => Err(DycoreError::Config(format!("unknown transport case '{s}' (expected solid-body or deformational)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialShape {
    CosineBell,
    SlottedCylinder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvectionSetup {
    pub case: AdvectionCase,
    pub shape: InitialShape,
    pub n: usize,
    pub layers: usize,
    pub steps: usize,
    /// Defaults to one period over `steps`.
    pub dt: Option<f64>,
    pub transport: TransportConfig,
    /// Advective form instead of the conservative advective-then-flux step.
    pub advective: bool,
    pub radius: f64,
}

impl AdvectionSetup {
    pub fn new(case: AdvectionCase, n: usize) -> Self {
        Self {
            case,
            shape: InitialShape::CosineBell,
            n,
            layers: 1,
            steps: 12 * n,
            dt: None,
            transport: TransportConfig::default(),
            advective: false,
            radius: 6_371_229.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvectionReport {
    pub courant: f64,
    pub dt: f64,
    /// Volume-weighted relative L2 error against the initial field (meaningful after a full period).
    pub l2: f64,
    pub linf: f64,
    pub mass_change: f64,
    pub initial_range: (f64, f64),
    /// Extremes over all steps.
    pub range: (f64, f64),
    pub field: Vec<f64>,
    pub initial: Vec<f64>,
}

/// 0.5 (1 + cos(π r / R)) inside great-circle radius R of `centre`.
pub fn cosine_bell(x: &Vector3<f64>, centre: &Vector3<f64>, radius: f64) -> f64 {
    let r = x.normalize().dot(centre).clamp(-1.0, 1.0).acos();
    if r < radius {
        0.5 * (1.0 + (PI * r / radius).cos())
    } else {
        0.0
    }
}

/// 1 inside a cap of radius R around `centre` minus a slot of width R/3 cut along its
/// meridian from the south, 0 elsewhere.
pub fn slotted_cylinder(x: &Vector3<f64>, centre: &Vector3<f64>, radius: f64) -> f64 {
    let (lon, lat) = panel::lon_lat(x);
    let (lc, pc) = panel::lon_lat(centre);
    let r = panel::great_circle_distance(lon, lat, lc, pc);
    if r >= radius {
        return 0.0;
    }
    let dlon = (lon - lc + PI).rem_euclid(2.0 * PI) - PI;
    if (dlon * pc.cos()).abs() < radius / 6.0 && lat - pc < 5.0 * radius / 12.0 {
        0.0
    } else {
        1.0
    }
}

fn initial_field(mesh: &CubedSphereMesh, setup: &AdvectionSetup) -> Vec<f64> {
    let centres: Vec<(Vector3<f64>, f64)> = match setup.case {
        AdvectionCase::SolidBody => vec![(Vector3::new(1.0, 1.0, 0.0).normalize(), 1.0 / 3.0)],
        AdvectionCase::Deformational => vec![
            (panel::unit_from_lon_lat(5.0 * PI / 6.0, 0.0), 0.5),
            (panel::unit_from_lon_lat(7.0 * PI / 6.0, 0.0), 0.5),
        ],
    };
    (0..mesh.ncells())
        .map(|c| {
            let x = mesh.cell_point(c, [0.5; 3]);
            centres
                .iter()
                .map(|(cen, r)| match setup.shape {
                    InitialShape::CosineBell => cosine_bell(&x, cen, *r),
                    InitialShape::SlottedCylinder => slotted_cylinder(&x, cen, *r),
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

fn wind_at(mesh: &CubedSphereMesh, layout: &Layout, grid: &FvGrid, case: AdvectionCase, t: f64) -> GridWind {
    let u = match case {
        AdvectionCase::SolidBody => {
            let w = Vector3::new(1.0, -1.0, 0.0).normalize() * (2.0 * PI / PERIOD);
            project_vector_potential(mesh, layout, &move |x: &Vector3<f64>| w.dot(x) * x)
        }
        AdvectionCase::Deformational => {
            let a = mesh.radius();
            let amp = 2.4 * a * a / PERIOD * (PI * t / PERIOD).cos();
            project_vector_potential(mesh, layout, &move |x: &Vector3<f64>| {
                let (lon, lat) = panel::lon_lat(x);
                let psi = amp * (0.5 * lon).sin().powi(2) * lat.cos().powi(2);
                -psi * x / x.norm()
            })
        }
    };
    let mut wind = grid.wind_from_w2(layout, &u);
    // purely horizontal flows: drop quadrature-level vertical fluxes
    wind.vertical.iter_mut().for_each(|w| *w = 0.0);
    wind
}

/// Runs conservative advection of the chosen shape and reports errors and extremes.
/// An advection experiment advanced one step at a time.
pub struct AdvectionRun {
    setup: AdvectionSetup,
    mesh: CubedSphereMesh,
    layout: Layout,
    grid: FvGrid,
    fixed: Option<GridWind>,
    pub dt: f64,
    pub step: usize,
    pub courant: f64,
    pub range: (f64, f64),
    pub field: Vec<f64>,
    pub initial: Vec<f64>,
}

impl AdvectionRun {
    pub fn new(setup: &AdvectionSetup) -> Result<Self> {
        setup.transport.validate()?;
        let mesh = CubedSphereMesh::flat(setup.n, setup.radius, VerticalMeshSpec::uniform(1.0e4, setup.layers))?;
        let layout = Layout::new(&mesh);
        let grid = FvGrid::cells(&mesh, setup.transport.degree)?;
        let dt = setup.dt.unwrap_or(PERIOD / setup.steps.max(1) as f64);
        let s0 = initial_field(&mesh, setup);
        Ok(Self {
            setup: setup.clone(),
            range: minmax(&s0),
            field: s0.clone(),
            initial: s0,
            mesh,
            layout,
            grid,
            fixed: None,
            dt,
            step: 0,
            courant: 0.0,
        })
    }

    pub fn mesh(&self) -> &CubedSphereMesh {
        &self.mesh
    }

    pub fn step(&mut self) -> Result<()> {
        let (mesh, layout, grid, case) = (&self.mesh, &self.layout, &self.grid, self.setup.case);
        let wind = match case {
            AdvectionCase::SolidBody => self.fixed.get_or_insert_with(|| wind_at(mesh, layout, grid, case, 0.0)).clone(),
            AdvectionCase::Deformational => wind_at(mesh, layout, grid, case, (self.step as f64 + 0.5) * self.dt),
        };
        self.courant = self.courant.max(courant_numbers(grid, &wind, self.dt).0);
        self.field = if self.setup.advective {
            strang_advect(grid, &wind, &self.field, self.dt, &self.setup.transport)?
        } else {
            advect_then_flux(grid, &wind, &self.field, self.dt, &self.setup.transport)?.s
        };
        let (lo, hi) = minmax(&self.field);
        self.range = (self.range.0.min(lo), self.range.1.max(hi));
        self.step += 1;
        Ok(())
    }

    /// Σ s V relative to its initial value, minus one.
    pub fn mass_change(&self) -> f64 {
        let vol = self.mesh.cell_volumes();
        let m0: f64 = self.initial.iter().zip(vol).map(|(a, v)| a * v).sum();
        let m1: f64 = self.field.iter().zip(vol).map(|(a, v)| a * v).sum();
        (m1 - m0) / m0
    }

    pub fn report(&self) -> AdvectionReport {
        let (s, s0) = (&self.field, &self.initial);
        let vol = self.mesh.cell_volumes();
        let num: f64 = s.iter().zip(s0).zip(vol).map(|((a, b), v)| v * (a - b).powi(2)).sum();
        let den: f64 = s0.iter().zip(vol).map(|(b, v)| v * b * b).sum();
        let linf = s.iter().zip(s0).fold(0.0f64, |a, (x, y)| a.max((x - y).abs())) / s0.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        AdvectionReport {
            courant: self.courant,
            dt: self.dt,
            l2: (num / den).sqrt(),
            linf,
            mass_change: self.mass_change(),
            initial_range: minmax(s0),
            range: self.range,
            field: s.clone(),
            initial: s0.clone(),
        }
    }
}

pub fn run_advection(setup: &AdvectionSetup) -> Result<AdvectionReport> {
    let mut run = AdvectionRun::new(setup)?;
    for _ in 0..setup.steps {
        run.step()?;
    }
    Ok(run.report())
}

fn minmax(s: &[f64]) -> (f64, f64) {
    s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}
