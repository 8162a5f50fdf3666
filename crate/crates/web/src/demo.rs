use dycore::driver::advection::{AdvectionCase, AdvectionRun, AdvectionSetup, InitialShape, PERIOD};
use dycore::driver::{gaussian_orography, resting_orography, LatLonGrid};
use dycore::mesh::{CubedSphereMesh, HorizontalMesh, VerticalMeshSpec};
use dycore::DycoreError;

const RADIUS: f64 = 6_371_229.0;

pub type Result<T> = std::result::Result<T, DycoreError>;

/// Blue through white to red for t in [0, 1]; values outside are clamped.
pub fn ramp(t: f64) -> [u8; 3] {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.5 };
    let (lo, mid, hi) = ([33.0, 102.0, 172.0], [247.0, 247.0, 247.0], [178.0, 24.0, 43.0]);
    let (a, b, f) = if t < 0.5 { (lo, mid, 2.0 * t) } else { (mid, hi, 2.0 * t - 1.0) };
    [0, 1, 2].map(|i| (a[i] + (b[i] - a[i]) * f).round() as u8)
}

/// RGBA pixels, north up, of one value per column over [lo, hi].
pub fn raster(grid: &LatLonGrid, column_values: &[f64], lo: f64, hi: f64) -> Vec<u8> {
    let values = grid.interpolate(column_values);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut px = Vec::with_capacity(4 * values.len());
    for row in (0..grid.nlat).rev() {
        for v in &values[row * grid.nlon..(row + 1) * grid.nlon] {
            px.extend(ramp((v - lo) / span));
            px.push(255);
        }
    }
    px
}

pub struct TransportDemo {
    run: AdvectionRun,
    grid: Option<LatLonGrid>,
}

impl TransportDemo {
    pub fn new(n: usize, shape: &str, scheme: &str, monotone: bool, steps_per_revolution: usize) -> Result<Self> {
        let mut setup = AdvectionSetup::new(AdvectionCase::SolidBody, n);
        setup.shape = match shape {
            "bell" => InitialShape::CosineBell,
            "cylinder" => InitialShape::SlottedCylinder,
            _ => return Err(DycoreError::Config(format!("unknown shape '{shape}'"))),
        };
        setup.advective = match scheme {
            "flux" => false,
            "advective" => true,
            _ => return Err(DycoreError::Config(format!("unknown scheme '{scheme}'"))),
        };
        setup.transport.monotone = monotone;
        setup.steps = steps_per_revolution.max(1);
        Ok(Self { run: AdvectionRun::new(&setup)?, grid: None })
    }

    pub fn advance(&mut self, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.run.step()?;
        }
        Ok(())
    }

    pub fn field(&self) -> &[f64] {
        &self.run.field
    }

    pub fn image(&mut self, width: usize, height: usize) -> Vec<u8> {
        let h = self.run.mesh().horizontal();
        if self.grid.as_ref().is_none_or(|g| g.nlon != width || g.nlat != height) {
            self.grid = Some(LatLonGrid::new(h, height, width));
        }
        raster(self.grid.as_ref().unwrap(), &self.run.field, 0.0, 1.0)
    }

    pub fn status(&self) -> String {
        let r = &self.run;
        let (lo, hi) = r.field.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        format!(
            "step {} ({:.2} days, {:.2} revolutions), Courant {:.2}, range [{lo:.4}, {hi:.4}], mass change {:.1e}",
            r.step,
            r.step as f64 * r.dt / 86_400.0,
            r.step as f64 * r.dt / PERIOD,
            r.courant,
            r.mass_change()
        )
    }
}

fn surface(orography: &str) -> Result<Option<fn(f64, f64) -> f64>> {
    match orography {
        "none" => Ok(None),
        "hill" => Ok(Some(|lon, lat| gaussian_orography(lon, lat, RADIUS))),
        "range" => Ok(Some(resting_orography)),
        _ => Err(DycoreError::Config(format!("unknown orography '{orography}'"))),
    }
}

fn build(n: usize, layers: usize, orography: &str) -> Result<CubedSphereMesh> {
    let spec = VerticalMeshSpec::uniform(30_000.0, layers);
    match surface(orography)? {
        None => CubedSphereMesh::flat(n, RADIUS, spec),
        Some(f) => CubedSphereMesh::new(n, RADIUS, spec, Some(&f)),
    }
}

/// Per-column values of `quantity` on the lowest layer.
pub fn mesh_quantity(mesh: &CubedSphereMesh, quantity: &str) -> Result<Vec<f64>> {
    let h: &HorizontalMesh = mesh.horizontal();
    let m = mesh.layers();
    let v = (0..h.ncolumns()).map(|col| match quantity {
        "detj" => Ok(mesh.cell_volume(col * m)),
        "surface" => Ok(mesh.surface_height(col)),
        "panel" => Ok(h.column_index(col).0 as f64),
        _ => Err(DycoreError::Config(format!("unknown quantity '{quantity}'"))),
    });
    v.collect()
}

pub fn mesh_image(n: usize, orography: &str, quantity: &str, width: usize, height: usize) -> Result<Vec<u8>> {
    let mesh = build(n, 4, orography)?;
    let values = mesh_quantity(&mesh, quantity)?;
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    Ok(raster(&LatLonGrid::new(mesh.horizontal(), height, width), &values, lo, hi))
}

pub fn mesh_summary(n: usize, layers: usize, orography: &str) -> Result<String> {
    Ok(build(n, layers, orography)?.summary())
}

pub fn level_heights(layers: usize, top: f64, gamma: f64, surface: f64) -> Result<Vec<f64>> {
    let spec = if gamma > 0.0 { VerticalMeshSpec::quadratic(top, layers, gamma) } else { VerticalMeshSpec::uniform(top, layers) };
    spec.validate()?;
    spec.level_heights(surface)
}
