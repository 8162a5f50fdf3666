//! INI experiment configuration with a fixed schema.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use ini::Ini;

use crate::constants::PhysicalConstants;
use crate::error::{DycoreError, Result};
use crate::mesh::{VerticalKind, VerticalMeshSpec};
use crate::solver::SolverConfig;
use crate::timestepper::TimesteppingConfig;
use crate::transport::TransportConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    RestingAtmosphere,
    GaussianHill,
}

impl Case {
    pub fn name(self) -> &'static str {
        match self {
            Case::RestingAtmosphere => "resting-atmosphere",
            Case::GaussianHill => "gaussian-hill",
        }
    }

    pub fn rotating(self) -> bool {
        matches!(self, Case::GaussianHill)
    }
}

impl FromStr for Case {
    type Err = DycoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "resting-atmosphere" => Ok(Case::RestingAtmosphere),
            "gaussian-hill" => Ok(Case::GaussianHill),
            _ => Err(DycoreError::Config(format!("unknown case '{s}' (expected resting-atmosphere or gaussian-hill)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: Option<PathBuf>,
    /// Gridded output every `cadence` steps; 0 disables it.
    pub cadence: usize,
    pub nlat: usize,
    pub nlon: usize,
    pub csv: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub case: Case,
    pub n: usize,
    pub layers: usize,
    pub top: f64,
    pub vertical: VerticalKind,
    pub dt: f64,
    pub steps: usize,
    pub constants: PhysicalConstants,
    pub alpha: f64,
    pub outer: usize,
    pub inner: usize,
    pub theta_monotone: bool,
    pub solver: SolverConfig,
    pub transport: TransportConfig,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Defaults of a case at panel resolution `n`.
    pub fn for_case(case: Case, n: usize) -> Self {
        let (layers, top, dt) = match case {
            Case::RestingAtmosphere => (30, 12_000.0, 600.0),
            Case::GaussianHill => (40, 32_000.0, 900.0),
        };
        Self {
            case,
            n,
            layers,
            top,
            vertical: VerticalKind::Uniform,
            dt,
            steps: 10,
            constants: PhysicalConstants::default(),
            alpha: 0.5,
            outer: 2,
            inner: 2,
            theta_monotone: false,
            solver: SolverConfig::default(),
            transport: TransportConfig::default(),
            output: OutputConfig { directory: None, cadence: 0, nlat: 4 * n, nlon: 8 * n, csv: false },
        }
    }

    pub fn vertical_spec(&self) -> VerticalMeshSpec {
        VerticalMeshSpec { kind: self.vertical, top: self.top, layers: self.layers }
    }

    pub fn timestepping(&self) -> TimesteppingConfig {
        TimesteppingConfig {
            alpha: self.alpha,
            outer: self.outer,
            inner: self.inner,
            solver: self.solver.clone(),
            transport: self.transport.clone(),
            theta_monotone: self.theta_monotone,
            ..TimesteppingConfig::new(self.dt)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(DycoreError::Config(format!("n must be at least 3, got {}", self.n)));
        }
        if self.output.nlat < 2 || self.output.nlon < 2 {
            return Err(DycoreError::Config("lat-lon output needs at least 2 points per direction".into()));
        }
        self.vertical_spec().validate()?;
        self.timestepping().validate()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| DycoreError::Config(e.to_string()))?;
        let mut pairs: Vec<(String, String, String)> = Vec::new();
        for (section, props) in ini.iter() {
            let section = section.unwrap_or("");
            for (k, v) in props.iter() {
                pairs.push((section.to_string(), k.to_string(), v.to_string()));
            }
        }
        let case = pairs
            .iter()
            .find(|(s, k, _)| s == "experiment" && k == "case")
            .ok_or_else(|| DycoreError::Config("missing [experiment] case".into()))?
            .2
            .parse::<Case>()?;
        let n = match pairs.iter().find(|(s, k, _)| s == "experiment" && k == "n") {
            Some((_, _, v)) => num::<usize>("experiment", "n", v)?,
            None => 24,
        };
        let mut c = Self::for_case(case, n);
        for (s, k, v) in &pairs {
            c.set(s, k, v)?;
        }
        c.validate()?;
        Ok(c)
    }

    fn set(&mut self, section: &str, key: &str, v: &str) -> Result<()> {
        let (s, k) = (section, key);
        match (s, k) {
            ("experiment", "case") | ("experiment", "n") => {}
            ("experiment", "layers") => self.layers = num(s, k, v)?,
            ("experiment", "top") => self.top = num(s, k, v)?,
            ("experiment", "vertical") => {
                self.vertical = match v {
                    "uniform" => VerticalKind::Uniform,
                    "quadratic" => VerticalKind::Quadratic { gamma: 15.0 },
                    _ => return Err(DycoreError::Config(format!("[experiment] vertical: expected uniform or quadratic, got '{v}'"))),
                }
            }
            ("experiment", "gamma") => match &mut self.vertical {
                VerticalKind::Quadratic { gamma } => *gamma = num(s, k, v)?,
                VerticalKind::Uniform => return Err(DycoreError::Config("gamma needs vertical = quadratic".into())),
            },
            ("experiment", "dt") => self.dt = num(s, k, v)?,
            ("experiment", "steps") => self.steps = num(s, k, v)?,
            ("constants", "radius") => self.constants.radius = num(s, k, v)?,
            ("constants", "omega") => self.constants.omega = num(s, k, v)?,
            ("constants", "gravity") => self.constants.gravity = num(s, k, v)?,
            ("constants", "rd") => self.constants.rd = num(s, k, v)?,
            ("constants", "cp") => self.constants.cp = num(s, k, v)?,
            ("constants", "p0") => self.constants.p0 = num(s, k, v)?,
            ("timestepping", "alpha") => self.alpha = num(s, k, v)?,
            ("timestepping", "outer") => self.outer = num(s, k, v)?,
            ("timestepping", "inner") => self.inner = num(s, k, v)?,
            ("timestepping", "theta_monotone") => self.theta_monotone = num(s, k, v)?,
            ("solver", "tolerance") => self.solver.tolerance = num(s, k, v)?,
            ("solver", "restart") => self.solver.restart = num(s, k, v)?,
            ("solver", "max_iterations") => self.solver.max_iterations = num(s, k, v)?,
            ("solver", "mg_levels") => self.solver.mg_levels = num(s, k, v)?,
            ("solver", "pre_sweeps") => self.solver.pre_sweeps = num(s, k, v)?,
            ("solver", "post_sweeps") => self.solver.post_sweeps = num(s, k, v)?,
            ("solver", "coarse_sweeps") => self.solver.coarse_sweeps = num(s, k, v)?,
            ("solver", "tau_u") => self.solver.tau_u = num(s, k, v)?,
            ("solver", "tau_rho") => self.solver.tau_rho = num(s, k, v)?,
            ("solver", "tau_theta") => self.solver.tau_theta = num(s, k, v)?,
            ("transport", "degree") => self.transport.degree = num(s, k, v)?,
            ("transport", "monotone") => self.transport.monotone = num(s, k, v)?,
            ("transport", "cmax_horizontal") => self.transport.cmax_horizontal = num(s, k, v)?,
            ("transport", "cmax_vertical") => self.transport.cmax_vertical = num(s, k, v)?,
            ("transport", "max_substeps") => self.transport.max_substeps = num(s, k, v)?,
            ("output", "directory") => self.output.directory = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            ("output", "cadence") => self.output.cadence = num(s, k, v)?,
            ("output", "nlat") => self.output.nlat = num(s, k, v)?,
            ("output", "nlon") => self.output.nlon = num(s, k, v)?,
            ("output", "csv") => self.output.csv = num(s, k, v)?,
            _ => {
                let at = if s.is_empty() { k.to_string() } else { format!("[{s}] {k}") };
                return Err(DycoreError::Config(format!("unknown key {at}")));
            }
        }
        Ok(())
    }

    /// Full INI text with every key; `parse(to_ini())` returns an equal config.
    pub fn to_ini(&self) -> String {
        let mut o = String::new();
        let c = &self.constants;
        let _ = writeln!(o, "[experiment]\ncase = {}\nn = {}\nlayers = {}\ntop = {:?}", self.case.name(), self.n, self.layers, self.top);
        match self.vertical {
            VerticalKind::Uniform => o.push_str("vertical = uniform\n"),
            VerticalKind::Quadratic { gamma } => {
                let _ = writeln!(o, "vertical = quadratic\ngamma = {gamma:?}");
            }
        }
        let _ = writeln!(o, "dt = {:?}\nsteps = {}\n", self.dt, self.steps);
        let _ = writeln!(
            o,
            "[constants]\nradius = {:?}\nomega = {:?}\ngravity = {:?}\nrd = {:?}\ncp = {:?}\np0 = {:?}\n",
            c.radius, c.omega, c.gravity, c.rd, c.cp, c.p0
        );
        let _ = writeln!(
            o,
            "[timestepping]\nalpha = {:?}\nouter = {}\ninner = {}\ntheta_monotone = {}\n",
            self.alpha, self.outer, self.inner, self.theta_monotone
        );
        let s = &self.solver;
        let _ = writeln!(
            o,
            "[solver]\ntolerance = {:?}\nrestart = {}\nmax_iterations = {}\nmg_levels = {}\npre_sweeps = {}\npost_sweeps = {}\ncoarse_sweeps = {}\ntau_u = {:?}\ntau_rho = {:?}\ntau_theta = {:?}\n",
            s.tolerance, s.restart, s.max_iterations, s.mg_levels, s.pre_sweeps, s.post_sweeps, s.coarse_sweeps, s.tau_u, s.tau_rho, s.tau_theta
        );
        let t = &self.transport;
        let _ = writeln!(
            o,
            "[transport]\ndegree = {}\nmonotone = {}\ncmax_horizontal = {:?}\ncmax_vertical = {:?}\nmax_substeps = {}\n",
            t.degree, t.monotone, t.cmax_horizontal, t.cmax_vertical, t.max_substeps
        );
        let out = &self.output;
        let dir = out.directory.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let _ = writeln!(o, "[output]\ndirectory = {dir}\ncadence = {}\nnlat = {}\nnlon = {}\ncsv = {}", out.cadence, out.nlat, out.nlon, out.csv);
        o
    }
}

fn num<T: FromStr>(section: &str, key: &str, v: &str) -> Result<T> {
    v.trim().parse::<T>().map_err(|_| DycoreError::Config(format!("[{section}] {key}: cannot parse '{v}'")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_rejection() {
        let c = ExperimentConfig::parse("[experiment]\ncase = gaussian-hill\nn = 6\nlayers = 4\n[solver]\ntolerance = 1e-8\n").unwrap();
        assert_eq!((c.n, c.layers, c.solver.tolerance, c.dt), (6, 4, 1e-8, 900.0));
        let text = c.to_ini();
        let again = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_ini(), text);
        let err = ExperimentConfig::parse("[experiment]\ncase = gaussian-hill\n[solver]\ncolour = red\n").unwrap_err();
        assert!(err.to_string().contains("unknown key [solver] colour"));
        assert!(ExperimentConfig::parse("[experiment]\nn = 6\n").is_err());
        assert!(ExperimentConfig::parse("[experiment]\ncase = gaussian-hill\ndt = -1\n").is_err());
    }
}
