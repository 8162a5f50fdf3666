//! Directionally split, substepped upwind finite-volume transport.
//!
//! Scalars live on a column-structured grid of control volumes: the mesh cells
//! for W3 fields, or dual volumes centred on the level interfaces for Wθ fields.
//! Fields are indexed `column * nlev + level`.

mod reconstruct;
mod scheme;
mod vector;

use std::sync::Arc;

use crate::error::{DycoreError, Result};
use crate::fem::Layout;
use crate::mesh::{CubedSphereMesh, Edge, HorizontalMesh, Side};

pub use reconstruct::{lagrange_weights, least_squares_weights, vertical_stencil_start, HorizontalStencils, VerticalStencils};
pub use scheme::{
    advect, advect_then_flux, advective_increment, clip_monotone, courant_numbers, flux_divergence, horizontal_fluxes,
    reconstruct_horizontal, reconstruct_vertical, strang_advect, substeps, vertical_fluxes, FluxTransport, Direction,
};
pub use vector::{advect_vector, VectorAdvection};

/// Explicit Runge–Kutta tableau.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    /// Strictly lower-triangular stage coefficients, row i holds a_{i,0..i}.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl ButcherTableau {
    /// Three-stage strong-stability-preserving scheme.
    pub fn ssp3() -> Self {
        Self { a: vec![vec![], vec![1.0], vec![0.25, 0.25]], b: vec![1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0] }
    }

    pub fn forward_euler() -> Self {
        Self { a: vec![vec![]], b: vec![1.0] }
    }

    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        let t = Self { a, b };
        t.validate()?;
        Ok(t)
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.b.is_empty() || self.a.len() != self.b.len() {
            return Err(DycoreError::Config("tableau needs one a-row per weight".into()));
        }
        if self.a.iter().enumerate().any(|(i, row)| row.len() != i) {
            return Err(DycoreError::Config("tableau must be explicit (strictly lower triangular)".into()));
        }
        let sum: f64 = self.b.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(DycoreError::Config(format!("tableau weights sum to {sum}, not 1")));
        }
        Ok(())
    }
}

/// Reconstruction and substepping settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportConfig {
    pub degree: usize,
    pub monotone: bool,
    pub cmax_horizontal: f64,
    pub cmax_vertical: f64,
    pub max_substeps: usize,
    pub tableau: ButcherTableau,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            degree: 2,
            monotone: false,
            cmax_horizontal: 1.0,
            cmax_vertical: 1.0,
            max_substeps: 64,
            tableau: ButcherTableau::ssp3(),
        }
    }
}

impl TransportConfig {
    pub fn validate(&self) -> Result<()> {
        if self.degree % 2 != 0 {
            return Err(DycoreError::Config(format!("reconstruction degree must be even, got {}", self.degree)));
        }
        if !(self.cmax_horizontal > 0.0 && self.cmax_vertical > 0.0) {
            return Err(DycoreError::Config("Courant limits must be positive".into()));
        }
        if self.max_substeps == 0 {
            return Err(DycoreError::Config("substep cap must be at least 1".into()));
        }
        self.tableau.validate()
    }
}

/// Control-volume kind of a transport grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Cells,
    Interfaces,
}

/// Column-structured finite-volume grid with cached reconstruction weights.
#[derive(Debug, Clone)]
pub struct FvGrid {
    pub kind: GridKind,
    pub ncol: usize,
    pub nlev: usize,
    pub volumes: Vec<f64>,
    pub(crate) edges: Vec<Edge>,
    pub(crate) column_edges: Vec<[(usize, f64); 4]>,
    pub(crate) neighbours: Vec<[(usize, Side); 4]>,
    pub(crate) horizontal: Arc<HorizontalStencils>,
    pub(crate) vertical: std::result::Result<VerticalStencils, String>,
}

/// Advecting wind on a grid: side fluxes `edge * nlev + level`, vertical fluxes
/// `column * (nlev + 1) + interface` (positive upwards, zero at the boundaries).
#[derive(Debug, Clone, PartialEq)]
pub struct GridWind {
    pub side: Vec<f64>,
    pub vertical: Vec<f64>,
}

impl GridWind {
    pub fn vertical_is_zero(&self) -> bool {
        self.vertical.iter().all(|&w| w == 0.0)
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { side: self.side.iter().map(|v| a * v).collect(), vertical: self.vertical.iter().map(|v| a * v).collect() }
    }
}

fn topology(h: &HorizontalMesh) -> (Vec<Edge>, Vec<[(usize, f64); 4]>, Vec<[(usize, Side); 4]>) {
    use crate::mesh::SIDES;
    let ncol = h.ncolumns();
    let ce = (0..ncol).map(|c| SIDES.map(|s| h.column_edge(c, s))).collect();
    let nb = (0..ncol).map(|c| SIDES.map(|s| h.neighbour(c, s))).collect();
    (h.edges().to_vec(), ce, nb)
}

impl FvGrid {
    /// Grid of mesh cells, for W3 fields.
    pub fn cells(mesh: &CubedSphereMesh, degree: usize) -> Result<Self> {
        let stencils = Arc::new(HorizontalStencils::new(mesh.horizontal(), degree)?);
        Ok(Self::cells_with(mesh, degree, stencils))
    }

    /// Grid of dual volumes around the level interfaces, for Wθ fields.
    pub fn interfaces(mesh: &CubedSphereMesh, degree: usize) -> Result<Self> {
        let stencils = Arc::new(HorizontalStencils::new(mesh.horizontal(), degree)?);
        Ok(Self::interfaces_with(mesh, degree, stencils))
    }

    pub fn cells_with(mesh: &CubedSphereMesh, degree: usize, stencils: Arc<HorizontalStencils>) -> Self {
        let m = mesh.layers();
        let ncol = mesh.ncolumns();
        let mut centres = Vec::with_capacity(ncol * m);
        let mut faces = Vec::with_capacity(ncol * (m + 1));
        for col in 0..ncol {
            for k in 0..m {
                centres.push(0.5 * (mesh.level_height(col, k) + mesh.level_height(col, k + 1)));
            }
            for k in 0..=m {
                faces.push(mesh.level_height(col, k));
            }
        }
        let (edges, column_edges, neighbours) = topology(mesh.horizontal());
        Self {
            kind: GridKind::Cells,
            ncol,
            nlev: m,
            volumes: mesh.cell_volumes().to_vec(),
            edges,
            column_edges,
            neighbours,
            horizontal: stencils,
            vertical: VerticalStencils::new(&centres, &faces, m, degree).map_err(|e| e.to_string()),
        }
    }

    pub fn interfaces_with(mesh: &CubedSphereMesh, degree: usize, stencils: Arc<HorizontalStencils>) -> Self {
        let m = mesh.layers();
        let ncol = mesh.ncolumns();
        let nlev = m + 1;
        let mut centres = Vec::with_capacity(ncol * nlev);
        let mut faces = Vec::with_capacity(ncol * (nlev + 1));
        let mut volumes = Vec::with_capacity(ncol * nlev);
        for col in 0..ncol {
            let z: Vec<f64> = (0..=m).map(|k| mesh.level_height(col, k)).collect();
            centres.extend_from_slice(&z);
            faces.push(z[0]);
            for k in 0..m {
                faces.push(0.5 * (z[k] + z[k + 1]));
            }
            faces.push(z[m]);
            for k in 0..nlev {
                let below = if k > 0 { mesh.cell_volume(col * m + k - 1) } else { 0.0 };
                let above = if k < m { mesh.cell_volume(col * m + k) } else { 0.0 };
                volumes.push(0.5 * (below + above));
            }
        }
        let (edges, column_edges, neighbours) = topology(mesh.horizontal());
        Self {
            kind: GridKind::Interfaces,
            ncol,
            nlev,
            volumes,
            edges,
            column_edges,
            neighbours,
            horizontal: stencils,
            vertical: VerticalStencils::new(&centres, &faces, nlev, degree).map_err(|e| e.to_string()),
        }
    }

    pub fn len(&self) -> usize {
        self.ncol * self.nlev
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nedges(&self) -> usize {
        self.edges.len()
    }

    /// Grid wind from W2 face fluxes.
    pub fn wind_from_w2(&self, layout: &Layout, u: &[f64]) -> GridWind {
        let m = layout.layers;
        match self.kind {
            GridKind::Cells => GridWind { side: u[..layout.nside].to_vec(), vertical: u[layout.nside..].to_vec() },
            GridKind::Interfaces => {
                let mut side = vec![0.0; self.nedges() * self.nlev];
                for e in 0..self.nedges() {
                    for k in 0..self.nlev {
                        let below = if k > 0 { u[e * m + k - 1] } else { 0.0 };
                        let above = if k < m { u[e * m + k] } else { 0.0 };
                        side[e * self.nlev + k] = 0.5 * (below + above);
                    }
                }
                let mut vertical = vec![0.0; self.ncol * (self.nlev + 1)];
                for col in 0..self.ncol {
                    let w = &u[layout.vertical_face(col, 0)..=layout.vertical_face(col, m)];
                    for j in 1..self.nlev {
                        vertical[col * (self.nlev + 1) + j] = 0.5 * (w[j - 1] + w[j]);
                    }
                }
                GridWind { side, vertical }
            }
        }
    }

    /// Signed sum of the outward wind fluxes of every volume.
    pub fn wind_divergence(&self, wind: &GridWind) -> Vec<f64> {
        let ones = vec![1.0; self.len()];
        let (fs, fv) = (horizontal_fluxes(self, wind, &ones), vertical_fluxes(self, wind, &ones));
        flux_divergence(self, Some(&fs), Some(&fv)).iter().zip(&self.volumes).map(|(d, v)| d * v).collect()
    }
}
