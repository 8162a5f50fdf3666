//! Extruded equiangular cubed-sphere mesh.
//!
//! Columns are indexed `panel * n² + j * n + i` with zero-based panels, and cells
//! `column * m + k` so that a column's cells are contiguous. The horizontal
//! topology lives in [`HorizontalMesh`]; [`CubedSphereMesh`] adds the vertical
//! extrusion, the vertex-based coordinate field and the cell Jacobians.

pub mod jacobian;
pub mod panel;
pub mod vertical;

use std::f64::consts::FRAC_PI_4;
use std::fmt::Write as _;

use nalgebra::Vector3;

use crate::error::{DycoreError, Result};
pub use jacobian::{CellCoords, CellJacobian, CellMetrics, GaussRule, JacobianField};
pub use panel::{average_grid_spacing, great_circle_distance, panel_basis, panel_rotation, PanelCoord};
pub use vertical::{build_vertical_levels, VerticalKind, VerticalMeshSpec};

/// Side of a column in its own panel's index space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// −ξ
    W = 0,
    /// +ξ
    E = 1,
    /// −η
    S = 2,
    /// +η
    N = 3,
}

pub const SIDES: [Side; 4] = [Side::W, Side::E, Side::S, Side::N];

impl Side {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::W => Side::E,
            Side::E => Side::W,
            Side::S => Side::N,
            Side::N => Side::S,
        }
    }
}

/// How one panel edge joins its neighbouring panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seam {
    /// Zero-based neighbouring panel.
    pub panel: usize,
    /// Side of the neighbouring panel that forms the shared edge.
    pub side: Side,
    /// Whether the along-edge index runs backwards on the neighbour.
    pub reversed: bool,
}

/// A horizontal edge shared by columns `a` and `b`; its normal points from `a` to `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub a: usize,
    pub side_a: Side,
    pub b: usize,
    pub side_b: Side,
}

/// Horizontal cubed-sphere topology.
#[derive(Debug, Clone)]
pub struct HorizontalMesh {
    n: usize,
    radius: f64,
    dxi: f64,
    seams: [[Seam; 4]; 6],
    neighbours: Vec<[(usize, Side); 4]>,
    edges: Vec<Edge>,
    column_edges: Vec<[(usize, f64); 4]>,
}

/// Builds the horizontal part of a Cn mesh.
pub fn build_horizontal_mesh(n: usize, radius: f64) -> Result<HorizontalMesh> {
    HorizontalMesh::new(n, radius)
}

impl HorizontalMesh {
    pub fn new(n: usize, radius: f64) -> Result<Self> {
        if n < 3 {
            return Err(DycoreError::InvalidResolution(format!("need at least 3 cells per panel edge, got {n}")));
        }
        if !(radius > 0.0) {
            return Err(DycoreError::InvalidResolution(format!("radius must be positive, got {radius}")));
        }
        let seams = derive_seams();
        let dxi = std::f64::consts::FRAC_PI_2 / n as f64;
        let ncol = 6 * n * n;
        let mut neighbours = Vec::with_capacity(ncol);
        for col in 0..ncol {
            let (p, i, j) = (col / (n * n), col % n, (col / n) % n);
            let mut nb = [(0usize, Side::W); 4];
            for side in SIDES {
                let inside = match side {
                    Side::W if i > 0 => Some((p * n * n + j * n + i - 1, Side::E)),
                    Side::E if i + 1 < n => Some((p * n * n + j * n + i + 1, Side::W)),
                    Side::S if j > 0 => Some((p * n * n + (j - 1) * n + i, Side::N)),
                    Side::N if j + 1 < n => Some((p * n * n + (j + 1) * n + i, Side::S)),
                    _ => None,
                };
                nb[side.index()] = inside.unwrap_or_else(|| {
                    let seam = seams[p][side.index()];
                    let along = match side {
                        Side::W | Side::E => j,
                        Side::S | Side::N => i,
                    };
                    let along = if seam.reversed { n - 1 - along } else { along };
                    (boundary_column(n, seam.panel, seam.side, along), seam.side)
                });
            }
            neighbours.push(nb);
        }
        let mut column_edges = vec![[(usize::MAX, 0.0); 4]; ncol];
        let mut edges = Vec::with_capacity(2 * ncol);
        for col in 0..ncol {
            for side in SIDES {
                if column_edges[col][side.index()].0 != usize::MAX {
                    continue;
                }
                let (b, side_b) = neighbours[col][side.index()];
                let e = edges.len();
                edges.push(Edge { a: col, side_a: side, b, side_b });
                column_edges[col][side.index()] = (e, 1.0);
                column_edges[b][side_b.index()] = (e, -1.0);
            }
        }
        Ok(Self { n, radius, dxi, seams, neighbours, edges, column_edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Angular width Δξ = Δη = π/(2n) of every cell.
    pub fn dxi(&self) -> f64 {
        self.dxi
    }

    pub fn ncolumns(&self) -> usize {
        6 * self.n * self.n
    }

    pub fn column(&self, panel: usize, i: usize, j: usize) -> usize {
        panel * self.n * self.n + j * self.n + i
    }

    /// (zero-based panel, i, j) of a column.
    pub fn column_index(&self, col: usize) -> (usize, usize, usize) {
        let n = self.n;
        (col / (n * n), col % n, (col / n) % n)
    }

    pub fn seam(&self, panel: usize, side: Side) -> Seam {
        self.seams[panel][side.index()]
    }

    /// Neighbouring column across `side`, and the side of the neighbour facing back.
    pub fn neighbour(&self, col: usize, side: Side) -> (usize, Side) {
        self.neighbours[col][side.index()]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edge index and orientation sign (+1 when the edge normal points out of `col`).
    pub fn column_edge(&self, col: usize, side: Side) -> (usize, f64) {
        self.column_edges[col][side.index()]
    }

    /// Centre of node-line `i` (0..=n) in ξ or η.
    pub fn node_angle(&self, i: usize) -> f64 {
        -FRAC_PI_4 + i as f64 * self.dxi
    }

    /// Angular coordinate of the centre of index `i`; negative or ≥ n values extend beyond the panel.
    pub fn centre_angle(&self, i: isize) -> f64 {
        -FRAC_PI_4 + (i as f64 + 0.5) * self.dxi
    }

    /// Unit vector at the column centre.
    pub fn column_centre(&self, col: usize) -> Vector3<f64> {
        let (p, i, j) = self.column_index(col);
        panel::point(p, self.centre_angle(i as isize), self.centre_angle(j as isize), 1.0)
    }

    /// Unit vector at the midpoint of the column side.
    pub fn side_midpoint(&self, col: usize, side: Side) -> Vector3<f64> {
        let (p, i, j) = self.column_index(col);
        let (xi, eta) = match side {
            Side::W => (self.node_angle(i), self.centre_angle(j as isize)),
            Side::E => (self.node_angle(i + 1), self.centre_angle(j as isize)),
            Side::S => (self.centre_angle(i as isize), self.node_angle(j)),
            Side::N => (self.centre_angle(i as isize), self.node_angle(j + 1)),
        };
        panel::point(p, xi, eta, 1.0)
    }

    /// Column containing a Cartesian direction, with its panel coordinates.
    pub fn locate_column(&self, x: &Vector3<f64>) -> (usize, f64, f64) {
        let (p, xi, eta) = panel::locate(x);
        let idx = |a: f64| (((a + FRAC_PI_4) / self.dxi).floor().max(0.0) as usize).min(self.n - 1);
        (self.column(p, idx(xi), idx(eta)), xi, eta)
    }

    /// Column at extended panel indices, following the panel's coordinate lines
    /// across a seam. Returns `None` beyond a panel corner in both directions.
    pub fn virtual_column(&self, panel: usize, i: isize, j: isize) -> Option<usize> {
        let n = self.n as isize;
        let in_i = (0..n).contains(&i);
        let in_j = (0..n).contains(&j);
        match (in_i, in_j) {
            (true, true) => Some(self.column(panel, i as usize, j as usize)),
            (false, false) => None,
            _ => {
                let x = panel::point(panel, self.centre_angle(i), self.centre_angle(j), 1.0);
                Some(self.locate_column(&x).0)
            }
        }
    }
}

fn boundary_column(n: usize, panel: usize, side: Side, along: usize) -> usize {
    let (i, j) = match side {
        Side::W => (0, along),
        Side::E => (n - 1, along),
        Side::S => (along, 0),
        Side::N => (along, n - 1),
    };
    panel * n * n + j * n + i
}

/// Orientation table of the 24 directed panel edges, derived by locating points
/// just outside each edge on the neighbouring panel.
fn derive_seams() -> [[Seam; 4]; 6] {
    let nudge = 1e-4;
    let probe = 0.2;
    let mut seams = [[Seam { panel: 0, side: Side::W, reversed: false }; 4]; 6];
    for (p, row) in seams.iter_mut().enumerate() {
        for side in SIDES {
            let edge = FRAC_PI_4 + nudge;
            let (xi, eta) = match side {
                Side::W => (-edge, probe),
                Side::E => (edge, probe),
                Side::S => (probe, -edge),
                Side::N => (probe, edge),
            };
            let (q, xq, eq) = panel::locate(&panel::point(p, xi, eta, 1.0));
            let (nside, along) = if xq.abs() > eq.abs() {
                (if xq < 0.0 { Side::W } else { Side::E }, eq)
            } else {
                (if eq < 0.0 { Side::S } else { Side::N }, xq)
            };
            debug_assert!((along.abs() - probe).abs() < 1e-2);
            row[side.index()] = Seam { panel: q, side: nside, reversed: along < 0.0 };
        }
    }
    seams
}

/// The extruded mesh: horizontal topology, level heights and the coordinate field.
#[derive(Debug, Clone)]
pub struct CubedSphereMesh {
    horizontal: HorizontalMesh,
    vertical: VerticalMeshSpec,
    /// z_B at panel nodes, index `panel * (n+1)² + j * (n+1) + i`.
    node_surface: Vec<f64>,
    /// Heights of every level at every node, index `node * (m+1) + k`.
    node_heights: Vec<f64>,
    cell_volumes: Vec<f64>,
    det_range: (f64, f64),
}

impl CubedSphereMesh {
    /// Mesh with orography `z_B(λ, φ)` sampled at the panel nodes.
    pub fn new(
        n: usize,
        radius: f64,
        vertical: VerticalMeshSpec,
        orography: Option<&dyn Fn(f64, f64) -> f64>,
    ) -> Result<Self> {
        let horizontal = HorizontalMesh::new(n, radius)?;
        vertical.validate()?;
        let m = vertical.layers;
        let nn = n + 1;
        let mut node_surface = vec![0.0; 6 * nn * nn];
        if let Some(f) = orography {
            for p in 0..6 {
                for j in 0..nn {
                    for i in 0..nn {
                        let x = panel::point(p, horizontal.node_angle(i), horizontal.node_angle(j), 1.0);
                        let (lon, lat) = panel::lon_lat(&x);
                        node_surface[p * nn * nn + j * nn + i] = f(lon, lat);
                    }
                }
            }
        }
        let levels = build_vertical_levels(&vertical, &node_surface)?;
        let node_heights: Vec<f64> = levels.into_iter().flatten().collect();
        debug_assert_eq!(node_heights.len(), 6 * nn * nn * (m + 1));
        let mut mesh = Self { horizontal, vertical, node_surface, node_heights, cell_volumes: Vec::new(), det_range: (0.0, 0.0) };
        mesh.compute_volumes()?;
        Ok(mesh)
    }

    /// Mesh without orography.
    pub fn flat(n: usize, radius: f64, vertical: VerticalMeshSpec) -> Result<Self> {
        Self::new(n, radius, vertical, None)
    }

    fn compute_volumes(&mut self) -> Result<()> {
        let rule = GaussRule::tensor(2);
        let mut vols = Vec::with_capacity(self.ncells());
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for cell in 0..self.ncells() {
            let coords = self.cell_coords(cell);
            let centre = coords.jacobian([0.5; 3]);
            if !(centre.det > 0.0) {
                return Err(DycoreError::InvertedCell { cell, det: centre.det, point: [0.5; 3] });
            }
            let mut v = 0.0;
            for &(pt, w) in rule.points() {
                let jac = coords.jacobian(pt);
                if !(jac.det > 0.0) {
                    return Err(DycoreError::InvertedCell { cell, det: jac.det, point: pt });
                }
                lo = lo.min(jac.det);
                hi = hi.max(jac.det);
                v += w * jac.det;
            }
            vols.push(v);
        }
        self.cell_volumes = vols;
        self.det_range = (lo, hi);
        Ok(())
    }

    pub fn horizontal(&self) -> &HorizontalMesh {
        &self.horizontal
    }

    pub fn vertical(&self) -> &VerticalMeshSpec {
        &self.vertical
    }

    pub fn n(&self) -> usize {
        self.horizontal.n
    }

    pub fn layers(&self) -> usize {
        self.vertical.layers
    }

    pub fn radius(&self) -> f64 {
        self.horizontal.radius
    }

    pub fn top(&self) -> f64 {
        self.vertical.top
    }

    pub fn ncolumns(&self) -> usize {
        self.horizontal.ncolumns()
    }

    pub fn ncells(&self) -> usize {
        self.ncolumns() * self.layers()
    }

    pub fn cell(&self, col: usize, k: usize) -> usize {
        col * self.layers() + k
    }

    /// (column, layer) of a cell.
    pub fn cell_position(&self, cell: usize) -> (usize, usize) {
        (cell / self.layers(), cell % self.layers())
    }

    fn node(&self, panel: usize, i: usize, j: usize) -> usize {
        let nn = self.n() + 1;
        panel * nn * nn + j * nn + i
    }

    /// Height above the sphere of level `k` at node (i, j) of a panel.
    pub fn node_height(&self, panel: usize, i: usize, j: usize, k: usize) -> f64 {
        self.node_heights[self.node(panel, i, j) * (self.layers() + 1) + k]
    }

    /// Vertex values of the (ξ, η, r) coordinate field for one cell.
    pub fn cell_coords(&self, cell: usize) -> CellCoords {
        let (col, k) = self.cell_position(cell);
        let (p, i, j) = self.horizontal.column_index(col);
        let a = self.radius();
        let mut c = CellCoords { panel: p, xi: [0.0; 8], eta: [0.0; 8], r: [0.0; 8] };
        for v in 0..8 {
            let (di, dj, dk) = (v & 1, (v >> 1) & 1, (v >> 2) & 1);
            c.xi[v] = self.horizontal.node_angle(i + di);
            c.eta[v] = self.horizontal.node_angle(j + dj);
            c.r[v] = a + self.node_height(p, i + di, j + dj, k + dk);
        }
        c
    }

    /// Factorised Jacobian of a cell at a reference point; errors on det J ≤ 0.
    pub fn cell_jacobian(&self, cell: usize, chihat: [f64; 3]) -> Result<CellJacobian> {
        let jac = self.cell_coords(cell).jacobian(chihat);
        if jac.det > 0.0 {
            Ok(jac)
        } else {
            Err(DycoreError::InvertedCell { cell, det: jac.det, point: chihat })
        }
    }

    /// Physical position of a reference point of a cell.
    pub fn cell_point(&self, cell: usize, chihat: [f64; 3]) -> Vector3<f64> {
        self.cell_coords(cell).point(chihat)
    }

    /// ∫ det J dχ̂ by tensor Gauss quadrature.
    pub fn cell_volume(&self, cell: usize) -> f64 {
        self.cell_volumes[cell]
    }

    pub fn cell_volumes(&self) -> &[f64] {
        &self.cell_volumes
    }

    pub fn total_volume(&self) -> f64 {
        self.cell_volumes.iter().sum()
    }

    /// Smallest and largest det J over all quadrature points.
    pub fn det_range(&self) -> (f64, f64) {
        self.det_range
    }

    /// Height of level `k` on the column's centre line.
    pub fn level_height(&self, col: usize, k: usize) -> f64 {
        let (p, i, j) = self.horizontal.column_index(col);
        0.25 * (self.node_height(p, i, j, k)
            + self.node_height(p, i + 1, j, k)
            + self.node_height(p, i, j + 1, k)
            + self.node_height(p, i + 1, j + 1, k))
    }

    /// Height of the cell centre above the sphere.
    pub fn cell_centre_height(&self, cell: usize) -> f64 {
        let (col, k) = self.cell_position(cell);
        0.5 * (self.level_height(col, k) + self.level_height(col, k + 1))
    }

    /// Surface height at the column centre.
    pub fn surface_height(&self, col: usize) -> f64 {
        self.level_height(col, 0)
    }

    pub fn node_surface(&self) -> &[f64] {
        &self.node_surface
    }

    /// Cell spacing and terrain slopes at the cell centre.
    pub fn cell_metrics(&self, cell: usize) -> CellMetrics {
        self.cell_coords(cell).metrics()
    }

    /// Plain-text mesh summary.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let n = self.n();
        let m = self.layers();
        let _ = writeln!(s, "n {n}");
        let _ = writeln!(s, "m {m}");
        let _ = writeln!(s, "a {:.6}", self.radius());
        let _ = writeln!(s, "z_top {:.3}", self.top());
        for p in 1..=6 {
            let _ = writeln!(s, "panel {p} cells {}", n * n * m);
        }
        let _ = writeln!(s, "columns {}", self.ncolumns());
        let _ = writeln!(s, "cells {}", self.ncells());
        let _ = writeln!(s, "min_detJ {:.9e}", self.det_range.0);
        let _ = writeln!(s, "max_detJ {:.9e}", self.det_range.1);
        let _ = writeln!(s, "volume {:.9e}", self.total_volume());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_resolution_is_rejected() {
        assert!(matches!(HorizontalMesh::new(2, 1.0), Err(DycoreError::InvalidResolution(_))));
    }

    #[test]
    fn seams_are_symmetric() {
        let h = HorizontalMesh::new(4, 1.0).unwrap();
        for p in 0..6 {
            for side in SIDES {
                let s = h.seam(p, side);
                let back = h.seam(s.panel, s.side);
                assert_eq!((back.panel, back.side, back.reversed), (p, side, s.reversed));
            }
        }
    }

    #[test]
    fn every_column_has_four_distinct_neighbours() {
        let h = HorizontalMesh::new(3, 1.0).unwrap();
        assert_eq!(h.ncolumns(), 54);
        for col in 0..h.ncolumns() {
            let mut nb: Vec<usize> = SIDES.iter().map(|&s| h.neighbour(col, s).0).collect();
            nb.sort();
            nb.dedup();
            assert_eq!(nb.len(), 4);
            assert!(!nb.contains(&col));
        }
        assert_eq!(h.edges().len(), 2 * h.ncolumns());
    }

    #[test]
    fn shared_side_midpoints_coincide() {
        let h = HorizontalMesh::new(5, 1.0).unwrap();
        for e in h.edges() {
            let pa = h.side_midpoint(e.a, e.side_a);
            let pb = h.side_midpoint(e.b, e.side_b);
            assert!((pa - pb).norm() < 1e-14, "{e:?}");
        }
    }
}
