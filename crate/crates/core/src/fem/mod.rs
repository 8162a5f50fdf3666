//! Lowest-order compatible spaces on the extruded mesh and the operators built on them.
//!
//! W2 carries one normal flux per face with a global orientation: side faces point
//! from an edge's first column to its second, vertical faces point up. W3 has one
//! value per cell, Wθ one value per level interface of every column.

mod assembly;
pub mod basis;
pub mod eos;

use crate::mesh::{CubedSphereMesh, Side, SIDES};

pub use assembly::{
    apply_gradient, assemble_divergence, assemble_gradient, assemble_mass_w2, assemble_projections, coriolis_matrix,
    face_average, geopotential, mass_theta, mass_w2, project_vector_potential, FemOperators,
};
pub use basis::{piola_push_w2, reference_basis, LOCAL_FACES};
pub use eos::{eos_residual, sample_equation_of_state, EosOperators};

/// Function space tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    W2,
    W3,
    Wtheta,
    Wchi,
}

/// A tagged vector of degrees of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub space: Space,
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(layout: &Layout, space: Space) -> Self {
        Self { space, values: vec![0.0; layout.len(space)] }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Prognostic state (u, ρ, θ, Π).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub u: Vec<f64>,
    pub rho: Vec<f64>,
    pub theta: Vec<f64>,
    pub exner: Vec<f64>,
}

impl StateVector {
    pub fn zeros(layout: &Layout) -> Self {
        Self {
            u: vec![0.0; layout.nfaces],
            rho: vec![0.0; layout.ncells],
            theta: vec![0.0; layout.ntheta],
            exner: vec![0.0; layout.ncells],
        }
    }

    /// First non-finite field, if any.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        for (name, v) in [("u", &self.u), ("rho", &self.rho), ("theta", &self.theta), ("exner", &self.exner)] {
            if v.iter().any(|x| !x.is_finite()) {
                return Some(name);
            }
        }
        None
    }
}

/// Degree-of-freedom numbering for all spaces on one mesh.
#[derive(Debug, Clone)]
pub struct Layout {
    pub ncolumns: usize,
    pub layers: usize,
    pub ncells: usize,
    pub nedges: usize,
    /// Number of side (horizontally normal) faces; they come first in W2.
    pub nside: usize,
    pub nfaces: usize,
    pub ntheta: usize,
    cell_faces: Vec<[(usize, f64); 6]>,
    face_cells: Vec<[Option<usize>; 2]>,
    boundary: Vec<bool>,
}

impl Layout {
    pub fn new(mesh: &CubedSphereMesh) -> Self {
        let h = mesh.horizontal();
        let m = mesh.layers();
        let ncolumns = mesh.ncolumns();
        let ncells = ncolumns * m;
        let nedges = h.edges().len();
        let nside = nedges * m;
        let nfaces = nside + ncolumns * (m + 1);
        let mut cell_faces = Vec::with_capacity(ncells);
        let mut face_cells = vec![[None, None]; nfaces];
        let mut boundary = vec![false; nfaces];
        for col in 0..ncolumns {
            for k in 0..m {
                let cell = col * m + k;
                let mut f = [(0usize, 0.0); 6];
                for side in SIDES {
                    let (e, s) = h.column_edge(col, side);
                    f[side.index()] = (e * m + k, s);
                }
                f[4] = (nside + col * (m + 1) + k, -1.0);
                f[5] = (nside + col * (m + 1) + k + 1, 1.0);
                for &(face, s) in &f {
                    // slot 0 is the cell the normal points out of
                    face_cells[face][if s > 0.0 { 0 } else { 1 }] = Some(cell);
                }
                cell_faces.push(f);
            }
            boundary[nside + col * (m + 1)] = true;
            boundary[nside + col * (m + 1) + m] = true;
        }
        Self { ncolumns, layers: m, ncells, nedges, nside, nfaces, ntheta: ncolumns * (m + 1), cell_faces, face_cells, boundary }
    }

    pub fn len(&self, space: Space) -> usize {
        match space {
            Space::W2 => self.nfaces,
            Space::W3 => self.ncells,
            Space::Wtheta => self.ntheta,
            Space::Wchi => 8 * self.ncells,
        }
    }

    /// Faces of a cell in local order W, E, S, N, B, T with outward orientation signs.
    pub fn cell_faces(&self, cell: usize) -> &[(usize, f64); 6] {
        &self.cell_faces[cell]
    }

    /// (cell behind the normal, cell in front of the normal); boundary faces miss one.
    pub fn face_cells(&self, face: usize) -> [Option<usize>; 2] {
        self.face_cells[face]
    }

    /// Top and bottom faces of the shell, whose flux is held at zero.
    pub fn is_boundary(&self, face: usize) -> bool {
        self.boundary[face]
    }

    pub fn is_vertical(&self, face: usize) -> bool {
        face >= self.nside
    }

    pub fn side_face(&self, edge: usize, k: usize) -> usize {
        edge * self.layers + k
    }

    /// Vertical face at interface `k` (0 = surface, m = top) of a column.
    pub fn vertical_face(&self, col: usize, k: usize) -> usize {
        self.nside + col * (self.layers + 1) + k
    }

    /// Wθ dof at interface `k` of a column.
    pub fn theta_dof(&self, col: usize, k: usize) -> usize {
        col * (self.layers + 1) + k
    }

    /// Wθ dofs (bottom, top) of a cell.
    pub fn cell_theta(&self, cell: usize) -> (usize, usize) {
        let col = cell / self.layers;
        let k = cell % self.layers;
        (self.theta_dof(col, k), self.theta_dof(col, k + 1))
    }

    /// Wθ dof that coincides with an interior vertical face.
    pub fn face_theta(&self, face: usize) -> Option<usize> {
        if face < self.nside {
            None
        } else {
            Some(face - self.nside)
        }
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nfaces).filter(|&f| self.boundary[f])
    }

    /// Side of the local face slot.
    pub fn slot_side(slot: usize) -> Option<Side> {
        SIDES.get(slot).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::VerticalMeshSpec;

    #[test]
    fn every_face_has_one_or_two_cells_with_opposite_signs() {
        let mesh = CubedSphereMesh::flat(3, 1.0e6, VerticalMeshSpec::uniform(1.0e4, 2)).unwrap();
        let l = Layout::new(&mesh);
        assert_eq!(l.nfaces, 2 * 54 * 2 + 54 * 3);
        let mut count = vec![0.0f64; l.nfaces];
        let mut users = vec![0; l.nfaces];
        for c in 0..l.ncells {
            for &(f, s) in l.cell_faces(c) {
                count[f] += s;
                users[f] += 1;
            }
        }
        for f in 0..l.nfaces {
            if l.is_boundary(f) {
                assert_eq!(users[f], 1);
            } else {
                assert_eq!((users[f], count[f]), (2, 0.0));
            }
        }
    }
}
