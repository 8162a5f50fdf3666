//! Cell-by-cell assembly of the mass, Coriolis, divergence, gradient and projection operators.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use super::basis::reference_basis;
use super::Layout;
use crate::mesh::{panel, CellCoords, CubedSphereMesh, GaussRule, HorizontalMesh, Side, SIDES};
use crate::sparse::CsrMatrix;

type Triplets = Vec<(usize, usize, f64)>;

fn gather(parts: Vec<Triplets>) -> Triplets {
    parts.into_iter().flatten().collect()
}

/// Cell-wise integrand of a W2 × W2 bilinear form, summed over a quadrature rule.
fn assemble_w2_form<F>(mesh: &CubedSphereMesh, layout: &Layout, rule: &GaussRule, local: F) -> CsrMatrix
where
    F: Fn(usize, &[f64; 3], &Matrix3<f64>, f64, usize, usize) -> f64 + Sync,
{
    let parts: Vec<Triplets> = (0..layout.ncells)
        .into_par_iter()
        .map(|cell| {
            let coords = mesh.cell_coords(cell);
            let faces = layout.cell_faces(cell);
            let mut block = [[0.0; 6]; 6];
            for (pt, w) in rule.points() {
                let jac = coords.jacobian(*pt);
                for a in 0..6 {
                    for b in 0..6 {
                        block[a][b] += w * local(cell, pt, &jac.j, jac.det, a, b);
                    }
                }
            }
            let mut t = Vec::with_capacity(36);
            for a in 0..6 {
                let (fa, sa) = faces[a];
                if layout.is_boundary(fa) {
                    continue;
                }
                for b in 0..6 {
                    let (fb, sb) = faces[b];
                    if layout.is_boundary(fb) || block[a][b] == 0.0 {
                        continue;
                    }
                    t.push((fa, fb, sa * sb * block[a][b]));
                }
            }
            t
        })
        .collect();
    CsrMatrix::from_triplets(layout.nfaces, layout.nfaces, &gather(parts))
}

fn with_boundary_identity(layout: &Layout, m: CsrMatrix) -> CsrMatrix {
    let id: Vec<f64> = (0..layout.nfaces).map(|f| if layout.is_boundary(f) { 1.0 } else { 0.0 }).collect();
    m.add(1.0, &CsrMatrix::diagonal_matrix(&id), 1.0)
}

/// W2 mass matrix ⟨J v̂_i, J v̂_j / det J⟩, with unit rows on the fixed boundary faces.
pub fn mass_w2(mesh: &CubedSphereMesh, layout: &Layout, rule: &GaussRule) -> CsrMatrix {
    let m = assemble_w2_form(mesh, layout, rule, |_, pt, j, det, a, b| {
        (j * reference_basis(a, *pt)).dot(&(j * reference_basis(b, *pt))) / det
    });
    with_boundary_identity(layout, m)
}

/// Coriolis matrix ⟨J v̂_i, 2Ω × J v̂_j / det J⟩.
pub fn coriolis_matrix(mesh: &CubedSphereMesh, layout: &Layout, rule: &GaussRule, omega: [f64; 3]) -> CsrMatrix {
    let two_omega = Vector3::from(omega) * 2.0;
    if two_omega == Vector3::zeros() {
        return CsrMatrix::from_triplets(layout.nfaces, layout.nfaces, &[]);
    }
    assemble_w2_form(mesh, layout, rule, |_, pt, j, det, a, b| {
        (j * reference_basis(a, *pt)).dot(&two_omega.cross(&(j * reference_basis(b, *pt)))) / det
    })
}

/// Implicit damping acting on the vertical flux components, weighted by μ(z).
pub fn damping_matrix(
    mesh: &CubedSphereMesh,
    layout: &Layout,
    rule: &GaussRule,
    mu: &(dyn Fn(f64) -> f64 + Sync),
) -> CsrMatrix {
    let a = mesh.radius();
    assemble_w2_form(mesh, layout, rule, |cell, pt, j, det, s, t| {
        if s < 4 || t < 4 {
            return 0.0;
        }
        let z = mesh.cell_point(cell, *pt).norm() - a;
        mu(z) * (j * reference_basis(s, *pt)).dot(&(j * reference_basis(t, *pt))) / det
    })
}

/// M₂ + Δt M_μ + τ_u Δt M_C.
pub fn assemble_mass_w2(
    mesh: &CubedSphereMesh,
    layout: &Layout,
    rule: &GaussRule,
    omega: [f64; 3],
    mu: Option<&(dyn Fn(f64) -> f64 + Sync)>,
    tau_u: f64,
    dt: f64,
) -> CsrMatrix {
    let mut m = mass_w2(mesh, layout, rule);
    if let Some(mu) = mu {
        m = m.add(1.0, &damping_matrix(mesh, layout, rule, mu), dt);
    }
    m.add(1.0, &coriolis_matrix(mesh, layout, rule, omega), tau_u * dt)
}

/// Weak divergence: row per cell, signed sum of its face fluxes. Boundary faces are dropped.
pub fn assemble_divergence(layout: &Layout) -> CsrMatrix {
    let mut t = Vec::with_capacity(6 * layout.ncells);
    for cell in 0..layout.ncells {
        for &(f, s) in layout.cell_faces(cell) {
            if !layout.is_boundary(f) {
                t.push((cell, f, s));
            }
        }
    }
    CsrMatrix::from_triplets(layout.ncells, layout.nfaces, &t)
}

/// Face value of θ used by the pressure gradient: the Wθ dof on vertical faces and
/// the mean of the two cell averages on side faces.
fn gradient_theta(layout: &Layout, theta: &[f64], face: usize) -> f64 {
    if let Some(i) = layout.face_theta(face) {
        return theta[i];
    }
    let cells = layout.face_cells(face);
    let mean = |c: usize| {
        let (b, t) = layout.cell_theta(c);
        0.5 * (theta[b] + theta[t])
    };
    0.5 * (mean(cells[0].unwrap()) + mean(cells[1].unwrap()))
}

/// Weak pressure gradient G^θ: W3 → W2, entry c_p θ_f s_Kf.
pub fn assemble_gradient(layout: &Layout, theta: &[f64], cp: f64) -> CsrMatrix {
    let mut t = Vec::with_capacity(2 * layout.nfaces);
    for f in 0..layout.nfaces {
        if layout.is_boundary(f) {
            continue;
        }
        let th = cp * gradient_theta(layout, theta, f);
        let [k, l] = layout.face_cells(f);
        t.push((f, k.unwrap(), th));
        t.push((f, l.unwrap(), -th));
    }
    CsrMatrix::from_triplets(layout.nfaces, layout.ncells, &t)
}

/// G^θ Π without forming the matrix.
pub fn apply_gradient(layout: &Layout, theta: &[f64], exner: &[f64], cp: f64) -> Vec<f64> {
    (0..layout.nfaces)
        .into_par_iter()
        .map(|f| {
            if layout.is_boundary(f) {
                return 0.0;
            }
            let [k, l] = layout.face_cells(f);
            cp * gradient_theta(layout, theta, f) * (exner[k.unwrap()] - exner[l.unwrap()])
        })
        .collect()
}

/// Vertically restricted buoyancy couplings (P_{2vθ}^{Π*}, P_{θ2v}^{θ*}), without τΔt factors.
pub fn assemble_projections(layout: &Layout, exner: &[f64], theta: &[f64], cp: f64) -> (CsrMatrix, CsrMatrix) {
    let mut p2v = Vec::new();
    for f in layout.nside..layout.nfaces {
        if layout.is_boundary(f) {
            continue;
        }
        let [k, l] = layout.face_cells(f);
        let i = layout.face_theta(f).unwrap();
        p2v.push((f, i, cp * (exner[k.unwrap()] - exner[l.unwrap()])));
    }
    let mut pt2v = Vec::new();
    for cell in 0..layout.ncells {
        let (b, t) = layout.cell_theta(cell);
        let dtheta = theta[t] - theta[b];
        let faces = layout.cell_faces(cell);
        let (fb, ft) = (faces[4].0, faces[5].0);
        // ∫ ŵ_i φ_f dẑ with ŵ, φ linear in ẑ
        for (row, wb, wt) in [(b, 1.0 / 3.0, 1.0 / 6.0), (t, 1.0 / 6.0, 1.0 / 3.0)] {
            if !layout.is_boundary(fb) {
                pt2v.push((row, fb, wb * dtheta));
            }
            if !layout.is_boundary(ft) {
                pt2v.push((row, ft, wt * dtheta));
            }
        }
    }
    (
        CsrMatrix::from_triplets(layout.nfaces, layout.ntheta, &p2v),
        CsrMatrix::from_triplets(layout.ntheta, layout.nfaces, &pt2v),
    )
}

/// Wθ mass matrix ⟨ŵ_i, ŵ_j det J⟩.
pub fn mass_theta(mesh: &CubedSphereMesh, layout: &Layout, rule: &GaussRule) -> CsrMatrix {
    let parts: Vec<Triplets> = (0..layout.ncells)
        .into_par_iter()
        .map(|cell| {
            let coords = mesh.cell_coords(cell);
            let (b, t) = layout.cell_theta(cell);
            let mut m = [[0.0; 2]; 2];
            for (pt, w) in rule.points() {
                let det = coords.jacobian(*pt).det;
                let basis = [1.0 - pt[2], pt[2]];
                for a in 0..2 {
                    for c in 0..2 {
                        m[a][c] += w * basis[a] * basis[c] * det;
                    }
                }
            }
            vec![(b, b, m[0][0]), (b, t, m[0][1]), (t, b, m[1][0]), (t, t, m[1][1])]
        })
        .collect();
    CsrMatrix::from_triplets(layout.ntheta, layout.ntheta, &gather(parts))
}

/// Geopotential g (r − a) at cell centres.
pub fn geopotential(mesh: &CubedSphereMesh, gravity: f64) -> Vec<f64> {
    (0..mesh.ncells()).map(|c| gravity * mesh.cell_centre_height(c)).collect()
}

/// Mean of the adjacent cell values on every face.
pub fn face_average(layout: &Layout, cell_values: &[f64]) -> Vec<f64> {
    (0..layout.nfaces)
        .map(|f| match layout.face_cells(f) {
            [Some(a), Some(b)] => 0.5 * (cell_values[a] + cell_values[b]),
            [Some(a), None] | [None, Some(a)] => cell_values[a],
            [None, None] => 0.0,
        })
        .collect()
}

/// Reference-cube boundary loops of each local face, oriented by the outward normal.
const FACE_LOOPS: [[[f64; 3]; 4]; 6] = [
    [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 1.0], [0.0, 1.0, 0.0]],
    [[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 1.0, 1.0], [1.0, 0.0, 1.0]],
    [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 0.0, 1.0], [0.0, 0.0, 1.0]],
    [[0.0, 1.0, 0.0], [0.0, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, 0.0]],
    [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0], [1.0, 0.0, 0.0]],
    [[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 1.0], [0.0, 1.0, 1.0]],
];

fn line_integral(coords: &CellCoords, p: [f64; 3], q: [f64; 3], a: &dyn Fn(&Vector3<f64>) -> Vector3<f64>) -> f64 {
    // 5-point Gauss–Legendre on [0, 1]
    const X: [f64; 5] = [0.046910077030668, 0.230765344947158, 0.5, 0.769234655052842, 0.953089922969332];
    const W: [f64; 5] = [0.118463442528095, 0.239314335249683, 0.284444444444444, 0.239314335249683, 0.118463442528095];
    let d = Vector3::new(q[0] - p[0], q[1] - p[1], q[2] - p[2]);
    let mut s = 0.0;
    for (x, w) in X.iter().zip(W) {
        let c = [p[0] + x * d[0], p[1] + x * d[1], p[2] + x * d[2]];
        let jac = coords.jacobian(c);
        s += w * a(&coords.point(c)).dot(&(jac.j * d));
    }
    s
}

/// Owner of every column corner (index col·4 + c, c = x | y << 1 in reference bits):
/// corners shared by several columns resolve to the smallest index among them.
fn corner_owners(h: &HorizontalMesh) -> Vec<usize> {
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let corner = |col: usize, c: usize| {
        let (p, i, j) = h.column_index(col);
        panel::point(p, h.node_angle(i + (c & 1)), h.node_angle(j + (c >> 1)), 1.0)
    };
    let side_corners = |side: Side| match side {
        Side::W => [0, 2],
        Side::E => [1, 3],
        Side::S => [0, 1],
        Side::N => [2, 3],
    };
    let mut parent: Vec<usize> = (0..4 * h.ncolumns()).collect();
    for col in 0..h.ncolumns() {
        for side in SIDES {
            let (nb, back) = h.neighbour(col, side);
            for c in side_corners(side) {
                let x = corner(col, c);
                let other = side_corners(back)
                    .into_iter()
                    .min_by(|&a, &b| (corner(nb, a) - x).norm().total_cmp(&(corner(nb, b) - x).norm()))
                    .unwrap();
                let (ra, rb) = (find(&mut parent, 4 * col + c), find(&mut parent, 4 * nb + other));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    (0..parent.len()).map(|i| find(&mut parent, i)).collect()
}

/// Face fluxes of curl A computed as circulations of A around each face. Every mesh
/// edge is integrated once, from one owning cell, so the result is discretely
/// divergence free to summation round-off. The tangential part of A on the bottom and
/// top shells is taken as zero, so the closed boundary faces carry no flux.
pub fn project_vector_potential(
    mesh: &CubedSphereMesh,
    layout: &Layout,
    a: &(dyn Fn(&Vector3<f64>) -> Vector3<f64> + Sync),
) -> Vec<f64> {
    let h = mesh.horizontal();
    let m = mesh.layers();
    let owners = corner_owners(h);
    let bits = |c: usize| [(c & 1) as f64, (c >> 1) as f64];
    // radial edge through corner `c` of column `col`, upwards across layer `k`
    let radial = |col: usize, c: usize, k: usize| {
        let o = owners[4 * col + c];
        let [x, y] = bits(o % 4);
        line_integral(&mesh.cell_coords(o / 4 * m + k), [x, y, 0.0], [x, y, 1.0], a)
    };
    // horizontal edge along `side` of `col` at level `l`, from corner `from`; edges on the
    // bottom and top shells carry nothing, matching the closed boundary
    let horizontal = |col: usize, side: Side, l: usize, from: usize| {
        if l == 0 || l == m {
            return 0.0;
        }
        let e = h.edges()[h.column_edge(col, side).0];
        let (c0, c1) = match e.side_a {
            Side::W => (0, 2),
            Side::E => (1, 3),
            Side::S => (0, 1),
            Side::N => (2, 3),
        };
        let k = l.min(m - 1);
        let z = (l - k) as f64;
        let ([x0, y0], [x1, y1]) = (bits(c0), bits(c1));
        let v = line_integral(&mesh.cell_coords(e.a * m + k), [x0, y0, z], [x1, y1, z], a);
        if owners[4 * e.a + c0] == owners[4 * col + from] {
            v
        } else {
            -v
        }
    };
    (0..layout.nfaces)
        .into_par_iter()
        .map(|f| {
            if layout.is_boundary(f) {
                return 0.0;
            }
            let cell = layout.face_cells(f)[0].unwrap();
            let (col, k) = (cell / m, cell % m);
            let slot = layout.cell_faces(cell).iter().position(|&(g, _)| g == f).unwrap();
            let lp = &FACE_LOOPS[slot];
            (0..4)
                .map(|e| {
                    let (p, q) = (lp[e], lp[(e + 1) % 4]);
                    let corner = |v: [f64; 3]| v[0] as usize | (v[1] as usize) << 1;
                    if p[0] == q[0] && p[1] == q[1] {
                        let v = radial(col, corner(p), k);
                        if q[2] > p[2] {
                            v
                        } else {
                            -v
                        }
                    } else {
                        let side = match (p[0] == q[0], p[0], p[1]) {
                            (true, x, _) if x == 0.0 => Side::W,
                            (true, _, _) => Side::E,
                            (false, _, y) if y == 0.0 => Side::S,
                            (false, _, _) => Side::N,
                        };
                        horizontal(col, side, k + p[2] as usize, corner(p))
                    }
                })
                .sum()
        })
        .collect()
}

/// State-independent operators of one mesh.
#[derive(Debug, Clone)]
pub struct FemOperators {
    pub m2: CsrMatrix,
    /// 2Ω× form; empty when Ω = 0.
    pub mc: CsrMatrix,
    /// Damping form M_μ; empty by default.
    pub mmu: CsrMatrix,
    pub d: CsrMatrix,
    pub dt: CsrMatrix,
    pub mtheta: CsrMatrix,
    pub volumes: Vec<f64>,
    pub centre_j: Vec<Matrix3<f64>>,
    pub centre_det: Vec<f64>,
    /// ∫ J v̂ dχ̂ for every local (outward) face basis of every cell.
    pub face_moments: Vec<[Vector3<f64>; 6]>,
    pub phi: Vec<f64>,
    pub cp: f64,
}

impl FemOperators {
    pub fn new(
        mesh: &CubedSphereMesh,
        layout: &Layout,
        rule: &GaussRule,
        omega: [f64; 3],
        gravity: f64,
        cp: f64,
        mu: Option<&(dyn Fn(f64) -> f64 + Sync)>,
    ) -> Self {
        let d = assemble_divergence(layout);
        let centre: Vec<_> = (0..layout.ncells).into_par_iter().map(|c| mesh.cell_coords(c).jacobian([0.5; 3])).collect();
        let face_moments = (0..layout.ncells)
            .into_par_iter()
            .map(|c| {
                let coords = mesh.cell_coords(c);
                let mut m = [Vector3::zeros(); 6];
                for (pt, w) in rule.points() {
                    let j = coords.jacobian(*pt).j;
                    for (slot, ms) in m.iter_mut().enumerate() {
                        *ms += j * reference_basis(slot, *pt) * *w;
                    }
                }
                m
            })
            .collect();
        let mmu = match mu {
            Some(mu) => damping_matrix(mesh, layout, rule, mu),
            None => CsrMatrix::from_triplets(layout.nfaces, layout.nfaces, &[]),
        };
        Self {
            m2: mass_w2(mesh, layout, rule),
            mc: coriolis_matrix(mesh, layout, rule, omega),
            mmu,
            dt: d.transpose(),
            d,
            mtheta: mass_theta(mesh, layout, rule),
            volumes: mesh.cell_volumes().to_vec(),
            centre_j: centre.iter().map(|j| j.j).collect(),
            centre_det: centre.iter().map(|j| j.det).collect(),
            face_moments,
            phi: geopotential(mesh, gravity),
            cp,
        }
    }

    /// Physical velocity at each cell centre from the face fluxes.
    pub fn centre_velocity(&self, layout: &Layout, u: &[f64]) -> Vec<Vector3<f64>> {
        (0..layout.ncells)
            .map(|c| {
                let mut uh = Vector3::zeros();
                for (slot, &(f, s)) in layout.cell_faces(c).iter().enumerate() {
                    uh += reference_basis(slot, [0.5; 3]) * (s * u[f]);
                }
                self.centre_j[c] * uh / self.centre_det[c]
            })
            .collect()
    }

    /// Explicit weak tendency S = −M_C u + DᵀΦ + G^θ Π.
    pub fn wave_tendency(&self, layout: &Layout, u: &[f64], theta: &[f64], exner: &[f64]) -> Vec<f64> {
        let mut s = apply_gradient(layout, theta, exner, self.cp);
        self.dt.mul_vec_add(1.0, &self.phi, &mut s);
        if self.mc.nnz() > 0 {
            self.mc.mul_vec_add(-1.0, u, &mut s);
        }
        s
    }

    /// Weak form ⟨J v̂_f, a_c⟩ of a cell-wise constant physical vector field.
    pub fn weak_vector(&self, layout: &Layout, a: &[Vector3<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; layout.nfaces];
        for c in 0..layout.ncells {
            for (slot, &(f, s)) in layout.cell_faces(c).iter().enumerate() {
                if !layout.is_boundary(f) {
                    out[f] += s * self.face_moments[c][slot].dot(&a[c]);
                }
            }
        }
        out
    }
}
