//! Whitney spaces on tetrahedra: incidence maps, mass/stiffness assembly,
//! norms and trace restriction.
//!
//! Fields are plain coefficient vectors: nodal fields carry one value per
//! vertex, nodal vector fields three interleaved values per vertex
//! (`[x0, y0, z0, x1, ...]`), edge fields one tangential moment per oriented
//! edge and face fields one flux per oriented face.

pub mod element;

use crate::error::{Error, Result};
use crate::mesh::{geom, FineTrace, TetMesh, TET_EDGES};
use crate::sparse::SparseOperator;

pub type NodalField = Vec<f64>;
pub type NodalVectorField = Vec<f64>;
pub type EdgeField = Vec<f64>;
pub type FaceField = Vec<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    Z,
    Z3,
    V,
    W,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Mass,
    Stiffness,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    L2,
    H1,
    Curl,
    CurlSemi,
}

/// A field tagged with its space, for norm evaluation.
#[derive(Clone, Copy, Debug)]
pub enum FieldRef<'a> {
    Nodal(&'a [f64]),
    NodalVector(&'a [f64]),
    Edge(&'a [f64]),
    Face(&'a [f64]),
}

/// Assembled operators of one mesh.
#[derive(Debug)]
pub struct Operators {
    pub grad: SparseOperator,
    pub curl: SparseOperator,
    pub rh: SparseOperator,
    pub mass_z: SparseOperator,
    pub stiff_z: SparseOperator,
    pub mass_v: SparseOperator,
    pub stiff_v: SparseOperator,
    pub mass_w: SparseOperator,
    pub stiff_w: SparseOperator,
}

impl Operators {
    pub fn assemble(mesh: &TetMesh) -> Self {
        let ones = vec![1.0; mesh.complex.blocks.len()];
        Operators {
            grad: gradient_map(mesh),
            curl: curl_map(mesh),
            rh: rh_matrix(mesh),
            mass_z: assemble_weighted(mesh, Space::Z, Kind::Mass, &ones),
            stiff_z: assemble_weighted(mesh, Space::Z, Kind::Stiffness, &ones),
            mass_v: assemble_weighted(mesh, Space::V, Kind::Mass, &ones),
            stiff_v: assemble_weighted(mesh, Space::V, Kind::Stiffness, &ones),
            mass_w: assemble_weighted(mesh, Space::W, Kind::Mass, &ones),
            stiff_w: assemble_weighted(mesh, Space::W, Kind::Stiffness, &ones),
        }
    }
}

/// Incidence `λ_e(∇p) = p(head) - p(tail)`.
pub fn gradient_map(mesh: &TetMesh) -> SparseOperator {
    let mut t = Vec::with_capacity(2 * mesh.n_edges());
    for (e, [a, b]) in mesh.edges.iter().enumerate() {
        t.push((e, *a, -1.0));
        t.push((e, *b, 1.0));
    }
    SparseOperator::from_triplets(mesh.n_edges(), mesh.n_vertices(), t, false)
}

/// Signed edge-face incidence giving the flux of `curl v` through each face
/// `(a < b < c)` oriented by `(x_b - x_a) × (x_c - x_a)`.
pub fn curl_map(mesh: &TetMesh) -> SparseOperator {
    let mut t = Vec::with_capacity(3 * mesh.n_faces());
    for (f, [a, b, c]) in mesh.faces.iter().enumerate() {
        t.push((f, mesh.edge_id(*a, *b).unwrap(), 1.0));
        t.push((f, mesh.edge_id(*b, *c).unwrap(), 1.0));
        t.push((f, mesh.edge_id(*a, *c).unwrap(), -1.0));
    }
    SparseOperator::from_triplets(mesh.n_faces(), mesh.n_edges(), t, false)
}

/// Matrix of `r_h` on nodal vector fields: trapezoid moments along each edge.
pub fn rh_matrix(mesh: &TetMesh) -> SparseOperator {
    let mut t = Vec::with_capacity(6 * mesh.n_edges());
    for (e, [a, b]) in mesh.edges.iter().enumerate() {
        let d = mesh.edge_vector(e);
        for c in 0..3 {
            t.push((e, 3 * a + c, 0.5 * d[c]));
            t.push((e, 3 * b + c, 0.5 * d[c]));
        }
    }
    SparseOperator::from_triplets(mesh.n_edges(), 3 * mesh.n_vertices(), t, false)
}

/// Assemble a form with a per-block coefficient.
pub fn assemble_weighted(mesh: &TetMesh, space: Space, kind: Kind, coef: &[f64]) -> SparseOperator {
    match space {
        Space::Z3 => kron3(&assemble_weighted(mesh, Space::Z, kind, coef)),
        Space::Z => {
            let mut t = Vec::with_capacity(16 * mesh.n_tets());
            for k in 0..mesh.n_tets() {
                let c = coef[mesh.block_of_tet[k]];
                let m = element::nodal(&mesh.tet_points(k), kind);
                let v = mesh.tets[k];
                for i in 0..4 {
                    for j in 0..4 {
                        t.push((v[i], v[j], c * m[i][j]));
                    }
                }
            }
            SparseOperator::from_triplets(mesh.n_vertices(), mesh.n_vertices(), t, true)
        }
        Space::V => {
            let mut t = Vec::with_capacity(36 * mesh.n_tets());
            for k in 0..mesh.n_tets() {
                let c = coef[mesh.block_of_tet[k]];
                let s = edge_signs(mesh, k);
                let m = element::edge(&mesh.tet_points(k), kind);
                let e = mesh.tet_edges[k];
                for i in 0..6 {
                    for j in 0..6 {
                        t.push((e[i], e[j], c * s[i] * s[j] * m[i][j]));
                    }
                }
            }
            SparseOperator::from_triplets(mesh.n_edges(), mesh.n_edges(), t, true)
        }
        Space::W => {
            let mut t = Vec::with_capacity(16 * mesh.n_tets());
            for k in 0..mesh.n_tets() {
                let c = coef[mesh.block_of_tet[k]];
                let s = face_signs(mesh, k);
                let m = element::face(&mesh.tet_points(k), kind);
                let f = mesh.tet_faces[k];
                for i in 0..4 {
                    for j in 0..4 {
                        t.push((f[i], f[j], c * s[i] * s[j] * m[i][j]));
                    }
                }
            }
            SparseOperator::from_triplets(mesh.n_faces(), mesh.n_faces(), t, true)
        }
    }
}

/// Assemble with unit coefficients.
pub fn assemble(mesh: &TetMesh, space: Space, kind: Kind) -> SparseOperator {
    assemble_weighted(mesh, space, kind, &vec![1.0; mesh.complex.blocks.len()])
}

/// Componentwise copy of a scalar operator on interleaved vector fields.
pub fn kron3(a: &SparseOperator) -> SparseOperator {
    let mut t = Vec::with_capacity(3 * a.nnz());
    for r in 0..a.nrows {
        for (c, v) in a.row(r) {
            for k in 0..3 {
                t.push((3 * r + k, 3 * c + k, v));
            }
        }
    }
    SparseOperator::from_triplets(3 * a.nrows, 3 * a.ncols, t, a.symmetric)
}

/// Orientation signs of the local Whitney edge basis relative to the global
/// (low id to high id) edge orientation.
pub fn edge_signs(mesh: &TetMesh, k: usize) -> [f64; 6] {
    let v = mesh.tets[k];
    TET_EDGES.map(|(i, j)| if v[i] < v[j] { 1.0 } else { -1.0 })
}

/// +1 where the global face normal points out of tet `k`.
pub fn face_signs(mesh: &TetMesh, k: usize) -> [f64; 4] {
    let x = mesh.tet_points(k);
    let mut s = [0.0; 4];
    for (l, f) in mesh.tet_faces[k].iter().enumerate() {
        let [a, b, c] = mesh.faces[*f].map(|i| mesh.vertices[i]);
        let n = geom::cross(geom::sub(b, a), geom::sub(c, a));
        s[l] = if geom::dot(n, geom::sub(a, x[l])) > 0.0 { 1.0 } else { -1.0 };
    }
    s
}

/// Piecewise-constant curl of an edge field, one vector per tet.
pub fn curl_per_tet(mesh: &TetMesh, v: &[f64]) -> Vec<[f64; 3]> {
    (0..mesh.n_tets())
        .map(|k| {
            let (g, _) = geom::barycentric_gradients(&mesh.tet_points(k));
            let s = edge_signs(mesh, k);
            let mut c = [0.0; 3];
            for (l, (i, j)) in TET_EDGES.iter().enumerate() {
                let w = geom::scale(geom::cross(g[*i], g[*j]), 2.0 * s[l] * v[mesh.tet_edges[k][l]]);
                c = geom::add(c, w);
            }
            c
        })
        .collect()
}

/// Piecewise-constant curl of a nodal vector field, one vector per tet.
pub fn curl_nodal_per_tet(mesh: &TetMesh, w: &[f64]) -> Vec<[f64; 3]> {
    (0..mesh.n_tets())
        .map(|k| {
            let (g, _) = geom::barycentric_gradients(&mesh.tet_points(k));
            let mut c = [0.0; 3];
            for (a, &n) in mesh.tets[k].iter().enumerate() {
                c = geom::add(c, geom::cross(g[a], [w[3 * n], w[3 * n + 1], w[3 * n + 2]]));
            }
            c
        })
        .collect()
}

/// Value of the Whitney interpolant of an edge field at barycentric
/// coordinates `lam` in tet `k`.
pub fn eval_edge_field(mesh: &TetMesh, v: &[f64], k: usize, lam: [f64; 4]) -> [f64; 3] {
    let (g, _) = geom::barycentric_gradients(&mesh.tet_points(k));
    let s = edge_signs(mesh, k);
    let mut out = [0.0; 3];
    for (l, (i, j)) in TET_EDGES.iter().enumerate() {
        let w = geom::sub(geom::scale(g[*j], lam[*i]), geom::scale(g[*i], lam[*j]));
        out = geom::add(out, geom::scale(w, s[l] * v[mesh.tet_edges[k][l]]));
    }
    out
}

/// Componentwise quadratic form of a scalar operator on an interleaved field.
fn quad3(a: &SparseOperator, w: &[f64]) -> f64 {
    let n = a.nrows;
    (0..3)
        .map(|c| {
            let x: Vec<f64> = (0..n).map(|i| w[3 * i + c]).collect();
            a.quad(&x)
        })
        .sum()
}

/// Computable norms from the assembled quadratic forms.
pub fn norm(mesh: &TetMesh, field: FieldRef<'_>, which: Norm) -> Result<f64> {
    let ops = mesh.ops();
    let check = |len: usize, expected: usize| -> Result<()> {
        if len == expected {
            Ok(())
        } else {
            Err(Error::Dimension { expected, got: len })
        }
    };
    let q = match (field, which) {
        (FieldRef::Nodal(p), Norm::L2) => {
            check(p.len(), mesh.n_vertices())?;
            ops.mass_z.quad(p)
        }
        (FieldRef::Nodal(p), Norm::H1) => {
            check(p.len(), mesh.n_vertices())?;
            ops.mass_z.quad(p) + ops.stiff_z.quad(p)
        }
        (FieldRef::NodalVector(w), Norm::L2) => {
            check(w.len(), 3 * mesh.n_vertices())?;
            quad3(&ops.mass_z, w)
        }
        (FieldRef::NodalVector(w), Norm::H1) => {
            check(w.len(), 3 * mesh.n_vertices())?;
            quad3(&ops.mass_z, w) + quad3(&ops.stiff_z, w)
        }
        (FieldRef::Edge(v), n) => {
            check(v.len(), mesh.n_edges())?;
            match n {
                Norm::L2 => ops.mass_v.quad(v),
                Norm::CurlSemi => curl_energy(mesh, v),
                Norm::Curl => ops.mass_v.quad(v) + curl_energy(mesh, v),
                Norm::H1 => return Err(Error::NormKind { norm: "H1", field: "an edge field" }),
            }
        }
        (FieldRef::Face(u), Norm::L2) => {
            check(u.len(), mesh.n_faces())?;
            ops.mass_w.quad(u)
        }
        (FieldRef::Nodal(_), _) => return Err(Error::NormKind { norm: "curl", field: "a nodal field" }),
        (FieldRef::NodalVector(_), _) => {
            return Err(Error::NormKind { norm: "curl", field: "a nodal vector field" })
        }
        (FieldRef::Face(_), _) => return Err(Error::NormKind { norm: "non-L2", field: "a face field" }),
    };
    Ok(q.max(0.0).sqrt())
}

/// `‖curl v‖²` summed from elementwise curls, which avoids the cancellation
/// of the assembled quadratic form for nearly curl-free fields.
pub fn curl_energy(mesh: &TetMesh, v: &[f64]) -> f64 {
    curl_per_tet(mesh, v)
        .iter()
        .enumerate()
        .map(|(k, c)| geom::barycentric_gradients(&mesh.tet_points(k)).1 * geom::dot(*c, *c))
        .sum()
}

/// H1 semi-norm of a nodal vector field.
pub fn h1_semi_vec(mesh: &TetMesh, w: &[f64]) -> f64 {
    quad3(&mesh.ops().stiff_z, w).max(0.0).sqrt()
}

/// Set the coefficients on trace entities to exactly zero.
pub fn restrict_zero(field: FieldRef<'_>, trace: &FineTrace) -> Vec<f64> {
    match field {
        FieldRef::Nodal(p) => p.iter().zip(&trace.nodes).map(|(v, t)| if *t { 0.0 } else { *v }).collect(),
        FieldRef::NodalVector(w) => w
            .iter()
            .enumerate()
            .map(|(i, v)| if trace.nodes[i / 3] { 0.0 } else { *v })
            .collect(),
        FieldRef::Edge(v) => v.iter().zip(&trace.edges).map(|(v, t)| if *t { 0.0 } else { *v }).collect(),
        FieldRef::Face(u) => u.iter().zip(&trace.faces).map(|(v, t)| if *t { 0.0 } else { *v }).collect(),
    }
}

/// In-place variants used by the constructions.
pub fn zero_nodes(p: &mut [f64], nodes: &[bool]) {
    for (v, t) in p.iter_mut().zip(nodes) {
        if *t {
            *v = 0.0;
        }
    }
}

pub fn zero_nodes3(w: &mut [f64], nodes: &[bool]) {
    for (i, t) in nodes.iter().enumerate() {
        if *t {
            w[3 * i..3 * i + 3].fill(0.0);
        }
    }
}

pub fn zero_edges(v: &mut [f64], edges: &[bool]) {
    for (x, t) in v.iter_mut().zip(edges) {
        if *t {
            *x = 0.0;
        }
    }
}
