//! Transfer and extension operators between the discrete spaces.

pub mod loops;

use std::collections::hash_map::DefaultHasher;
use std::collections::VecDeque;
use std::hash::{Hash, Hasher};

pub use loops::{
    epsilon_correction, junction_functionals, loop_constant_extension, loop_decompose, BoundaryLoop,
    LoopDecomposition,
};

use crate::error::{Error, Result};
use crate::mesh::{CoarseEntity, FineTrace, TetMesh};
use crate::solve::{Cholesky, ConstrainedSolver};
use crate::sparse::SparseOperator;

/// Edge moments of a piecewise linear nodal vector field (trapezoid rule,
/// exact for linear integrands).
pub fn edge_interpolate_rh(mesh: &TetMesh, w: &[f64]) -> Vec<f64> {
    mesh.ops().rh.matvec(w)
}

/// Input of the Scott-Zhang operator.
#[derive(Clone, Copy, Debug)]
pub enum SzInput<'a> {
    /// A continuous piecewise linear vector field (3 values per node).
    Nodal(&'a [f64]),
    /// The piecewise quadratic product of a scalar and a vector nodal field.
    Product { scalar: &'a [f64], vector: &'a [f64] },
}

/// `∫_σ λ^α / |σ|` on a `d`-simplex for a multi-index given by a list of
/// local vertex slots (repeats allowed).
fn simplex_moment(d: usize, slots: &[usize]) -> f64 {
    let mut counts = [0usize; 4];
    for &s in slots {
        counts[s] += 1;
    }
    let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
    fact(d) * counts.iter().map(|&c| fact(c)).product::<f64>() / fact(d + slots.len())
}

/// Selection simplex for node `a`: the lowest-index trace face containing
/// it, else the lowest-index trace edge, else the node itself when it is a
/// trace vertex; nodes off the trace use the lowest-index tet.
fn sz_simplex(mesh: &TetMesh, trace: &FineTrace, a: usize) -> Vec<usize> {
    if trace.nodes[a] {
        let face = mesh
            .vertex_edges[a]
            .iter()
            .flat_map(|&e| mesh.edge_tets[e].iter().flat_map(|&t| mesh.tet_faces[t]))
            .filter(|&f| trace.faces[f] && mesh.faces[f].contains(&a))
            .min();
        if let Some(f) = face {
            return mesh.faces[f].to_vec();
        }
        if let Some(&e) = mesh.vertex_edges[a].iter().filter(|&&e| trace.edges[e]).min() {
            return mesh.edges[e].to_vec();
        }
        return vec![a];
    }
    let t = mesh.vertex_edges[a].iter().flat_map(|&e| mesh.edge_tets[e].iter().copied()).min().unwrap();
    mesh.tets[t].to_vec()
}

/// Scott-Zhang quasi-interpolation into continuous piecewise linears.
/// Nodes on the trace average over a trace simplex, so vanishing trace data
/// give exactly zero there; piecewise linear input is reproduced exactly.
pub fn scott_zhang(mesh: &TetMesh, f: SzInput<'_>, trace: &FineTrace) -> Vec<f64> {
    let n = mesh.n_vertices();
    let mut out = vec![0.0; 3 * n];
    for a in 0..n {
        match f {
            SzInput::Nodal(w) => out[3 * a..3 * a + 3].copy_from_slice(&w[3 * a..3 * a + 3]),
            SzInput::Product { scalar, vector } => {
                let s = sz_simplex(mesh, trace, a);
                let d = s.len() - 1;
                let ia = s.iter().position(|&x| x == a).unwrap();
                // Dual basis ψ_a = Σ_b c_b λ_b with c = (|σ| d!/(d+2)! (I + 11ᵀ))⁻¹ e_a.
                let k = (1..=d + 2).map(|x| x as f64).product::<f64>() / (1..=d).map(|x| x as f64).product::<f64>();
                let c: Vec<f64> =
                    (0..=d).map(|b| k * (if b == ia { 1.0 } else { 0.0 } - 1.0 / (d as f64 + 2.0))).collect();
                for comp in 0..3 {
                    let mut v = 0.0;
                    for (b, cb) in c.iter().enumerate() {
                        for (i, &ni) in s.iter().enumerate() {
                            for (j, &nj) in s.iter().enumerate() {
                                v += cb * scalar[ni] * vector[3 * nj + comp] * simplex_moment(d, &[b, i, j]);
                            }
                        }
                    }
                    out[3 * a + comp] = v;
                }
            }
        }
    }
    out
}

/// Nodal cut-off for a coarse interface face: 1 at nodes interior to the
/// face, 0 everywhere else, so it decays to zero across one element layer.
pub fn face_cutoff(mesh: &TetMesh, face: &CoarseEntity) -> Result<Vec<f64>> {
    if !face.is_face() || !mesh.complex.is_interface_face(face) {
        return Err(Error::Unsupported(format!("{} is not an interface face", face.name)));
    }
    let sides = face.sides();
    Ok(mesh
        .vertices
        .iter()
        .map(|x| {
            let on_rim = sides.iter().any(|(a, b)| crate::mesh::geom::segment_distance(*x, *a, *b) <= 1e-9);
            if face.contains(*x) && !on_rim {
                1.0
            } else {
                0.0
            }
        })
        .collect())
}

fn mask_key(prefix: &str, mask: &[bool]) -> String {
    let mut h = DefaultHasher::new();
    mask.hash(&mut h);
    format!("{prefix}:{}:{:016x}", mask.len(), h.finish())
}

/// Nodal Laplace solver with Dirichlet nodes `fixed`, cached per mask.
pub(crate) fn laplace_solver(mesh: &TetMesh, fixed: &[bool]) -> Result<std::sync::Arc<ConstrainedSolver>> {
    mesh.cached(&mask_key("laplace", fixed), || ConstrainedSolver::new(&mesh.ops().stiff_z, fixed))
}

/// Discrete harmonic extension: `data` is matched on the `fixed` nodes and
/// the remaining nodes satisfy the discrete Laplace equation (natural
/// boundary conditions where the boundary is not fixed).
pub fn harmonic_extend(mesh: &TetMesh, fixed: &[bool], data: &[f64]) -> Result<Vec<f64>> {
    if !fixed.iter().any(|x| *x) {
        return Err(Error::Solver("harmonic extension needs Dirichlet nodes".into()));
    }
    let s = laplace_solver(mesh, fixed)?;
    Ok(s.solve(&vec![0.0; mesh.n_vertices()], data))
}

/// Componentwise harmonic extension of a nodal vector field.
pub fn harmonic_extend_vec3(mesh: &TetMesh, fixed: &[bool], data: &[f64]) -> Result<Vec<f64>> {
    if !fixed.iter().any(|x| *x) {
        return Err(Error::Solver("harmonic extension needs Dirichlet nodes".into()));
    }
    let s = laplace_solver(mesh, fixed)?;
    let n = mesh.n_vertices();
    let gs: Vec<Vec<f64>> = (0..3).map(|c| (0..n).map(|i| data[3 * i + c]).collect()).collect();
    let sol = s.solve_many(&vec![vec![0.0; n]; 3], &gs);
    Ok((0..3 * n).map(|i| sol[i % 3][i / 3]).collect())
}

/// Factorizations behind the curl-harmonic extension of one mesh.
struct CurlHarmonic {
    interior: Vec<usize>,
    cotree: Vec<usize>,
    k_cc: Cholesky,
    k_cb: SparseOperator,
    boundary: Vec<usize>,
    inner_nodes: Vec<usize>,
    g_i: SparseOperator,
    gmg: Cholesky,
}

impl CurlHarmonic {
    fn new(mesh: &TetMesh) -> Result<Self> {
        let ops = mesh.ops();
        let n = mesh.n_vertices();
        let boundary: Vec<usize> = (0..mesh.n_edges()).filter(|&e| mesh.boundary_edge[e]).collect();
        let interior: Vec<usize> = (0..mesh.n_edges()).filter(|&e| !mesh.boundary_edge[e]).collect();
        // Spanning tree of the interior nodes with all boundary nodes merged
        // into one root; its edges carry the gradient gauge.
        let mut in_tree = vec![false; mesh.n_edges()];
        let mut seen: Vec<bool> = mesh.boundary_node.clone();
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| mesh.boundary_node[v]).collect();
        while let Some(v) = queue.pop_front() {
            for &e in &mesh.vertex_edges[v] {
                let [a, b] = mesh.edges[e];
                let w = if a == v { b } else { a };
                if !seen[w] {
                    seen[w] = true;
                    in_tree[e] = true;
                    queue.push_back(w);
                }
            }
        }
        let cotree: Vec<usize> = interior.iter().copied().filter(|&e| !in_tree[e]).collect();
        let k_cc = Cholesky::new(&ops.stiff_v.submatrix(&cotree, &cotree))?;
        let k_cb = ops.stiff_v.submatrix(&cotree, &boundary);
        let inner_nodes: Vec<usize> = (0..n).filter(|&v| !mesh.boundary_node[v]).collect();
        let g_i = ops.grad.submatrix(&(0..mesh.n_edges()).collect::<Vec<_>>(), &inner_nodes);
        let gmg = if inner_nodes.is_empty() {
            Cholesky::new(&SparseOperator::identity(1))?
        } else {
            Cholesky::new(&g_i.transpose().mul(&ops.mass_v).mul(&g_i))?
        };
        Ok(CurlHarmonic { interior, cotree, k_cc, k_cb, boundary, inner_nodes, g_i, gmg })
    }
}

/// Discrete curl-harmonic extension of boundary edge moments: the edge
/// field agreeing with `data` on boundary edges that minimizes the curl
/// energy, and among those the L² norm. Interior entries of `data` are
/// ignored.
pub fn curl_harmonic_extend(mesh: &TetMesh, data: &[f64]) -> Result<Vec<f64>> {
    if data.len() != mesh.n_edges() {
        return Err(Error::Dimension { expected: mesh.n_edges(), got: data.len() });
    }
    let ch = mesh.cached("curl-harmonic", || CurlHarmonic::new(mesh))?;
    let mut u = vec![0.0; mesh.n_edges()];
    for &e in &ch.boundary {
        u[e] = data[e];
    }
    if ch.interior.is_empty() {
        return Ok(u);
    }
    let ub: Vec<f64> = ch.boundary.iter().map(|&e| data[e]).collect();
    let rhs: Vec<f64> = ch.k_cb.matvec(&ub).iter().map(|x| -x).collect();
    let uc = ch.k_cc.solve(&rhs);
    for (k, &e) in ch.cotree.iter().enumerate() {
        u[e] = uc[k];
    }
    if !ch.inner_nodes.is_empty() {
        let mu = mesh.ops().mass_v.matvec(&u);
        let rhs: Vec<f64> = ch.g_i.matvec_t(&mu).iter().map(|x| -x).collect();
        let psi = ch.gmg.solve(&rhs);
        let corr = ch.g_i.matvec(&psi);
        for &e in &ch.interior {
            u[e] += corr[e];
        }
    }
    Ok(u)
}
