//! The two-Poisson kernel and the split of a field about a face set.

use super::{check_precondition, Claim, HelmholtzSplit, Route};
use crate::error::Result;
use crate::fem::{self, FieldRef};
use crate::mesh::{geom, FineTrace, TetMesh};
use crate::operators::{curl_harmonic_extend, laplace_solver, scott_zhang, SzInput};

/// Subtract the mass-weighted mean of each of `stride` interleaved components.
fn remove_mean(mesh: &TetMesh, x: &mut [f64], stride: usize) {
    let m = mesh.ops().mass_z.matvec(&vec![1.0; mesh.n_vertices()]);
    let total: f64 = m.iter().sum();
    for c in 0..stride {
        let mean = (0..mesh.n_vertices()).map(|i| m[i] * x[stride * i + c]).sum::<f64>() / total;
        for i in 0..mesh.n_vertices() {
            x[stride * i + c] -= mean;
        }
    }
}

/// Discrete regular decomposition on one mesh:
///
/// 1. `p` solves `(∇p, ∇q) = (v, ∇q)` for `q` vanishing on the trace;
/// 2. `w` solves `(∇w, ∇φ) = (curl v, curl φ)` componentwise, then passes
///    through Scott-Zhang;
/// 3. `R = v - ∇p - r_h w`.
///
/// With an empty trace the potentials carry a mean-zero gauge.
pub fn kernel_convex(mesh: &TetMesh, v: &[f64], trace: &FineTrace, claim: Claim) -> Result<HelmholtzSplit> {
    check_precondition(mesh, v, trace)?;
    kernel_unchecked(mesh, v, trace, claim)
}

pub(crate) fn kernel_unchecked(mesh: &TetMesh, v: &[f64], trace: &FineTrace, claim: Claim) -> Result<HelmholtzSplit> {
    let n = mesh.n_vertices();
    let ops = mesh.ops();
    let gauge = trace.is_empty();
    let fixed = if gauge {
        let mut f = vec![false; n];
        f[0] = true;
        f
    } else {
        trace.nodes.clone()
    };
    let solver = laplace_solver(mesh, &fixed)?;

    let mv = ops.mass_v.matvec(v);
    let bp = ops.grad.matvec_t(&mv);

    // (curl v, ∇λ_a × e_c) = e_c · Σ_K |K| (curl v)_K × ∇λ_a
    let curls = fem::curl_per_tet(mesh, v);
    let mut bw = vec![vec![0.0; n]; 3];
    for k in 0..mesh.n_tets() {
        let (g, vol) = geom::barycentric_gradients(&mesh.tet_points(k));
        for (a, &node) in mesh.tets[k].iter().enumerate() {
            let c = geom::cross(curls[k], g[a]);
            for comp in 0..3 {
                bw[comp][node] += vol * c[comp];
            }
        }
    }

    let zero = vec![0.0; n];
    let mut sols = solver.solve_many(&[bp, bw[0].clone(), bw[1].clone(), bw[2].clone()], &vec![zero; 4]);
    let mut p = sols.remove(0);
    let mut w: Vec<f64> = (0..3 * n).map(|i| sols[i % 3][i / 3]).collect();
    if gauge {
        remove_mean(mesh, &mut p, 1);
        remove_mean(mesh, &mut w, 3);
    }
    fem::zero_nodes(&mut p, &trace.nodes);
    fem::zero_nodes3(&mut w, &trace.nodes);
    let w = scott_zhang(mesh, SzInput::Nodal(&w), trace);

    let mut split = HelmholtzSplit { p, w, r: vec![], route: Route::Kernel, claim, loops: vec![] };
    split.close(mesh, v, trace);
    Ok(split)
}

/// Split `v` about a set of fine boundary faces `faces` whose rim carries
/// no moments of `v`: the curl-harmonic extension `u` of the trace of `v`
/// on the faces is decomposed with trace `(complement faces) ∪ Γ`, and
/// `v - u` with trace `faces ∪ Γ`. Both potentials vanish on the rim.
pub fn split_about_face(
    mesh: &TetMesh,
    v: &[f64],
    faces: &[bool],
    gamma: &FineTrace,
    claim: Claim,
) -> Result<HelmholtzSplit> {
    let closure = FineTrace::from_faces(mesh, faces.to_vec());
    let rest = FineTrace::complement_faces(mesh, faces);
    let rim = FineTrace {
        nodes: (0..mesh.n_vertices()).map(|i| closure.nodes[i] && rest.nodes[i]).collect(),
        edges: (0..mesh.n_edges()).map(|e| closure.edges[e] && rest.edges[e]).collect(),
        faces: vec![false; mesh.n_faces()],
    };
    check_precondition(mesh, v, &rim)?;

    let data: Vec<f64> = (0..mesh.n_edges()).map(|e| if closure.edges[e] { v[e] } else { 0.0 }).collect();
    let mut u = curl_harmonic_extend(mesh, &data)?;
    fem::zero_edges(&mut u, &rest.edges);
    let mut rest_v: Vec<f64> = v.iter().zip(&u).map(|(a, b)| a - b).collect();
    fem::zero_edges(&mut rest_v, &closure.edges);
    fem::zero_edges(&mut rest_v, &gamma.edges);

    let t1 = rest.union(gamma);
    let t2 = closure.union(gamma);
    let s1 = kernel_unchecked(mesh, &fem::restrict_zero(FieldRef::Edge(&u), &t1), &t1, claim)?;
    let s2 = kernel_unchecked(mesh, &rest_v, &t2, claim)?;
    let mut out = HelmholtzSplit {
        p: s1.p.iter().zip(&s2.p).map(|(a, b)| a + b).collect(),
        w: s1.w.iter().zip(&s2.w).map(|(a, b)| a + b).collect(),
        r: vec![],
        route: Route::Loop,
        claim,
        loops: vec![],
    };
    out.close(mesh, v, &rim.union(gamma));
    Ok(out)
}
