//! Face traces on a non-convex union of convex blocks: decompose on the
//! first block group, carry the potentials across the interface faces by
//! cut-off and discrete harmonic extension, then decompose the remainder on
//! each further block with the interface face added to its trace.

use super::kernel::kernel_unchecked;
use super::{add_extended, submesh, Claim, HelmholtzSplit, Route};
use crate::error::{Error, Result};
use crate::fem;
use crate::mesh::{FineTrace, Geometry, TetMesh, TraceSet};
use crate::operators::{edge_interpolate_rh, face_cutoff, harmonic_extend, harmonic_extend_vec3};

pub fn decompose_face_trace(mesh: &TetMesh, v: &[f64], trace: &TraceSet) -> Result<HelmholtzSplit> {
    super::check_precondition(mesh, v, &trace.fine)?;
    let (first, rest) = mesh
        .geometry
        .and_then(|g| Geometry::get(g).sigma)
        .ok_or_else(|| Error::Unsupported("face-trace route needs a block ordering".into()))?;
    let claim = Claim::SEMI_LOG;
    let n = mesh.n_vertices();

    let sub1 = submesh(mesh, &first)?;
    let t1 = sub1.trace_from_parent(mesh, &trace.fine);
    let mut v1 = sub1.restrict_edges(v);
    fem::zero_edges(&mut v1, &t1.edges);
    let s1 = kernel_unchecked(&sub1.mesh, &v1, &t1, claim)?;

    let in_first = mesh.block_nodes(&first);
    let mut pt = vec![0.0; n];
    let mut wt = vec![0.0; 3 * n];
    add_extended(&sub1, &s1, &mut pt, &mut wt);
    let rt = sub1.extend_edges(&s1.r, mesh.n_edges());

    let mut interfaces = Vec::new();
    for &k in &rest {
        let in_k = mesh.block_nodes(&[k]);
        let face = mesh
            .complex
            .interface_faces()
            .into_iter()
            .find(|e| first.contains(&e.block) && FineTrace::of_entity(mesh, e).nodes.iter().zip(&in_k).all(|(a, b)| !a || *b))
            .ok_or_else(|| Error::Unsupported(format!("block {k} shares no face with the first group")))?;
        let fbar = FineTrace::of_entity(mesh, &face);
        let theta = face_cutoff(mesh, &face)?;

        let sub = submesh(mesh, &[k])?;
        let fixed = sub.mesh.boundary_node.clone();
        let mut dp = vec![0.0; sub.mesh.n_vertices()];
        let mut dw = vec![0.0; 3 * sub.mesh.n_vertices()];
        for (l, &g) in sub.vmap.iter().enumerate() {
            if fbar.nodes[g] {
                dp[l] = pt[g];
                // cut-off product in the face interior plus the rim values
                let rim = if theta[g] == 0.0 { 1.0 } else { 0.0 };
                for c in 0..3 {
                    dw[3 * l + c] = (theta[g] + rim) * wt[3 * g + c];
                }
            }
        }
        let hp = harmonic_extend(&sub.mesh, &fixed, &dp)?;
        let hw = harmonic_extend_vec3(&sub.mesh, &fixed, &dw)?;
        for (l, &g) in sub.vmap.iter().enumerate() {
            if !in_first[g] {
                pt[g] = hp[l];
                wt[3 * g..3 * g + 3].copy_from_slice(&hw[3 * l..3 * l + 3]);
            }
        }
        interfaces.push((k, sub, fbar));
    }

    let gp = mesh.ops().grad.matvec(&pt);
    let rw = edge_interpolate_rh(mesh, &wt);
    let remainder: Vec<f64> = (0..mesh.n_edges()).map(|e| v[e] - gp[e] - rw[e] - rt[e]).collect();
    let mut p = pt.clone();
    let mut w = wt.clone();
    for (_, sub, fbar) in &interfaces {
        let tk = sub.trace_from_parent(mesh, &fbar.union(&trace.fine));
        let mut vk = sub.restrict_edges(&remainder);
        fem::zero_edges(&mut vk, &tk.edges);
        let sk = kernel_unchecked(&sub.mesh, &vk, &tk, claim)?;
        add_extended(sub, &sk, &mut p, &mut w);
    }
    let mut out = HelmholtzSplit { p, w, r: vec![], route: Route::FaceTrace, claim, loops: vec![] };
    out.close(mesh, v, &trace.fine);
    Ok(out)
}
