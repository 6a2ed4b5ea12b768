//! Routes for traces containing coarse edges: closed loops, single edges,
//! isolated-vertex face unions, faces plus an edge, and disjoint edges.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::kernel::{kernel_unchecked, split_about_face};
use super::{decompose, submesh, Claim, HelmholtzSplit, LoopRecord, Route};
use crate::error::{Error, Result};
use crate::fem;
use crate::mesh::{FineTrace, Geometry, Submesh, TetMesh, TraceSet};
use crate::operators::{
    edge_interpolate_rh, harmonic_extend, harmonic_extend_vec3, loop_constant_extension, loop_decompose,
    scott_zhang, BoundaryLoop, SzInput,
};

/// Fine face masks of the coarse boundary faces, in complex order.
fn coarse_faces(mesh: &TetMesh) -> Arc<Vec<Vec<bool>>> {
    mesh.cached("coarse-boundary-faces", || {
        Ok(mesh
            .complex
            .boundary_faces()
            .iter()
            .map(|e| FineTrace::of_entity(mesh, e).faces)
            .collect::<Vec<_>>())
    })
    .expect("infallible")
}

/// Candidate auxiliary face sets: single coarse boundary faces, then pairs
/// of them sharing a coarse edge.
fn candidates(mesh: &TetMesh) -> Vec<Vec<bool>> {
    let faces = coarse_faces(mesh);
    let mut out: Vec<Vec<bool>> = faces.iter().cloned().collect();
    let closures: Vec<FineTrace> = faces.iter().map(|f| FineTrace::from_faces(mesh, f.clone())).collect();
    for i in 0..faces.len() {
        for j in i + 1..faces.len() {
            let shared = closures[i].edges.iter().zip(&closures[j].edges).filter(|(a, b)| **a && **b).count();
            if shared > 0 {
                out.push(faces[i].iter().zip(&faces[j]).map(|(a, b)| *a || *b).collect());
            }
        }
    }
    out
}

/// An auxiliary face set `Γ̂` whose rim loop starts where the free arc
/// `E_c` begins; `active` flags the free arc.
#[derive(Debug)]
struct EdgePlan {
    faces: Vec<bool>,
    lp: BoundaryLoop,
    active: Vec<bool>,
}

fn mask_hash<T: Hash>(parts: &[&T]) -> u64 {
    let mut h = DefaultHasher::new();
    for p in parts {
        p.hash(&mut h);
    }
    h.finish()
}

/// Check the admissibility conditions of a candidate: its rim is one loop
/// whose trace edges form a single nonempty arc containing `required`, the
/// free arc is nonempty with no interior trace node, no candidate face is
/// in the trace, no closure node is `forbidden`, and the loop-constant
/// extension is feasible.
fn plan_candidate(
    mesh: &TetMesh,
    faces: &[bool],
    gamma: &FineTrace,
    required: &[bool],
    forbidden: &[bool],
) -> Option<EdgePlan> {
    if faces.iter().zip(&gamma.faces).any(|(a, b)| *a && *b) {
        return None;
    }
    let closure = FineTrace::from_faces(mesh, faces.to_vec());
    if closure.nodes.iter().zip(forbidden).any(|(a, b)| *a && *b) {
        return None;
    }
    let lp = BoundaryLoop::of_faces(mesh, faces, None).ok()?;
    let n = lp.len();
    let in_g: Vec<bool> = lp.edges.iter().map(|&e| gamma.edges[e]).collect();
    if in_g.iter().all(|x| !x) || in_g.iter().all(|x| *x) {
        return None;
    }
    let starts: Vec<usize> = (0..n).filter(|&i| !in_g[i] && in_g[(i + n - 1) % n]).collect();
    if starts.len() != 1 {
        return None;
    }
    let mut on_loop = vec![false; mesh.n_edges()];
    for &e in &lp.edges {
        on_loop[e] = true;
    }
    if required.iter().zip(&on_loop).any(|(r, l)| *r && !l) {
        return None;
    }
    let lp = BoundaryLoop::of_faces(mesh, faces, Some(lp.nodes[starts[0]])).ok()?;
    let active: Vec<bool> = lp.edges.iter().map(|&e| !gamma.edges[e]).collect();
    // interior nodes of the free arc
    for i in 1..n {
        if active[i] && active[i - 1] && gamma.nodes[lp.nodes[i]] {
            return None;
        }
    }
    let rate = vec![1.0; n];
    loop_constant_extension(mesh, &lp, &rate, &active, &gamma.nodes, None).ok()?;
    Some(EdgePlan { faces: faces.to_vec(), lp, active })
}

/// First admissible candidate, cached per trace/requirement pair.
fn find_plan(mesh: &TetMesh, gamma: &FineTrace, required: &[bool], forbidden: &[bool]) -> Result<Arc<EdgePlan>> {
    let key = format!("edge-plan:{:016x}", mask_hash(&[&gamma.edges, &gamma.nodes, &required.to_vec(), &forbidden.to_vec()]));
    mesh.cached(&key, || {
        candidates(mesh)
            .iter()
            .find_map(|f| plan_candidate(mesh, f, gamma, required, forbidden))
            .ok_or_else(|| Error::Unsupported("no admissible auxiliary face set for the trace edges".into()))
    })
}

/// Loop potential and loop-constant field of one plan.
struct Correction {
    phi: Vec<f64>,
    c: Vec<f64>,
    record: LoopRecord,
}

fn correction(mesh: &TetMesh, v: &[f64], plan: &EdgePlan, gamma: &FineTrace) -> Result<Correction> {
    let lp = &plan.lp;
    let dec = loop_decompose(v, lp, Some(&plan.active), None)?;
    let mut phi = vec![0.0; mesh.n_vertices()];
    for (i, &node) in lp.nodes.iter().enumerate() {
        if !gamma.nodes[node] {
            phi[node] = dec.phi[i];
        }
    }
    let rate = vec![dec.c; lp.len()];
    let c = loop_constant_extension(mesh, lp, &rate, &plan.active, &gamma.nodes, None)?;
    let l_active: f64 = (0..lp.len()).filter(|&i| plan.active[i]).map(|i| lp.edge_length(i)).sum();
    let record = LoopRecord { c: dec.c, flux_over_length: lp.flux(mesh, v) / l_active };
    Ok(Correction { phi, c, record })
}

/// Subtract the loop corrections, split the remainder about the union of the
/// plans' face sets and add the corrections back.
fn finish(
    mesh: &TetMesh,
    v: &[f64],
    plans: &[Arc<EdgePlan>],
    gamma: &FineTrace,
    claim: Claim,
    route: Route,
) -> Result<HelmholtzSplit> {
    let mut phi = vec![0.0; mesh.n_vertices()];
    let mut ct = vec![0.0; 3 * mesh.n_vertices()];
    let mut loops = Vec::new();
    let mut faces = vec![false; mesh.n_faces()];
    let mut loop_edges = vec![false; mesh.n_edges()];
    for plan in plans {
        let c = correction(mesh, v, plan, gamma)?;
        phi.iter_mut().zip(&c.phi).for_each(|(a, b)| *a += b);
        ct.iter_mut().zip(&c.c).for_each(|(a, b)| *a += b);
        loops.push(c.record);
        faces.iter_mut().zip(&plan.faces).for_each(|(a, b)| *a |= *b);
        for &e in &plan.lp.edges {
            loop_edges[e] = true;
        }
    }
    let gp = mesh.ops().grad.matvec(&phi);
    let rc = edge_interpolate_rh(mesh, &ct);
    let mut vh: Vec<f64> = (0..mesh.n_edges()).map(|e| v[e] - gp[e] - rc[e]).collect();
    fem::zero_edges(&mut vh, &loop_edges);
    fem::zero_edges(&mut vh, &gamma.edges);
    let s = split_about_face(mesh, &vh, &faces, gamma, claim)?;
    let mut out = HelmholtzSplit {
        p: phi.iter().zip(&s.p).map(|(a, b)| a + b).collect(),
        w: ct.iter().zip(&s.w).map(|(a, b)| a + b).collect(),
        r: vec![],
        route,
        claim,
        loops,
    };
    out.close(mesh, v, gamma);
    Ok(out)
}

/// The edge route on an arbitrary trace: `required` fine edges must lie on
/// the trace arc of the auxiliary loop.
pub(crate) fn edge_route(
    mesh: &TetMesh,
    v: &[f64],
    gamma: &FineTrace,
    required: &[bool],
    claim: Claim,
    route: Route,
) -> Result<HelmholtzSplit> {
    let plan = find_plan(mesh, gamma, required, &vec![false; mesh.n_vertices()])?;
    finish(mesh, v, &[plan], gamma, claim, route)
}

/// Face set (single coarse face or pair) whose rim is exactly the trace.
pub(crate) fn face_bounded_by(mesh: &TetMesh, gamma: &FineTrace) -> Option<Vec<bool>> {
    let target: Vec<usize> = (0..mesh.n_edges()).filter(|&e| gamma.edges[e]).collect();
    candidates(mesh).into_iter().find(|f| {
        BoundaryLoop::of_faces(mesh, f, None)
            .map(|lp| {
                let mut e = lp.edges.clone();
                e.sort_unstable();
                e == target
            })
            .unwrap_or(false)
    })
}

/// Trace is the closed rim of `faces`: split about the faces directly.
pub fn decompose_loop(mesh: &TetMesh, v: &[f64], faces: &[bool], trace: &TraceSet) -> Result<HelmholtzSplit> {
    super::check_precondition(mesh, v, &trace.fine)?;
    let mut s = split_about_face(mesh, v, faces, &trace.fine, Claim::SEMI_LOG)?;
    s.route = Route::Loop;
    Ok(s)
}

/// Trace is a connected union of coarse edges.
pub fn decompose_edge(mesh: &TetMesh, v: &[f64], trace: &TraceSet) -> Result<HelmholtzSplit> {
    super::check_precondition(mesh, v, &trace.fine)?;
    edge_route(mesh, v, &trace.fine, &trace.fine.edges, Claim::SEMI_LOG, Route::Edge)
}

/// Trace is a union of faces pinched at isolated vertices.
pub fn decompose_isolated_vertex_union(mesh: &TetMesh, v: &[f64], trace: &TraceSet) -> Result<HelmholtzSplit> {
    super::check_precondition(mesh, v, &trace.fine)?;
    let none = vec![false; mesh.n_edges()];
    edge_route(mesh, v, &trace.fine, &none, Claim::SEMI_LOG, Route::IsolatedVertexUnion)
}

fn edge_entity_mask(mesh: &TetMesh, trace: &TraceSet) -> Vec<bool> {
    let edges: Vec<_> = trace.edges().into_iter().cloned().collect();
    FineTrace::of_entities(mesh, &edges).edges
}

/// The catalog extended complex of a geometry, meshed at the same spacing,
/// with the geometry as block-0 submesh.
struct Extended {
    big: TetMesh,
    sub: Submesh,
}

fn extended(mesh: &TetMesh) -> Result<Arc<Extended>> {
    let g = mesh.geometry.ok_or_else(|| Error::Unsupported("extended domain needs a catalog geometry".into()))?;
    mesh.cached("extended-domain", || {
        let complex = Geometry::get(g)
            .extended
            .ok_or_else(|| Error::Unsupported(format!("{g} has no extended domain")))?;
        let big = TetMesh::build(Arc::new(complex), None, mesh.h)?;
        let sub = Submesh::of_blocks(&big, &[0]);
        if sub.mesh.vertices != mesh.vertices || sub.mesh.edges != mesh.edges {
            return Err(Error::Unsupported("extended domain does not embed the mesh".into()));
        }
        Ok(Extended { big, sub })
    })
}

/// Faces plus edges. When an auxiliary face set exists on the mesh the edge
/// route runs directly; otherwise the field is zero-extended to the
/// extended domain, decomposed there with the edges as trace, restricted,
/// and corrected by discrete harmonic extensions of the trace values.
pub fn decompose_face_plus_edge(mesh: &TetMesh, v: &[f64], trace: &TraceSet) -> Result<HelmholtzSplit> {
    super::check_precondition(mesh, v, &trace.fine)?;
    let required = edge_entity_mask(mesh, trace);
    let claim = if trace.n_components() == 1 { Claim::SEMI_LOG } else { Claim::FULL_LOG };
    match edge_route(mesh, v, &trace.fine, &required, claim, Route::FacePlusEdge) {
        Err(Error::Unsupported(msg)) if mesh.geometry.map(|g| Geometry::get(g).extended.is_some()) != Some(true) => {
            Err(Error::Unsupported(msg))
        }
        Err(Error::Unsupported(_)) => extended_route(mesh, v, trace),
        other => other,
    }
}

fn extended_route(mesh: &TetMesh, v: &[f64], trace: &TraceSet) -> Result<HelmholtzSplit> {
    let ext = extended(mesh)?;
    let (big, sub) = (&ext.big, &ext.sub);
    let names: Vec<String> = trace.edges().iter().map(|e| mesh.complex.name_in(&e.name, &big.complex)).collect();
    let tb = TraceSet::tag(big, &names)?;
    let vb = sub.extend_edges(v, big.n_edges());
    let sb = edge_route(big, &vb, &tb.fine, &tb.fine.edges, Claim::FULL_LOG, Route::Edge)?;
    let pg = sub.restrict_nodes(&sb.p);
    let wg = sub.restrict_vec3(&sb.w);
    let fixed = &mesh.boundary_node;
    let on_g = &trace.fine.nodes;
    let dp: Vec<f64> = (0..mesh.n_vertices()).map(|i| if on_g[i] { pg[i] } else { 0.0 }).collect();
    let dw: Vec<f64> = (0..3 * mesh.n_vertices()).map(|i| if on_g[i / 3] { wg[i] } else { 0.0 }).collect();
    let hp = harmonic_extend(mesh, fixed, &dp)?;
    let hw = harmonic_extend_vec3(mesh, fixed, &dw)?;
    let p: Vec<f64> = pg.iter().zip(&hp).map(|(a, b)| a - b).collect();
    let w: Vec<f64> = wg.iter().zip(&hw).map(|(a, b)| a - b).collect();
    let w = scott_zhang(mesh, SzInput::Nodal(&w), &trace.fine);
    let mut out = HelmholtzSplit { p, w, r: vec![], route: Route::FacePlusEdgeExtended, claim: Claim::FULL_LOG, loops: sb.loops };
    out.close(mesh, v, &trace.fine);
    Ok(out)
}

/// Pairwise disjoint edges (or connected edge unions).
pub fn decompose_disjoint_edges(mesh: &TetMesh, v: &[f64], trace: &TraceSet) -> Result<HelmholtzSplit> {
    super::check_precondition(mesh, v, &trace.fine)?;
    if !trace.faces().is_empty() || !trace.vertices().is_empty() {
        return Err(Error::Unsupported("disjoint-edge route takes edges only".into()));
    }
    if trace.n_components() == 1 {
        return decompose_edge(mesh, v, trace);
    }
    let split = mesh
        .geometry
        .and_then(|g| Geometry::get(g).spec_for_entities(&trace.names()).map(|s| s.split_edges))
        .unwrap_or(false);
    if split {
        return split_edges_route(mesh, v, trace);
    }
    let comps: Vec<FineTrace> = trace
        .components
        .iter()
        .map(|c| FineTrace::of_entities(mesh, &c.iter().map(|&i| trace.entities[i].clone()).collect::<Vec<_>>()))
        .collect();
    let mut plans: Vec<Arc<EdgePlan>> = Vec::new();
    let mut taken = vec![false; mesh.n_vertices()];
    for (l, comp) in comps.iter().enumerate() {
        let mut forbidden = taken.clone();
        for (j, other) in comps.iter().enumerate() {
            if j != l {
                for (f, o) in forbidden.iter_mut().zip(&other.nodes) {
                    *f |= *o;
                }
            }
        }
        let plan = find_plan(mesh, &trace.fine, &comp.edges, &forbidden)?;
        // closure nodes and their neighbours are off limits for later plans
        let closure = FineTrace::from_faces(mesh, plan.faces.clone());
        for (e, [a, b]) in mesh.edges.iter().enumerate() {
            if closure.nodes[*a] || closure.nodes[*b] {
                taken[*a] = true;
                taken[*b] = true;
            }
            let _ = e;
        }
        plans.push(plan);
    }
    finish(mesh, v, &plans, &trace.fine, Claim::FULL_LOG, Route::DisjointEdges)
}

fn blocks_mask(mesh: &TetMesh, blocks: &[usize], tets_of: impl Fn(usize) -> Vec<usize>, n: usize) -> Vec<bool> {
    (0..n).map(|i| tets_of(i).iter().any(|&t| blocks.contains(&mesh.block_of_tet[t]))).collect()
}

/// Disjoint edges in separate subdomains: per-edge decompositions on the
/// edge subdomains, harmonic extension of their potentials into the central
/// subdomain, and a kernel on the central subdomain for the remainder.
fn split_edges_route(mesh: &TetMesh, v: &[f64], trace: &TraceSet) -> Result<HelmholtzSplit> {
    let g = Geometry::get(mesh.geometry.expect("catalog geometry"));
    let central = g.central_blocks.clone().ok_or_else(|| Error::Unsupported("no central subdomain".into()))?;
    let outer: Vec<usize> = (0..mesh.complex.blocks.len()).filter(|b| !central.contains(b)).collect();
    let n = mesh.n_vertices();
    let mut pt = vec![0.0; n];
    let mut wt = vec![0.0; 3 * n];
    let mut rt = vec![0.0; mesh.n_edges()];
    let mut loops = Vec::new();
    for &b in &outer {
        let sub = submesh(mesh, &[b])?;
        let local = sub.trace_from_parent(mesh, &trace.fine);
        let tl = TraceSet::covering(&sub.mesh, &local);
        let s = decompose(&sub.mesh, &sub.restrict_edges(v), &tl)?;
        for (l, &gv) in sub.vmap.iter().enumerate() {
            pt[gv] = s.p[l];
            wt[3 * gv..3 * gv + 3].copy_from_slice(&s.w[3 * l..3 * l + 3]);
        }
        for (l, &ge) in sub.emap.iter().enumerate() {
            rt[ge] = s.r[l];
        }
        loops.extend(s.loops);
    }
    let sub0 = submesh(mesh, &central)?;
    let in_outer = mesh.block_nodes(&outer);
    let iface_nodes: Vec<bool> = sub0.vmap.iter().map(|&gv| in_outer[gv]).collect();
    let iface_edges_parent = blocks_mask(mesh, &outer, |e| mesh.edge_tets[e].clone(), mesh.n_edges());
    let iface_faces_parent = blocks_mask(mesh, &outer, |f| mesh.face_tets[f].clone(), mesh.n_faces());
    let iface = sub0.trace_from_parent(
        mesh,
        &FineTrace { nodes: in_outer.clone(), edges: iface_edges_parent, faces: iface_faces_parent },
    );
    let data_p: Vec<f64> = sub0.restrict_nodes(&pt);
    let data_w: Vec<f64> = sub0.restrict_vec3(&wt);
    let hp = harmonic_extend(&sub0.mesh, &iface_nodes, &data_p)?;
    let hw = harmonic_extend_vec3(&sub0.mesh, &iface_nodes, &data_w)?;
    for (l, &gv) in sub0.vmap.iter().enumerate() {
        if !iface_nodes[l] {
            pt[gv] = hp[l];
            wt[3 * gv..3 * gv + 3].copy_from_slice(&hw[3 * l..3 * l + 3]);
        }
    }
    let gp = mesh.ops().grad.matvec(&pt);
    let rw = edge_interpolate_rh(mesh, &wt);
    let rest: Vec<f64> = (0..mesh.n_edges()).map(|e| v[e] - gp[e] - rw[e] - rt[e]).collect();
    let mut v0 = sub0.restrict_edges(&rest);
    let t0 = iface.union(&sub0.trace_from_parent(mesh, &trace.fine));
    fem::zero_edges(&mut v0, &t0.edges);
    let s0 = kernel_unchecked(&sub0.mesh, &v0, &t0, Claim::FULL_LOG)?;
    for (l, &gv) in sub0.vmap.iter().enumerate() {
        pt[gv] += s0.p[l];
        for c in 0..3 {
            wt[3 * gv + c] += s0.w[3 * l + c];
        }
    }
    let mut out = HelmholtzSplit { p: pt, w: wt, r: vec![], route: Route::DisjointEdgesSplit, claim: Claim::FULL_LOG, loops };
    out.close(mesh, v, &trace.fine);
    Ok(out)
}
