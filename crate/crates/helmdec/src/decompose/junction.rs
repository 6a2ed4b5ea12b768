//! Unions of blocks meeting along one edge or at one vertex.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::kernel::split_about_face;
use super::{add_extended, decompose, submesh, Claim, HelmholtzSplit, LoopRecord, Reference, Route};
use crate::error::{Error, Result};
use crate::fem::{self, FieldRef, Norm};
use crate::mesh::{geom, FineTrace, Submesh, TetMesh, TraceSet};
use crate::operators::{
    edge_interpolate_rh, epsilon_correction, junction_functionals, loop_constant_extension, loop_decompose,
    BoundaryLoop,
};

/// Parent trace restricted to one block's own entities, on its submesh.
fn block_trace(mesh: &TetMesh, sub: &Submesh, trace: &TraceSet, block: usize) -> (FineTrace, TraceSet) {
    let own: Vec<_> = trace.entities.iter().filter(|e| e.block == block).cloned().collect();
    let fine = sub.trace_from_parent(mesh, &FineTrace::of_entities(mesh, &own));
    let set = TraceSet::covering(&sub.mesh, &fine);
    (fine, set)
}

fn common_nodes(mesh: &TetMesh, blocks: &[usize]) -> Vec<bool> {
    let mut out = vec![true; mesh.n_vertices()];
    for &b in blocks {
        for (o, x) in out.iter_mut().zip(mesh.block_nodes(&[b])) {
            *o &= x;
        }
    }
    out
}

/// Two blocks sharing one coarse edge `E`.
///
/// When `E` lies in both block traces the blocks are split independently.
/// When it lies in one, the other block adds `E` to its trace. Otherwise the
/// first block is split, its potentials are kept at `E`, and the second block
/// decomposes the remainder with `E` added to its trace.
pub fn decompose_edge_junction(mesh: &TetMesh, v: &[f64], trace: &TraceSet) -> Result<HelmholtzSplit> {
    super::check_precondition(mesh, v, &trace.fine)?;
    if mesh.complex.blocks.len() != 2 {
        return Err(Error::Unsupported("edge junction needs two blocks".into()));
    }
    let en = common_nodes(mesh, &[0, 1]);
    let e_fine = FineTrace::from_nodes(mesh, en);
    let subs = [submesh(mesh, &[0])?, submesh(mesh, &[1])?];
    let traces: Vec<(FineTrace, TraceSet)> = (0..2).map(|b| block_trace(mesh, &subs[b], trace, b)).collect();
    let e_in: Vec<bool> = (0..2)
        .map(|b| {
            let loc = subs[b].trace_from_parent(mesh, &e_fine);
            loc.edges.iter().zip(&traces[b].0.edges).all(|(e, g)| !e || *g)
        })
        .collect();
    let faces_only = trace.edges().is_empty() && trace.vertices().is_empty();
    let claim = Claim {
        reference: if trace.n_components() <= 1 { Reference::CurlSemi } else { Reference::Curl },
        log_factor: !(faces_only && e_in[0] && e_in[1]),
    };

    let n = mesh.n_vertices();
    let mut p = vec![0.0; n];
    let mut w = vec![0.0; 3 * n];
    let mut loops = Vec::new();
    // the block whose trace takes `E` when it is not already there
    let (first, second) = if e_in[1] && !e_in[0] { (1, 0) } else { (0, 1) };
    if e_in[0] && e_in[1] {
        for b in 0..2 {
            let s = decompose(&subs[b].mesh, &subs[b].restrict_edges(v), &traces[b].1)?;
            add_extended(&subs[b], &s, &mut p, &mut w);
            loops.extend(s.loops);
        }
    } else {
        let (sa, sb) = (&subs[first], &subs[second]);
        let s1 = decompose(&sa.mesh, &sa.restrict_edges(v), &traces[first].1)?;
        add_extended(sa, &s1, &mut p, &mut w);
        loops.extend(s1.loops);
        let r1 = sa.extend_edges(&s1.r, mesh.n_edges());
        let gp = mesh.ops().grad.matvec(&p);
        let rw = edge_interpolate_rh(mesh, &w);
        let rest: Vec<f64> = (0..mesh.n_edges()).map(|e| v[e] - gp[e] - rw[e] - r1[e]).collect();
        let t2 = traces[second].0.union(&sb.trace_from_parent(mesh, &e_fine));
        let mut v2 = sb.restrict_edges(&rest);
        fem::zero_edges(&mut v2, &t2.edges);
        let s2 = decompose(&sb.mesh, &v2, &TraceSet::covering(&sb.mesh, &t2))?;
        add_extended(sb, &s2, &mut p, &mut w);
        loops.extend(s2.loops);
    }
    let mut out = HelmholtzSplit { p, w, r: vec![], route: Route::EdgeJunction, claim, loops };
    out.close(mesh, v, &trace.fine);
    Ok(out)
}

/// Functional values at the junction vertex and the tolerance they were
/// tested against.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViolationReport {
    pub functionals: Vec<f64>,
    pub tol: f64,
}

#[derive(Clone, Debug)]
pub enum VertexJunctionOutcome {
    Split(HelmholtzSplit),
    Refused(ViolationReport),
}

/// How one block of a vertex junction is treated.
#[derive(Debug)]
enum BlockRoute {
    /// The junction vertex is in the block trace.
    Traced,
    /// Loop construction about a face through the junction vertex.
    Loop(LoopPlan),
}

#[derive(Debug)]
struct LoopPlan {
    faces: Vec<bool>,
    lp: BoundaryLoop,
    /// Loop edges of the reference side `E`.
    e: Vec<usize>,
    /// Loop edges of the two sides next to `E` when `E` is in the trace.
    eps: Option<(Vec<usize>, Vec<usize>)>,
    /// Loop edges per coarse side.
    groups: Vec<Vec<usize>>,
    free: bool,
}

#[derive(Debug)]
struct BlockPlan {
    sub: Arc<Submesh>,
    fine: FineTrace,
    set: TraceSet,
    v0: usize,
    route: BlockRoute,
}

#[derive(Debug)]
struct VertexPlan {
    v0: usize,
    blocks: Vec<BlockPlan>,
}

/// Pick the face `F ∋ v₀`: first one whose rim meets the trace in exactly
/// one side `E` (and nowhere else), then one whose closure avoids the trace.
fn plan_loop(sub: &Submesh, gamma: &FineTrace, v0: usize) -> Result<LoopPlan> {
    let m = &sub.mesh;
    let x0 = m.vertices[v0];
    let tol = 1e-9;
    let mut fallback = None;
    for f in m.complex.boundary_faces().iter().filter(|f| f.contains(x0)) {
        let ft = FineTrace::of_entity(m, f);
        if ft.faces.iter().zip(&gamma.faces).any(|(a, b)| *a && *b) {
            continue;
        }
        let lp = BoundaryLoop::of_faces(m, &ft.faces, Some(v0))?;
        let sides = f.sides();
        let mut groups = vec![Vec::new(); sides.len()];
        for (i, &e) in lp.edges.iter().enumerate() {
            let [a, b] = m.edges[e];
            let mid = geom::scale(geom::add(m.vertices[a], m.vertices[b]), 0.5);
            let s = (0..sides.len())
                .min_by(|&s, &t| {
                    let d = |k: usize| geom::segment_distance(mid, sides[k].0, sides[k].1);
                    d(s).partial_cmp(&d(t)).unwrap()
                })
                .unwrap();
            groups[s].push(i);
        }
        let traced: Vec<usize> = (0..sides.len())
            .filter(|&s| !groups[s].is_empty() && groups[s].iter().all(|&i| gamma.edges[lp.edges[i]]))
            .collect();
        let touched = ft.nodes.iter().zip(&gamma.nodes).filter(|(a, b)| **a && **b).count();
        let through_v0 = |s: usize| geom::segment_distance(x0, sides[s].0, sides[s].1) <= tol;
        if traced.len() == 1 && !through_v0(traced[0]) {
            let s = traced[0];
            let side_nodes = groups[s].len() + 1;
            if touched == side_nodes {
                let k = sides.len();
                let e1 = groups[(s + k - 1) % k].clone();
                let e2 = groups[(s + 1) % k].clone();
                return Ok(LoopPlan {
                    faces: ft.faces,
                    lp,
                    e: groups[s].clone(),
                    eps: Some((e1, e2)),
                    groups,
                    free: gamma.is_empty(),
                });
            }
        }
        if touched == 0 && fallback.is_none() {
            let s = (0..sides.len()).find(|&s| !through_v0(s)).expect("a side avoids the vertex");
            fallback = Some(LoopPlan { faces: ft.faces, lp, e: groups[s].clone(), eps: None, groups, free: gamma.is_empty() });
        }
    }
    fallback.ok_or_else(|| Error::Unsupported("no face through the junction vertex fits the trace".into()))
}

fn vertex_plan(mesh: &TetMesh, trace: &TraceSet) -> Result<Arc<VertexPlan>> {
    let mut h = DefaultHasher::new();
    trace.fine.nodes.hash(&mut h);
    trace.fine.edges.hash(&mut h);
    trace.fine.faces.hash(&mut h);
    mesh.cached(&format!("vertex-plan:{:016x}", h.finish()), || {
        let all: Vec<usize> = (0..mesh.complex.blocks.len()).collect();
        let v0 = common_nodes(mesh, &all)
            .iter()
            .position(|x| *x)
            .ok_or_else(|| Error::Unsupported("blocks share no vertex".into()))?;
        let mut blocks = Vec::new();
        for b in all {
            let sub = submesh(mesh, &[b])?;
            let (fine, set) = block_trace(mesh, &sub, trace, b);
            let l0 = sub.vinv[v0].expect("junction vertex in block");
            let route = if fine.nodes[l0] { BlockRoute::Traced } else { BlockRoute::Loop(plan_loop(&sub, &fine, l0)?) };
            blocks.push(BlockPlan { sub, fine, set, v0: l0, route });
        }
        Ok(VertexPlan { v0, blocks })
    })
}

/// Potential value the loop construction assigns to the junction vertex.
fn vertex_value(plan: &LoopPlan, v: &[f64]) -> Result<f64> {
    Ok(loop_decompose(v, &plan.lp, None, Some(&plan.e))?.phi[0])
}

/// `(φ̃, C̃)` on the block loop: the loop-constant field with rate `C + ε`
/// and the potential of the remaining loop moments, `φ̃(v₀) = c`.
fn loop_part(b: &BlockPlan, plan: &LoopPlan, v: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64, LoopRecord)> {
    let m = &b.sub.mesh;
    let lp = &plan.lp;
    let dec = loop_decompose(v, lp, None, Some(&plan.e))?;
    let mut rate = vec![dec.c; lp.len()];
    if let Some((e1, e2)) = &plan.eps {
        let eps = epsilon_correction(lp, &plan.e, e1, e2, dec.c)?;
        rate.iter_mut().zip(&eps).for_each(|(r, e)| *r += e);
    }
    let mut pinned = b.fine.nodes.clone();
    pinned[b.v0] = true;
    let active = vec![true; lp.len()];
    let groups: Vec<Vec<usize>> = plan.groups.iter().filter(|g| !g.is_empty()).cloned().collect();
    let ct = loop_constant_extension(m, lp, &rate, &active, &pinned, Some(&groups))?;
    let lam = lp.moments(v);
    let lam_c = lp.moments(&edge_interpolate_rh(m, &ct));
    let mut phi = vec![0.0; m.n_vertices()];
    let mut acc = dec.phi[0];
    for i in 0..lp.len() {
        phi[lp.nodes[i]] = acc;
        acc += lam[i] - lam_c[i];
    }
    fem::zero_nodes(&mut phi, &b.fine.nodes);
    let record = LoopRecord { c: dec.c, flux_over_length: lp.flux(m, v) / lp.length };
    Ok((phi, ct, dec.phi[0], record))
}

fn loop_split(b: &BlockPlan, plan: &LoopPlan, v: &[f64], claim: Claim) -> Result<(HelmholtzSplit, f64)> {
    let m = &b.sub.mesh;
    let (phi, ct, c, record) = loop_part(b, plan, v)?;
    let gp = m.ops().grad.matvec(&phi);
    let rc = edge_interpolate_rh(m, &ct);
    let mut vh: Vec<f64> = (0..m.n_edges()).map(|e| v[e] - gp[e] - rc[e]).collect();
    for &e in &plan.lp.edges {
        vh[e] = 0.0;
    }
    fem::zero_edges(&mut vh, &b.fine.edges);
    let s = split_about_face(m, &vh, &plan.faces, &b.fine, claim)?;
    let mut out = HelmholtzSplit {
        p: phi.iter().zip(&s.p).map(|(a, b)| a + b).collect(),
        w: ct.iter().zip(&s.w).map(|(a, b)| a + b).collect(),
        r: vec![],
        route: Route::VertexJunction,
        claim,
        loops: s.loops.into_iter().chain([record]).collect(),
    };
    out.close(m, v, &b.fine);
    Ok((out, c))
}

fn functionals_of(plan: &VertexPlan, v: &[f64]) -> Result<Vec<f64>> {
    let mut vals = Vec::new();
    for b in &plan.blocks {
        match &b.route {
            BlockRoute::Traced => vals.push(0.0),
            BlockRoute::Loop(lp) if !lp.free => vals.push(vertex_value(lp, &b.sub.restrict_edges(v))?),
            BlockRoute::Loop(_) => {}
        }
    }
    Ok(junction_functionals(&vals))
}

/// Compatibility functionals `F_i(v)` of a vertex junction.
pub fn vertex_junction_functionals(mesh: &TetMesh, v: &[f64], trace: &TraceSet) -> Result<Vec<f64>> {
    functionals_of(&*vertex_plan(mesh, trace)?, v)
}

/// Per loop-type block, the first fine loop edge leaving the junction vertex
/// (parent edge ids, block order).
pub fn vertex_junction_probe_edges(mesh: &TetMesh, trace: &TraceSet) -> Result<Vec<usize>> {
    let plan = vertex_plan(mesh, trace)?;
    Ok(plan
        .blocks
        .iter()
        .filter_map(|b| match &b.route {
            BlockRoute::Loop(lp) if !lp.free => Some(b.sub.emap[lp.lp.edges[0]]),
            _ => None,
        })
        .collect())
}

/// Least-norm change of the probe edge moments that zeroes every
/// compatibility functional.
pub fn project_compatible(mesh: &TetMesh, v: &[f64], trace: &TraceSet) -> Result<Vec<f64>> {
    let plan = vertex_plan(mesh, trace)?;
    let probes = vertex_junction_probe_edges(mesh, trace)?;
    let f0 = functionals_of(&plan, v)?;
    if f0.is_empty() || probes.is_empty() {
        return Ok(v.to_vec());
    }
    let mut a = DMatrix::<f64>::zeros(f0.len(), probes.len());
    for (j, &e) in probes.iter().enumerate() {
        let mut unit = vec![0.0; mesh.n_edges()];
        unit[e] = 1.0;
        for (i, f) in functionals_of(&plan, &unit)?.into_iter().enumerate() {
            a[(i, j)] = f;
        }
    }
    let rhs = -DVector::from_vec(f0);
    let svd = a.svd(true, true);
    let delta = svd.solve(&rhs, 1e-12).map_err(|e| Error::Solver(e.to_string()))?;
    let mut out = v.to_vec();
    for (j, &e) in probes.iter().enumerate() {
        out[e] += delta[j];
    }
    Ok(out)
}

/// Blocks sharing a single vertex `v₀`. Each block is split on its own; the
/// potentials must agree at `v₀`, which holds when the compatibility
/// functionals vanish (to `1e-10 ‖v‖_curl`). Otherwise the split is refused.
pub fn decompose_vertex_junction(mesh: &TetMesh, v: &[f64], trace: &TraceSet) -> Result<VertexJunctionOutcome> {
    super::check_precondition(mesh, v, &trace.fine)?;
    let plan = vertex_plan(mesh, trace)?;
    let curl = fem::norm(mesh, FieldRef::Edge(v), Norm::Curl)?;
    let tol = 1e-10 * curl;
    let functionals = functionals_of(&plan, v)?;
    if functionals.iter().any(|f| f.abs() > tol) {
        return Ok(VertexJunctionOutcome::Refused(ViolationReport { functionals, tol }));
    }

    let corner = plan.blocks.iter().all(|b| matches!(b.route, BlockRoute::Traced));
    let mut claim = if corner {
        Claim::SEMI_NO_LOG
    } else {
        Claim {
            reference: if plan.blocks.iter().all(|b| b.set.n_components() <= 1) {
                Reference::CurlSemi
            } else {
                Reference::Curl
            },
            log_factor: true,
        }
    };
    let mut parts = Vec::new();
    for b in &plan.blocks {
        let vb = b.sub.restrict_edges(v);
        match &b.route {
            BlockRoute::Traced => {
                let s = decompose(&b.sub.mesh, &vb, &b.set)?;
                claim = claim.weaker(s.claim);
                parts.push((s, Some(0.0)));
            }
            BlockRoute::Loop(lp) => {
                let (s, c) = loop_split(b, lp, &vb, claim)?;
                parts.push((s, (!lp.free).then_some(c)));
            }
        }
    }
    let common = parts.iter().find_map(|(_, c)| *c).unwrap_or_else(|| parts[0].0.p[plan.blocks[0].v0]);
    let n = mesh.n_vertices();
    let mut p = vec![0.0; n];
    let mut w = vec![0.0; 3 * n];
    let mut loops = Vec::new();
    for (b, (mut s, c)) in plan.blocks.iter().zip(parts) {
        loops.extend(s.loops.iter().cloned());
        if c.is_none() {
            let shift = common - s.p[b.v0];
            s.p.iter_mut().for_each(|x| *x += shift);
        }
        add_extended(&b.sub, &s, &mut p, &mut w);
        // the junction vertex is counted once per block
        p[plan.v0] -= s.p[b.v0];
        for c in 0..3 {
            w[3 * plan.v0 + c] -= s.w[3 * b.v0 + c];
        }
    }
    p[plan.v0] = common;
    let mut out = HelmholtzSplit { p, w, r: vec![], route: Route::VertexJunction, claim, loops };
    out.close(mesh, v, &trace.fine);
    Ok(VertexJunctionOutcome::Split(out))
}
