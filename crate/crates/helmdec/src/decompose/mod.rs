//! Trace-preserving splits `v = ∇p + r_h w + R` of edge fields.

mod edge;
mod face_trace;
mod junction;
mod kernel;
pub mod random;

use serde::Serialize;

pub use edge::{
    decompose_disjoint_edges, decompose_edge, decompose_face_plus_edge, decompose_isolated_vertex_union,
    decompose_loop,
};
pub use face_trace::decompose_face_trace;
pub use junction::{
    decompose_edge_junction, decompose_vertex_junction, project_compatible, vertex_junction_functionals,
    vertex_junction_probe_edges, VertexJunctionOutcome, ViolationReport,
};
pub use kernel::{kernel_convex, split_about_face};

use crate::error::{Error, Result};
use crate::fem::{self, FieldRef, Norm};
use crate::mesh::{FineTrace, Geometry, GeometryId, JunctionKind, Submesh, TetMesh, TraceSet};
use crate::operators::edge_interpolate_rh;
use crate::sparse::max_abs;

/// Which construction produced a split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Kernel,
    FaceTrace,
    Loop,
    Edge,
    IsolatedVertexUnion,
    FacePlusEdge,
    FacePlusEdgeExtended,
    DisjointEdges,
    DisjointEdgesSplit,
    EdgeJunction,
    VertexJunction,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::Kernel => "kernel",
            Route::FaceTrace => "face_trace",
            Route::Loop => "loop",
            Route::Edge => "edge",
            Route::IsolatedVertexUnion => "isolated_vertex_union",
            Route::FacePlusEdge => "face_plus_edge",
            Route::FacePlusEdgeExtended => "face_plus_edge_extended",
            Route::DisjointEdges => "disjoint_edges",
            Route::DisjointEdgesSplit => "disjoint_edges_split",
            Route::EdgeJunction => "edge_junction",
            Route::VertexJunction => "vertex_junction",
        }
    }
}

/// Right-hand side a stability bound is stated against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// `‖curl v‖₀`
    CurlSemi,
    /// `‖v‖_curl`
    Curl,
}

/// The stability bound a route asserts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Claim {
    pub reference: Reference,
    pub log_factor: bool,
}

impl Claim {
    pub const SEMI_NO_LOG: Claim = Claim { reference: Reference::CurlSemi, log_factor: false };
    pub const SEMI_LOG: Claim = Claim { reference: Reference::CurlSemi, log_factor: true };
    pub const FULL_NO_LOG: Claim = Claim { reference: Reference::Curl, log_factor: false };
    pub const FULL_LOG: Claim = Claim { reference: Reference::Curl, log_factor: true };

    pub fn id(&self) -> String {
        let r = match self.reference {
            Reference::CurlSemi => "semi",
            Reference::Curl => "full",
        };
        format!("{r}-{}", if self.log_factor { "log" } else { "nolog" })
    }

    /// The weaker of two claims (used when composing routes).
    pub fn weaker(self, other: Claim) -> Claim {
        Claim {
            reference: if self.reference == Reference::Curl || other.reference == Reference::Curl {
                Reference::Curl
            } else {
                Reference::CurlSemi
            },
            log_factor: self.log_factor || other.log_factor,
        }
    }
}

/// A loop decomposition performed during a split, with the face flux of
/// `curl v` divided by the loop length it is averaged over.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoopRecord {
    pub c: f64,
    pub flux_over_length: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HelmholtzSplit {
    pub p: Vec<f64>,
    pub w: Vec<f64>,
    pub r: Vec<f64>,
    pub route: Route,
    pub claim: Claim,
    pub loops: Vec<LoopRecord>,
}

/// Measured stability quotients; `None` where the denominator vanishes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Ratios {
    pub w_h1_over_curl_semi: Option<f64>,
    pub w_h1_over_curl: Option<f64>,
    pub r_scaled_over_curl_semi: Option<f64>,
    pub r_scaled_over_curl: Option<f64>,
    pub wp_over_l2: Option<f64>,
    pub wp_over_curl: Option<f64>,
    /// `‖w‖₁` against the route's claimed reference norm.
    pub claimed: Option<f64>,
}

fn quotient(a: f64, b: f64) -> Option<f64> {
    (b > 0.0 && b.is_finite()).then(|| a / b)
}

impl HelmholtzSplit {
    pub fn zero(mesh: &TetMesh, route: Route, claim: Claim) -> Self {
        HelmholtzSplit {
            p: vec![0.0; mesh.n_vertices()],
            w: vec![0.0; 3 * mesh.n_vertices()],
            r: vec![0.0; mesh.n_edges()],
            route,
            claim,
            loops: vec![],
        }
    }

    /// `max_e |λ_e(v) - λ_e(∇p) - λ_e(r_h w) - λ_e(R)|`, relative to
    /// `max_e |λ_e(v)|` (absolute when `v = 0`).
    pub fn identity_residual(&self, mesh: &TetMesh, v: &[f64]) -> f64 {
        let gp = mesh.ops().grad.matvec(&self.p);
        let rw = edge_interpolate_rh(mesh, &self.w);
        let res = (0..mesh.n_edges()).map(|e| (v[e] - gp[e] - rw[e] - self.r[e]).abs()).fold(0.0, f64::max);
        let scale = max_abs(v);
        if scale > 0.0 {
            res / scale
        } else {
            res
        }
    }

    /// Number of trace coefficients that are not exactly zero.
    pub fn trace_violations(&self, trace: &FineTrace) -> usize {
        let mut n = 0;
        for (i, on) in trace.nodes.iter().enumerate() {
            if *on {
                n += (self.p[i] != 0.0) as usize;
                n += self.w[3 * i..3 * i + 3].iter().filter(|x| **x != 0.0).count();
            }
        }
        n + trace.edges.iter().zip(&self.r).filter(|(on, r)| **on && **r != 0.0).count()
    }

    pub fn ratios(&self, mesh: &TetMesh, v: &[f64]) -> Ratios {
        let curl_semi = fem::curl_energy(mesh, v).max(0.0).sqrt();
        let l2 = fem::norm(mesh, FieldRef::Edge(v), Norm::L2).unwrap_or(0.0);
        let curl = (curl_semi * curl_semi + l2 * l2).sqrt();
        let w1 = fem::norm(mesh, FieldRef::NodalVector(&self.w), Norm::H1).unwrap_or(0.0);
        let w0 = fem::norm(mesh, FieldRef::NodalVector(&self.w), Norm::L2).unwrap_or(0.0);
        let p1 = fem::norm(mesh, FieldRef::Nodal(&self.p), Norm::H1).unwrap_or(0.0);
        let r0 = fem::norm(mesh, FieldRef::Edge(&self.r), Norm::L2).unwrap_or(0.0) / mesh.h;
        Ratios {
            w_h1_over_curl_semi: quotient(w1, curl_semi),
            w_h1_over_curl: quotient(w1, curl),
            r_scaled_over_curl_semi: quotient(r0, curl_semi),
            r_scaled_over_curl: quotient(r0, curl),
            wp_over_l2: quotient(w0 + p1, l2),
            wp_over_curl: quotient(w0 + p1, curl),
            claimed: match self.claim.reference {
                Reference::CurlSemi => quotient(w1, curl_semi),
                Reference::Curl => quotient(w1, curl),
            },
        }
    }

    /// Zero `p`, `w` on the trace nodes, then set `R = v - ∇p - r_h w`.
    pub(crate) fn close(&mut self, mesh: &TetMesh, v: &[f64], trace: &FineTrace) {
        fem::zero_nodes(&mut self.p, &trace.nodes);
        fem::zero_nodes3(&mut self.w, &trace.nodes);
        let gp = mesh.ops().grad.matvec(&self.p);
        let rw = edge_interpolate_rh(mesh, &self.w);
        self.r = (0..mesh.n_edges()).map(|e| v[e] - gp[e] - rw[e]).collect();
        fem::zero_edges(&mut self.r, &trace.edges);
    }
}

/// Block submesh of `mesh`, cached on the parent.
pub(crate) fn submesh(mesh: &TetMesh, blocks: &[usize]) -> Result<std::sync::Arc<Submesh>> {
    mesh.cached(&format!("submesh:{blocks:?}"), || Ok(Submesh::of_blocks(mesh, blocks)))
}

/// Extend a submesh split by zero into the parent vectors.
pub(crate) fn add_extended(sub: &Submesh, s: &HelmholtzSplit, p: &mut [f64], w: &mut [f64]) {
    for (l, &g) in sub.vmap.iter().enumerate() {
        p[g] += s.p[l];
        for c in 0..3 {
            w[3 * g + c] += s.w[3 * l + c];
        }
    }
}

/// First fine trace edge carrying a nonzero moment.
pub fn check_precondition(mesh: &TetMesh, v: &[f64], trace: &FineTrace) -> Result<()> {
    if v.len() != mesh.n_edges() {
        return Err(Error::Dimension { expected: mesh.n_edges(), got: v.len() });
    }
    for (e, on) in trace.edges.iter().enumerate() {
        if *on && v[e] != 0.0 {
            let [tail, head] = mesh.edges[e];
            return Err(Error::Precondition { edge: e, tail, head, value: v[e] });
        }
    }
    Ok(())
}

/// Whether the complex is a union of two blocks meeting along one edge.
pub(crate) fn is_edge_junction(mesh: &TetMesh) -> bool {
    match mesh.geometry {
        Some(g) => g == GeometryId::EdgeJunctionPair,
        None => {
            mesh.complex.blocks.len() == 2
                && mesh.complex.junctions.len() == 1
                && mesh.complex.junctions[0].kind == JunctionKind::Edge
        }
    }
}

pub(crate) fn is_vertex_junction(mesh: &TetMesh) -> bool {
    match mesh.geometry {
        Some(g) => matches!(g, GeometryId::VertexJunctionPair | GeometryId::VertexJunctionStar),
        None => {
            mesh.complex.blocks.len() >= 2
                && mesh.complex.junctions.iter().all(|j| j.kind == JunctionKind::Vertex)
                && !mesh.complex.junctions.is_empty()
        }
    }
}

fn domain_is_convex(mesh: &TetMesh) -> bool {
    match mesh.geometry {
        Some(g) => Geometry::get(g).convex,
        None => mesh.complex.blocks.len() == 1,
    }
}

/// Route selection by trace metadata.
pub fn decompose(mesh: &TetMesh, v: &[f64], trace: &TraceSet) -> Result<HelmholtzSplit> {
    check_precondition(mesh, v, &trace.fine)?;
    if is_vertex_junction(mesh) {
        return match decompose_vertex_junction(mesh, v, trace)? {
            VertexJunctionOutcome::Split(s) => Ok(s),
            VertexJunctionOutcome::Refused(r) => Err(Error::Incompatible(r.functionals)),
        };
    }
    if is_edge_junction(mesh) {
        return decompose_edge_junction(mesh, v, trace);
    }
    if trace.is_empty() {
        return kernel_convex(mesh, v, &trace.fine, Claim::SEMI_NO_LOG);
    }
    if !trace.vertices().is_empty() {
        return Err(Error::Unsupported("isolated trace vertices".into()));
    }
    let faces = trace.faces();
    let edges = trace.edges();
    if edges.is_empty() {
        if trace.n_components() >= 2 {
            return kernel_convex(mesh, v, &trace.fine, Claim::FULL_NO_LOG);
        }
        if !trace.lipschitz[0] {
            return decompose_isolated_vertex_union(mesh, v, trace);
        }
        if domain_is_convex(mesh) || trace.contains_concave || mesh.complex.blocks.len() == 1 {
            return kernel_convex(mesh, v, &trace.fine, Claim::SEMI_NO_LOG);
        }
        return decompose_face_trace(mesh, v, trace);
    }
    if faces.is_empty() {
        let edge_trace = TraceSet::from_entities(mesh, edges.into_iter().cloned().collect());
        if edge_trace.n_components() >= 2 {
            return decompose_disjoint_edges(mesh, v, trace);
        }
        if let Some(f) = edge::face_bounded_by(mesh, &trace.fine) {
            return decompose_loop(mesh, v, &f, trace);
        }
        return decompose_edge(mesh, v, trace);
    }
    decompose_face_plus_edge(mesh, v, trace)
}
