//! Trace sets: tagged coarse entities, their fine closure and connectivity.

use super::catalog::Geometry;
use super::complex::{CoarseEntity, JunctionKind};
use super::TetMesh;
use crate::error::{Error, Result};

/// Fine mesh entities lying in a closed set of coarse entities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FineTrace {
    pub nodes: Vec<bool>,
    pub edges: Vec<bool>,
    pub faces: Vec<bool>,
}

impl FineTrace {
    pub fn empty(mesh: &TetMesh) -> Self {
        FineTrace {
            nodes: vec![false; mesh.n_vertices()],
            edges: vec![false; mesh.n_edges()],
            faces: vec![false; mesh.n_faces()],
        }
    }

    /// The whole boundary of the mesh.
    pub fn boundary(mesh: &TetMesh) -> Self {
        FineTrace {
            nodes: mesh.boundary_node.clone(),
            edges: mesh.boundary_edge.clone(),
            faces: mesh.boundary_face.clone(),
        }
    }

    /// Fine closure of one coarse entity.
    pub fn of_entity(mesh: &TetMesh, e: &CoarseEntity) -> Self {
        let nodes: Vec<bool> = mesh.vertices.iter().map(|x| e.contains(*x)).collect();
        let edges = if e.is_vertex() {
            vec![false; mesh.n_edges()]
        } else {
            mesh.edges.iter().map(|[a, b]| nodes[*a] && nodes[*b]).collect()
        };
        let faces = if e.is_face() {
            mesh.faces
                .iter()
                .enumerate()
                .map(|(f, v)| mesh.boundary_face[f] && v.iter().all(|i| nodes[*i]))
                .collect()
        } else {
            vec![false; mesh.n_faces()]
        };
        FineTrace { nodes, edges, faces }
    }

    pub fn of_entities(mesh: &TetMesh, es: &[CoarseEntity]) -> Self {
        let mut out = FineTrace::empty(mesh);
        for e in es {
            out.union_with(&FineTrace::of_entity(mesh, e));
        }
        out
    }

    /// Nodes only: every edge and face spanned by the nodes is included.
    pub fn from_nodes(mesh: &TetMesh, nodes: Vec<bool>) -> Self {
        let edges = mesh.edges.iter().map(|[a, b]| nodes[*a] && nodes[*b]).collect();
        let faces = mesh.faces.iter().map(|v| v.iter().all(|i| nodes[*i])).collect();
        FineTrace { nodes, edges, faces }
    }

    /// Closure of a set of fine faces.
    pub fn from_faces(mesh: &TetMesh, faces: Vec<bool>) -> Self {
        let mut nodes = vec![false; mesh.n_vertices()];
        let mut edges = vec![false; mesh.n_edges()];
        for (f, tri) in mesh.faces.iter().enumerate() {
            if faces[f] {
                for i in 0..3 {
                    nodes[tri[i]] = true;
                    edges[mesh.edge_id(tri[i], tri[(i + 1) % 3]).unwrap()] = true;
                }
            }
        }
        FineTrace { nodes, edges, faces }
    }

    /// Fine traces of every boundary face not in `faces`, closed.
    pub fn complement_faces(mesh: &TetMesh, faces: &[bool]) -> Self {
        let rest = (0..mesh.n_faces()).map(|f| mesh.boundary_face[f] && !faces[f]).collect();
        FineTrace::from_faces(mesh, rest)
    }

    pub fn union_with(&mut self, other: &FineTrace) {
        for (a, b) in self.nodes.iter_mut().zip(&other.nodes) {
            *a |= *b;
        }
        for (a, b) in self.edges.iter_mut().zip(&other.edges) {
            *a |= *b;
        }
        for (a, b) in self.faces.iter_mut().zip(&other.faces) {
            *a |= *b;
        }
    }

    pub fn union(&self, other: &FineTrace) -> FineTrace {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    pub fn is_empty(&self) -> bool {
        !self.nodes.iter().any(|x| *x)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.iter().filter(|x| **x).count()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().filter(|x| **x).count()
    }
}

/// A trace set Γ with component structure.
#[derive(Clone, Debug)]
pub struct TraceSet {
    pub entities: Vec<CoarseEntity>,
    pub fine: FineTrace,
    /// Connected components as lists of indices into `entities`.
    pub components: Vec<Vec<usize>>,
    /// Per component: no two of its faces are pinched together at a vertex.
    pub lipschitz: Vec<bool>,
    pub contains_concave: bool,
    pub isolated_vertex_union: bool,
}

impl TraceSet {
    pub fn empty(mesh: &TetMesh) -> Self {
        TraceSet {
            entities: vec![],
            fine: FineTrace::empty(mesh),
            components: vec![],
            lipschitz: vec![],
            contains_concave: false,
            isolated_vertex_union: false,
        }
    }

    /// Tag the named coarse entities; every name must lie on the boundary.
    pub fn tag<S: AsRef<str>>(mesh: &TetMesh, names: &[S]) -> Result<Self> {
        let mut entities: Vec<CoarseEntity> = Vec::new();
        for n in names {
            let n = n.as_ref();
            let e = mesh.complex.entity(n).ok_or_else(|| Error::UnknownEntity(n.to_string()))?;
            if !mesh.complex.on_boundary(&e) {
                return Err(Error::NotOnBoundary(n.to_string()));
            }
            if !entities.iter().any(|x| x.name == e.name) {
                entities.push(e);
            }
        }
        Ok(Self::from_entities(mesh, entities))
    }

    pub fn from_entities(mesh: &TetMesh, entities: Vec<CoarseEntity>) -> Self {
        let per: Vec<FineTrace> = entities.iter().map(|e| FineTrace::of_entity(mesh, e)).collect();
        let mut fine = FineTrace::empty(mesh);
        for f in &per {
            fine.union_with(f);
        }
        let n = entities.len();
        let mut comp = vec![usize::MAX; n];
        let mut components = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let c = components.len();
            comp[s] = c;
            let mut members = vec![s];
            let mut stack = vec![s];
            while let Some(i) = stack.pop() {
                for j in 0..n {
                    if comp[j] == usize::MAX && per[i].nodes.iter().zip(&per[j].nodes).any(|(a, b)| *a && *b) {
                        comp[j] = c;
                        members.push(j);
                        stack.push(j);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        let lipschitz: Vec<bool> = components
            .iter()
            .map(|m| {
                let faces: Vec<usize> = m.iter().copied().filter(|&i| entities[i].is_face()).collect();
                faces_are_lipschitz(mesh, &faces.iter().map(|&i| &per[i]).collect::<Vec<_>>())
            })
            .collect();
        let contains_concave = mesh
            .geometry
            .map(|g| {
                let cf = Geometry::get(g).concave_faces;
                !cf.is_empty() && cf.iter().all(|c| entities.iter().any(|e| e.name == *c))
            })
            .unwrap_or(false);
        let isolated_vertex_union = lipschitz.iter().any(|l| !l);
        TraceSet { entities, fine, components, lipschitz, contains_concave, isolated_vertex_union }
    }

    /// The coarse entities of `mesh` covered by a fine trace: boundary faces
    /// whose fine faces are all in `fine`, then edges and vertices not already
    /// contained in a chosen face or edge.
    pub fn covering(mesh: &TetMesh, fine: &FineTrace) -> TraceSet {
        let mut chosen: Vec<CoarseEntity> = Vec::new();
        let mut covered = FineTrace::empty(mesh);
        let all = mesh.complex.entities();
        for pass in 0..3 {
            for e in &all {
                let kind_ok = match pass {
                    0 => e.is_face() && !mesh.complex.is_interface_face(e),
                    1 => e.is_edge(),
                    _ => e.is_vertex(),
                };
                if !kind_ok || !mesh.complex.on_boundary(e) {
                    continue;
                }
                let f = FineTrace::of_entity(mesh, e);
                let inside = match pass {
                    0 => f.faces.iter().zip(&fine.faces).all(|(a, b)| !a || *b) && f.faces.iter().any(|x| *x),
                    1 => f.edges.iter().zip(&fine.edges).all(|(a, b)| !a || *b),
                    _ => f.nodes.iter().zip(&fine.nodes).all(|(a, b)| !a || *b),
                };
                let new = match pass {
                    0 => true,
                    1 => f.edges.iter().zip(&covered.edges).any(|(a, b)| *a && !b),
                    _ => f.nodes.iter().zip(&covered.nodes).any(|(a, b)| *a && !b),
                };
                if inside && new {
                    covered.union_with(&f);
                    chosen.push(e.clone());
                }
            }
        }
        TraceSet::from_entities(mesh, chosen)
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.entities.iter().map(|e| e.name.clone()).collect()
    }

    pub fn faces(&self) -> Vec<&CoarseEntity> {
        self.entities.iter().filter(|e| e.is_face()).collect()
    }

    pub fn edges(&self) -> Vec<&CoarseEntity> {
        self.entities.iter().filter(|e| e.is_edge()).collect()
    }

    pub fn vertices(&self) -> Vec<&CoarseEntity> {
        self.entities.iter().filter(|e| e.is_vertex()).collect()
    }

    /// The faces-only part of the trace.
    pub fn face_part(&self, mesh: &TetMesh) -> TraceSet {
        TraceSet::from_entities(mesh, self.faces().into_iter().cloned().collect())
    }
}

/// A union of faces is Lipschitz iff around every node the faces containing
/// it are linked through fine edges incident to that node.
fn faces_are_lipschitz(mesh: &TetMesh, faces: &[&FineTrace]) -> bool {
    if faces.len() < 2 {
        return true;
    }
    for v in 0..mesh.n_vertices() {
        let at: Vec<usize> = (0..faces.len()).filter(|&i| faces[i].nodes[v]).collect();
        if at.len() < 2 {
            continue;
        }
        let mut seen = vec![false; at.len()];
        seen[0] = true;
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            for j in 0..at.len() {
                if !seen[j]
                    && mesh.vertex_edges[v]
                        .iter()
                        .any(|&e| faces[at[i]].edges[e] && faces[at[j]].edges[e])
                {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return false;
        }
    }
    true
}

/// Outcome of the extension-domain check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct ExtensionDomain {
    pub satisfiable: bool,
    pub extended_domain_convex: bool,
}

/// Decide whether Γ admits Lipschitz extension blocks and whether the
/// extended domain can be convex.
pub fn check_extension_domain(mesh: &TetMesh, trace: &TraceSet) -> ExtensionDomain {
    let complex = &mesh.complex;
    let lipschitz_domain = match mesh.geometry {
        Some(g) => !matches!(
            g,
            super::GeometryId::EdgeJunctionPair
                | super::GeometryId::VertexJunctionPair
                | super::GeometryId::VertexJunctionStar
        ),
        None => {
            !complex.has_junction(JunctionKind::Vertex)
                && !(complex.blocks.len() == 2 && complex.has_junction(JunctionKind::Edge))
        }
    };
    let satisfiable = lipschitz_domain
        && !trace.is_empty()
        && trace.entities.iter().all(|e| e.is_face())
        && trace.lipschitz.iter().all(|l| *l);
    let convex_domain = match mesh.geometry {
        Some(g) => Geometry::get(g).convex,
        None => complex.blocks.len() == 1,
    };
    ExtensionDomain {
        satisfiable,
        extended_domain_convex: satisfiable && (convex_domain || trace.contains_concave),
    }
}
