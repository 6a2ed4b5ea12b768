//! Structured tetrahedral meshes of block complexes, coarse-entity tagging
//! and the geometry catalog.

pub mod catalog;
pub mod complex;
pub mod geom;
pub mod io;
pub mod sub;
pub mod trace;

use std::any::Any;
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
pub use catalog::{Geometry, GeometryId};
pub use complex::{Block, BlockComplex, CoarseEntity, CoarseGeom, Isometry, JunctionKind, Shape};
pub use geom::Point;
pub use sub::Submesh;
pub use trace::{FineTrace, TraceSet};

/// Local vertex pairs of the six tetrahedron edges.
pub const TET_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
/// Local vertex triples of the four tetrahedron faces (face k omits vertex k).
pub const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

type CacheMap = HashMap<String, Arc<dyn Any + Send + Sync>>;

/// Conforming tetrahedral mesh with full entity enumeration.
///
/// Edges are oriented from the lower to the higher vertex id; faces store
/// their vertices in increasing order. Tetrahedra have positive volume.
pub struct TetMesh {
    pub complex: Arc<BlockComplex>,
    pub geometry: Option<GeometryId>,
    /// Lattice spacing `2^-level`.
    pub h: f64,
    pub level: u32,
    pub vertices: Vec<Point>,
    pub edges: Vec<[usize; 2]>,
    pub faces: Vec<[usize; 3]>,
    pub tets: Vec<[usize; 4]>,
    pub block_of_tet: Vec<usize>,
    pub tet_edges: Vec<[usize; 6]>,
    pub tet_faces: Vec<[usize; 4]>,
    pub edge_tets: Vec<Vec<usize>>,
    pub face_tets: Vec<Vec<usize>>,
    pub vertex_edges: Vec<Vec<usize>>,
    pub boundary_face: Vec<bool>,
    pub boundary_edge: Vec<bool>,
    pub boundary_node: Vec<bool>,
    ops: OnceLock<Arc<crate::fem::Operators>>,
    cache: Mutex<CacheMap>,
}

impl std::fmt::Debug for TetMesh {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TetMesh")
            .field("complex", &self.complex.name)
            .field("h", &self.h)
            .field("vertices", &self.vertices.len())
            .field("edges", &self.edges.len())
            .field("faces", &self.faces.len())
            .field("tets", &self.tets.len())
            .finish()
    }
}

/// `k` with `h = 2^-k`, if `h` has that form.
pub fn level_of(h: f64) -> Option<u32> {
    if !(h > 0.0 && h <= 1.0) {
        return None;
    }
    let k = (-h.log2()).round();
    (k >= 0.0 && k <= 30.0 && (2f64.powi(-(k as i32)) - h).abs() <= 1e-15 * h).then_some(k as u32)
}

fn lattice_index(x: f64, h: f64) -> Option<i64> {
    let r = x / h;
    ((r - r.round()).abs() <= 1e-9).then_some(r.round() as i64)
}

/// Kuhn subdivision of the cell with lower corner `c`: six tetrahedra along
/// monotone lattice paths from `c` to `c + (1,1,1)`.
fn kuhn_cell(c: [i64; 3]) -> [[[i64; 3]; 4]; 6] {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = [[[0i64; 3]; 4]; 6];
    for (t, p) in PERMS.iter().enumerate() {
        let mut v = c;
        out[t][0] = v;
        for (s, &axis) in p.iter().enumerate() {
            v[axis] += 1;
            out[t][s + 1] = v;
        }
    }
    out
}

/// Lattice tetrahedra (global coordinates) of one block at spacing `h`.
fn block_tets(block: &Block, h: f64) -> Result<Vec<[Point; 4]>> {
    let mut out = Vec::new();
    match &block.shape {
        Shape::Brick { lo, hi } => {
            let mut lo_i = [0i64; 3];
            let mut hi_i = [0i64; 3];
            for a in 0..3 {
                lo_i[a] = lattice_index(lo[a], h).ok_or(Error::InvalidMeshSize(h))?;
                hi_i[a] = lattice_index(hi[a], h).ok_or(Error::InvalidMeshSize(h))?;
            }
            for i in lo_i[0]..hi_i[0] {
                for j in lo_i[1]..hi_i[1] {
                    for k in lo_i[2]..hi_i[2] {
                        for t in kuhn_cell([i, j, k]) {
                            out.push(t.map(|p| p.map(|c| c as f64 * h)));
                        }
                    }
                }
            }
        }
        Shape::Pyramid { iso } => {
            let n = lattice_index(1.0, h).ok_or(Error::InvalidMeshSize(h))?;
            for a in 0..3 {
                lattice_index(iso.t[a], h).ok_or(Error::InvalidMeshSize(h))?;
            }
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for t in kuhn_cell([i, j, k]) {
                            let pts = t.map(|p| p.map(|c| c as f64 * h));
                            let c = geom::centroid(&pts);
                            if c[0] < c[2] && c[1] < c[2] {
                                out.push(pts.map(|p| iso.apply(p)));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

impl TetMesh {
    /// Mesh a block complex at lattice spacing `h = 2^-k`.
    pub fn build(complex: Arc<BlockComplex>, geometry: Option<GeometryId>, h: f64) -> Result<Self> {
        let level = level_of(h).ok_or(Error::InvalidMeshSize(h))?;
        let mut raw: Vec<([[i64; 3]; 4], usize)> = Vec::new();
        for (b, block) in complex.blocks.iter().enumerate() {
            for t in block_tets(block, h)? {
                let mut key = [[0i64; 3]; 4];
                for (v, p) in t.iter().enumerate() {
                    for a in 0..3 {
                        key[v][a] = lattice_index(p[a], h).ok_or(Error::InvalidMeshSize(h))?;
                    }
                }
                raw.push((key, b));
            }
        }
        if raw.is_empty() {
            return Err(Error::InvalidMeshSize(h));
        }
        let mut ids: BTreeMap<[i64; 3], usize> = BTreeMap::new();
        for (key, _) in &raw {
            for k in key {
                ids.insert(*k, 0);
            }
        }
        let mut vertices = Vec::with_capacity(ids.len());
        for (i, (k, id)) in ids.iter_mut().enumerate() {
            *id = i;
            vertices.push(k.map(|c| c as f64 * h));
        }
        let mut tets: Vec<([usize; 4], usize)> = raw
            .iter()
            .map(|(key, b)| {
                let mut t = key.map(|k| ids[&k]);
                t.sort_unstable();
                (t, *b)
            })
            .collect();
        tets.sort_unstable();
        tets.dedup_by(|a, b| a.0 == b.0);
        let (tets, block_of_tet): (Vec<_>, Vec<_>) = tets
            .into_iter()
            .map(|(mut t, b)| {
                let x = t.map(|v| vertices[v]);
                if geom::signed_volume(x[0], x[1], x[2], x[3]) < 0.0 {
                    t.swap(2, 3);
                }
                (t, b)
            })
            .unzip();
        Ok(Self::from_parts(complex, geometry, h, level, vertices, tets, block_of_tet))
    }

    /// Assemble all derived entity data from vertices and positively oriented tets.
    pub fn from_parts(
        complex: Arc<BlockComplex>,
        geometry: Option<GeometryId>,
        h: f64,
        level: u32,
        vertices: Vec<Point>,
        tets: Vec<[usize; 4]>,
        block_of_tet: Vec<usize>,
    ) -> Self {
        let mut edges: Vec<[usize; 2]> = Vec::with_capacity(tets.len() * 2);
        let mut faces: Vec<[usize; 3]> = Vec::with_capacity(tets.len() * 2);
        for t in &tets {
            for (a, b) in TET_EDGES {
                let (x, y) = (t[a].min(t[b]), t[a].max(t[b]));
                edges.push([x, y]);
            }
            for f in TET_FACES {
                let mut v = f.map(|i| t[i]);
                v.sort_unstable();
                faces.push(v);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        faces.sort_unstable();
        faces.dedup();
        let mut tet_edges = Vec::with_capacity(tets.len());
        let mut tet_faces = Vec::with_capacity(tets.len());
        let mut edge_tets = vec![Vec::new(); edges.len()];
        let mut face_tets = vec![Vec::new(); faces.len()];
        for (ti, t) in tets.iter().enumerate() {
            let mut te = [0usize; 6];
            for (l, (a, b)) in TET_EDGES.iter().enumerate() {
                let key = [t[*a].min(t[*b]), t[*a].max(t[*b])];
                te[l] = edges.binary_search(&key).expect("edge present");
                edge_tets[te[l]].push(ti);
            }
            let mut tf = [0usize; 4];
            for (l, f) in TET_FACES.iter().enumerate() {
                let mut v = f.map(|i| t[i]);
                v.sort_unstable();
                tf[l] = faces.binary_search(&v).expect("face present");
                face_tets[tf[l]].push(ti);
            }
            tet_edges.push(te);
            tet_faces.push(tf);
        }
        let mut vertex_edges = vec![Vec::new(); vertices.len()];
        for (e, [a, b]) in edges.iter().enumerate() {
            vertex_edges[*a].push(e);
            vertex_edges[*b].push(e);
        }
        let boundary_face: Vec<bool> = face_tets.iter().map(|t| t.len() == 1).collect();
        let mut boundary_edge = vec![false; edges.len()];
        let mut boundary_node = vec![false; vertices.len()];
        for (f, v) in faces.iter().enumerate() {
            if boundary_face[f] {
                for i in 0..3 {
                    boundary_node[v[i]] = true;
                    let key = [v[i].min(v[(i + 1) % 3]), v[i].max(v[(i + 1) % 3])];
                    boundary_edge[edges.binary_search(&key).unwrap()] = true;
                }
            }
        }
        TetMesh {
            complex,
            geometry,
            h,
            level,
            vertices,
            edges,
            faces,
            tets,
            block_of_tet,
            tet_edges,
            tet_faces,
            edge_tets,
            face_tets,
            vertex_edges,
            boundary_face,
            boundary_edge,
            boundary_node,
            ops: OnceLock::new(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Catalog geometry meshed at spacing `h`.
    pub fn catalog(id: GeometryId, h: f64) -> Result<Self> {
        let g = Geometry::get(id);
        Self::build(Arc::new(g.complex), Some(id), h)
    }

    /// Uniform refinement: the same complex at half the spacing.
    pub fn refine(&self) -> Result<Self> {
        Self::build(self.complex.clone(), self.geometry, self.h / 2.0)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }
    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        self.edges.binary_search(&[a.min(b), a.max(b)]).ok()
    }

    pub fn edge_vector(&self, e: usize) -> Point {
        let [a, b] = self.edges[e];
        geom::sub(self.vertices[b], self.vertices[a])
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        geom::norm(self.edge_vector(e))
    }

    pub fn tet_points(&self, t: usize) -> [Point; 4] {
        self.tets[t].map(|v| self.vertices[v])
    }

    pub fn max_edge_length(&self) -> f64 {
        (0..self.n_edges()).map(|e| self.edge_length(e)).fold(0.0, f64::max)
    }

    pub fn min_edge_length(&self) -> f64 {
        (0..self.n_edges()).map(|e| self.edge_length(e)).fold(f64::INFINITY, f64::min)
    }

    /// `V - E + F - T`.
    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_faces() as i64 - self.n_tets() as i64
    }

    /// Conformity check: every face has one or two tets, every interior
    /// face separates two tets of opposite orientation, and the boundary
    /// surface is closed (each boundary edge lies on an even number of
    /// boundary faces).
    pub fn is_conforming(&self) -> bool {
        if self.face_tets.iter().any(|t| t.is_empty() || t.len() > 2) {
            return false;
        }
        for x in (0..self.n_tets()).map(|t| self.tet_points(t)) {
            if geom::signed_volume(x[0], x[1], x[2], x[3]) <= 0.0 {
                return false;
            }
        }
        let mut count = vec![0usize; self.n_edges()];
        for (f, v) in self.faces.iter().enumerate() {
            if self.boundary_face[f] {
                for i in 0..3 {
                    count[self.edge_id(v[i], v[(i + 1) % 3]).unwrap()] += 1;
                }
            }
        }
        count.iter().all(|c| c % 2 == 0)
    }

    /// Shared finite-element operators of this mesh.
    pub fn ops(&self) -> &crate::fem::Operators {
        self.ops.get_or_init(|| Arc::new(crate::fem::Operators::assemble(self)))
    }

    /// Memoize an immutable value under `key`.
    pub fn cached<T, F>(&self, key: &str, build: F) -> Result<Arc<T>>
    where
        T: Any + Send + Sync,
        F: FnOnce() -> Result<T>,
    {
        if let Some(v) = self.cache.lock().unwrap().get(key) {
            if let Ok(v) = v.clone().downcast::<T>() {
                return Ok(v);
            }
        }
        let v = Arc::new(build()?);
        self.cache
            .lock()
            .unwrap()
            .entry(key.to_string())
            .or_insert_with(|| v.clone() as Arc<dyn Any + Send + Sync>);
        Ok(v)
    }

    /// Fine vertex at a point, if any.
    pub fn vertex_at(&self, x: Point) -> Option<usize> {
        self.vertices
            .iter()
            .position(|v| geom::norm(geom::sub(*v, x)) <= complex::GEOM_TOL)
    }

    /// Vertices of the tets carrying one of the given block labels.
    pub fn block_nodes(&self, blocks: &[usize]) -> Vec<bool> {
        let mut out = vec![false; self.n_vertices()];
        for (t, v) in self.tets.iter().enumerate() {
            if blocks.contains(&self.block_of_tet[t]) {
                for &i in v {
                    out[i] = true;
                }
            }
        }
        out
    }

    /// Junction kind realized between two blocks, from the nodes they share.
    pub fn realized_junction(&self, a: usize, b: usize) -> Option<JunctionKind> {
        let na = self.block_nodes(&[a]);
        let nb = self.block_nodes(&[b]);
        let shared: Vec<Point> = (0..self.n_vertices())
            .filter(|&i| na[i] && nb[i])
            .map(|i| self.vertices[i])
            .collect();
        match shared.len() {
            0 => None,
            1 => Some(JunctionKind::Vertex),
            _ => {
                let d = geom::sub(shared[1], shared[0]);
                let collinear = shared
                    .iter()
                    .all(|p| geom::norm(geom::cross(d, geom::sub(*p, shared[0]))) <= 1e-12);
                Some(if collinear { JunctionKind::Edge } else { JunctionKind::Face })
            }
        }
    }

    /// Whether the mesh is connected through shared vertices.
    pub fn is_connected(&self) -> bool {
        let n = self.n_vertices();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &e in &self.vertex_edges[v] {
                let [a, b] = self.edges[e];
                let w = if a == v { b } else { a };
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.iter().all(|s| *s)
    }
}
