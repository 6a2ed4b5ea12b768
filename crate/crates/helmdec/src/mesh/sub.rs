//! Submeshes made of the tets of a block subset, with index maps to the parent.

use std::sync::Arc;

use super::trace::FineTrace;
use super::TetMesh;

/// A block-aligned submesh. Local vertex ids keep the parent order, so edge
/// orientations agree with the parent mesh.
#[derive(Debug)]
pub struct Submesh {
    pub mesh: TetMesh,
    pub blocks: Vec<usize>,
    pub vmap: Vec<usize>,
    pub emap: Vec<usize>,
    pub vinv: Vec<Option<usize>>,
    pub einv: Vec<Option<usize>>,
}

impl Submesh {
    pub fn of_blocks(parent: &TetMesh, blocks: &[usize]) -> Submesh {
        let keep = parent.block_nodes(blocks);
        let vmap: Vec<usize> = (0..parent.n_vertices()).filter(|&v| keep[v]).collect();
        let mut vinv = vec![None; parent.n_vertices()];
        for (l, &g) in vmap.iter().enumerate() {
            vinv[g] = Some(l);
        }
        let mut tets = Vec::new();
        let mut labels = Vec::new();
        for (t, v) in parent.tets.iter().enumerate() {
            if let Some(pos) = blocks.iter().position(|&b| b == parent.block_of_tet[t]) {
                tets.push(v.map(|i| vinv[i].unwrap()));
                labels.push(pos);
            }
        }
        let vertices = vmap.iter().map(|&g| parent.vertices[g]).collect();
        let complex = Arc::new(parent.complex.subcomplex(blocks));
        let mesh = TetMesh::from_parts(complex, None, parent.h, parent.level, vertices, tets, labels);
        let emap: Vec<usize> = mesh
            .edges
            .iter()
            .map(|[a, b]| parent.edge_id(vmap[*a], vmap[*b]).expect("parent edge"))
            .collect();
        let mut einv = vec![None; parent.n_edges()];
        for (l, &g) in emap.iter().enumerate() {
            einv[g] = Some(l);
        }
        Submesh { mesh, blocks: blocks.to_vec(), vmap, emap, vinv, einv }
    }

    pub fn restrict_nodes(&self, x: &[f64]) -> Vec<f64> {
        self.vmap.iter().map(|&g| x[g]).collect()
    }

    pub fn restrict_vec3(&self, x: &[f64]) -> Vec<f64> {
        self.vmap.iter().flat_map(|&g| [x[3 * g], x[3 * g + 1], x[3 * g + 2]]).collect()
    }

    pub fn restrict_edges(&self, x: &[f64]) -> Vec<f64> {
        self.emap.iter().map(|&g| x[g]).collect()
    }

    /// Zero extension of nodal values to the parent.
    pub fn extend_nodes(&self, x: &[f64], n_parent: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_parent];
        for (l, &g) in self.vmap.iter().enumerate() {
            out[g] = x[l];
        }
        out
    }

    pub fn extend_vec3(&self, x: &[f64], n_parent: usize) -> Vec<f64> {
        let mut out = vec![0.0; 3 * n_parent];
        for (l, &g) in self.vmap.iter().enumerate() {
            out[3 * g..3 * g + 3].copy_from_slice(&x[3 * l..3 * l + 3]);
        }
        out
    }

    pub fn extend_edges(&self, x: &[f64], n_parent: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_parent];
        for (l, &g) in self.emap.iter().enumerate() {
            out[g] = x[l];
        }
        out
    }

    /// A parent fine trace seen on the submesh.
    pub fn trace_from_parent(&self, parent: &TetMesh, t: &FineTrace) -> FineTrace {
        let nodes = self.vmap.iter().map(|&g| t.nodes[g]).collect();
        let edges = self.emap.iter().map(|&g| t.edges[g]).collect();
        let faces = self
            .mesh
            .faces
            .iter()
            .map(|v| {
                let g = v.map(|i| self.vmap[i]);
                parent.faces.binary_search(&g).map(|f| t.faces[f]).unwrap_or(false)
            })
            .collect();
        FineTrace { nodes, edges, faces }
    }
}
