//! Seeded test fields: uniform edge moments in [-1, 1] with the trace
//! moments zeroed, and gradients of nodal fields vanishing on the trace.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::{FineTrace, TetMesh};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform edge moments with every trace moment set to zero.
pub fn admissible_field(mesh: &TetMesh, trace: &FineTrace, rng: &mut impl Rng) -> Vec<f64> {
    (0..mesh.n_edges())
        .map(|e| {
            let x: f64 = rng.gen_range(-1.0..=1.0);
            if trace.edges[e] {
                0.0
            } else {
                x
            }
        })
        .collect()
}

/// Uniform nodal values vanishing on the trace nodes.
pub fn nodal_field(mesh: &TetMesh, trace: &FineTrace, rng: &mut impl Rng) -> Vec<f64> {
    (0..mesh.n_vertices())
        .map(|i| {
            let x: f64 = rng.gen_range(-1.0..=1.0);
            if trace.nodes[i] {
                0.0
            } else {
                x
            }
        })
        .collect()
}

/// `(q, ∇q)` for a random `q` vanishing on the trace.
pub fn gradient_field(mesh: &TetMesh, trace: &FineTrace, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
    let q = nodal_field(mesh, trace, rng);
    let v = mesh.ops().grad.matvec(&q);
    (q, v)
}

/// Uniform nodal vector field.
pub fn nodal_vector_field(mesh: &TetMesh, rng: &mut impl Rng) -> Vec<f64> {
    (0..3 * mesh.n_vertices()).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}
