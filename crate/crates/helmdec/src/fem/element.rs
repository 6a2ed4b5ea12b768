//! Element matrices in the local (tet-vertex) orientation.
//!
//! Local edge `l = (i, j)` from `TET_EDGES` carries `λ_i∇λ_j - λ_j∇λ_i`;
//! local face `k` (opposite vertex `k`) carries the outward RT0 basis
//! `(x - x_k) / (3|K|)`.

use super::Kind;
use crate::mesh::geom::{self, Point};
use crate::mesh::TET_EDGES;

/// `∫_K λ_a λ_b`.
pub fn lambda_mass(vol: f64, a: usize, b: usize) -> f64 {
    vol * if a == b { 2.0 } else { 1.0 } / 20.0
}

pub fn nodal(x: &[Point; 4], kind: Kind) -> [[f64; 4]; 4] {
    let (g, vol) = geom::barycentric_gradients(x);
    let mut m = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            m[a][b] = match kind {
                Kind::Mass => lambda_mass(vol, a, b),
                Kind::Stiffness => vol * geom::dot(g[a], g[b]),
            };
        }
    }
    m
}

pub fn edge(x: &[Point; 4], kind: Kind) -> [[f64; 6]; 6] {
    let (g, vol) = geom::barycentric_gradients(x);
    let mut m = [[0.0; 6]; 6];
    for (p, &(i, j)) in TET_EDGES.iter().enumerate() {
        for (q, &(k, l)) in TET_EDGES.iter().enumerate() {
            m[p][q] = match kind {
                Kind::Mass => {
                    // (λi∇λj - λj∇λi)·(λk∇λl - λl∇λk)
                    lambda_mass(vol, i, k) * geom::dot(g[j], g[l]) - lambda_mass(vol, i, l) * geom::dot(g[j], g[k])
                        - lambda_mass(vol, j, k) * geom::dot(g[i], g[l])
                        + lambda_mass(vol, j, l) * geom::dot(g[i], g[k])
                }
                Kind::Stiffness => 4.0 * vol * geom::dot(geom::cross(g[i], g[j]), geom::cross(g[k], g[l])),
            };
        }
    }
    m
}

pub fn face(x: &[Point; 4], kind: Kind) -> [[f64; 4]; 4] {
    let vol = geom::signed_volume(x[0], x[1], x[2], x[3]).abs();
    let mut m = [[0.0; 4]; 4];
    for p in 0..4 {
        for q in 0..4 {
            m[p][q] = match kind {
                Kind::Mass => {
                    let mut s = 0.0;
                    for a in 0..4 {
                        for b in 0..4 {
                            s += geom::dot(geom::sub(x[a], x[p]), geom::sub(x[b], x[q])) * lambda_mass(vol, a, b);
                        }
                    }
                    s / (9.0 * vol * vol)
                }
                Kind::Stiffness => 1.0 / vol,
            };
        }
    }
    m
}
