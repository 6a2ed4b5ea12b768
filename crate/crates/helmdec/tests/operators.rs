use helmdec::fem::{self, FieldRef, Norm};
use helmdec::mesh::{FineTrace, GeometryId, TetMesh};
use helmdec::operators::{
    curl_harmonic_extend, edge_interpolate_rh, epsilon_correction, face_cutoff, harmonic_extend,
    harmonic_extend_vec3, junction_functionals, loop_constant_extension, loop_decompose, scott_zhang, BoundaryLoop,
    SzInput,
};
use helmdec::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn cube(h: f64) -> TetMesh {
    TetMesh::catalog(GeometryId::UnitCube, h).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Nodal values of the affine field `x ↦ a + B x`.
fn affine_nodal(mesh: &TetMesh, a: [f64; 3], b: [[f64; 3]; 3]) -> Vec<f64> {
    let mut w = Vec::new();
    for x in &mesh.vertices {
        for c in 0..3 {
            w.push(a[c] + (0..3).map(|j| b[c][j] * x[j]).sum::<f64>());
        }
    }
    w
}

fn face_loop(mesh: &TetMesh, name: &str) -> BoundaryLoop {
    let f = mesh.complex.entity(name).unwrap();
    BoundaryLoop::of_faces(mesh, &FineTrace::of_entity(mesh, &f).faces, None).unwrap()
}

#[test]
fn rh_matches_midpoint_rule_on_affine_fields() {
    let mesh = cube(0.25);
    let (a, b) = ([0.3, -0.2, 1.1], [[1.0, 2.0, -0.5], [0.0, -1.0, 0.7], [0.4, 0.2, 3.0]]);
    let w = affine_nodal(&mesh, a, b);
    let lam = edge_interpolate_rh(&mesh, &w);
    for (e, [p, q]) in mesh.edges.iter().enumerate() {
        let (xp, xq) = (mesh.vertices[*p], mesh.vertices[*q]);
        let mid: Vec<f64> = (0..3).map(|i| 0.5 * (xp[i] + xq[i])).collect();
        let exact: f64 = (0..3)
            .map(|c| (a[c] + (0..3).map(|j| b[c][j] * mid[j]).sum::<f64>()) * (xq[c] - xp[c]))
            .sum();
        assert!((lam[e] - exact).abs() < 1e-14, "edge {e}");
    }
}

#[test]
fn rh_commutes_with_curl_on_every_geometry() {
    for (i, g) in GeometryId::ALL.into_iter().enumerate() {
        let mesh = TetMesh::catalog(g, 0.25).unwrap();
        let w = random(3 * mesh.n_vertices(), i as u64);
        let a = fem::curl_per_tet(&mesh, &edge_interpolate_rh(&mesh, &w));
        let b = fem::curl_nodal_per_tet(&mesh, &w);
        let d = a.iter().zip(&b).flat_map(|(x, y)| (0..3).map(move |c| (x[c] - y[c]).abs())).fold(0.0, f64::max);
        assert!(d <= 1e-12, "{g}: {d:e}");
    }
}

#[test]
fn scott_zhang_reproduces_linears_and_keeps_zero_traces() {
    let mesh = cube(0.25);
    let none = FineTrace::empty(&mesh);
    let w = random(3 * mesh.n_vertices(), 3);
    assert_eq!(scott_zhang(&mesh, SzInput::Nodal(&w), &none), w);

    // constant scalar times affine vector is affine
    let ones = vec![1.0; mesh.n_vertices()];
    let aff = affine_nodal(&mesh, [1.0, 0.0, -2.0], [[0.5, 0.0, 1.0], [0.0, 2.0, 0.0], [1.0, 1.0, 1.0]]);
    let trace = FineTrace::boundary(&mesh);
    let out = scott_zhang(&mesh, SzInput::Product { scalar: &ones, vector: &aff }, &trace);
    assert!(max_diff(&out, &aff) < 1e-12);

    // a scalar vanishing on the trace gives exactly zero trace values
    let mut s = random(mesh.n_vertices(), 4);
    fem::zero_nodes(&mut s, &trace.nodes);
    let out = scott_zhang(&mesh, SzInput::Product { scalar: &s, vector: &w }, &trace);
    for (i, on) in trace.nodes.iter().enumerate() {
        if *on {
            assert_eq!(&out[3 * i..3 * i + 3], &[0.0, 0.0, 0.0]);
        }
    }
}

#[test]
fn face_cutoff_is_an_interior_indicator() {
    let mesh = TetMesh::catalog(GeometryId::ThreeCubeL, 0.125).unwrap();
    let face = mesh.complex.interface_faces()[0].clone();
    let theta = face_cutoff(&mesh, &face).unwrap();
    let fbar = FineTrace::of_entity(&mesh, &face);
    let mut ones = 0;
    for (i, t) in theta.iter().enumerate() {
        assert!(*t == 0.0 || *t == 1.0);
        if *t == 1.0 {
            assert!(fbar.nodes[i]);
            ones += 1;
        }
    }
    // 0.5 x 0.5 face at h = 1/8: 3 x 3 interior nodes
    assert_eq!(ones, 9);
    let outer = mesh.complex.boundary_faces()[0].clone();
    assert!(matches!(face_cutoff(&mesh, &outer), Err(Error::Unsupported(_))));
}

#[test]
fn harmonic_extension_reproduces_affine_data() {
    let mesh = cube(0.25);
    let lin: Vec<f64> = mesh.vertices.iter().map(|x| 2.0 * x[0] - x[1] + 0.5 * x[2] + 1.0).collect();
    let fixed = mesh.boundary_node.clone();
    let mut data = lin.clone();
    fem::zero_nodes(&mut data, &fixed.iter().map(|b| !b).collect::<Vec<_>>());
    let u = harmonic_extend(&mesh, &fixed, &data).unwrap();
    assert!(max_diff(&u, &lin) < 1e-12);

    let aff = affine_nodal(&mesh, [0.0, 1.0, 2.0], [[1.0, 0.0, 0.0], [0.0, 0.0, 3.0], [1.0, -1.0, 0.0]]);
    let u3 = harmonic_extend_vec3(&mesh, &fixed, &aff).unwrap();
    assert!(max_diff(&u3, &aff) < 1e-12);

    assert!(harmonic_extend(&mesh, &vec![false; mesh.n_vertices()], &lin).is_err());
}

#[test]
fn curl_harmonic_extension_is_minimal() {
    let mesh = cube(0.25);
    let data = random(mesh.n_edges(), 5);
    let u = curl_harmonic_extend(&mesh, &data).unwrap();
    for e in 0..mesh.n_edges() {
        if mesh.boundary_edge[e] {
            assert_eq!(u[e], data[e]);
        }
    }
    let e0 = fem::curl_energy(&mesh, &u);
    let l0 = fem::norm(&mesh, FieldRef::Edge(&u), Norm::L2).unwrap();
    let inner: Vec<bool> = mesh.boundary_node.iter().map(|b| !b).collect();
    for seed in 0..5 {
        let mut z = random(mesh.n_edges(), 100 + seed);
        fem::zero_edges(&mut z, &mesh.boundary_edge);
        let uz: Vec<f64> = u.iter().zip(&z).map(|(a, b)| a + 0.1 * b).collect();
        assert!(fem::curl_energy(&mesh, &uz) >= e0 - 1e-12);

        // gradient perturbations vanishing on the boundary keep the curl
        let mut psi = random(mesh.n_vertices(), 200 + seed);
        fem::zero_nodes(&mut psi, &mesh.boundary_node);
        assert!(inner.iter().any(|x| *x));
        let g = mesh.ops().grad.matvec(&psi);
        let ug: Vec<f64> = u.iter().zip(&g).map(|(a, b)| a + 0.1 * b).collect();
        assert!(fem::norm(&mesh, FieldRef::Edge(&ug), Norm::L2).unwrap() >= l0 - 1e-12);
    }
}

#[test]
fn curl_harmonic_extension_of_gradient_data_is_curl_free() {
    let mesh = cube(0.25);
    let q = random(mesh.n_vertices(), 6);
    let g = mesh.ops().grad.matvec(&q);
    let u = curl_harmonic_extend(&mesh, &g).unwrap();
    assert!(fem::curl_energy(&mesh, &u) < 1e-20);
}

#[test]
fn loop_decomposition_reconstructs_moments_and_obeys_stokes() {
    let mesh = cube(0.25);
    let lp = face_loop(&mesh, "z1");
    assert_eq!(lp.len(), 16);
    assert!((lp.length - 4.0).abs() < 1e-14);
    let v = random(mesh.n_edges(), 7);
    let d = loop_decompose(&v, &lp, None, None).unwrap();
    let lam = lp.moments(&v);
    let n = lp.len();
    for i in 0..n {
        let next = if i + 1 == n { d.phi[0] } else { d.phi[i + 1] };
        assert!((lam[i] - (next - d.phi[i] + d.c * lp.edge_length(i))).abs() < 1e-13);
    }
    // circulation equals the flux of curl v through the face
    let flux = lp.flux(&mesh, &v);
    assert!((d.c - flux / lp.length).abs() <= 1e-12 * (1.0 + d.c.abs()));
}

#[test]
fn loop_zero_mean_shift() {
    let mesh = cube(0.25);
    let lp = face_loop(&mesh, "x0");
    let v = random(mesh.n_edges(), 8);
    let e: Vec<usize> = (0..4).collect();
    let d = loop_decompose(&v, &lp, None, Some(&e)).unwrap();
    let n = lp.len();
    let mean: f64 = e.iter().map(|&i| lp.edge_length(i) * (d.phi[i] + d.phi[(i + 1) % n]) / 2.0).sum::<f64>();
    assert!(mean.abs() < 1e-13);
}

#[test]
fn loop_constant_extension_hits_rates_and_respects_pins() {
    let mesh = cube(0.25);
    let lp = face_loop(&mesh, "z1");
    let n = lp.len();
    let rate = vec![0.7; n];
    let active: Vec<bool> = (0..n).map(|i| i < 8).collect();
    let mut pinned = vec![false; mesh.n_vertices()];
    pinned[lp.nodes[0]] = true;
    let w = loop_constant_extension(&mesh, &lp, &rate, &active, &pinned, None).unwrap();
    let lam = lp.moments(&edge_interpolate_rh(&mesh, &w));
    for i in 0..8 {
        assert!((lam[i] - 0.7 * lp.edge_length(i)).abs() < 1e-12);
    }
    assert_eq!(&w[3 * lp.nodes[0]..3 * lp.nodes[0] + 3], &[0.0, 0.0, 0.0]);

    // minimal in the loop L² norm: on z1 every loop edge is orthogonal to
    // e_z, so shifting free nodes along e_z keeps all constraints
    let loop_norm = |w: &[f64]| -> f64 {
        (0..n)
            .filter(|&i| active[i])
            .map(|i| {
                let (a, b) = (lp.nodes[i], lp.nodes[(i + 1) % n]);
                let l = lp.edge_length(i);
                (0..3).map(|c| l / 6.0 * (2.0 * w[3 * a + c].powi(2) + 2.0 * w[3 * b + c].powi(2) + 2.0 * w[3 * a + c] * w[3 * b + c])).sum::<f64>()
            })
            .sum()
    };
    let base = loop_norm(&w);
    assert!(base > 0.0);
    for (k, t) in [0.3, -0.2, 0.05].into_iter().enumerate() {
        let mut z = w.clone();
        for (j, &node) in lp.nodes.iter().enumerate() {
            if !pinned[node] && (j + k) % 2 == 0 {
                z[3 * node + 2] += t;
            }
        }
        let lz = lp.moments(&edge_interpolate_rh(&mesh, &z));
        assert!(max_diff(&lz[..8], &lam[..8]) < 1e-12);
        assert!(loop_norm(&z) >= base - 1e-14);
    }
    let zero = loop_constant_extension(&mesh, &lp, &vec![0.0; n], &active, &pinned, None).unwrap();
    assert!(zero.iter().all(|x| *x == 0.0));
}

#[test]
fn epsilon_correction_has_zero_integral() {
    let mesh = cube(0.25);
    let lp = face_loop(&mesh, "z1");
    let e = vec![4, 5, 6, 7];
    let (e1, e2) = (vec![0, 1, 2, 3], vec![8, 9, 10, 11]);
    let eps = epsilon_correction(&lp, &e, &e1, &e2, 1.3).unwrap();
    let total: f64 = (0..lp.len()).map(|i| eps[i] * lp.edge_length(i)).sum();
    assert!(total.abs() < 1e-14);
    assert_eq!(eps[5], -1.3);
    assert!(epsilon_correction(&lp, &e, &[12], &e2, 1.0).is_err());
}

#[test]
fn junction_functionals_are_consecutive_differences() {
    assert_eq!(junction_functionals(&[1.0, 3.0, 2.5]), vec![2.0, -0.5]);
    assert!(junction_functionals(&[4.0]).is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rh_is_linear(seed in 0u64..1000, a in -3.0f64..3.0) {
        let mesh = cube(0.5);
        let w1 = random(3 * mesh.n_vertices(), seed);
        let w2 = random(3 * mesh.n_vertices(), seed + 1);
        let comb: Vec<f64> = w1.iter().zip(&w2).map(|(x, y)| a * x + y).collect();
        let lhs = edge_interpolate_rh(&mesh, &comb);
        let r1 = edge_interpolate_rh(&mesh, &w1);
        let r2 = edge_interpolate_rh(&mesh, &w2);
        let rhs: Vec<f64> = r1.iter().zip(&r2).map(|(x, y)| a * x + y).collect();
        prop_assert!(max_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn stokes_on_random_fields(seed in 0u64..1000) {
        let mesh = cube(0.25);
        let lp = face_loop(&mesh, "y0");
        let v = random(mesh.n_edges(), seed);
        let d = loop_decompose(&v, &lp, None, None).unwrap();
        prop_assert!((d.c - lp.flux(&mesh, &v) / lp.length).abs() <= 1e-12 * (1.0 + d.c.abs()));
    }
}
