use helmdec::fem::{self, FieldRef, Kind, Norm, Space};
use helmdec::mesh::{FineTrace, GeometryId, TetMesh, TraceSet};
use helmdec::Error;
use nalgebra::{Matrix3, Matrix4, Matrix6, Vector3, Vector4, Vector6};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn v3(p: [f64; 3]) -> Vector3<f64> {
    Vector3::new(p[0], p[1], p[2])
}

/// Degree-2 exact four-point rule on a tetrahedron (weights sum to 1).
fn quad_points(x: &[[f64; 3]; 4]) -> Vec<Vector3<f64>> {
    let a = 0.585_410_196_624_968_5;
    let b = 0.138_196_601_125_010_5;
    (0..4)
        .map(|k| {
            let mut p = Vector3::zeros();
            for (i, xi) in x.iter().enumerate() {
                p += v3(*xi) * if i == k { a } else { b };
            }
            p
        })
        .collect()
}

fn volume(x: &[[f64; 3]; 4]) -> f64 {
    let m = Matrix3::from_columns(&[v3(x[1]) - v3(x[0]), v3(x[2]) - v3(x[0]), v3(x[3]) - v3(x[0])]);
    m.determinant().abs() / 6.0
}

/// Oracle edge-field energy: on each tet fit `a + b × x` to the six edge
/// moments, then integrate by quadrature.
fn edge_oracle(mesh: &TetMesh, v: &[f64]) -> (f64, f64) {
    let (mut mass, mut curl) = (0.0, 0.0);
    for k in 0..mesh.n_tets() {
        let x = mesh.tet_points(k);
        let mut m = Matrix6::zeros();
        let mut rhs = Vector6::zeros();
        for (row, &e) in mesh.tet_edges[k].iter().enumerate() {
            let [a, b] = mesh.edges[e];
            let (xa, xb) = (v3(mesh.vertices[a]), v3(mesh.vertices[b]));
            let d = xb - xa;
            let mid = (xa + xb) / 2.0;
            // (a + b × mid)·d = a·d + b·(mid × d)
            let c = mid.cross(&d);
            for i in 0..3 {
                m[(row, i)] = d[i];
                m[(row, 3 + i)] = c[i];
            }
            rhs[row] = v[e];
        }
        let s = m.lu().solve(&rhs).unwrap();
        let (a, b) = (Vector3::new(s[0], s[1], s[2]), Vector3::new(s[3], s[4], s[5]));
        let vol = volume(&x);
        for q in quad_points(&x) {
            mass += vol / 4.0 * (a + b.cross(&q)).norm_squared();
        }
        curl += vol * (2.0 * b).norm_squared();
    }
    (mass, curl)
}

fn nodal_oracle(mesh: &TetMesh, p: &[f64]) -> (f64, f64) {
    let (mut mass, mut stiff) = (0.0, 0.0);
    for k in 0..mesh.n_tets() {
        let x = mesh.tet_points(k);
        let mut m = Matrix4::zeros();
        let mut rhs = Vector4::zeros();
        for (r, &n) in mesh.tets[k].iter().enumerate() {
            m[(r, 0)] = 1.0;
            for i in 0..3 {
                m[(r, 1 + i)] = x[r][i];
            }
            rhs[r] = p[n];
        }
        let c = m.lu().solve(&rhs).unwrap();
        let g = Vector3::new(c[1], c[2], c[3]);
        let vol = volume(&x);
        for q in quad_points(&x) {
            mass += vol / 4.0 * (c[0] + g.dot(&q)).powi(2);
        }
        stiff += vol * g.norm_squared();
    }
    (mass, stiff)
}

/// Oracle face-field mass: fit `a + c x` to the four face fluxes.
fn face_oracle(mesh: &TetMesh, u: &[f64]) -> (f64, f64) {
    let (mut mass, mut div) = (0.0, 0.0);
    for k in 0..mesh.n_tets() {
        let x = mesh.tet_points(k);
        let mut m = Matrix4::zeros();
        let mut rhs = Vector4::zeros();
        for (r, &f) in mesh.tet_faces[k].iter().enumerate() {
            let [a, b, c] = mesh.faces[f].map(|i| v3(mesh.vertices[i]));
            let n = (b - a).cross(&(c - a)) / 2.0;
            let cen = (a + b + c) / 3.0;
            for i in 0..3 {
                m[(r, i)] = n[i];
            }
            m[(r, 3)] = cen.dot(&n);
            rhs[r] = u[f];
        }
        let s = m.lu().solve(&rhs).unwrap();
        let a = Vector3::new(s[0], s[1], s[2]);
        let vol = volume(&x);
        for q in quad_points(&x) {
            mass += vol / 4.0 * (a + s[3] * q).norm_squared();
        }
        div += vol * (3.0 * s[3]).powi(2);
    }
    (mass, div)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn quadratic_forms_match_quadrature() {
    for id in [GeometryId::UnitCube, GeometryId::Pyramid, GeometryId::ThreeCubeL, GeometryId::VertexJunctionStar] {
        let m = TetMesh::catalog(id, 0.25).unwrap();
        let ops = m.ops();
        let v = random(m.n_edges(), 1);
        let (mass, curl) = edge_oracle(&m, &v);
        assert!(rel(ops.mass_v.quad(&v), mass) < 1e-12, "{id}");
        assert!(rel(ops.stiff_v.quad(&v), curl) < 1e-12, "{id}");
        let p = random(m.n_vertices(), 2);
        let (mass, stiff) = nodal_oracle(&m, &p);
        assert!(rel(ops.mass_z.quad(&p), mass) < 1e-12, "{id}");
        assert!(rel(ops.stiff_z.quad(&p), stiff) < 1e-12, "{id}");
        let u = random(m.n_faces(), 3);
        let (mass, div) = face_oracle(&m, &u);
        assert!(rel(ops.mass_w.quad(&u), mass) < 1e-12, "{id}");
        assert!(rel(ops.stiff_w.quad(&u), div) < 1e-12, "{id}");
    }
}

#[test]
fn gradient_of_constant_and_linear() {
    let m = TetMesh::catalog(GeometryId::UnitCube, 0.25).unwrap();
    let g = m.ops().grad.matvec(&vec![1.0; m.n_vertices()]);
    assert!(g.iter().all(|x| *x == 0.0));
    let p: Vec<f64> = m.vertices.iter().map(|x| x[0]).collect();
    let g = m.ops().grad.matvec(&p);
    for (e, d) in (0..m.n_edges()).map(|e| (e, m.edge_vector(e))) {
        assert!((g[e] - d[0]).abs() < 1e-15);
        if d[1] == 0.0 && d[2] == 0.0 {
            assert_eq!(g[e], 0.25);
        }
    }
}

#[test]
fn curl_of_gradient_is_exactly_zero() {
    for id in GeometryId::ALL {
        let m = TetMesh::catalog(id, 0.5).unwrap();
        let cg = m.ops().curl.mul(&m.ops().grad);
        assert!(cg.values.iter().all(|x| *x == 0.0), "{id}");
    }
}

#[test]
fn single_edge_circulation() {
    let m = TetMesh::catalog(GeometryId::UnitCube, 0.5).unwrap();
    let e = 7;
    let mut v = vec![0.0; m.n_edges()];
    v[e] = 1.0;
    let flux = m.ops().curl.matvec(&v);
    let [a, b] = m.edges[e];
    for (f, tri) in m.faces.iter().enumerate() {
        if tri.contains(&a) && tri.contains(&b) {
            assert_eq!(flux[f].abs(), 1.0);
        } else {
            assert_eq!(flux[f], 0.0);
        }
    }
}

/// Face fluxes from the incidence map agree with the analytic per-tet curl.
#[test]
fn face_flux_matches_tet_curl() {
    let m = TetMesh::catalog(GeometryId::ThreeCubeL, 0.25).unwrap();
    let v = random(m.n_edges(), 4);
    let flux = m.ops().curl.matvec(&v);
    let curls = fem::curl_per_tet(&m, &v);
    for (f, tets) in m.face_tets.iter().enumerate() {
        let [a, b, c] = m.faces[f].map(|i| v3(m.vertices[i]));
        let n = (b - a).cross(&(c - a)) / 2.0;
        for &k in tets {
            assert!((v3(curls[k]).dot(&n) - flux[f]).abs() < 1e-12);
        }
    }
}

#[test]
fn constant_fields() {
    let m = TetMesh::catalog(GeometryId::UnitCube, 0.25).unwrap();
    let one = vec![1.0; m.n_vertices()];
    assert!((m.ops().mass_z.quad(&one) - 1.0).abs() < 1e-13);
    assert!(m.ops().stiff_z.quad(&one).abs() < 1e-13);
    let v: Vec<f64> = (0..m.n_edges()).map(|e| m.edge_vector(e)[0]).collect();
    assert!((fem::norm(&m, FieldRef::Edge(&v), Norm::L2).unwrap() - 1.0).abs() < 1e-13);
    assert!(fem::norm(&m, FieldRef::Edge(&v), Norm::CurlSemi).unwrap() < 1e-12);
    let z = vec![0.0; m.n_edges()];
    for n in [Norm::L2, Norm::Curl, Norm::CurlSemi] {
        assert_eq!(fem::norm(&m, FieldRef::Edge(&z), n).unwrap(), 0.0);
    }
}

#[test]
fn norm_kind_mismatch() {
    let m = TetMesh::catalog(GeometryId::UnitCube, 0.5).unwrap();
    let p = vec![0.0; m.n_vertices()];
    assert!(matches!(fem::norm(&m, FieldRef::Nodal(&p), Norm::Curl), Err(Error::NormKind { .. })));
    let v = vec![0.0; m.n_edges()];
    assert!(matches!(fem::norm(&m, FieldRef::Edge(&v), Norm::H1), Err(Error::NormKind { .. })));
    assert!(matches!(fem::norm(&m, FieldRef::Edge(&p), Norm::L2), Err(Error::Dimension { .. })));
}

#[test]
fn restrict_zero_behaviour() {
    let m = TetMesh::catalog(GeometryId::UnitCube, 0.25).unwrap();
    let v = vec![1.0; m.n_edges()];
    let b = FineTrace::boundary(&m);
    let r = fem::restrict_zero(FieldRef::Edge(&v), &b);
    for e in 0..m.n_edges() {
        assert_eq!(r[e], if m.boundary_edge[e] { 0.0 } else { 1.0 });
    }
    assert_eq!(fem::restrict_zero(FieldRef::Edge(&r), &b), r);
    let empty = TraceSet::empty(&m);
    assert_eq!(fem::restrict_zero(FieldRef::Edge(&v), &empty.fine), v);
}

#[test]
fn assembled_operators_symmetric() {
    let m = TetMesh::catalog(GeometryId::VertexJunctionStar, 0.25).unwrap();
    let ops = m.ops();
    for a in [&ops.mass_z, &ops.stiff_z, &ops.mass_v, &ops.stiff_v, &ops.mass_w, &ops.stiff_w] {
        assert!(a.symmetric);
        assert!(a.asymmetry() <= 1e-13);
    }
    let k3 = fem::assemble(&m, Space::Z3, Kind::Mass);
    assert_eq!(k3.nrows, 3 * m.n_vertices());
}

#[test]
fn weighted_assembly_is_linear() {
    let m = TetMesh::catalog(GeometryId::ThreeCubeL, 0.5).unwrap();
    let a = fem::assemble_weighted(&m, Space::V, Kind::Stiffness, &[1.0, 2.0, 3.0]);
    let b = fem::assemble_weighted(&m, Space::V, Kind::Stiffness, &[2.0, 4.0, 6.0]);
    let v = random(m.n_edges(), 9);
    assert!(rel(2.0 * a.quad(&v), b.quad(&v)) < 1e-13);
}

/// Zero extension of a field that vanishes on the block boundary keeps norms.
#[test]
fn zero_extension_preserves_norms() {
    let m = TetMesh::catalog(GeometryId::ThreeCubeL, 0.25).unwrap();
    let s = helmdec::mesh::Submesh::of_blocks(&m, &[0]);
    let mut w = random(3 * s.mesh.n_vertices(), 5);
    fem::zero_nodes3(&mut w, &s.mesh.boundary_node);
    let ext = s.extend_vec3(&w, m.n_vertices());
    let n1 = fem::norm(&s.mesh, FieldRef::NodalVector(&w), Norm::H1).unwrap();
    let n2 = fem::norm(&m, FieldRef::NodalVector(&ext), Norm::H1).unwrap();
    assert!(rel(n1, n2) < 1e-13);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Reversing vertex ids flips edge orientations; forms are invariant once
    /// the moments change sign accordingly.
    #[test]
    fn orientation_flip_invariance(seed in 0u64..1000) {
        let m = TetMesh::catalog(GeometryId::UnitCube, 0.5).unwrap();
        let n = m.n_vertices();
        let verts: Vec<_> = (0..n).map(|i| m.vertices[n - 1 - i]).collect();
        let tets: Vec<[usize; 4]> = m.tets.iter().map(|t| {
            let mut t = t.map(|i| n - 1 - i);
            t.swap(2, 3);
            t
        }).collect();
        let r = TetMesh::from_parts(m.complex.clone(), m.geometry, m.h, m.level, verts, tets, m.block_of_tet.clone());
        let v = random(m.n_edges(), seed);
        let mut vr = vec![0.0; r.n_edges()];
        for (e, [a, b]) in m.edges.iter().enumerate() {
            let (ra, rb) = (n - 1 - a, n - 1 - b);
            let er = r.edge_id(ra, rb).unwrap();
            vr[er] = if ra < rb { v[e] } else { -v[e] };
        }
        prop_assert!(rel(m.ops().mass_v.quad(&v), r.ops().mass_v.quad(&vr)) < 1e-12);
        prop_assert!(rel(m.ops().stiff_v.quad(&v), r.ops().stiff_v.quad(&vr)) < 1e-12);
    }

    #[test]
    fn forms_are_nonnegative(seed in 0u64..1000) {
        let m = TetMesh::catalog(GeometryId::Pyramid, 0.5).unwrap();
        let v = random(m.n_edges(), seed);
        prop_assert!(m.ops().mass_v.quad(&v) > 0.0);
        prop_assert!(m.ops().stiff_v.quad(&v) >= -1e-14);
        let p = random(m.n_vertices(), seed);
        prop_assert!(fem::norm(&m, FieldRef::Edge(&m.ops().grad.matvec(&p)), Norm::CurlSemi).unwrap() < 1e-12);
    }
}
