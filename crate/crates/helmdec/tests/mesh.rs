use std::collections::BTreeSet;

use helmdec::mesh::io::{read_mesh, write_mesh};
use helmdec::mesh::trace::check_extension_domain;
use helmdec::mesh::{Geometry, GeometryId, JunctionKind, Submesh, TetMesh, TraceSet, TET_EDGES};
use helmdec::Error;

#[test]
fn unit_cube_counts() {
    let m = TetMesh::catalog(GeometryId::UnitCube, 1.0).unwrap();
    assert_eq!((m.n_vertices(), m.n_tets(), m.n_edges()), (8, 6, 19));
    let m = TetMesh::catalog(GeometryId::UnitCube, 0.5).unwrap();
    assert_eq!((m.n_vertices(), m.n_tets()), (27, 48));
}

/// Count edges of the Kuhn subdivision by enumerating tets directly.
#[test]
fn edge_count_matches_brute_force() {
    let m = TetMesh::catalog(GeometryId::UnitCube, 0.25).unwrap();
    let mut set = BTreeSet::new();
    for t in &m.tets {
        for (i, j) in TET_EDGES {
            set.insert((t[i].min(t[j]), t[i].max(t[j])));
        }
    }
    assert_eq!(set.len(), m.n_edges());
}

#[test]
fn refinement_scales_counts() {
    let m = TetMesh::catalog(GeometryId::UnitCube, 1.0).unwrap();
    let r = m.refine().unwrap();
    assert_eq!(r.h, 0.5);
    assert_eq!(r.n_tets(), 8 * m.n_tets());
    let rr = r.refine().unwrap();
    assert_eq!(rr.h, 0.25);
    assert!(rr.is_conforming());
}

#[test]
fn invalid_sizes_rejected() {
    assert!(matches!(TetMesh::catalog(GeometryId::UnitCube, 0.3), Err(Error::InvalidMeshSize(_))));
    assert!(matches!(TetMesh::catalog(GeometryId::UnitCube, 0.0), Err(Error::InvalidMeshSize(_))));
    assert!("no_such_shape".parse::<GeometryId>().is_err());
}

#[test]
fn catalog_meshes_are_valid() {
    for id in GeometryId::ALL {
        let m = TetMesh::catalog(id, 0.25).unwrap();
        assert!(m.is_conforming(), "{id}");
        assert!(m.is_connected(), "{id}");
        let q = m.max_edge_length() / m.min_edge_length();
        assert!(q <= 4.0, "{id}: quasi-uniformity {q}");
        let r = m.refine().unwrap();
        let qr = r.max_edge_length() / r.min_edge_length();
        assert!((q - qr).abs() < 1e-12);
        assert!((r.max_edge_length() * 2.0 - m.max_edge_length()).abs() < 1e-12);
        // Contractible complexes; the junction pairs and star are contractible too.
        assert_eq!(m.euler_characteristic(), 1, "{id}");
        for j in &m.complex.junctions {
            assert_eq!(m.realized_junction(j.a, j.b), Some(j.kind), "{id} {j:?}");
        }
    }
}

#[test]
fn three_cube_l_has_three_labels() {
    let m = TetMesh::catalog(GeometryId::ThreeCubeL, 0.5).unwrap();
    let labels: BTreeSet<usize> = m.block_of_tet.iter().copied().collect();
    assert_eq!(labels.len(), 3);
    assert!(m.is_connected());
}

#[test]
fn junction_kinds() {
    let m = TetMesh::catalog(GeometryId::EdgeJunctionPair, 0.5).unwrap();
    assert_eq!(m.realized_junction(0, 1), Some(JunctionKind::Edge));
    let m = TetMesh::catalog(GeometryId::VertexJunctionPair, 0.5).unwrap();
    assert_eq!(m.realized_junction(0, 1), Some(JunctionKind::Vertex));
    let m = TetMesh::catalog(GeometryId::VertexJunctionStar, 0.5).unwrap();
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        assert_eq!(m.realized_junction(a, b), Some(JunctionKind::Vertex));
    }
}

#[test]
fn trace_components_and_flags() {
    let cube = TetMesh::catalog(GeometryId::UnitCube, 0.25).unwrap();
    let t = TraceSet::tag(&cube, &["z0"]).unwrap();
    assert_eq!(t.n_components(), 1);
    assert!(t.lipschitz[0]);
    let t = TraceSet::tag(&cube, &["z0", "z1"]).unwrap();
    assert_eq!(t.n_components(), 2);
    let pyr = TetMesh::catalog(GeometryId::Pyramid, 0.25).unwrap();
    let t = TraceSet::tag(&pyr, &["x0", "xz"]).unwrap();
    assert_eq!(t.n_components(), 1);
    assert!(!t.lipschitz[0]);
    assert!(t.isolated_vertex_union);
}

#[test]
fn trace_is_closed_and_idempotent() {
    let m = TetMesh::catalog(GeometryId::ThreeCubeL, 0.25).unwrap();
    let t = TraceSet::tag(&m, &["D1.z0", "D2.z0", "D3.z0"]).unwrap();
    for (f, v) in m.faces.iter().enumerate() {
        if t.fine.faces[f] {
            for i in 0..3 {
                assert!(t.fine.edges[m.edge_id(v[i], v[(i + 1) % 3]).unwrap()]);
                assert!(t.fine.nodes[v[i]]);
            }
        }
    }
    let again = TraceSet::tag(&m, &t.names()).unwrap();
    assert_eq!(again.fine, t.fine);
    // Every z = 0 boundary face is tagged and nothing else.
    for (f, v) in m.faces.iter().enumerate() {
        let on = v.iter().all(|&i| m.vertices[i][2] == 0.0);
        assert_eq!(t.fine.faces[f], on && m.boundary_face[f]);
    }
}

#[test]
fn unknown_or_interior_entities_rejected() {
    let m = TetMesh::catalog(GeometryId::ThreeCubeL, 0.5).unwrap();
    assert!(matches!(TraceSet::tag(&m, &["D1.q9"]), Err(Error::UnknownEntity(_))));
    assert!(matches!(TraceSet::tag(&m, &["D1.x1"]), Err(Error::NotOnBoundary(_))));
}

#[test]
fn assumption_checks() {
    let cube = TetMesh::catalog(GeometryId::UnitCube, 0.5).unwrap();
    let r = check_extension_domain(&cube, &TraceSet::tag(&cube, &["z0"]).unwrap());
    assert!(r.satisfiable && r.extended_domain_convex);
    let pyr = TetMesh::catalog(GeometryId::Pyramid, 0.5).unwrap();
    let r = check_extension_domain(&pyr, &TraceSet::tag(&pyr, &["x0", "xz"]).unwrap());
    assert!(!r.satisfiable);
    let l = TetMesh::catalog(GeometryId::ThreeCubeL, 0.5).unwrap();
    let spec = Geometry::get(GeometryId::ThreeCubeL).gamma_spec("concave").unwrap().entities.clone();
    let r = check_extension_domain(&l, &TraceSet::tag(&l, &spec).unwrap());
    assert!(r.satisfiable && r.extended_domain_convex);
    let r = check_extension_domain(&l, &TraceSet::tag(&l, &["D1.x0"]).unwrap());
    assert!(r.satisfiable && !r.extended_domain_convex);
}

#[test]
fn mesh_text_round_trip() {
    for id in [GeometryId::UnitCube, GeometryId::ThreeCubeL, GeometryId::Pyramid] {
        let m = TetMesh::catalog(id, 0.25).unwrap();
        let text = write_mesh(&m, &["x0".to_string()]);
        let (back, trace) = read_mesh(&text).unwrap();
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.tets, m.tets);
        assert_eq!(back.block_of_tet, m.block_of_tet);
        assert_eq!(back.n_edges(), m.n_edges());
        assert_eq!(trace, vec!["x0".to_string()]);
        assert_eq!(write_mesh(&back, &trace), text);
    }
    assert!(matches!(read_mesh("nonsense"), Err(Error::Parse { .. })));
}

#[test]
fn submesh_maps_are_consistent() {
    let m = TetMesh::catalog(GeometryId::ThreeCubeL, 0.25).unwrap();
    let s = Submesh::of_blocks(&m, &[1]);
    assert!(s.mesh.is_conforming());
    for (l, &g) in s.emap.iter().enumerate() {
        let [a, b] = s.mesh.edges[l];
        assert_eq!(m.edges[g], [s.vmap[a], s.vmap[b]]);
    }
    let x: Vec<f64> = (0..s.mesh.n_edges()).map(|i| i as f64).collect();
    let ext = s.extend_edges(&x, m.n_edges());
    assert_eq!(s.restrict_edges(&ext), x);
}
