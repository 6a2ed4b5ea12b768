use helmdec::decompose::{
    self, decompose, decompose_disjoint_edges, decompose_edge, random, vertex_junction_functionals, Route,
    VertexJunctionOutcome,
};
use helmdec::fem::{self, FieldRef, Norm};
use helmdec::mesh::{Geometry, GeometryId, TetMesh, TraceSet};
use helmdec::verify::{absorption_ratio, input_field, sample_field, stokes_residual, InputKind};
use helmdec::Error;
use proptest::prelude::*;

fn setup(g: GeometryId, spec: &str, h: f64) -> (TetMesh, TraceSet) {
    let mesh = TetMesh::catalog(g, h).unwrap();
    let names = helmdec::mesh::catalog::resolve_gamma(&Geometry::get(g), spec);
    let trace = TraceSet::tag(&mesh, &names).unwrap();
    (mesh, trace)
}

/// Every catalog trace spec plus the empty trace.
fn all_specs() -> Vec<(GeometryId, String)> {
    let mut out = Vec::new();
    for g in GeometryId::ALL {
        for s in Geometry::get(g).gamma_specs {
            out.push((g, s.name.to_string()));
        }
        out.push((g, String::new()));
    }
    out
}

#[test]
fn catalog_routes_and_claims() {
    use GeometryId::*;
    let table = [
        (UnitCube, "face", "kernel", "semi-nolog"),
        (UnitCube, "boundary", "kernel", "semi-nolog"),
        (UnitCube, "two_faces", "kernel", "full-nolog"),
        (UnitCube, "edge", "edge", "semi-log"),
        (UnitCube, "loop", "loop", "semi-log"),
        (UnitCube, "face_edge_touch", "face_plus_edge", "semi-log"),
        (UnitCube, "face_edge_far", "face_plus_edge", "full-log"),
        (UnitCube, "", "kernel", "semi-nolog"),
        (ThreeCubeL, "concave", "kernel", "semi-nolog"),
        (ThreeCubeL, "outer", "face_trace", "semi-log"),
        (Pyramid, "opposite", "isolated_vertex_union", "semi-log"),
        (CubeInBox, "shaded", "kernel", "semi-nolog"),
        (CubeInBox, "shaded_edge", "face_plus_edge_extended", "full-log"),
        (FourEdgeCube, "four_edges", "disjoint_edges_split", "full-log"),
        (FourEdgeCube, "two_edges", "disjoint_edges", "full-log"),
        (EdgeJunctionPair, "both", "edge_junction", "semi-nolog"),
        (EdgeJunctionPair, "one_side", "edge_junction", "semi-log"),
        (VertexJunctionPair, "corner", "vertex_junction", "semi-nolog"),
        (VertexJunctionPair, "far", "vertex_junction", "semi-log"),
    ];
    for (g, spec, route, claim) in table {
        let (mesh, trace) = setup(g, spec, 0.25);
        let v = sample_field(&mesh, &trace, 1).unwrap();
        let s = decompose(&mesh, &v, &trace).unwrap();
        assert_eq!(s.route.as_str(), route, "{g} {spec}");
        assert_eq!(s.claim.id(), claim, "{g} {spec}");
    }
}

#[test]
fn identity_and_exact_traces_on_every_spec() {
    for (g, spec) in all_specs() {
        let (mesh, trace) = setup(g, &spec, 0.25);
        for seed in 0..2 {
            let v = sample_field(&mesh, &trace, seed).unwrap();
            let s = decompose(&mesh, &v, &trace).unwrap();
            assert!(s.identity_residual(&mesh, &v) <= 1e-10, "{g} {spec}");
            assert_eq!(s.trace_violations(&trace.fine), 0, "{g} {spec}");
            assert!(stokes_residual(&s) <= 1e-12, "{g} {spec}");
        }
    }
}

#[test]
fn gradients_are_absorbed_on_every_route() {
    for (g, spec) in all_specs() {
        let (mesh, trace) = setup(g, &spec, 0.25);
        let (q, v) = random::gradient_field(&mesh, &trace.fine, &mut random::rng(11));
        let s = decompose(&mesh, &v, &trace).unwrap();
        let r = absorption_ratio(&mesh, &s, &q).unwrap();
        assert!(r <= 1e-9, "{g} {spec}: {r:e}");
        assert_eq!(s.trace_violations(&trace.fine), 0);
    }
}

#[test]
fn gradient_potential_is_recovered_when_the_trace_pins_constants() {
    let (mesh, trace) = setup(GeometryId::UnitCube, "boundary", 0.25);
    let (q, v) = random::gradient_field(&mesh, &trace.fine, &mut random::rng(2));
    let s = decompose(&mesh, &v, &trace).unwrap();
    let d = s.p.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(d < 1e-10, "{d:e}");
}

#[test]
fn zero_input_gives_zero_split() {
    for (g, spec) in all_specs() {
        let (mesh, trace) = setup(g, &spec, 0.25);
        let s = decompose(&mesh, &vec![0.0; mesh.n_edges()], &trace).unwrap();
        assert!(s.p.iter().chain(&s.w).chain(&s.r).all(|x| *x == 0.0), "{g} {spec}");
    }
}

#[test]
fn nonzero_trace_moment_is_reported() {
    let (mesh, trace) = setup(GeometryId::UnitCube, "face", 0.25);
    let mut v = vec![0.0; mesh.n_edges()];
    let e = trace.fine.edges.iter().position(|x| *x).unwrap();
    v[e] = 0.5;
    match decompose(&mesh, &v, &trace) {
        Err(Error::Precondition { edge, value, tail, head }) => {
            assert_eq!(edge, e);
            assert_eq!(value, 0.5);
            assert_eq!([tail, head], mesh.edges[e]);
        }
        other => panic!("expected a precondition error, got {other:?}"),
    }
    assert!(decompose(&mesh, &v[1..], &trace).is_err());
}

#[test]
fn single_component_edge_union_equals_edge_route() {
    let (mesh, trace) = setup(GeometryId::UnitCube, "edge", 0.25);
    let v = sample_field(&mesh, &trace, 5).unwrap();
    let a = decompose_disjoint_edges(&mesh, &v, &trace).unwrap();
    let b = decompose_edge(&mesh, &v, &trace).unwrap();
    assert_eq!(a.p, b.p);
    assert_eq!(a.w, b.w);
    assert_eq!(a.r, b.r);
}

#[test]
fn loop_routes_record_stokes_identity() {
    for (g, spec) in [
        (GeometryId::UnitCube, "edge"),
        (GeometryId::FourEdgeCube, "two_edges"),
        (GeometryId::VertexJunctionPair, "far"),
    ] {
        let (mesh, trace) = setup(g, spec, 0.25);
        let v = sample_field(&mesh, &trace, 3).unwrap();
        let s = decompose(&mesh, &v, &trace).unwrap();
        assert!(!s.loops.is_empty(), "{g} {spec}");
        for l in &s.loops {
            assert!((l.c - l.flux_over_length).abs() <= 1e-12 * (1.0 + l.c.abs()));
        }
    }
}

#[test]
fn vertex_junction_gate() {
    for (g, spec) in [(GeometryId::VertexJunctionPair, "far"), (GeometryId::VertexJunctionStar, "bases")] {
        let (mesh, trace) = setup(g, spec, 0.25);
        let (_, grad) = random::gradient_field(&mesh, &trace.fine, &mut random::rng(4));
        let f = vertex_junction_functionals(&mesh, &grad, &trace).unwrap();
        assert!(!f.is_empty());
        assert!(f.iter().all(|x| x.abs() <= 1e-10), "{g}: {f:?}");
        assert!(matches!(decompose::decompose_vertex_junction(&mesh, &grad, &trace).unwrap(), VertexJunctionOutcome::Split(_)));

        let bad = input_field(&mesh, &trace, InputKind::Violation, 4).unwrap();
        let f = vertex_junction_functionals(&mesh, &bad, &trace).unwrap();
        assert!(f[0].abs() > 1e-3, "{g}: {f:?}");
        match decompose::decompose_vertex_junction(&mesh, &bad, &trace).unwrap() {
            VertexJunctionOutcome::Refused(r) => assert_eq!(r.functionals, f),
            VertexJunctionOutcome::Split(_) => panic!("incompatible input split"),
        }
        assert!(matches!(decompose(&mesh, &bad, &trace), Err(Error::Incompatible(_))));
    }
}

#[test]
fn compatible_projection_zeroes_functionals() {
    let (mesh, trace) = setup(GeometryId::VertexJunctionStar, "bases", 0.25);
    let v = input_field(&mesh, &trace, InputKind::Random, 9).unwrap();
    let f0 = vertex_junction_functionals(&mesh, &v, &trace).unwrap();
    assert!(f0.iter().any(|x| x.abs() > 1e-6));
    let p = decompose::project_compatible(&mesh, &v, &trace).unwrap();
    let f = vertex_junction_functionals(&mesh, &p, &trace).unwrap();
    let scale = fem::norm(&mesh, FieldRef::Edge(&p), Norm::Curl).unwrap();
    assert!(f.iter().all(|x| x.abs() <= 1e-10 * scale), "{f:?}");
    let changed = v.iter().zip(&p).filter(|(a, b)| a != b).count();
    assert!(changed <= decompose::vertex_junction_probe_edges(&mesh, &trace).unwrap().len());
}

#[test]
fn edge_junction_kernel_traces_block_each_side() {
    let (mesh, trace) = setup(GeometryId::EdgeJunctionPair, "", 0.25);
    let v = sample_field(&mesh, &trace, 1).unwrap();
    let s = decompose(&mesh, &v, &trace).unwrap();
    assert_eq!(s.route, Route::EdgeJunction);
    assert!(s.identity_residual(&mesh, &v) <= 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn split_identity_and_trace_hold(seed in 0u64..10_000, which in 0usize..5) {
        let cases = [
            (GeometryId::UnitCube, "face"),
            (GeometryId::UnitCube, "edge"),
            (GeometryId::ThreeCubeL, "outer"),
            (GeometryId::Pyramid, "opposite"),
            (GeometryId::EdgeJunctionPair, "one_side"),
        ];
        let (g, spec) = cases[which];
        let (mesh, trace) = setup(g, spec, 0.5);
        let v = sample_field(&mesh, &trace, seed).unwrap();
        let s = decompose(&mesh, &v, &trace).unwrap();
        prop_assert!(s.identity_residual(&mesh, &v) <= 1e-10);
        prop_assert_eq!(s.trace_violations(&trace.fine), 0);
    }

    #[test]
    fn split_is_linear(seed in 0u64..10_000, a in -2.0f64..2.0) {
        let (mesh, trace) = setup(GeometryId::UnitCube, "face", 0.5);
        let v1 = sample_field(&mesh, &trace, seed).unwrap();
        let v2 = sample_field(&mesh, &trace, seed + 1).unwrap();
        let v: Vec<f64> = v1.iter().zip(&v2).map(|(x, y)| a * x + y).collect();
        let (s, s1, s2) = (decompose(&mesh, &v, &trace).unwrap(), decompose(&mesh, &v1, &trace).unwrap(), decompose(&mesh, &v2, &trace).unwrap());
        for (x, (y, z)) in s.w.iter().zip(s1.w.iter().zip(&s2.w)) {
            prop_assert!((x - (a * y + z)).abs() < 1e-9);
        }
    }
}
