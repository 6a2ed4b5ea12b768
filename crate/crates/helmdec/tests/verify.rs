use helmdec::decompose::Route;
use helmdec::mesh::{GeometryId, TetMesh, TraceSet};
use helmdec::verify::{
    fit_log_growth, invariant_battery, level_h, probe_quotient, run_route, sample_field, sweep, trace_inequality_probe,
    verdict, RouteChoice,
};
use helmdec::Error;
use proptest::prelude::*;

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn constant_ratios_fit_flat() {
    let f = fit_log_growth(&[0.5, 0.25, 0.125, 0.0625], &[0.7; 4]).unwrap();
    assert!(f.b.abs() < 1e-12);
    assert!((f.a - 0.7).abs() < 1e-12);
    assert!(f.residual < 1e-12);
    assert!(verdict(&f, false));
}

#[test]
fn exact_log_series_is_recovered() {
    let hs = [0.5, 0.25, 0.125];
    let ys: Vec<f64> = hs.iter().map(|h: &f64| 2.0 + 0.5 * (1.0 / h).ln()).collect();
    let f = fit_log_growth(&hs, &ys).unwrap();
    assert!((f.a - 2.0).abs() < 1e-12 && (f.b - 0.5).abs() < 1e-12);
    assert!(f.residual < 1e-12);
    // a log slope is allowed only for log claims
    assert!(verdict(&f, true));
    assert!(!verdict(&f, false));
}

#[test]
fn too_few_levels_rejected() {
    assert!(matches!(fit_log_growth(&[0.5, 0.25], &[1.0, 1.0]), Err(Error::TooFewLevels(2))));
    let r = sweep(GeometryId::UnitCube, &names(&["z0"]), RouteChoice::Auto, &[1, 2], 1, 0);
    assert!(matches!(r, Err(Error::TooFewLevels(2))));
}

#[test]
fn named_route_must_match_dispatcher() {
    let mesh = TetMesh::catalog(GeometryId::UnitCube, 0.25).unwrap();
    let trace = TraceSet::tag(&mesh, &["z0"]).unwrap();
    let v = sample_field(&mesh, &trace, 0).unwrap();
    assert!(run_route(&mesh, &v, &trace, RouteChoice::Named(Route::Kernel)).is_ok());
    assert!(matches!(run_route(&mesh, &v, &trace, RouteChoice::Named(Route::Edge)), Err(Error::Unsupported(_))));
    assert!(RouteChoice::parse("nonsense").is_err());
    assert_eq!(RouteChoice::parse("face_trace").unwrap(), RouteChoice::Named(Route::FaceTrace));
}

#[test]
fn sweep_is_reproducible_and_sorted() {
    let g = names(&["x1y1"]);
    let a = sweep(GeometryId::UnitCube, &g, RouteChoice::Auto, &[3, 1, 2], 3, 9).unwrap();
    let b = sweep(GeometryId::UnitCube, &g, RouteChoice::Auto, &[1, 2, 3], 3, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.csv(), b.csv());
    assert!(a.levels.windows(2).all(|w| w[0].h > w[1].h));
    assert_eq!(a.claim, "semi-log");
    assert!(a.levels.iter().all(|r| r.max_identity_residual <= 1e-10));
    assert_eq!(a.csv().lines().count(), 4);
}

#[test]
fn battery_on_three_cube_l() {
    let ledger = invariant_battery(GeometryId::ThreeCubeL, &names(&["D1.x0", "D1.y0"]), RouteChoice::Auto, 2, 3).unwrap();
    let checks: Vec<&str> = ledger.checks.iter().map(|c| c.name.as_str()).collect();
    for name in ["zero_input", "identity", "trace_exact", "stokes", "gradient_absorption", "commuting_curl"] {
        assert!(checks.contains(&name), "{name}");
    }
    assert!(ledger.pass(), "{:?}", ledger.checks);
    let zero = &ledger.checks[0];
    assert_eq!(zero.residual, 0.0);
}

#[test]
fn trace_probe_guards_zero_and_stays_bounded() {
    let mesh = TetMesh::catalog(GeometryId::UnitCube, 0.25).unwrap();
    assert_eq!(probe_quotient(&mesh, &vec![0.0; mesh.n_edges()]).unwrap(), None);
    let r = trace_inequality_probe(GeometryId::UnitCube, &[1, 2, 3], 2, 1).unwrap();
    let qs: Vec<f64> = r.levels.iter().map(|l| l.2.unwrap()).collect();
    assert!(qs.iter().all(|q| *q > 0.0 && *q < 10.0), "{qs:?}");
    assert!(trace_inequality_probe(GeometryId::UnitCube, &[1, 2], 1, 1).is_err());
    assert_eq!(level_h(3), 0.125);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // appending a finer level that sits on the fitted line keeps a PASS
    #[test]
    fn verdict_is_monotone(ys in prop::collection::vec(0.5f64..2.0, 3..6), log in any::<bool>()) {
        let hs: Vec<f64> = (1..=ys.len() as u32).map(level_h).collect();
        let f = fit_log_growth(&hs, &ys).unwrap();
        prop_assume!(verdict(&f, log));
        let h = level_h(ys.len() as u32 + 1);
        let y = f.a + f.b * (1.0 / h).ln();
        prop_assume!(y > 0.0);
        let (mut hs2, mut ys2) = (hs.clone(), ys.clone());
        hs2.push(h);
        ys2.push(y);
        let f2 = fit_log_growth(&hs2, &ys2).unwrap();
        prop_assert!(verdict(&f2, log));
    }
}
