//! Stability sweeps over refinement levels, growth fits and the invariant
//! battery.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decompose::{self, random, HelmholtzSplit, Ratios, Route};
use crate::error::{Error, Result};
use crate::fem::{self, FieldRef, Norm};
use crate::mesh::{GeometryId, TetMesh, TraceSet};
use crate::operators::{curl_harmonic_extend, edge_interpolate_rh};

/// Relative fit residual accepted by a sweep.
pub const FIT_RESIDUAL_MAX: f64 = 0.2;
/// For claims without a log factor: `|b| ≤ SLOPE_MAX · a`.
pub const SLOPE_MAX: f64 = 0.1;

/// Least-squares fit `r(h) ≈ a + b·log(1/h)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthFit {
    pub a: f64,
    pub b: f64,
    /// Root-mean-square misfit divided by the mean ratio.
    pub residual: f64,
}

pub fn fit_log_growth(hs: &[f64], ratios: &[f64]) -> Result<GrowthFit> {
    if hs.len() < 3 || hs.len() != ratios.len() {
        return Err(Error::TooFewLevels(hs.len().min(ratios.len())));
    }
    let n = hs.len() as f64;
    let x: Vec<f64> = hs.iter().map(|h| (1.0 / h).ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = ratios.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - mx) * (xi - mx)).sum();
    let sxy: f64 = x.iter().zip(ratios).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let rms = (x.iter().zip(ratios).map(|(xi, yi)| (yi - a - b * xi).powi(2)).sum::<f64>() / n).sqrt();
    let residual = if my.abs() > 0.0 { rms / my.abs() } else { rms };
    Ok(GrowthFit { a, b, residual })
}

/// PASS iff the fit residual is within policy, and for claims without a log
/// factor the slope is small against the intercept.
pub fn verdict(fit: &GrowthFit, log_claim: bool) -> bool {
    fit.residual <= FIT_RESIDUAL_MAX && (log_claim || fit.b.abs() <= SLOPE_MAX * fit.a)
}

/// Which constructor a sweep exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RouteChoice {
    Auto,
    Named(Route),
}

impl RouteChoice {
    pub fn parse(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(RouteChoice::Auto);
        }
        ROUTES
            .iter()
            .find(|r| r.as_str() == s)
            .map(|r| RouteChoice::Named(*r))
            .ok_or_else(|| Error::Config(format!("unknown route `{s}`")))
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RouteChoice::Auto => "auto",
            RouteChoice::Named(r) => r.as_str(),
        }
    }
}

/// Every route the dispatcher can select.
pub const ROUTES: [Route; 11] = [
    Route::Kernel,
    Route::FaceTrace,
    Route::Loop,
    Route::Edge,
    Route::IsolatedVertexUnion,
    Route::FacePlusEdge,
    Route::FacePlusEdgeExtended,
    Route::DisjointEdges,
    Route::DisjointEdgesSplit,
    Route::EdgeJunction,
    Route::VertexJunction,
];

/// Decompose with the chosen route. A named route other than the kernel must
/// be the one the dispatcher selects for this geometry and trace.
pub fn run_route(mesh: &TetMesh, v: &[f64], trace: &TraceSet, route: RouteChoice) -> Result<HelmholtzSplit> {
    match route {
        RouteChoice::Auto => decompose::decompose(mesh, v, trace),
        RouteChoice::Named(Route::Kernel) => {
            let s = decompose::decompose(mesh, v, trace)?;
            if s.route == Route::Kernel {
                Ok(s)
            } else {
                Err(Error::Unsupported(format!("kernel route does not apply; dispatcher selects {}", s.route.as_str())))
            }
        }
        RouteChoice::Named(r) => {
            let s = decompose::decompose(mesh, v, trace)?;
            if s.route == r {
                Ok(s)
            } else {
                Err(Error::Unsupported(format!("route {} does not apply; dispatcher selects {}", r.as_str(), s.route.as_str())))
            }
        }
    }
}

/// Mesh spacing of level `k`.
pub fn level_h(k: u32) -> f64 {
    0.5f64.powi(k as i32)
}

/// Seed of sample `s` at level `k`.
pub fn sample_seed(seed: u64, k: u32, s: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(((k as u64) << 32) | s as u64)
}

/// Random admissible field for a trace; on vertex junctions it is projected
/// onto the compatible subspace so that the split exists.
pub fn sample_field(mesh: &TetMesh, trace: &TraceSet, seed: u64) -> Result<Vec<f64>> {
    let mut rng = random::rng(seed);
    let v = random::admissible_field(mesh, &trace.fine, &mut rng);
    if decompose::is_vertex_junction(mesh) {
        decompose::project_compatible(mesh, &v, trace)
    } else {
        Ok(v)
    }
}

/// Input field family used by `decompose` and `battery`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// Random admissible field (zero on the trace).
    Random,
    /// Random admissible field projected onto the junction-compatible
    /// subspace (identity away from vertex junctions).
    Compatible,
    /// Gradient of a random nodal field vanishing on the trace.
    Gradient,
    /// Compatible field plus a single-block loop perturbation on vertex
    /// junctions; a nonzero trace moment elsewhere.
    Violation,
}

/// Seeded input field of the given family.
pub fn input_field(mesh: &TetMesh, trace: &TraceSet, kind: InputKind, seed: u64) -> Result<Vec<f64>> {
    match kind {
        InputKind::Random => Ok(random::admissible_field(mesh, &trace.fine, &mut random::rng(seed))),
        InputKind::Compatible => sample_field(mesh, trace, seed),
        InputKind::Gradient => Ok(random::gradient_field(mesh, &trace.fine, &mut random::rng(seed)).1),
        InputKind::Violation => {
            let mut v = sample_field(mesh, trace, seed)?;
            if decompose::is_vertex_junction(mesh) {
                let probes = decompose::vertex_junction_probe_edges(mesh, trace)?;
                let e = *probes
                    .first()
                    .ok_or_else(|| Error::Config("no loop block carries a compatibility functional".into()))?;
                v[e] += 1.0;
            } else {
                let e = trace
                    .fine
                    .edges
                    .iter()
                    .position(|x| *x)
                    .ok_or_else(|| Error::Config("violation input needs a nonempty trace".into()))?;
                v[e] = 1.0;
            }
            Ok(v)
        }
    }
}

fn pool() -> rayon::ThreadPool {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("HELMDEC_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        b = b.num_threads(n.max(1));
    }
    b.build().expect("thread pool")
}

/// One refinement level of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelRow {
    pub level: u32,
    pub h: f64,
    /// Max over samples of `‖w‖₁` against the claimed reference norm.
    pub ratio: f64,
    pub w_h1_over_curl_semi: Option<f64>,
    pub w_h1_over_curl: Option<f64>,
    pub r_scaled_over_curl_semi: Option<f64>,
    pub r_scaled_over_curl: Option<f64>,
    pub wp_over_l2: Option<f64>,
    pub wp_over_curl: Option<f64>,
    pub max_identity_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub geometry: String,
    pub gamma: Vec<String>,
    pub route: String,
    pub claim: String,
    pub seed: u64,
    pub samples: usize,
    pub levels: Vec<LevelRow>,
    pub fit: GrowthFit,
    pub pass: bool,
}

fn max_opt(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    xs.flatten().fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))))
}

impl StabilityReport {
    pub fn csv(&self) -> String {
        let mut s = String::from(
            "level,h,ratio,w_h1_over_curl_semi,w_h1_over_curl,r_scaled_over_curl_semi,r_scaled_over_curl,wp_over_l2,wp_over_curl,max_identity_residual\n",
        );
        let o = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
        for r in &self.levels {
            s.push_str(&format!(
                "{},{},{:e},{},{},{},{},{},{},{:e}\n",
                r.level,
                r.h,
                r.ratio,
                o(r.w_h1_over_curl_semi),
                o(r.w_h1_over_curl),
                o(r.r_scaled_over_curl_semi),
                o(r.r_scaled_over_curl),
                o(r.wp_over_l2),
                o(r.wp_over_curl),
                r.max_identity_residual
            ));
        }
        s
    }
}

/// Sweep the levels `2^-k`, decomposing `samples` seeded admissible fields
/// per level and recording the worst ratio against the claimed bound.
pub fn sweep(
    geometry: GeometryId,
    gamma: &[String],
    route: RouteChoice,
    levels: &[u32],
    samples: usize,
    seed: u64,
) -> Result<StabilityReport> {
    if levels.len() < 3 {
        return Err(Error::TooFewLevels(levels.len()));
    }
    if samples == 0 {
        return Err(Error::Config("samples must be positive".into()));
    }
    let mut levels = levels.to_vec();
    levels.sort_unstable();
    levels.dedup();
    let pool = pool();
    let mut rows = Vec::new();
    let mut claim = None;
    for &k in &levels {
        let mesh = TetMesh::catalog(geometry, level_h(k))?;
        let trace = TraceSet::tag(&mesh, gamma)?;
        let results: Vec<Result<(Ratios, f64, String)>> = pool.install(|| {
            (0..samples)
                .into_par_iter()
                .map(|s| {
                    let v = sample_field(&mesh, &trace, sample_seed(seed, k, s))?;
                    let split = run_route(&mesh, &v, &trace, route)?;
                    Ok((split.ratios(&mesh, &v), split.identity_residual(&mesh, &v), split.claim.id()))
                })
                .collect()
        });
        let results: Vec<(Ratios, f64, String)> = results.into_iter().collect::<Result<_>>()?;
        claim.get_or_insert_with(|| results[0].2.clone());
        let rs: Vec<&Ratios> = results.iter().map(|r| &r.0).collect();
        rows.push(LevelRow {
            level: k,
            h: level_h(k),
            ratio: max_opt(rs.iter().map(|r| r.claimed)).unwrap_or(0.0),
            w_h1_over_curl_semi: max_opt(rs.iter().map(|r| r.w_h1_over_curl_semi)),
            w_h1_over_curl: max_opt(rs.iter().map(|r| r.w_h1_over_curl)),
            r_scaled_over_curl_semi: max_opt(rs.iter().map(|r| r.r_scaled_over_curl_semi)),
            r_scaled_over_curl: max_opt(rs.iter().map(|r| r.r_scaled_over_curl)),
            wp_over_l2: max_opt(rs.iter().map(|r| r.wp_over_l2)),
            wp_over_curl: max_opt(rs.iter().map(|r| r.wp_over_curl)),
            max_identity_residual: results.iter().map(|r| r.1).fold(0.0, f64::max),
        });
    }
    let claim = claim.unwrap_or_default();
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let fit = fit_log_growth(&hs, &ratios)?;
    let pass = verdict(&fit, claim.ends_with("-log"));
    Ok(StabilityReport {
        geometry: geometry.as_str().into(),
        gamma: gamma.to_vec(),
        route: route.as_str().into(),
        claim,
        seed,
        samples,
        levels: rows,
        fit,
        pass,
    })
}

/// One line of the invariant ledger.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: &str, residual: f64, tol: f64) -> Self {
        Check { name: name.into(), residual, tol, pass: residual <= tol }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ledger {
    pub geometry: String,
    pub gamma: Vec<String>,
    pub route: String,
    pub seed: u64,
    pub level: u32,
    pub checks: Vec<Check>,
}

impl Ledger {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("check,residual,tol,pass\n");
        for c in &self.checks {
            s.push_str(&format!("{},{:e},{:e},{}\n", c.name, c.residual, c.tol, c.pass));
        }
        s
    }
}

/// Elementwise `max |curl(r_h w) - curl w|` for a nodal vector field.
pub fn commuting_residual(mesh: &TetMesh, w: &[f64]) -> f64 {
    let a = fem::curl_per_tet(mesh, &edge_interpolate_rh(mesh, w));
    let b = fem::curl_nodal_per_tet(mesh, w);
    a.iter().zip(&b).flat_map(|(x, y)| (0..3).map(move |c| (x[c] - y[c]).abs())).fold(0.0, f64::max)
}

/// Largest `|C - flux/l| / (1 + |C|)` over the loop records of a split.
pub fn stokes_residual(split: &HelmholtzSplit) -> f64 {
    split.loops.iter().map(|l| (l.c - l.flux_over_length).abs() / (1.0 + l.c.abs())).fold(0.0, f64::max)
}

/// `(‖w‖₁ + h⁻¹‖R‖₀) / ‖q‖₁` for a split of `∇q`.
pub fn absorption_ratio(mesh: &TetMesh, split: &HelmholtzSplit, q: &[f64]) -> Result<f64> {
    let w1 = fem::norm(mesh, FieldRef::NodalVector(&split.w), Norm::H1)?;
    let r0 = fem::norm(mesh, FieldRef::Edge(&split.r), Norm::L2)?;
    let q1 = fem::norm(mesh, FieldRef::Nodal(q), Norm::H1)?;
    Ok(if q1 > 0.0 { (w1 + r0 / mesh.h) / q1 } else { w1 + r0 / mesh.h })
}

/// Every assertable invariant on one mesh level, with measured residuals.
pub fn invariant_battery(
    geometry: GeometryId,
    gamma: &[String],
    route: RouteChoice,
    level: u32,
    seed: u64,
) -> Result<Ledger> {
    let mesh = TetMesh::catalog(geometry, level_h(level))?;
    let trace = TraceSet::tag(&mesh, gamma)?;
    let mut checks = Vec::new();

    let zero = vec![0.0; mesh.n_edges()];
    let s0 = run_route(&mesh, &zero, &trace, route)?;
    let zmax = sparse_max(&s0.p).max(sparse_max(&s0.w)).max(sparse_max(&s0.r));
    checks.push(Check::new("zero_input", zmax, 0.0));

    let v = sample_field(&mesh, &trace, seed)?;
    let s = run_route(&mesh, &v, &trace, route)?;
    checks.push(Check::new("identity", s.identity_residual(&mesh, &v), 1e-10));
    checks.push(Check::new("trace_exact", s.trace_violations(&trace.fine) as f64, 0.0));
    checks.push(Check::new("stokes", stokes_residual(&s), 1e-12));

    let mut rng = random::rng(seed ^ 0x5151);
    let (q, g) = random::gradient_field(&mesh, &trace.fine, &mut rng);
    let sg = run_route(&mesh, &g, &trace, route)?;
    checks.push(Check::new("gradient_absorption", absorption_ratio(&mesh, &sg, &q)?, 1e-9));
    checks.push(Check::new("gradient_trace_exact", sg.trace_violations(&trace.fine) as f64, 0.0));

    let w = random::nodal_vector_field(&mesh, &mut rng);
    checks.push(Check::new("commuting_curl", commuting_residual(&mesh, &w), 1e-12));
    let p = random::nodal_field(&mesh, &crate::mesh::FineTrace::empty(&mesh), &mut rng);
    let gp = mesh.ops().grad.matvec(&p);
    // r_h of a constant vector field equals the incidence of its linear potential
    let c = [0.3, -1.1, 0.7];
    let lin: Vec<f64> = mesh.vertices.iter().map(|x| c[0] * x[0] + c[1] * x[1] + c[2] * x[2]).collect();
    let wc: Vec<f64> = (0..3 * mesh.n_vertices()).map(|i| c[i % 3]).collect();
    let rh = edge_interpolate_rh(&mesh, &wc);
    let rh_err = rh.iter().zip(&mesh.ops().grad.matvec(&lin)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    checks.push(Check::new("rh_gradient", rh_err, 1e-12));
    let curl_grad = fem::curl_per_tet(&mesh, &gp).iter().flat_map(|c| c.iter().map(|x| x.abs())).fold(0.0, f64::max);
    checks.push(Check::new("curl_grad_zero", curl_grad, 1e-12));

    Ok(Ledger {
        geometry: geometry.as_str().into(),
        gamma: gamma.to_vec(),
        route: route.as_str().into(),
        seed,
        level,
        checks,
    })
}

fn sparse_max(x: &[f64]) -> f64 {
    crate::sparse::max_abs(x)
}

/// Per level, `max ‖E_h(v×n)‖_curl / ‖v‖_curl` over seeded fields, with the
/// growth fit; `None` where `v = 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceProbeReport {
    pub geometry: String,
    pub seed: u64,
    pub levels: Vec<(u32, f64, Option<f64>)>,
    pub fit: Option<GrowthFit>,
}

pub fn trace_inequality_probe(geometry: GeometryId, levels: &[u32], samples: usize, seed: u64) -> Result<TraceProbeReport> {
    if levels.len() < 3 {
        return Err(Error::TooFewLevels(levels.len()));
    }
    let mut rows = Vec::new();
    for &k in levels {
        let mesh = TetMesh::catalog(geometry, level_h(k))?;
        let empty = crate::mesh::FineTrace::empty(&mesh);
        let mut best: Option<f64> = None;
        for s in 0..samples {
            let mut rng = random::rng(sample_seed(seed, k, s));
            let v = random::admissible_field(&mesh, &empty, &mut rng);
            best = max_opt([best, probe_quotient(&mesh, &v)?].into_iter());
        }
        rows.push((k, level_h(k), best));
    }
    let fit = if rows.iter().all(|r| r.2.is_some()) {
        let hs: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let qs: Vec<f64> = rows.iter().map(|r| r.2.unwrap()).collect();
        Some(fit_log_growth(&hs, &qs)?)
    } else {
        None
    };
    Ok(TraceProbeReport { geometry: geometry.as_str().into(), seed, levels: rows, fit })
}

/// `‖E_h(v×n)‖_curl / ‖v‖_curl`, `None` for a zero field.
pub fn probe_quotient(mesh: &TetMesh, v: &[f64]) -> Result<Option<f64>> {
    let data: Vec<f64> = (0..mesh.n_edges()).map(|e| if mesh.boundary_edge[e] { v[e] } else { 0.0 }).collect();
    let u = curl_harmonic_extend(mesh, &data)?;
    let nu = fem::norm(mesh, FieldRef::Edge(&u), Norm::Curl)?;
    let nv = fem::norm(mesh, FieldRef::Edge(v), Norm::Curl)?;
    Ok((nv > 0.0).then(|| nu / nv))
}
