use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use helmdec::config::ExperimentConfig;
use helmdec::decompose::HelmholtzSplit;
use helmdec::fem::{self, FieldRef, Norm};
use helmdec::hx::{hx_study, HxReport};
use helmdec::mesh::io::write_mesh;
use helmdec::sparse::field_text;
use helmdec::verify::{input_field, invariant_battery, level_h, run_route, sweep};
use helmdec::{Error, Result, TetMesh, TraceSet};

#[derive(Parser)]
#[command(name = "helmdec", version, about = "Trace-preserving Helmholtz decompositions of edge-element fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the mesh and trace tags at `level`.
    Mesh(Common),
    /// Split one seeded input field at `level`.
    Decompose(Common),
    /// Stability sweep over `levels`.
    Sweep(Common),
    /// Invariant battery at `level`.
    Battery(Common),
    /// HX preconditioner study over `hx.levels` plus the jump sweep.
    Hx(Common),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::UnknownGeometry(_)
        | Error::UnknownEntity(_)
        | Error::NotOnBoundary(_)
        | Error::InvalidMeshSize(_)
        | Error::TooFewLevels(_)
        | Error::Parse { .. }
        | Error::Unsupported(_) => 2,
        Error::Precondition { .. } => 3,
        Error::Incompatible(_) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Error::Incompatible(fs) = &e {
                for (i, f) in fs.iter().enumerate() {
                    eprintln!("F_{} = {f:e}", i + 1);
                }
            }
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    std::fs::create_dir_all(&cfg.out)?;
    Ok(cfg)
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    config_hash: String,
    config: &'a ExperimentConfig,
    report: T,
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_json<T: Serialize>(cfg: &ExperimentConfig, name: &str, report: T) -> Result<()> {
    let env = Envelope { config_hash: cfg.hash(), config: cfg, report };
    let text = serde_json::to_string_pretty(&env).map_err(|e| Error::Config(e.to_string()))? + "\n";
    write(&cfg.out.join(name), &text)
}

fn write_csv(cfg: &ExperimentConfig, name: &str, body: &str) -> Result<()> {
    write(&cfg.out.join(name), &format!("# config_hash {}\n{body}", cfg.hash()))
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Mesh(c) => cmd_mesh(&load(&c)?),
        Command::Decompose(c) => cmd_decompose(&load(&c)?),
        Command::Sweep(c) => cmd_sweep(&load(&c)?),
        Command::Battery(c) => cmd_battery(&load(&c)?),
        Command::Hx(c) => cmd_hx(&load(&c)?),
    }
}

fn cmd_mesh(cfg: &ExperimentConfig) -> Result<()> {
    let mesh = TetMesh::catalog(cfg.geometry, level_h(cfg.level))?;
    TraceSet::tag(&mesh, &cfg.gamma)?;
    let text = format!("helmdec-mesh 1\n# config_hash {}\n", cfg.hash())
        + write_mesh(&mesh, &cfg.gamma).strip_prefix("helmdec-mesh 1\n").expect("header");
    write(&cfg.out.join(format!("{}_L{}.mesh", cfg.stem(), cfg.level)), &text)
}

#[derive(Serialize)]
struct DecomposeSummary {
    geometry: String,
    gamma: Vec<String>,
    level: u32,
    h: f64,
    seed: u64,
    input: helmdec::config::InputKind,
    route: helmdec::decompose::Route,
    claim: String,
    ratios: helmdec::decompose::Ratios,
    v_curl: f64,
    w_h1: f64,
    r_l2: f64,
    identity_residual: f64,
    trace_violations: usize,
    loops: Vec<helmdec::decompose::LoopRecord>,
}

fn summarize(cfg: &ExperimentConfig, mesh: &TetMesh, trace: &TraceSet, v: &[f64], s: &HelmholtzSplit) -> Result<DecomposeSummary> {
    Ok(DecomposeSummary {
        geometry: cfg.geometry.as_str().into(),
        gamma: cfg.gamma.clone(),
        level: cfg.level,
        h: mesh.h,
        seed: cfg.seed,
        input: cfg.input,
        route: s.route,
        claim: s.claim.id(),
        ratios: s.ratios(mesh, v),
        v_curl: fem::norm(mesh, FieldRef::Edge(v), Norm::Curl)?,
        w_h1: fem::norm(mesh, FieldRef::NodalVector(&s.w), Norm::H1)?,
        r_l2: fem::norm(mesh, FieldRef::Edge(&s.r), Norm::L2)?,
        identity_residual: s.identity_residual(mesh, v),
        trace_violations: s.trace_violations(&trace.fine),
        loops: s.loops.clone(),
    })
}

fn cmd_decompose(cfg: &ExperimentConfig) -> Result<()> {
    let mesh = TetMesh::catalog(cfg.geometry, level_h(cfg.level))?;
    let trace = TraceSet::tag(&mesh, &cfg.gamma)?;
    let v = input_field(&mesh, &trace, cfg.input, cfg.seed)?;
    let s = run_route(&mesh, &v, &trace, cfg.route)?;
    let sum = summarize(cfg, &mesh, &trace, &v, &s)?;
    let stem = format!("{}_L{}", cfg.stem(), cfg.level);
    let hash = cfg.hash();
    for (tag, x) in [("p", &s.p), ("w", &s.w), ("r", &s.r)] {
        write(&cfg.out.join(format!("{stem}.{tag}.txt")), &format!("# config_hash {hash}\n{}", field_text(x)))?;
    }
    println!("route {}", s.route.as_str());
    println!("claim {} ({})", sum.claim, if s.claim.log_factor { "log claim" } else { "no-log claim" });
    println!("w_h1 {:e}", sum.w_h1);
    println!("r_l2 {:e}", sum.r_l2);
    println!("identity_residual {:e}", sum.identity_residual);
    println!("trace_violations {}", sum.trace_violations);
    write_json(cfg, &format!("{stem}.summary.json"), &sum)
}

fn cmd_sweep(cfg: &ExperimentConfig) -> Result<()> {
    let r = sweep(cfg.geometry, &cfg.gamma, cfg.route, &cfg.levels, cfg.samples, cfg.seed)?;
    println!("claim {} fit a={:e} b={:e} residual={:e} verdict {}", r.claim, r.fit.a, r.fit.b, r.fit.residual, pass(r.pass));
    write_csv(cfg, &format!("{}_sweep.csv", cfg.stem()), &r.csv())?;
    write_json(cfg, &format!("{}_sweep.json", cfg.stem()), &r)
}

fn pass(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cmd_battery(cfg: &ExperimentConfig) -> Result<()> {
    let ledger = invariant_battery(cfg.geometry, &cfg.gamma, cfg.route, cfg.level, cfg.seed)?;
    for c in &ledger.checks {
        println!("{} {:e} (tol {:e}) {}", c.name, c.residual, c.tol, pass(c.pass));
    }
    write_csv(cfg, &format!("{}_L{}_battery.csv", cfg.stem(), cfg.level), &ledger.csv())?;
    write_json(cfg, &format!("{}_L{}_battery.json", cfg.stem(), cfg.level), &ledger)
}

fn cmd_hx(cfg: &ExperimentConfig) -> Result<()> {
    let o = &cfg.hx;
    let r = hx_study(cfg.geometry, &cfg.gamma, &o.levels, &o.alpha, o.jump_block, o.beta, o.tol, o.maxit, cfg.seed)?;
    for row in r.levels.iter().chain(&r.jumps) {
        println!("level {} alpha {:e}: pcg {} cg {}", row.level, row.alpha, row.pcg_iterations, row.cg_iterations);
    }
    println!("iteration fit a={:e} b={:e} residual={:e} verdict {}", r.fit.a, r.fit.b, r.fit.residual, pass(r.fit_pass));
    write_csv(cfg, &format!("{}_hx_levels.csv", cfg.stem()), &HxReport::csv(&r.levels))?;
    write_csv(cfg, &format!("{}_hx_jumps.csv", cfg.stem()), &HxReport::csv(&r.jumps))?;
    write_json(cfg, &format!("{}_hx.json", cfg.stem()), &r)
}
