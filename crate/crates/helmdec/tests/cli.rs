use std::path::Path;
use std::process::{Command, Output};

use helmdec::mesh::io::read_mesh;
use helmdec::{GeometryId, TetMesh};

const SMALL: &str = r#"
geometry = "unit_cube"
gamma = "face"
levels = [1, 2, 3]
level = 2
samples = 2
seed = 5

[hx]
levels = [1, 2, 3]
alpha = [1.0, 1e2, 1e4, 1e6]
maxit = 3000
"#;

fn run(dir: &Path, cmd: &str, config: &str, extra: &[&str], threads: Option<&str>) -> Output {
    let cfg = dir.join(format!("{cmd}.toml"));
    std::fs::write(&cfg, config).unwrap();
    let mut c = Command::new(env!("CARGO_BIN_EXE_helmdec"));
    c.arg(cmd).arg("--config").arg(&cfg).arg("--out").arg(dir.join("out")).args(extra);
    if let Some(t) = threads {
        c.env("HELMDEC_THREADS", t);
    }
    c.output().unwrap()
}

/// Every regular file under `dir`, sorted, with its bytes.
fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn every_command_is_byte_reproducible() {
    for cmd in ["mesh", "decompose", "sweep", "battery", "hx"] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let oa = run(a.path(), cmd, SMALL, &[], Some("1"));
        let ob = run(b.path(), cmd, SMALL, &[], Some("3"));
        assert!(oa.status.success(), "{cmd}: {}", String::from_utf8_lossy(&oa.stderr));
        assert!(ob.status.success());
        let (sa, sb) = (snapshot(&a.path().join("out")), snapshot(&b.path().join("out")));
        assert!(!sa.is_empty());
        assert_eq!(sa, sb, "{cmd}");
        for (name, bytes) in &sa {
            assert!(String::from_utf8_lossy(bytes).contains("config_hash"), "{name}");
        }
    }
}

#[test]
fn seed_flag_overrides_config() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), "decompose", SMALL, &["--seed", "77"], None);
    assert!(o.status.success());
    let files = snapshot(&d.path().join("out"));
    assert!(files.iter().any(|(n, _)| n.contains("_s77_")));
}

#[test]
fn two_level_sweep_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), "sweep", &SMALL.replace("levels = [1, 2, 3]\nlevel", "levels = [1, 2]\nlevel"), &[], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("at least 3 levels"));
}

#[test]
fn malformed_configs_exit_with_code_two() {
    let d = tempfile::tempdir().unwrap();
    for bad in [
        "geometry = \"unit_cube\"\nunknown_key = 1\n",
        "geometry = \"moebius\"\n",
        "geometry = \"unit_cube\"\ngamma = \"q9\"\n",
        "geometry = \"unit_cube\"\nroute = \"teleport\"\n",
        "geometry = [\n",
    ] {
        let o = run(d.path(), "mesh", bad, &[], None);
        assert_eq!(o.status.code(), Some(2), "{bad}");
        assert!(!o.stderr.is_empty());
    }
    let missing = Command::new(env!("CARGO_BIN_EXE_helmdec"))
        .args(["mesh", "--config", "/nonexistent/helmdec.toml"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn precondition_violation_exits_three() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), "decompose", &format!("{SMALL}\n").replace("seed = 5", "seed = 5\ninput = \"violation\""), &[], None);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fine edge"));
}

#[test]
fn incompatible_junction_input_exits_four_and_prints_functionals() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "geometry = \"vertex_junction_pair\"\ngamma = \"far\"\nlevel = 2\ninput = \"violation\"\n";
    let o = run(d.path(), "decompose", cfg, &[], None);
    assert_eq!(o.status.code(), Some(4));
    let err = String::from_utf8_lossy(&o.stderr);
    let f1: f64 = err.lines().find_map(|l| l.strip_prefix("F_1 = ")).unwrap().parse().unwrap();
    assert!(f1.abs() > 1e-3);
}

#[test]
fn gradient_input_on_full_boundary() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "geometry = \"unit_cube\"\ngamma = \"boundary\"\nlevel = 2\ninput = \"gradient\"\n";
    let o = run(d.path(), "decompose", cfg, &[], None);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("no-log claim"));
    let json = snapshot(&d.path().join("out")).into_iter().find(|(n, _)| n.ends_with("summary.json")).unwrap().1;
    let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert!(v["report"]["w_h1"].as_f64().unwrap() < 1e-10);
    assert!(v["report"]["r_l2"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn mesh_export_round_trips() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "geometry = \"three_cube_L\"\ngamma = \"outer\"\nlevel = 2\n";
    assert!(run(d.path(), "mesh", cfg, &[], None).status.success());
    let (_, text) = snapshot(&d.path().join("out")).pop().unwrap();
    let (mesh, trace) = read_mesh(&String::from_utf8(text).unwrap()).unwrap();
    let reference = TetMesh::catalog(GeometryId::ThreeCubeL, 0.25).unwrap();
    assert_eq!(mesh.vertices, reference.vertices);
    assert_eq!(mesh.tets, reference.tets);
    assert_eq!((mesh.n_edges(), mesh.n_faces()), (reference.n_edges(), reference.n_faces()));
    assert_eq!(trace, vec!["D1.x0".to_string()]);
}

#[test]
fn hx_jump_sweep_has_one_row_per_alpha() {
    let d = tempfile::tempdir().unwrap();
    assert!(run(d.path(), "hx", SMALL, &[], None).status.success());
    let (_, csv) = snapshot(&d.path().join("out")).into_iter().find(|(n, _)| n.ends_with("hx_jumps.csv")).unwrap();
    let text = String::from_utf8(csv).unwrap();
    // hash line, header, 4 rows
    assert_eq!(text.lines().count(), 6);
}
