use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use metaplectic_cli::io::{parse_matrix_json, parse_snapshot};
use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_metaplectic"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, v: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_vec_pretty(v).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

fn oscillator_job(times: &[f64]) -> Value {
    json!({
        "command": "propagate",
        "M": {"kind": "oscillator"},
        "hbar": 1.0,
        "grid": {"x0": -12.0, "dx": 0.0234375, "N": 1024},
        "initial": {"type": "gaussian", "a": 1.0, "center": 1.0},
        "times": times,
        "method": "both",
        "dt": 0.005
    })
}

#[test]
fn factor_standard_form() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "c.json", &json!({"command": "factor", "matrix": {"n": 1, "rows": [[0, 1], [-1, 0]]}}));
    let o = run(&["--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert!(m["results"]["residual"].as_f64().unwrap() <= 1e-12);
    let a = parse_matrix_json(&fs::read_to_string(out.join("factor_1.json")).unwrap()).unwrap();
    let b = parse_matrix_json(&fs::read_to_string(out.join("factor_2.json")).unwrap()).unwrap();
    let j = nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    assert!((a * b - j).amax() <= 1e-12);
    assert_eq!(m["version"], json!(env!("CARGO_PKG_VERSION")));
    assert_eq!(m["tolerances"], json!({"sym": 1e-9, "free": 1e-6}));
}

#[test]
fn malformed_config_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let path = tmp.path().join("bad.json");
    fs::write(&path, "{\"command\": \"factor\", ").unwrap();
    let o = run(&["--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    assert!(!o.stderr.is_empty());

    let cfg = write_config(tmp.path(), "c.json", &json!({"command": "factor", "matrix": {"kind": "standard"}, "colour": 1}));
    let o = run(&["--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    let cfg = write_config(tmp.path(), "d.json", &json!({"command": "factor", "matrix": {"n": 1, "rows": [[1, 1], [0, 2]]}}));
    assert_eq!(run(&["--config", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn aliasing_is_a_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        "c.json",
        &json!({
            "command": "apply",
            "matrix": {"kind": "shear", "param": 0.01},
            "grid": {"x0": -12.0, "dx": 0.5, "N": 48},
            "initial": {"type": "gaussian", "a": 1.0}
        }),
    );
    let o = run(&["--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
}

#[test]
fn reproducible_manifests_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &json!({"command": "factor", "matrix": {"kind": "random", "n": 2}}));
    let dirs: Vec<_> = (0..2).map(|i| tmp.path().join(format!("run{i}"))).collect();
    for d in &dirs {
        let o = run(&["--config", &cfg, "--out", d.to_str().unwrap(), "--seed", "11", "--reproducible"]);
        assert!(o.status.success());
    }
    let a = fs::read(dirs[0].join("manifest.json")).unwrap();
    assert_eq!(a, fs::read(dirs[1].join("manifest.json")).unwrap());
    let m = manifest(&dirs[0]);
    assert_eq!(m["seed"], json!(11));
    assert_eq!(m["timestamp"], Value::Null);

    let stamped = tmp.path().join("stamped");
    run(&["--config", &cfg, "--out", stamped.to_str().unwrap(), "--seed", "11"]);
    assert!(manifest(&stamped)["timestamp"]["unix_seconds"].is_u64());
}

#[test]
fn propagation_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "job.json", &oscillator_job(&[0.5, 1.0, 1.5]));
    let o = run(&["--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for prefix in ["metaplectic", "splitstep"] {
        for i in 0..3 {
            assert!(out.join(format!("{prefix}_profile_{i:03}.csv")).exists());
            let snap = parse_snapshot(&fs::read(out.join(format!("{prefix}_snapshot_{i:03}.bin"))).unwrap()).unwrap();
            assert_eq!(snap.values().len(), 1024);
            assert!((snap.l2_norm() - 1.0).abs() < 1e-9);
        }
        let index = fs::read_to_string(out.join(format!("{prefix}_profiles.csv"))).unwrap();
        assert_eq!(index.lines().count(), 4);
        let snaps: Value = serde_json::from_slice(&fs::read(out.join(format!("{prefix}_snapshots.json"))).unwrap()).unwrap();
        assert_eq!(snaps.as_array().unwrap().len(), 3);
    }
    let errors = fs::read_to_string(out.join("errors.csv")).unwrap();
    let mut lines = errors.lines();
    assert_eq!(lines.next(), Some("t,l2_error,phase"));
    for line in lines {
        let err: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(err < 1e-4, "{line}");
    }
}

#[test]
fn overrides_and_flags_take_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "job.json", &oscillator_job(&[0.5]));
    let o = run(&[
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--override",
        "method=metaplectic",
        "--override",
        "initial.a=[1.0, -0.5]",
        "--tol-free",
        "1e-7",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["inputs"]["method"], json!("metaplectic"));
    assert_eq!(m["inputs"]["initial"]["a"], json!([1.0, -0.5]));
    assert_eq!(m["tolerances"]["free"], json!(1e-7));
    assert!(!out.join("splitstep_profiles.csv").exists());
}

#[test]
fn apply_reads_csv_matrix_and_wavefunction() {
    let tmp = tempfile::tempdir().unwrap();
    let mat = tmp.path().join("s.csv");
    let c = (0.3f64).cos();
    let s = (0.3f64).sin();
    fs::write(&mat, format!("{c},{s}\n{},{c}\n", -s)).unwrap();
    let first = tmp.path().join("first");
    let cfg = json!({
        "command": "apply",
        "matrix": mat,
        "grid": {"x0": -12.0, "dx": 0.0234375, "N": 1024},
        "initial": {"type": "hermite", "k": 1}
    });
    let path = write_config(tmp.path(), "c.json", &cfg);
    assert!(run(&["--config", &path, "--out", first.to_str().unwrap()]).status.success());
    assert_eq!(manifest(&first)["results"]["route"], json!("free"));

    // feed the CSV output back in as a file initial condition
    let second = tmp.path().join("second");
    let mut cfg2 = cfg.clone();
    cfg2["initial"] = json!({"type": "file", "path": first.join("output.csv")});
    let path2 = write_config(tmp.path(), "c2.json", &cfg2);
    let o = run(&["--config", &path2, "--out", second.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let norm = manifest(&second)["results"]["output_norm"].as_f64().unwrap();
    assert!((norm - 1.0).abs() < 1e-9);
}

#[test]
fn estimate_writes_one_row_per_member() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        "c.json",
        &json!({
            "command": "estimate",
            "matrix": {"kind": "rotation", "param": std::f64::consts::FRAC_PI_4},
            "grid": {"x0": -24.0, "dx": 0.0234375, "N": 2048},
            "p": 1, "q": "inf",
            "estimate": "same-space"
        }),
    );
    let o = run(&["--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ratios = fs::read_to_string(out.join("ratios.csv")).unwrap();
    assert_eq!(ratios.lines().count(), 13);
    let report: Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["q"], json!("inf"));
    assert_eq!(report["family"].as_array().unwrap().len(), 12);
    assert_eq!(report["factor_bound"]["holds"], json!(true));
}

#[test]
fn regularity_and_norm_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let grid = json!({"x0": -12.0, "dx": 0.0234375, "N": 1024});
    let out = tmp.path().join("reg");
    let cfg = write_config(
        tmp.path(),
        "r.json",
        &json!({
            "command": "regularity", "M": {"kind": "free_particle"}, "grid": grid,
            "initial": {"type": "hermite", "k": 0}, "p": "inf", "q": 1, "times": [0.0, 0.5, 1.0, 2.0]
        }),
    );
    assert!(run(&["--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let series = fs::read_to_string(out.join("series.csv")).unwrap();
    assert_eq!(series.lines().next(), Some("t,norm"));
    assert_eq!(series.lines().count(), 5);

    let out = tmp.path().join("norm");
    let cfg = write_config(
        tmp.path(),
        "n.json",
        &json!({"grid": grid, "initial": {"type": "hermite", "k": 0}, "p": 2, "q": 2}),
    );
    let o = run(&["amalgam-norm", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let norm = manifest(&out)["results"]["norm"].as_f64().unwrap();
    assert!((norm / (2.0 * std::f64::consts::PI).sqrt() - 1.0).abs() < 1e-3);
}

#[test]
fn flow_and_missing_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("flow");
    let o = run(&[
        "flow",
        "--out",
        out.to_str().unwrap(),
        "--override",
        "M={\"kind\": \"oscillator\"}",
        "--override",
        "times=[0.0, 3.141592653589793]",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let flows: Value = serde_json::from_slice(&fs::read(out.join("flows.json")).unwrap()).unwrap();
    assert_eq!(flows[1]["free"], json!(false));

    let o = run(&["factor", "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("matrix"));
    assert_eq!(run(&["factor"]).status.code(), Some(2));
}

#[test]
fn help_documents_plot_columns() {
    let o = run(&["--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("t,l2_error,phase") && text.contains("label,ratio") && text.contains("t,norm"));
}

#[test]
fn verify_prints_a_table_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("verify");
    let o = run(&["verify", "--out", out.to_str().unwrap(), "--reproducible"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 8);
    let table = fs::read_to_string(out.join("verify.csv")).unwrap();
    assert_eq!(table.lines().count(), 9);
}
