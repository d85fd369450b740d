use std::path::Path;
use std::process::{Command, Output};

fn lol(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lol"))
        .arg("--output-dir")
        .arg(dir)
        .args(args)
        .env_remove("LOL_SEED")
        .env_remove("LOL_THREADS")
        .env_remove("LOL_OUTPUT_DIR")
        .output()
        .expect("spawn lol")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = lol(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn sim_writes_rows_by_features() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["sim", "--family", "trunk", "--p", "100", "--n", "200"]);
    let text = std::fs::read_to_string(dir.path().join("data.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 201);
    assert!(lines.iter().all(|l| l.split(',').count() == 101));
    assert!(lines[0].ends_with(",label"));
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("model.json")).unwrap()).unwrap();
    assert!(model.get("model").is_some());
}

#[test]
fn bench_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["--seed", "3", "sim", "--p", "30", "--n", "80"]);
    let data = dir.path().join("data.csv");
    let data = data.to_str().unwrap();
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        std::fs::create_dir(&out).unwrap();
        ok(&out, &["--seed", "11", "bench", "--input", data, "--k", "4", "--d-max", "6", "--algs", "lol,pca,rp"]);
        reports.push((
            std::fs::read(out.join("report.json")).unwrap(),
            std::fs::read(out.join("curves.csv")).unwrap(),
        ));
    }
    assert_eq!(reports[0], reports[1]);
    let report: serde_json::Value = serde_json::from_slice(&reports[0].0).unwrap();
    assert_eq!(report["algorithms"].as_array().unwrap().len(), 3);
}

#[test]
fn fit_then_embed_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["sim", "--p", "12", "--n", "50"]);
    let data = dir.path().join("data.csv");
    let data = data.to_str().unwrap();
    for format in ["bin", "csv"] {
        let name = format!("proj.{format}");
        ok(dir.path(), &["fit", "--input", data, "--d", "3", "--format", format, "--output", &name]);
        let proj = dir.path().join(&name);
        ok(dir.path(), &["embed", "--input", data, "--projection", proj.to_str().unwrap(), "--output", "z.csv"]);
        let z = std::fs::read_to_string(dir.path().join("z.csv")).unwrap();
        assert_eq!(z.lines().count(), 51);
        assert_eq!(z.lines().next().unwrap(), "x1,x2,x3,label");
    }
}

#[test]
fn every_subcommand_has_help() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["sim", "fit", "embed", "bench", "chernoff", "test", "regress", "scale"] {
        let out = ok(dir.path(), &[sub, "--help"]);
        assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"), "{sub}");
    }
}

#[test]
fn failures_are_json_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = lol(dir.path(), &["fit", "--input", "/definitely/missing.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"]["kind"].is_string());
    assert!(err["error"]["message"].is_string());

    let out = lol(dir.path(), &["sim", "--family", "no_such_family"]);
    assert_eq!(out.status.code(), Some(1));

    let out = lol(dir.path(), &["sim", "--not-a-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scale_writes_timing_table() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["scale", "--p-sweep", "100:400:x2", "--n", "60", "--d", "3", "--repeats", "1"]);
    let text = std::fs::read_to_string(dir.path().join("scale.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "p,n,threads,d,seconds,ratio");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("100,60,"));
}

#[test]
fn chernoff_counterexample_separates_lol_from_pca() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["chernoff", "counterexample"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["pca_quadform"].as_f64().unwrap(), 0.0);
    assert!(v["lol_quadform"].as_f64().unwrap() > 0.0);
}

#[test]
fn seed_env_matches_flag() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(a.path(), &["--seed", "42", "sim", "--p", "5", "--n", "20"]);
    let out = Command::new(env!("CARGO_BIN_EXE_lol"))
        .args(["sim", "--p", "5", "--n", "20"])
        .env("LOL_SEED", "42")
        .env("LOL_OUTPUT_DIR", b.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        std::fs::read(a.path().join("data.csv")).unwrap(),
        std::fs::read(b.path().join("data.csv")).unwrap()
    );
}
