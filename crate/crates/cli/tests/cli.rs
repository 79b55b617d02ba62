use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn csl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csl"))
        .args(args)
        .output()
        .expect("spawn csl")
}

fn bundled(name: &str) -> Value {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn run_ok(args: &[&str]) -> Output {
    let out = csl(args);
    assert!(
        out.status.success(),
        "csl {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn minimal_phase() -> Value {
    json!({
        "model": {"N": 32, "patterns": [{"family": "sparse"}]},
        "solver": {"decoders": ["cosamp"]},
        "grid": {"s": [2], "m": [16]},
        "seeds": {"master": 5, "trials": 1},
        "output": {"tag": "min"}
    })
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|x| x.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn minimal_phase_config_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &minimal_phase());
    let out = dir.path().join("out");
    run_ok(&["phase", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let text = fs::read_to_string(out.join("phase_min.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "solver,N,levels,local_s,m,trials,successes,probability,seed"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..6], &["cosamp", "32", "32", "2", "16", "1"]);
    assert_eq!(row[8], "5");
    assert!(lines.next().is_none());
    assert!(!text.contains('\r'));
    let meta: Value =
        serde_json::from_str(&fs::read_to_string(out.join("phase_min.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["seeds"]["master"], 5);
    assert!(meta["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(meta["version"].is_string());
    assert!(meta["note"].as_str().unwrap().contains("desk-scale"));
    assert!(!out.join("phase_min.dat").exists());
}

#[test]
fn two_level_config_row_count_and_counts() {
    let mut cfg = bundled("fig1_two_levels.json");
    cfg["seeds"]["trials"] = json!(1);
    cfg["grid"]["m"] = json!({"start": 40, "stop": 100, "step": 20});
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "fig1.json", &cfg);
    run_ok(&["phase", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    let rows = csv_rows(&dir.path().join("phase_fig1.csv"));
    // 3 patterns x 4 solvers x 3 sparsities x 4 values of m
    assert_eq!(rows.len(), 3 * 4 * 3 * 4);
    for r in &rows {
        let trials: usize = r[5].parse().unwrap();
        let successes: usize = r[6].parse().unwrap();
        assert!(successes <= trials);
        let p: f64 = r[7].parse().unwrap();
        assert_eq!(p, successes as f64 / trials as f64);
    }
    let patterns: std::collections::BTreeSet<&str> = rows.iter().map(|r| r[3].as_str()).collect();
    assert!(patterns.contains("16;16") && patterns.contains("24;8") && patterns.contains("32;0"));
    let dat = fs::read_to_string(dir.path().join("phase_fig1.dat")).unwrap();
    assert_eq!(dat.matches("# solver=").count(), 3 * 4 * 3);
}

#[test]
fn invalid_config_fails_with_diagnostics_and_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let text = serde_json::to_string_pretty(&minimal_phase())
        .unwrap()
        .replace("\"cosamp\"", "\"lasso\"");
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, text).unwrap();
    let res = csl(&["phase", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("solver.decoders"), "{err}");
    assert!(err.contains("bad.json:"), "{err}");
    assert!(!out.exists() || fs::read_dir(&out).unwrap().count() == 0);

    let mut v = minimal_phase();
    v["grid"]["s"] = json!([40]);
    let cfg = write_config(dir.path(), "bad2.json", &v);
    let res = csl(&["phase", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("model.patterns[0]"));
    assert!(!out.exists() || fs::read_dir(&out).unwrap().count() == 0);

    let res = csl(&["phase", "--config", "/nonexistent.json"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn seed_and_noise_flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = minimal_phase();
    v["seeds"]["trials"] = json!(20);
    let cfg = write_config(dir.path(), "c.json", &v);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_ok(&["phase", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    run_ok(&[
        "phase", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(),
        "--seed", "99", "--noise", "0.5",
    ]);
    let ra = csv_rows(&a.join("phase_min.csv"));
    let rb = csv_rows(&b.join("phase_min.csv"));
    assert_eq!(ra[0][8], "5");
    assert_eq!(rb[0][8], "99");
    assert_eq!(ra[0][6], "20");
    assert_eq!(rb[0][6], "0");
    let meta: Value =
        serde_json::from_str(&fs::read_to_string(b.join("phase_min.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["model"]["noise"], 0.5);
}

#[test]
fn phase_output_is_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = minimal_phase();
    v["solver"]["decoders"] = json!(["iht", "cosampl"]);
    v["grid"] = json!({"s": [2, 4], "m": [8, 12, 16]});
    v["seeds"]["trials"] = json!(6);
    let cfg = write_config(dir.path(), "c.json", &v);
    let mut outputs = Vec::new();
    for (k, jobs) in ["1", "4", "4"].iter().enumerate() {
        let out = dir.path().join(format!("o{k}"));
        run_ok(&[
            "phase", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(),
            "--jobs", jobs,
        ]);
        outputs.push(fs::read(out.join("phase_min.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

fn small_approx() -> Value {
    json!({
        "model": {"N": 64, "encoders": ["gaussian"]},
        "solver": {"decoders": ["ihtl"]},
        "grid": {"m": [16], "C": [4]},
        "seeds": {"master": 3, "runs": 2},
        "output": {"tag": "one"}
    })
}

#[test]
fn one_approx_cell_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.json", &small_approx());
    run_ok(&["approx", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    let text = fs::read_to_string(dir.path().join("approx_one.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "encoder,decoder,C,N,m,runs,mean_rel_l2,median_rel_l2,seed"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..6], &["gaussian", "ihtl", "4", "64", "16", "2"]);
    assert_eq!(row[8], "3");
    assert!(row[6].parse::<f64>().unwrap() > 0.0);
    assert!(lines.next().is_none());
}

#[test]
fn full_grid_approx_config_cardinality() {
    let mut cfg = bundled("approx_gaussian.json");
    cfg["model"]["N"] = json!(256);
    cfg["seeds"]["runs"] = json!(1);
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "g.json", &cfg);
    run_ok(&["approx", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    let rows = csv_rows(&dir.path().join("approx_gaussian.csv"));
    // |m| x |C| x decoders
    assert_eq!(rows.len(), 5 * 4 * 5);
    let dat = fs::read_to_string(dir.path().join("approx_gaussian.dat")).unwrap();
    assert_eq!(dat.matches("# encoder=").count(), 4 * 5);
}

#[test]
fn approx_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = small_approx();
    v["model"]["encoders"] = json!(["gaussian", "fourier"]);
    v["solver"]["decoders"] = json!(["iht", "cosampl"]);
    v["grid"]["m"] = json!([8, 16, 32]);
    let cfg = write_config(dir.path(), "a.json", &v);
    let mut outputs = Vec::new();
    for (k, jobs) in ["1", "3", "3"].iter().enumerate() {
        let out = dir.path().join(format!("o{k}"));
        run_ok(&[
            "approx", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(),
            "--jobs", jobs,
        ]);
        outputs.push(fs::read(out.join("approx_one.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

#[test]
fn invalid_approx_grid_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = small_approx();
    v["grid"]["m"] = json!([24]);
    let cfg = write_config(dir.path(), "a.json", &v);
    let res = csl(&["approx", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("grid.m"));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

fn verify_csv(dir: &Path, tag: &str) -> Vec<Vec<String>> {
    csv_rows(&dir.join(format!("{tag}.csv")))
}

#[test]
fn verify_identity_has_zero_constants() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(&[
        "verify", "--generator", "identity:8", "--s", "3", "--levels", "4,8", "--local-s", "2,1",
        "--out", dir.path().to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("delta_s   s = 3: 0"), "{stdout}");
    let rows = verify_csv(dir.path(), "verify");
    assert_eq!(rows[0][0], "delta_s");
    assert_eq!(rows[0][6].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[1][0], "delta_sM");
    assert_eq!(rows[1][6].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn verify_hand_example_from_matrix_file() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("a.csv");
    fs::write(&m, "1,1\n0,0\n").unwrap();
    run_ok(&[
        "verify", "--matrix", m.to_str().unwrap(), "--s", "1,2", "--tag", "hand",
        "--out", dir.path().to_str().unwrap(),
    ]);
    let rows = verify_csv(dir.path(), "hand");
    let d1: f64 = rows[0][6].parse().unwrap();
    let d2: f64 = rows[1][6].parse().unwrap();
    assert!(d1.abs() <= 1e-12, "{d1}");
    assert!((d2 - 1.0).abs() <= 1e-12, "{d2}");
}

#[test]
fn verify_dft_coherence_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(&[
        "verify", "--generator", "dft:8", "--sampling-levels", "2,4,8", "--levels", "4,8",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("coherence"));
    let mu: Vec<f64> = verify_csv(dir.path(), "verify")
        .iter()
        .filter(|r| r[0] == "mu")
        .map(|r| r[6].parse().unwrap())
        .collect();
    assert_eq!(mu.len(), 6);
    for v in mu {
        assert!((v - 0.125).abs() <= 1e-12, "{v}");
    }
}

#[test]
fn verify_reports_budget_exhaustion() {
    let dir = tempfile::tempdir().unwrap();
    let res = csl(&[
        "verify", "--generator", "gaussian:30x40", "--s", "20", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("budget"), "{err}");
    assert!(!dir.path().join("verify.csv").exists());
}

#[test]
fn verify_reads_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "v.json",
        &json!({"generator": "identity:6", "s": [1, 2], "tag": "cfg"}),
    );
    run_ok(&["verify", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    let rows = verify_csv(dir.path(), "cfg");
    assert_eq!(rows.iter().filter(|r| r[0] == "delta_s").count(), 2);
}
