use std::process::{Command, Output};

use serde_json::Value;

fn fracsys(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracsys")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const CASE1: &[&str] = &["--p", "0", "--q", "0.5", "--r", "1.5", "--theta", "0", "--s", "0.5", "--t", "0.5"];

fn with<'a>(base: &[&'a str], extra: &[&'a str]) -> Vec<&'a str> {
    base.iter().chain(extra).copied().collect()
}

#[test]
fn classify_reports_unique_verdict() {
    let v = json(&fracsys(&with(&["classify"], CASE1)));
    assert_eq!(v["schema"], 1);
    assert_eq!(v["unique"], true);
    assert_eq!(v["code"], "U");
    assert_eq!(v["sub_case"], 1);
    assert_eq!(v["predicted_v_rate"], 0.25);
}

#[test]
fn missing_key_is_usage_error() {
    let out = fracsys(&["classify", "--p", "0", "--r", "1.5", "--theta", "0", "--s", "0.5", "--t", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("'q'") && msg.lines().count() == 1, "{msg}");
}

#[test]
fn invalid_values_name_the_key() {
    for (args, key) in [
        (with(&["classify"], &["--p", "0", "--q", "x", "--r", "1", "--theta", "0", "--s", "0.5", "--t", "0.5"]), "'q'"),
        (with(&["classify"], &["--p", "0", "--q", "1", "--r", "1", "--theta", "0", "--s", "1.5", "--t", "0.5"]), "'s'"),
        (with(&["classify", "--format", "csv"], CASE1), "'format'"),
        (with(&["eigen", "--s", "0.5", "--n", "4"], &[]), "'n'"),
        (with(&["atlas", "--param1", "q", "--range1", "1:0", "--param2", "r", "--range2", "0:1"], CASE1), "'range1'"),
        (with(&["atlas", "--param1", "x", "--range1", "0:1", "--param2", "r", "--range2", "0:1"], CASE1), "'param1'"),
        (with(&["atlas", "--param1", "s", "--range1", "0:1", "--param2", "r", "--range2", "1:2"], CASE1), "'s'"),
        (with(&["classify", "--param1", "q"], CASE1), "'param1'"),
        (with(&["classify", "--csv-output", "x.csv"], CASE1), "'csv_output'"),
    ] {
        let out = fracsys(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
        assert!(stderr(&out).contains(key), "{args:?}: {}", stderr(&out));
    }
    assert_eq!(fracsys(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# eigen run\ns = 0.5\nn = 512   # coarse\nseed = 3\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let v = json(&fracsys(&["eigen", "--config", cfg, "--n", "1024"]));
    assert_eq!(v["n"], 1024);
    assert_eq!(v["seed"], 3);
    let v = json(&fracsys(&["eigen", "--config", cfg]));
    assert_eq!(v["n"], 512);

    std::fs::write(dir.path().join("bad.cfg"), "s = 0.5\nwidth = 3\n").unwrap();
    let out = fracsys(&["eigen", "--config", dir.path().join("bad.cfg").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("'width'"));
}

#[test]
fn eigen_report_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let (out_path, csv_path) = (dir.path().join("e.json"), dir.path().join("phi.csv"));
    let out = fracsys(&[
        "eigen", "--s", "0.5", "--n", "200", "--output", out_path.to_str().unwrap(),
        "--csv-output", csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success() && out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    for key in ["s", "n", "lambda1", "c_low", "c_high", "w3_ok"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["w3_ok"], true);
    let l = v["lambda1"].as_f64().unwrap();
    assert!((v["restart_lambda1"].as_f64().unwrap() - l).abs() < 1e-8 * l);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,phi,phi_torsion"));
    assert_eq!(lines.count(), 200);
}

#[test]
fn solve_scalar_report() {
    let v = json(&fracsys(&["solve-scalar", "--s", "0.5", "--gamma", "0.5", "--p", "1", "--n", "512"]));
    assert_eq!(v["regime"], "superlinear");
    assert_eq!(v["predicted_exponent"], 0.25);
    assert_eq!(v["converged"], true);
    for key in ["fitted_exponent", "r_squared", "iterations", "residual"] {
        assert!(v[key].is_number(), "{key}");
    }
    let v = json(&fracsys(&["solve-scalar", "--s", "0.5", "--gamma", "0.25", "--p", "0.5", "--n", "512"]));
    assert_eq!(v["log_correction"], true);
    assert!(v["log_ratio"]["spread"].is_number());
}

#[test]
fn refusals_exit_with_code_4() {
    let out = fracsys(&["solve-scalar", "--s", "0.5", "--gamma", "1", "--p", "0", "--n", "64"]);
    assert_eq!(out.status.code(), Some(4));
    let n1 = ["--p", "0", "--q", "0.5", "--r", "2", "--theta", "0", "--s", "0.5", "--t", "0.5", "--n", "64"];
    for sub in ["solve-system", "probe-uniqueness"] {
        let out = fracsys(&with(&[sub], &n1));
        assert_eq!(out.status.code(), Some(4), "{sub}");
        assert!(stderr(&out).contains("N1"));
    }
    let tc1_iii = ["--p", "1", "--q", "1", "--r", "1", "--theta", "1", "--s", "0.5", "--t", "0.5", "--n", "64"];
    assert_eq!(fracsys(&with(&["probe-uniqueness"], &tc1_iii)).status.code(), Some(4));
}

#[test]
fn non_convergence_exits_with_code_3() {
    let out = fracsys(&with(&["solve-system", "--n", "128", "--max-outer", "3"], CASE1));
    assert_eq!(out.status.code(), Some(3));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["report"]["converged"], false);
}

#[test]
fn system_subcommands() {
    let v = json(&fracsys(&with(&["solve-system", "--n", "256"], CASE1)));
    assert_eq!(v["verdict"], "U");
    assert_eq!(v["report"]["converged"], true);
    assert_eq!(v["lower_bound"]["pass"], true);
    let v = json(&fracsys(&with(&["probe-uniqueness", "--n", "256"], CASE1)));
    assert!(v["distance"].as_f64().unwrap() <= 1e-6);
    assert_eq!(v["contraction_exponent"], 0.75);
    let out = fracsys(&with(&["solve-system", "--n", "64", "--format", "csv"], CASE1));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("x,u,v\n"));
}

fn atlas_rows(args: &[&str]) -> Vec<Vec<String>> {
    let out = fracsys(args);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p1,p2,verdict,alpha,beta,sigma_u,sigma_v"));
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn atlas_sweep_regions_and_mirror() {
    let base = ["--p", "0", "--theta", "0", "--s", "0.5", "--t", "0.5", "--steps1", "50", "--steps2", "50"];
    let rows = atlas_rows(&with(
        &["atlas", "--param1", "q", "--range1", "0.1:3", "--param2", "r", "--range2", "0.1:3"],
        &base,
    ));
    assert_eq!(rows.len(), 2500);
    for row in &rows {
        let (q, r): (f64, f64) = (row[0].parse().unwrap(), row[1].parse().unwrap());
        let n1 = q * 0.5 / 0.5 < 1.0 && r >= 2.0 * 0.5 / 0.5;
        assert_eq!(row[2] == "N1", n1, "{row:?}");
    }
    // the mirrored sweep swaps the roles of q and r
    let mirror = atlas_rows(&with(
        &["atlas", "--param1", "r", "--range1", "0.1:3", "--param2", "q", "--range2", "0.1:3"],
        &base,
    ));
    let mapped = |code: &str| -> String {
        match code {
            "N1" => "N3", "N3" => "N1", "N2" => "N4", "N4" => "N2", "N5" => "N6", "N6" => "N5",
            "E1" => "E2", "E2" => "E1", other => other,
        }
        .to_string()
    };
    for (a, b) in rows.iter().zip(&mirror) {
        assert_eq!(a[0], b[0]);
        assert_eq!(a[1], b[1]);
        assert_eq!(mapped(&a[2]), b[2], "{a:?} vs {b:?}");
        assert_eq!((&a[3], &a[4]), (&b[4], &b[3]));
        assert_eq!((&a[5], &a[6]), (&b[6], &b[5]));
    }
}

#[test]
fn atlas_json_format() {
    let out = fracsys(&with(
        &["atlas", "--param1", "q", "--range1", "0.5:1", "--steps1", "2", "--param2", "r",
          "--range2", "1:2", "--steps2", "3", "--format", "json"],
        CASE1,
    ));
    let v = json(&out);
    assert_eq!(v["rows"].as_array().unwrap().len(), 6);
    assert_eq!(v["param1"], "q");
}
