use std::process::{Command, Output};

fn rlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rlab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> serde_json::Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let o = rlab(&all);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn column(doc: &serde_json::Value, name: &str) -> Vec<f64> {
    doc["rows"].as_array().unwrap().iter().map(|r| r[name].as_f64().unwrap()).collect()
}

#[test]
fn tree_kernel_at_second_ray_vertex() {
    let doc = json(&["tree-kernel", "--q", "2", "--depth", "30", "--x", "ray:2"]);
    assert_eq!(doc["schema"], 1);
    let v = column(&doc, "value");
    assert!((v[0] - 2.0).abs() < 1e-12);
}

#[test]
fn lattice_ratio_converges_to_one() {
    let doc = json(&["ratio-converge", "--preset", "z-lazy", "--x", "1", "--n-max", "10000"]);
    let v = column(&doc, "ratio");
    assert!((v.last().unwrap() - 1.0).abs() < 1e-3);
    let gaps: Vec<f64> = v.iter().map(|r| (r - 1.0).abs()).collect();
    assert!(gaps.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn free_group_exponent() {
    let doc = json(&["llt-fit", "--preset", "f2-lazy", "--window", "500:2000"]);
    let a = column(&doc, "alpha_hat")[0];
    assert!((1.4..=1.6).contains(&a), "alpha_hat = {a}");
}

#[test]
fn csv_has_schema_column_and_is_deterministic() {
    let args = ["martin-matrix", "--preset", "f2-range2", "--x", "-2", "--x", "1"];
    let a = rlab(&args);
    let b = rlab(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("schema,"));
    assert!(header.contains("value") && header.contains("error"));
    assert!(text.lines().skip(1).all(|l| l.starts_with("1,")));
}

#[test]
fn ancona_sampling_depends_only_on_seed() {
    let a = rlab(&["ancona-check", "--seed", "9"]);
    let b = rlab(&["ancona-check", "--seed", "9"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn output_file_matches_stdout() {
    let dir = std::env::temp_dir().join(format!("rlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("reduced.json");
    let p = path.to_str().unwrap();
    let o = rlab(&["reduced", "--candidate-radius", "2", "--probe-radius", "2", "--format", "json", "--out", p]);
    assert!(o.status.success());
    let file = std::fs::read(&path).unwrap();
    let direct = rlab(&["reduced", "--candidate-radius", "2", "--probe-radius", "2", "--format", "json"]);
    assert_eq!(file, direct.stdout);
    let doc: serde_json::Value = serde_json::from_slice(&file).unwrap();
    assert_eq!(doc["report"]["r_mu_members"], serde_json::json!(["e"]));
}

#[test]
fn product_report_has_predicted_and_measured_rates() {
    let doc = json(&["product", "--preset", "t3xZ"]);
    let rows = doc["rows"].as_array().unwrap();
    let get = |q: &str| rows.iter().find(|r| r["quantity"] == q).unwrap()["value"].as_f64().unwrap();
    assert!((get("rho_hat") - get("rho_predicted")).abs() < 1e-3);
}

#[test]
fn validation_errors_exit_two() {
    for args in [
        vec!["tree-kernel", "--bogus"],
        vec!["nope"],
        vec!["tree-kernel", "--precision", "32"],
        vec!["tree-kernel", "--tol", "-1"],
        vec!["llt-fit", "--window", "9:3"],
        vec!["free-kernel", "--preset", "missing"],
        vec!["free-kernel", "--spec", "/nonexistent/walk.txt"],
    ] {
        let o = rlab(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(!err.trim().is_empty());
    }
}

#[test]
fn malformed_spec_file_exits_two() {
    let dir = std::env::temp_dir().join(format!("rlab-spec-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.walk");
    std::fs::write(&path, "mode finitely-supported\nrank 2\n1 1/2\n2 1/3\n").unwrap();
    let o = rlab(&["free-kernel", "--spec", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&o.stderr).trim().lines().count(), 1);
}

#[test]
fn budget_exhaustion_exits_three() {
    let o = rlab(&["ratio-converge", "--preset", "f2-range2", "--n-max", "50", "--max-states", "100"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--max-states"));
}

#[test]
fn spec_file_equals_preset() {
    let dir = std::env::temp_dir().join(format!("rlab-preset-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("f2.walk");
    std::fs::write(&path, rlab::presets::spec_text("f2-lazy-uniform").unwrap()).unwrap();
    let a = rlab(&["free-kernel", "--spec", path.to_str().unwrap()]);
    let b = rlab(&["free-kernel", "--preset", "f2-lazy-uniform"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}
