use std::path::Path;
use std::process::{Command, Output};

use mqci::format::csv_body;

fn mqci(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mqci")).args(args).env_remove("MQCI_CACHE_DIR").output().expect("spawn mqci")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn cardinal_example_has_small_node_residuals() {
    let o = mqci(&["cardinal", "--alpha", "-1", "--c", "1", "--dim", "1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["result"]["max_residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(v["config"]["command"]["command"], "cardinal");
}

#[test]
fn converge_example_reports_the_rate() {
    let o = mqci(&[
        "converge", "--alpha", "0.5", "--dim", "1", "--p", "2", "--family", "bspline", "--order", "3", "--h",
        "0.25,0.125,0.0625,0.03125",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["result"]["fitted_slope"].as_f64().unwrap() >= 2.7);
    assert_eq!(v["result"]["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn coeffs_example_decays() {
    let o = mqci(&["coeffs", "--alpha", "-2.5", "--dim", "1", "--radius", "64", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["result"]["decay_slope"].as_f64().unwrap() <= -3.5);
    assert_eq!(v["result"]["symmetry_defect"].as_f64().unwrap(), 0.0);
}

#[test]
fn exit_codes() {
    assert_eq!(mqci(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(mqci(&["converge", "--alpha", "0.5", "--h", "0.5"]).status.code(), Some(2));
    assert_eq!(mqci(&["coeffs", "--alpha", "0.5"]).status.code(), Some(2));
    assert_eq!(mqci(&["verify", "--only", "13"]).status.code(), Some(2));
    let big = mqci(&["cardinal", "--alpha", "0.5", "--dim", "2", "--radius", "40", "--points-per-unit", "64"]);
    assert_eq!(big.status.code(), Some(3));
    assert_eq!(mqci(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_reports_one_line_per_selected_criterion() {
    let o = mqci(&["verify", "--only", "1,2"]);
    assert_eq!(o.status.code(), Some(0));
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    assert!(err.contains("criterion  1: PASS") && err.contains("criterion  2: PASS"), "{err}");
    let body = csv_body(&stdout(&o));
    assert!(body.starts_with("criterion,check,value,threshold,comparator,passed\n"));
    assert!(body.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn csv_bodies_are_reproducible() {
    for args in [
        &["spectrum", "--alpha", "0.5", "--kind", "multiplier", "--h", "0.25"][..],
        &["interp", "--alpha", "-2.5", "--h", "0.125", "--probes", "20", "--seed", "7"][..],
        &["converge", "--alpha", "-1", "--order", "2", "--h", "0.25,0.125,0.0625,0.03125", "--format", "csv"][..],
    ] {
        let a = csv_body(&stdout(&mqci(args)));
        let b = csv_body(&stdout(&mqci(args)));
        assert!(a.lines().count() > 3);
        assert_eq!(a, b, "{args:?}");
    }
}

#[test]
fn timing_column_is_opt_in() {
    let base = ["converge", "--alpha", "0.5", "--order", "2", "--h", "0.25,0.125,0.0625,0.03125", "--format", "csv"];
    let plain = csv_body(&stdout(&mqci(&base)));
    assert!(plain.starts_with("alpha,dim,p,family,k,h,error,eoc\n"));
    let mut timed = base.to_vec();
    timed.push("--timing");
    assert!(csv_body(&stdout(&mqci(&timed))).starts_with("alpha,dim,p,family,k,h,error,eoc,runtime_ms\n"));
}

#[test]
fn interp_reproduces_samples_at_nodes() {
    let o = mqci(&["interp", "--alpha", "0.5", "--h", "0.25", "--family", "truncated_power", "--order", "2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let r = &v["result"];
    assert!(r["max_node_residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(r["points"].as_array().unwrap().len(), 201);
}

#[test]
fn output_file_is_written_with_config_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    let o = mqci(&["spectrum", "--alpha", "-1", "--points", "11", "--output", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# mqci "));
    assert!(text.lines().nth(1).unwrap().starts_with("# config {"));
    assert_eq!(csv_body(&text).lines().count(), 12);
    assert!(!Path::new(&format!("{}.tmp", path.display())).exists());
}
