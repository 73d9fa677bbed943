use std::path::PathBuf;
use std::process::{Command, Output};

const PAIR: &str = r#"{"q":{"kind":"expr","expr":{"kind":"sum","terms":[{"kind":"const","value":1},{"kind":"sech2","amp":-2,"kappa":1}]}},"y":{"kind":"expr","expr":{"kind":"const","value":1}},"delta":0.5,"lambda0":1}"#;

fn slh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slh")).args(args).env_remove("SLH_THREADS").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("slh-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn body(s: &str) -> Vec<&str> {
    s.lines().filter(|l| !l.starts_with('#') && !l.starts_with('%')).collect()
}

#[test]
fn derive_prints_kdv() {
    let o = slh(&["derive", "--r", "1", "--k", "0", "--fix", "y=1"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(body(&s)[0], "q_t = 3/2 q q_x - 1/4 q_xxx");
    assert!(s.starts_with("# provenance "));
}

#[test]
fn symbolic_table_reaches_requested_depth() {
    let s = stdout(&slh(&["expand", "--N", "7", "--symbolic", "--fix", "y=1"]));
    assert!(s.contains("a_-5 = 3/16 q q_xx - 1/16 q^3 + 5/32 q_x^2 - 1/32 q_xxxx"), "{s}");
    assert!(s.contains("a_-7 = "));
}

#[test]
fn configuration_errors_exit_with_two() {
    assert_eq!(slh(&["derive", "--r", "1", "--k", "0", "--fix", "z=1"]).status.code(), Some(2));
    assert_eq!(slh(&["weyl", "--grid", "0:1", "--lambda", "0,1"]).status.code(), Some(2));
    assert_eq!(slh(&["export", "--object", "diffpoly", "--input", "/nonexistent"]).status.code(), Some(2));
    assert_eq!(slh(&["derive", "--r", "1", "--k", "0", "--format", "csv"]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_with_three() {
    let o = slh(&["algebro", "--branch", "0.5,1,2", "--poles", "3", "--grid", "-1:1:5"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn json_output_is_deterministic() {
    let pair = scratch("det.json", PAIR);
    let p = pair.to_str().unwrap();
    let args = ["--format", "json", "weyl", "--pair", p, "--grid", "-4:4:9", "--lambda", "0.5,1", "--lambda", "-1,0"];
    let a = slh(&args);
    let b = slh(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["provenance"]["tool"], "slh");
    assert_eq!(v["provenance"]["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(v["result"]["m_plus"].as_array().unwrap().len(), 2);
}

#[test]
fn weyl_csv_has_header_and_rows() {
    let pair = scratch("csv.json", PAIR);
    let o = slh(&["--format", "csv", "weyl", "--pair", pair.to_str().unwrap(), "--grid", "-4:4:9", "--lambda", "0,1"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let rows = body(&s);
    assert_eq!(rows[0], "x,lambda_re,lambda_im,mp_re,mp_im,mm_re,mm_im");
    assert_eq!(rows.len(), 10);
}

#[test]
fn export_round_trips_polynomials() {
    let o = slh(&["--format", "json", "derive", "--r", "1", "--k", "0"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rhs = scratch("rhs.json", &v["result"]["rhs"].to_string());
    let text = stdout(&slh(&["export", "--object", "diffpoly", "--input", rhs.to_str().unwrap()]));
    assert_eq!(body(&text), vec!["3/2 q q_x - 1/4 q_xxx"]);
    let back = slh(&["--format", "json", "export", "--object", "diffpoly", "--input", rhs.to_str().unwrap()]);
    let w: serde_json::Value = serde_json::from_slice(&back.stdout).unwrap();
    assert_eq!(w["result"], v["result"]["rhs"]);
    let latex = stdout(&slh(&["--format", "latex", "export", "--object", "diffpoly", "--input", rhs.to_str().unwrap()]));
    assert!(latex.contains("\\frac{3}{2} q q_{x}"));
}

#[test]
fn export_round_trips_expansion_tables() {
    let o = slh(&["--format", "json", "expand", "--N", "4", "--symbolic"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let f = scratch("table.json", &v["result"].to_string());
    let back = slh(&["--format", "json", "export", "--object", "expansion", "--input", f.to_str().unwrap()]);
    let w: serde_json::Value = serde_json::from_slice(&back.stdout).unwrap();
    assert_eq!(w["result"], v["result"]);
}

#[test]
fn ladder_residuals_vanish() {
    let o = slh(&["ladder", "--j-max", "4"]);
    assert!(o.status.success());
    assert!(body(&stdout(&o)).iter().all(|l| l.ends_with(": 0")));
}

#[test]
fn algebro_period_and_gnuplot() {
    let dir = scratch("unused", "");
    let csv = dir.with_file_name("alg.csv");
    let gp = dir.with_file_name("alg.gp");
    let o = slh(&[
        "--format", "csv", "--out", csv.to_str().unwrap(), "--emit-gnuplot", gp.to_str().unwrap(),
        "algebro", "--branch", "0.5,1,2", "--poles", "1.5", "--grid", "-5:5:51",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let data = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(body(&data)[0], "x,P1,w1,q,y");
    let script = std::fs::read_to_string(&gp).unwrap();
    assert!(script.contains("using 1:5"));
    let text = stdout(&slh(&["algebro", "--branch", "0.5,1,2", "--poles", "1.5", "--grid", "-5:5:51"]));
    let line = text.lines().find(|l| l.starts_with("period:")).unwrap();
    let nums: Vec<f64> = line.split_whitespace().filter_map(|w| w.trim_end_matches(',').parse().ok()).collect();
    assert!((nums[0] - nums[1]).abs() < 1e-8, "{line}");
}

#[test]
fn scattering_and_stationary_checks() {
    let pair = scratch("scat.json", PAIR);
    let p = pair.to_str().unwrap();
    let v: serde_json::Value =
        serde_json::from_slice(&slh(&["--format", "json", "scatter", "--pair", p, "--k", "0.5:3:4"]).stdout).unwrap();
    assert!(v["result"]["unitarity_residual"].as_f64().unwrap() < 1e-10);
    let o = slh(&["check-stationary", "--pair", p, "--grid", "-10:10:128", "--periodic", "--lambda0", "1"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("max residual 0.000e0"));
}
