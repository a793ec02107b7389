use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conformal-check")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("report is valid JSON")
}

#[test]
fn product_in_de_sitter_reports_closed_form_b() {
    let o = run(&["--entry", "product-ds", "--m", "3", "--k", "1", "--a", "1.41421356", "--lambda", "0", "--report", "json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&o);
    assert_eq!(r["verdict"]["pass"], true);
    let entry = &r["entries"][0];
    assert_eq!(entry["status"], "ok");
    let clusters = entry["invariants"]["b_eigenvalues"]["clusters"].as_array().unwrap();
    let got: Vec<(f64, u64)> =
        clusters.iter().map(|c| (c["value"].as_f64().unwrap(), c["multiplicity"].as_u64().unwrap())).collect();
    assert_eq!(got.len(), 2, "{got:?}");
    // product of a circle of radius a and a 2-sphere: B = diag(-1/3, -1/3, 2/3)
    let find = |v: f64| got.iter().find(|(x, _)| (x - v).abs() < 1e-7).map(|(_, k)| *k);
    assert_eq!(find(-1.0 / 3.0), Some(2));
    assert_eq!(find(2.0 / 3.0), Some(1));
    for row in entry["residuals"].as_array().unwrap() {
        assert_eq!(row["pass"], true, "{row}");
    }
}

#[test]
fn cone_example_at_lambda_zero_has_no_admissible_inner() {
    // (m, K, r) = (3, 2, 1) with lambda = 0 asks for a maximal inner surface
    // with |h|^2 = 2/3 in S^3_1; none exists, so the entry cannot be built.
    let o = run(&["--entry", "example32", "--m", "3", "--K", "2", "--r", "1", "--lambda", "0"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no admissible inner"), "{}", stderr(&o));
    let r = json(&o);
    assert_eq!(r["entries"][0]["status"], "error");
    assert_eq!(r["verdict"]["exit_code"], 2);
}

#[test]
fn cone_example_with_umbilic_inner_passes() {
    let o = run(&["--entry", "example32", "--m", "3", "--K", "2", "--r", "1", "--inner", "umbilic", "--report", "csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn guard_violation_exits_two() {
    let o = run(&["--entry", "product-ds", "--a", "0.5"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("a > 1"), "{}", stderr(&o));
}

#[test]
fn unknown_entry_exits_two() {
    let o = run(&["--entry", "torus"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unknown entry 'torus'"), "{}", stderr(&o));
}

#[test]
fn malformed_tolerance_exits_two() {
    assert_eq!(code(&run(&["--entry", "product-ds", "--tol", "trace_b"])), 2);
    assert_eq!(code(&run(&["--entry", "product-ds", "--tol", "trace_b=-1"])), 2);
    assert_eq!(code(&run(&["--entry", "product-ds", "--jet-order", "5"])), 2);
}

#[test]
fn tight_tolerance_fails_row_and_exits_one() {
    let o = run(&["--entry", "product-ds", "--tol", "trace_b=1e-30", "--report", "csv"]);
    assert_eq!(code(&o), 1);
    let text = String::from_utf8(o.stdout).unwrap();
    let failing: Vec<&str> = text.lines().filter(|l| l.ends_with(",false")).collect();
    assert_eq!(failing.len(), 1, "{failing:?}");
    assert!(failing[0].contains(",trace_b,"));
}

#[test]
fn reports_are_byte_identical() {
    let args = ["--entry", "product-flat", "--entry", "product-ds", "--equivalence", "2", "--seed", "3"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let r = json(&a);
    let ids: Vec<&str> = r["entries"].as_array().unwrap().iter().map(|e| e["id"].as_str().unwrap()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
}

#[test]
fn json_floats_carry_seventeen_digits() {
    let o = run(&["--entry", "product-ds"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let line = text.lines().find(|l| l.trim_start().starts_with("\"fd_step\"")).unwrap();
    assert!(line.contains("5.0000000000000001e-3"), "{line}");
}

#[test]
fn csv_emits_residual_table() {
    let o = run(&["--entry", "product-ads", "--a", "0.6", "--report", "csv"]);
    assert_eq!(code(&o), 0);
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(rdr.headers().unwrap(), vec!["entry", "name", "max", "tol", "pass"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert!(rows.len() > 20);
    assert!(rows.iter().any(|r| &r[1] == "chart_overlap"));
    assert!(rows.iter().all(|r| &r[4] == "true"));
}

#[test]
fn out_path_receives_report() {
    let path = std::env::temp_dir().join(format!("conformal-check-{}.json", std::process::id()));
    let o = run(&["--entry", "product-ds", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    let r: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(r["verdict"]["pass"], true);
}

#[test]
fn equivalence_suite_on_product() {
    let o = run(&["--entry", "product-ds", "--equivalence", "20", "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&o);
    let eq = &r["entries"][0]["equivalence"];
    assert_eq!(eq["trials"], 20);
    assert!(eq["max_deviation"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn empty_equivalence_suite_is_vacuous() {
    let o = run(&["--entry", "product-ds", "--equivalence", "0"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("vacuous"));
    let r = json(&o);
    assert!(r["header"]["warnings"][0].as_str().unwrap().contains("vacuous"));
}

#[test]
fn negative_lambda_flag_parses() {
    let o = run(&["--entry", "product-ds", "--lambda", "-0.5", "--report", "csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8(o.stdout).unwrap().contains("d_parallel(lambda=-0.5)"));
}
