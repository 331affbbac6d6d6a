use std::path::Path;
use std::process::Command;

use price_disclosure::cli;
use price_disclosure::data::{read_csv, PriceEntry};
use price_disclosure::{Cents, PriceList};

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn run(args: &[&str]) -> Run {
    let mut out = vec![];
    let mut err = vec![];
    let code = cli::run(std::iter::once("disclose").chain(args.iter().copied()), &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key:?} in\n{text}"))
}

fn write_prices(path: &Path, prices: &[f64]) {
    let entries = prices
        .iter()
        .map(|&p| PriceEntry {
            source: "shop".into(),
            price: Cents::from_units(p),
        })
        .collect();
    let list = PriceList::new("widget", entries).unwrap();
    list.write_csv(std::fs::File::create(path).unwrap()).unwrap();
}

#[test]
fn counts_match_closed_forms() {
    let r = run(&["counts", "--n", "20", "--rho", "10"]);
    assert_eq!(r.code, 0);
    assert_eq!(field(&r.out, "subset_count"), "354522");
    assert_eq!(field(&r.out, "interval_subset_count"), "66");
    assert_eq!(field(&r.out, "minimal_subset_count"), "11");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["simulate"]).code, 2);
    assert_eq!(run(&["disclose", "--builtin", "printer", "--rho", "10", "--n-new", "18"]).code, 2);
    assert_eq!(run(&["critical-cost", "--data", "x.csv", "--builtin", "printer", "--n-new", "3"]).code, 2);
    assert_eq!(run(&["frobnicate"]).code, 2);
}

#[test]
fn help_goes_to_stdout() {
    let r = run(&["--help"]);
    assert_eq!(r.code, 0);
    assert!(r.out.contains("disclose"));
    assert!(r.err.is_empty());
}

#[test]
fn computation_errors_exit_one() {
    let r = run(&["critical-cost", "--builtin", "toaster", "--n-new", "3"]);
    assert_eq!(r.code, 1);
    assert!(r.err.starts_with("error:"));
    let r = run(&["disclose", "--builtin", "printer", "--method", "interval", "--rho", "40", "--n-new", "18"]);
    assert_eq!(r.code, 1);
    let r = run(&["disclose", "--builtin", "printer", "--method", "brute", "--rho", "10", "--n-new", "18"]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("530396371"), "{}", r.err);
}

#[test]
fn interval_on_builtin_instance_evaluates_231() {
    let r = run(&["disclose", "--builtin", "printer", "--method", "interval", "--rho", "10", "--n-new", "18"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(field(&r.out, "evaluations"), "231");
    let cost: f64 = field(&r.out, "critical_cost").parse().unwrap();
    let full: f64 = field(&r.out, "full_set_cost").parse().unwrap();
    assert!(cost < full);
    assert!(field(&r.out, "subset").split(',').any(|p| p == "297.00"));
    let r = run(&["disclose", "--builtin", "printer", "--method", "minimal", "--rho", "10", "--n-new", "18"]);
    assert_eq!(field(&r.out, "evaluations"), "21");
}

#[test]
fn monte_carlo_prints_its_seed_and_is_reproducible() {
    let args = ["disclose", "--builtin", "mouse", "--method", "mc", "--rho", "8", "--n-new", "12", "--budget", "120"];
    let a = run(&args);
    assert_eq!(a.code, 0, "{}", a.err);
    assert_eq!(field(&a.out, "seed"), "0");
    assert_eq!(field(&a.out, "evaluations"), "120");
    let mut with_workers = args.to_vec();
    with_workers.extend(["--workers", "3"]);
    assert_eq!(a.out, run(&with_workers).out);
}

#[test]
fn trace_and_subset_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let subset = dir.path().join("subset.csv");
    let r = run(&[
        "disclose", "--builtin", "camera", "--method", "mc", "--rho", "10", "--n-new", "18",
        "--budget", "80", "--seed", "4",
        "--trace", trace.to_str().unwrap(), "--out", subset.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);

    let mut rows = csv::Reader::from_path(&trace).unwrap();
    assert_eq!(rows.headers().unwrap(), vec!["evaluation", "best_cost"]);
    let points: Vec<(u64, f64)> = rows.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(points.len(), 81);
    assert!(points.windows(2).all(|w| w[1].0 == w[0].0 + 1 && w[1].1 <= w[0].1));
    let reported: f64 = field(&r.out, "critical_cost").parse().unwrap();
    assert!((points.last().unwrap().1 - reported).abs() <= 1e-9 * reported);

    let list = read_csv(std::fs::File::open(&subset).unwrap()).unwrap();
    assert_eq!(list.len().to_string(), field(&r.out, "subset_size"));
    let shown: Vec<String> = list.prices().map(|c| format!("{:.2}", c.to_units::<f64>())).collect();
    let mut sorted = shown.clone();
    sorted.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse().unwrap()));
    assert_eq!(sorted.join(","), field(&r.out, "subset"));
}

#[test]
fn data_file_is_used_as_given() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("widget.csv");
    write_prices(&path, &[10.0, 10.5, 11.0, 11.2, 12.0, 12.5, 13.0, 15.0]);
    let r = run(&["disclose", "--data", path.to_str().unwrap(), "--method", "interval", "--rho", "4", "--n-new", "5"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(field(&r.out, "evaluations"), "15");
    assert!(field(&r.out, "subset").starts_with("10.00"));
}

#[test]
fn critical_cost_sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let r = run(&[
        "critical-cost", "--builtin", "monitor", "--n-new", "10", "--sweep", "n",
        "--from", "1", "--to", "20", "--step", "1", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let mut rows = csv::Reader::from_path(&out).unwrap();
    assert_eq!(rows.headers().unwrap(), vec!["q", "n_new", "critical_cost", "integration_error_estimate"]);
    let costs: Vec<f64> = rows.records().map(|r| r.unwrap()[2].parse().unwrap()).collect();
    assert_eq!(costs.len(), 20);
    assert!(costs.windows(2).all(|w| w[1] >= w[0] - 1e-9));
}

#[test]
fn fit_emits_json_with_grid() {
    let r = run(&["fit", "--builtin", "printer", "--method", "parametric"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let v: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(v["grid"].as_array().unwrap().len(), 512);
    assert!(!v["fits"].as_array().unwrap().is_empty());
}

#[test]
fn simulate_writes_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("market.json");
    std::fs::write(&config, r#"{"true_density": {"builtin": "mouse"}, "trials": 5, "rho": 8, "initial_set_size_n": 16}"#)
        .unwrap();
    let r = run(&["simulate", "--config", config.to_str().unwrap(), "--methods", "mc,interval", "--budgets", "5,20"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let mut rows = csv::Reader::from_reader(r.out.as_bytes());
    assert_eq!(
        rows.headers().unwrap(),
        vec!["method", "position_k", "budget", "mean_cost", "std_error", "full_set_cost", "trials", "seed"]
    );
    assert_eq!(rows.records().count(), 4);

    std::fs::write(&config, r#"{"true_density": {"builtin": "mouse"}, "trails": 5}"#).unwrap();
    assert_eq!(run(&["simulate", "--config", config.to_str().unwrap()]).code, 1);
}

#[test]
fn data_dir_variable_overrides_bundled_datasets() {
    let dir = tempfile::tempdir().unwrap();
    write_prices(&dir.path().join("printer.csv"), &[50.0, 51.0, 52.5, 55.0, 60.0]);
    let bin = env!("CARGO_BIN_EXE_disclose");
    let output = Command::new(bin)
        .args(["critical-cost", "--builtin", "printer", "--n-new", "4"])
        .env("DISCLOSE_DATA_DIR", dir.path())
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = String::from_utf8(output.stdout).unwrap();
    assert_eq!(field(&text, "q"), "50");

    let output = Command::new(bin)
        .args(["critical-cost", "--builtin", "mouse", "--n-new", "4"])
        .env("DISCLOSE_DATA_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}
