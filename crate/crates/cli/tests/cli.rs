use std::path::Path;
use std::process::{Command, Output};

use hardylab_cli::records::{
    ApplyRecord, ConstantRecord, FunctionData, MajorizeRecord, MartingaleRecord, RatioRecord, SharpnessRecord,
};
use hardylab_cli::round12;
use hardylab_cli::sweep::{read_rows, OutputFormat, SweepRow};
use hardylab_core::Branch;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hardylab"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Parses stdout and checks that printing the record again gives the same
/// text.
fn record<T: DeserializeOwned + Serialize>(out: &Output) -> T {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let parsed: T = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&parsed).unwrap(), text.trim_end());
    parsed
}

#[test]
fn constant_interior_optimum() {
    let out = run(&["constant", "--p", "1.5", "--m", "1", "--lambda", "2"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r: ConstantRecord = record(&out);
    assert_eq!(r.branch, Branch::InteriorOptimum);
    assert!((r.c_pow_p - 1.8144214).abs() < 1e-6);
    let [a, b] = r.argmax.unwrap();
    assert!((a - 0.4).abs() < 0.05 && (b - 5.7).abs() < 0.05);
    assert_eq!(r.c_pow_p, round12(r.c_pow_p));
}

#[test]
fn constant_p_equals_two() {
    let out = run(&["constant", "--p", "2", "--m", "0", "--lambda", "0.5"]);
    assert_eq!(code(&out), 0);
    let r: ConstantRecord = record(&out);
    assert_eq!(r.branch, Branch::PEqualsTwo);
    assert_eq!(r.c, 1.0);
    assert!(r.argmax.is_none());
}

#[test]
fn constant_rejects_small_p() {
    let out = run(&["constant", "--p", "0.9", "--m", "0", "--lambda", "1"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("p must exceed 1"), "{}", stderr(&out));
    let out = run(&["constant", "--p", "2", "--m", "-1", "--lambda", "1"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("m must exceed"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&run(&["constant", "--p", "2"])), 1);
    assert_eq!(code(&run(&["bogus"])), 1);
    assert_eq!(code(&run(&["constant", "--p", "x", "--m", "0", "--lambda", "1"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn non_convergence_exits_two() {
    // twenty simplex steps cannot settle the interior optimum
    let out = run(&[
        "--max-iter",
        "20",
        "constant",
        "--p",
        "1.5",
        "--m",
        "1",
        "--lambda",
        "2",
    ]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("did not converge"));
}

#[test]
fn constant_is_deterministic() {
    let args = ["--seed", "9", "constant", "--p", "3", "--m", "1", "--lambda", "2"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn ratio_matches_frozen_value() {
    let out = run(&[
        "ratio", "--p", "1.5", "--m", "1", "--lambda", "2", "--alpha", "0.4", "--beta", "5.7",
    ]);
    assert_eq!(code(&out), 0);
    let r: RatioRecord = record(&out);
    assert_eq!(r.c_ratio, round12(1.8144089692573935));
    assert!((r.ratio_extremal - r.c_ratio).abs() < 1e-10);
    let out = run(&[
        "ratio", "--p", "1.5", "--m", "1", "--lambda", "2", "--alpha", "1", "--beta", "5.7",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn sharpness_cases() {
    let out = run(&["sharpness", "--p", "1.5", "--m", "1", "--lambda", "2"]);
    assert_eq!(code(&out), 0);
    let r: SharpnessRecord = record(&out);
    assert!(r.gap_checked && r.gap <= 1e-6);
    assert!(r.near_max <= r.ratio_at_witness);

    let out = run(&["sharpness", "--p", "2", "--m", "0", "--lambda", "0.5"]);
    assert_eq!(code(&out), 0);
    let r: SharpnessRecord = record(&out);
    assert_eq!(r.branch, Branch::PEqualsTwo);

    let out = run(&["sharpness", "--p", "3", "--m", "1", "--lambda", "0"]);
    assert_eq!(code(&out), 0);
    let r: SharpnessRecord = record(&out);
    assert_eq!((r.c_pow_p, r.ratio_at_witness), (1.0, 1.0));

    let out = run(&["sharpness", "--p", "4", "--m", "0", "--lambda", "1"]);
    let r: SharpnessRecord = record(&out);
    assert_eq!(r.witness_source, "alpha_p");
    assert!(r.gap < 1e-9);
}

#[test]
fn majorize_passes_and_fails() {
    for args in [
        ["--p", "4", "--m", "0", "--lambda", "1"],
        ["--p", "1.5", "--m", "1", "--lambda", "2"],
    ] {
        let mut full = vec!["majorize", "--points", "20000"];
        full.extend(args);
        let out = run(&full);
        assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
        let r: MajorizeRecord = record(&out);
        assert!(r.passed);
    }
    let out = run(&[
        "majorize",
        "--points",
        "20000",
        "--p",
        "4",
        "--m",
        "0",
        "--lambda",
        "1",
        "--force-c",
        "1.1",
    ]);
    assert_eq!(code(&out), 3);
    let r: MajorizeRecord = record(&out);
    assert!(r.forced && !r.passed);
    assert!(r.majorization.witness_x.is_some());
    assert!((r.c_pow_p - 1.1f64.powi(4)).abs() < 1e-12);
}

#[test]
fn majorize_domain_errors() {
    assert_eq!(code(&run(&["majorize", "--p", "2", "--m", "1", "--lambda", "3"])), 1);
    assert_eq!(code(&run(&["majorize", "--p", "3", "--m", "1", "--lambda", "-1"])), 1);
}

#[test]
fn martingale_record() {
    let out = run(&[
        "martingale",
        "--alpha",
        "-2",
        "--s",
        "0.0001",
        "--n",
        "10000",
        "--p",
        "4",
    ]);
    assert_eq!(code(&out), 0);
    let r: MartingaleRecord = record(&out);
    assert!(r.growth_condition);
    assert_eq!(r.limit_ratio, 3.0);
    assert!(r.gap < 1e-2);

    let out = run(&["martingale", "--alpha", "0", "--s", "0.1", "--n", "5", "--p", "2"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn martingale_fuzz() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fuzz.csv");
    let out = run(&[
        "--seed",
        "100",
        "martingale",
        "--alpha",
        "-2",
        "--s",
        "0.1",
        "--n",
        "10",
        "--p",
        "3",
        "--fuzz",
        "50",
        "--fuzz-csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r: MartingaleRecord = record(&out);
    let fuzz = r.fuzz.unwrap();
    assert_eq!((fuzz.trees, fuzz.violations), (50, 0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 51);
    assert!(text.lines().nth(1).unwrap().starts_with("100,"));

    // a constant below one is always beaten
    let out = run(&[
        "martingale",
        "--alpha",
        "-2",
        "--s",
        "0.1",
        "--n",
        "10",
        "--p",
        "3",
        "--fuzz",
        "20",
        "--c",
        "0.5",
    ]);
    assert_eq!(code(&out), 3);
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn sweep(dir: &Path, spec: &str, out_name: &str) -> (Output, String) {
    let spec = write(dir, "spec.json", spec);
    let out_path = dir.join(out_name);
    let out = run(&["sweep", "--spec", &spec, "--out", out_path.to_str().unwrap()]);
    let text = std::fs::read_to_string(&out_path).unwrap_or_default();
    (out, text)
}

#[test]
fn sweep_single_cell_matches_constant() {
    let dir = tempfile::tempdir().unwrap();
    let (out, text) = sweep(dir.path(), r#"{"p":[1.5],"m":[1],"lambda":[2]}"#, "o.csv");
    assert_eq!(code(&out), 0);
    let rows = read_rows(&text, OutputFormat::Csv).unwrap();
    assert_eq!(rows.len(), 1);
    let c: ConstantRecord = record(&run(&["constant", "--p", "1.5", "--m", "1", "--lambda", "2"]));
    let row = &rows[0];
    assert_eq!(row.c_pow_p, Some(c.c_pow_p));
    assert_eq!(row.branch, Some(c.branch));
    assert_eq!([row.alpha_star.unwrap(), row.beta_star.unwrap()], c.argmax.unwrap());
    assert_eq!(row.gamma, Some(c.gamma));
}

#[test]
fn sweep_nonpositive_lambda_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"{"p":{"lo":1.2,"hi":4,"steps":4},"m":[0,1,2.5],"lambda":[-2,-1,0],"format":"json"}"#;
    let (out, text) = sweep(dir.path(), spec, "o.json");
    assert_eq!(code(&out), 0);
    let rows = read_rows(&text, OutputFormat::Json).unwrap();
    assert_eq!(rows.len(), 36);
    for row in &rows {
        let gamma = row.m / 2.0 + (row.p - 1.0) / row.p;
        assert_eq!(row.c, Some(round12(row.lambda.abs() / gamma + 1.0)), "{row:?}");
    }
}

#[test]
fn sweep_order_skips_and_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"{"p":[3,1.5],"m":[1,-0.9],"lambda":[2,1],"opt":{"starts":10}}"#;
    let (out, text) = sweep(dir.path(), spec, "o.csv");
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows: Vec<SweepRow> = read_rows(&text, OutputFormat::Csv).unwrap();
    let keys: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r.p, r.m, r.lambda)).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(keys, sorted);
    assert!(rows.iter().enumerate().all(|(i, r)| r.seed == i as u64));
    // m = −0.9 is infeasible for p = 1.5 (needs m > −2/3) but not for p = 3
    for row in &rows {
        let infeasible = row.m <= -2.0 * (row.p - 1.0) / row.p;
        assert_eq!(row.skipped_reason.is_some(), infeasible, "{row:?}");
        assert_eq!(row.c_pow_p.is_none(), infeasible);
    }
    // CSV and JSON carry the same rows
    let json_spec = r#"{"p":[3,1.5],"m":[1,-0.9],"lambda":[2,1],"opt":{"starts":10},"format":"json"}"#;
    let (_, json) = sweep(dir.path(), json_spec, "o.json");
    let from_json = read_rows(&json, OutputFormat::Json).unwrap();
    let strip = |r: &SweepRow| SweepRow {
        wall_ms: 0.0,
        ..r.clone()
    };
    assert_eq!(
        rows.iter().map(strip).collect::<Vec<_>>(),
        from_json.iter().map(strip).collect::<Vec<_>>()
    );
}

#[test]
fn sweep_empty_grid_writes_header() {
    let dir = tempfile::tempdir().unwrap();
    let (out, text) = sweep(dir.path(), r#"{"p":[],"m":[0],"lambda":[1]}"#, "o.csv");
    assert_eq!(code(&out), 0);
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("p,m,lambda,gamma,C_pow_p,C,branch"));
}

#[test]
fn sweep_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "spec.json", r#"{"p":[2],"m":[0],"lambda":[1]}"#);
    assert_eq!(
        code(&run(&["sweep", "--spec", &spec, "--out", "/nonexistent/dir/o.csv"])),
        1
    );
    let bad = write(dir.path(), "bad.json", r#"{"p":[2],"m":[0]}"#);
    assert_eq!(
        code(&run(&[
            "sweep",
            "--spec",
            &bad,
            "--out",
            dir.path().join("x").to_str().unwrap()
        ])),
        1
    );
    let missing = dir.path().join("missing.json");
    assert_eq!(
        code(&run(&["sweep", "--spec", missing.to_str().unwrap(), "--out", "x"])),
        1
    );
}

#[test]
fn apply_piecewise_and_sampled() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "f.json",
        r#"{"pieces":[{"coeff_re":1,"coeff_im":0,"exponent":0,"lo":0,"hi":1}]}"#,
    );
    let out = run(&[
        "apply", "--input", &input, "--p", "3", "--m", "0", "--lambda", "1", "--op", "residual",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r: ApplyRecord = record(&out);
    assert_eq!(r.domain, "(0,inf)");
    assert_eq!(r.image_norm, Some(round12(0.5f64.powf(1.0 / 3.0))));
    let Some(FunctionData::Piecewise(image)) = r.image else {
        panic!("{:?}", r.image)
    };
    assert_eq!(image.eval(2.0).re, -0.5);
    assert_eq!(image.eval(0.5).re, 0.0);

    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 10.0).collect();
    let sampled = serde_json::json!({ "grid": grid, "values_re": vec![1.0; 101] });
    let input = write(dir.path(), "g.json", &sampled.to_string());
    let image_path = dir.path().join("image.json");
    let out = run(&[
        "apply",
        "--input",
        &input,
        "--output",
        image_path.to_str().unwrap(),
        "--p",
        "2",
        "--m",
        "1",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r: ApplyRecord = record(&out);
    assert_eq!(r.domain, "[0,10]");
    assert!(r.image.is_none());
    // H_1 of a constant is the constant divided by 3/2
    let image: FunctionData = serde_json::from_str(&std::fs::read_to_string(&image_path).unwrap()).unwrap();
    let FunctionData::Sampled(image) = image else { panic!() };
    assert!(image.values().iter().all(|v| (v.re - 2.0 / 3.0).abs() < 1e-12));
}

#[test]
fn apply_reports_divergent_norm() {
    let dir = tempfile::tempdir().unwrap();
    // t^{-0.9} on [0,1) is not in L^2, yet H_0 still applies to it
    let input = write(
        dir.path(),
        "f.json",
        r#"{"pieces":[{"coeff_re":1,"coeff_im":0,"exponent":-0.9,"lo":0,"hi":1}]}"#,
    );
    let out = run(&["apply", "--input", &input, "--p", "2", "--m", "0"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r: ApplyRecord = record(&out);
    assert!(r.input_norm.is_none() && r.image_norm.is_none());
    assert!(r.norm_error.unwrap().contains("diverges"));
    assert!(r.image.is_some());
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"pieces":[{"coeff_re":1,"exponent":0,"lo":2,"hi":1}]}"#,
    );
    assert_eq!(code(&run(&["apply", "--input", &bad, "--p", "2", "--m", "0"])), 1);
}
