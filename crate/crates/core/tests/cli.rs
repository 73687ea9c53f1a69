use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use approx::assert_relative_eq;
use biphoton::config::write_tabulated_jsa;
use biphoton::jsa::{discretize, GridSpec};
use biphoton::DoubleGaussianJsa;
use serde_json::Value;
use tempfile::TempDir;

const KTP: &str = r#"{"jsa": {"sigma1": 6.0, "sigma2": 0.70, "theta1": "pi/4", "theta2": 0.97}, "filter": {"width": 0.72}}"#;

fn config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn biphoton(args: &[&str], config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biphoton"))
        .args(args)
        .arg("--config")
        .arg(config)
        .output()
        .expect("binary runs")
}

fn json_rows(out: &Output) -> Vec<Value> {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    doc["rows"].as_array().unwrap().clone()
}

/// Data lines of a CSV document, comment lines dropped, split into cells.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn column(rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = rows[0]
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    rows[1..].iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn factorable_source_reports_one_mode() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        "sep.json",
        r#"{"jsa": {"sigma1": 1.0, "sigma2": 2.0, "theta1": 0, "theta2": "-pi/2"}}"#,
    );
    let rows = json_rows(&biphoton(&["report", "--format", "json"], &cfg));
    let get = |q: &str| {
        rows.iter().find(|r| r["quantity"] == q).unwrap()["quadrature"]
            .as_f64()
            .unwrap()
    };
    assert_relative_eq!(get("schmidt_number"), 1.0, epsilon = 1e-9);
    assert_relative_eq!(get("g2"), 2.0, epsilon = 1e-9);
    assert_relative_eq!(get("unfiltered_purity"), 1.0, epsilon = 1e-9);
}

#[test]
fn report_routes_agree_for_ktp() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "ktp.json", KTP);
    for row in json_rows(&biphoton(&["report", "--format", "json"], &cfg)) {
        assert!(row["discrepancy"].as_f64().unwrap() < 1e-9, "{row}");
    }
}

#[test]
fn output_is_reproducible_without_timestamp() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "ktp.json", KTP);
    let run = |extra: &[&str]| {
        let mut args = vec!["hom"];
        args.extend_from_slice(extra);
        let out = biphoton(&args, &cfg);
        assert!(out.status.success());
        out.stdout
    };
    let a = run(&["--no-timestamp"]);
    assert_eq!(a, run(&["--no-timestamp"]));
    let stamped = String::from_utf8(run(&[])).unwrap();
    assert!(stamped.lines().any(|l| l.starts_with("# generated_unix:")));
    assert!(!String::from_utf8(a).unwrap().contains("generated_unix"));
}

#[test]
fn hom_visibility_for_the_half_visibility_filter() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        "ktp.json",
        r#"{"jsa": {"sigma1": 6.0, "sigma2": 0.70, "theta1": "pi/4", "theta2": 0.97}, "filter": {"width": 0.97}}"#,
    );
    let out = biphoton(&["hom", "--no-timestamp"], &cfg);
    assert!(out.status.success());
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    let v = column(&rows, "visibility")[0];
    assert!((v - 0.5).abs() < 0.03, "visibility {v}");
    let numeric = column(&rows, "coincidence");
    let analytic = column(&rows, "analytic_coincidence");
    for (a, b) in numeric.iter().zip(&analytic) {
        assert!((a - b).abs() < 1e-9);
    }
    let bottom = numeric.iter().copied().fold(f64::INFINITY, f64::min);
    assert_relative_eq!((0.5 - bottom) / (0.5 + bottom), v, epsilon = 1e-6);
}

#[test]
fn schmidt_export_follows_thermal_law() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "ktp.json", KTP);
    let out_path = dir.path().join("schmidt.csv");
    let out = biphoton(
        &[
            "schmidt",
            "--no-timestamp",
            "--output",
            out_path.to_str().unwrap(),
        ],
        &cfg,
    );
    assert!(out.status.success());
    let rows = csv_rows(&std::fs::read_to_string(&out_path).unwrap());
    let p = column(&rows, "p_mu");
    let thermal = column(&rows, "thermal_p_mu");
    assert!(p.len() >= 10);
    for (a, b) in p.iter().zip(&thermal) {
        assert!((a - b).abs() < 1e-6);
    }
    let modes = std::fs::read_to_string(dir.path().join("schmidt.modes.csv")).unwrap();
    assert!(modes.lines().count() > 10);
}

#[test]
fn projection_herald_is_pure() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        "k26.json",
        r#"{"jsa": {"sigma1": 1.0, "sigma2": 5.0, "theta1": "pi/4", "theta2": "-pi/4"}}"#,
    );
    let out = biphoton(
        &[
            "schmidt",
            "--project-mode",
            "0",
            "--format",
            "json",
            "--no-timestamp",
        ],
        &cfg,
    );
    let rows = json_rows(&out);
    let get = |q: &str| {
        rows.iter().find(|r| r["quantity"] == q).unwrap()["value"]
            .as_f64()
            .unwrap()
    };
    assert_relative_eq!(get("success"), 2.0 / 3.6, epsilon = 1e-3);
    assert_relative_eq!(get("purity"), 1.0, epsilon = 1e-10);
}

#[test]
fn tabulated_source_matches_analytic_report() {
    let dir = TempDir::new().unwrap();
    let jsa = DoubleGaussianJsa::new(
        1.0,
        5.0,
        std::f64::consts::FRAC_PI_4,
        -std::f64::consts::FRAC_PI_4,
    )
    .unwrap();
    let grid = discretize(
        &jsa,
        GridSpec {
            half_extent: 6.0,
            n_points: 201,
        },
    )
    .unwrap();
    write_tabulated_jsa(
        &grid,
        std::fs::File::create(dir.path().join("jsa.csv")).unwrap(),
    )
    .unwrap();
    let cfg = config(
        &dir,
        "tab.json",
        r#"{"jsa": {"tabulated": "jsa.csv"}, "filter": {"width": 1.0}}"#,
    );
    let rows = json_rows(&biphoton(&["report", "--format", "json"], &cfg));
    let purity = rows.iter().find(|r| r["quantity"] == "purity").unwrap();
    let expected = biphoton::analytic::closed_form_purity(
        &jsa,
        &biphoton::GaussianFilter::centered(1.0).unwrap(),
    );
    assert_relative_eq!(
        purity["quadrature"].as_f64().unwrap(),
        expected,
        max_relative = 1e-6
    );
}

#[test]
fn exit_codes_separate_input_and_numerical_failures() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.json");
    let out = biphoton(&["report"], &missing);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["exit_code"], 2);

    let bad = config(
        &dir,
        "bad.json",
        r#"{"jsa": {"sigma1": -1.0, "sigma2": 1.0, "theta1": 0, "theta2": 1}}"#,
    );
    assert_eq!(biphoton(&["report"], &bad).status.code(), Some(2));

    let unknown = config(
        &dir,
        "unknown.json",
        r#"{"jsa": {"sigma1": 1.0, "sigma2": 1.0, "theta1": 0, "theta2": 1}, "colour": 1}"#,
    );
    assert_eq!(biphoton(&["report"], &unknown).status.code(), Some(2));

    let far = config(
        &dir,
        "far.json",
        r#"{"jsa": {"sigma1": 1.0, "sigma2": 5.0, "theta1": "pi/4", "theta2": "-pi/4"}, "filter": {"center": 200, "width": 0.05}}"#,
    );
    assert_eq!(biphoton(&["report"], &far).status.code(), Some(3));

    let ktp = config(&dir, "ktp.json", KTP);
    assert_eq!(
        biphoton(&["solve-filter", "--target-purity", "0.99999999"], &ktp)
            .status
            .code(),
        Some(3)
    );
    assert_eq!(biphoton(&["solve-filter"], &ktp).status.code(), Some(2));
}
