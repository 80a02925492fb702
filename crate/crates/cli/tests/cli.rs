use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use covci_cli::REPORT_SCHEMA;
use serde_json::Value;

fn covci(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covci"))
        .args(args)
        .output()
        .expect("spawn covci")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--out", out]);
    covci(&all)
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_valid(doc: &Value) {
    let schema: Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(doc)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    assert!(errors.is_empty(), "schema violations: {errors:#?}");
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

fn nums(v: &Value) -> Vec<Option<f64>> {
    match v {
        Value::Array(a) => a.iter().flat_map(nums).collect(),
        Value::Null => vec![None],
        other => vec![Some(other.as_f64().unwrap())],
    }
}

/// `lower <= empirical <= upper` elementwise, with `null` as unbounded.
fn assert_brackets(lower: &Value, empirical: &Value, upper: &Value, what: &str) {
    let (lo, mid, hi) = (nums(lower), nums(empirical), nums(upper));
    assert_eq!(lo.len(), mid.len());
    assert_eq!(hi.len(), mid.len());
    for k in 0..mid.len() {
        let m = mid[k].unwrap();
        assert!(
            lo[k].map_or(true, |l| l <= m),
            "{what}[{k}]: lower {:?} > {m}",
            lo[k]
        );
        assert!(
            hi[k].map_or(true, |h| m <= h),
            "{what}[{k}]: upper {:?} < {m}",
            hi[k]
        );
    }
}

fn write_csv(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn full_report_validates_and_brackets_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "test", "--p", "4", "--n", "20000", "--seed", "3", "--method", "both", "--dot", "--svg",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = read_json(dir.path().join("report.json"));
    assert_valid(&r);
    assert_eq!(r["command"], "test");
    assert_eq!(r["data"]["p"], 4);

    let e = &r["eigen"];
    for b in e["eigenvalues"].as_array().unwrap() {
        assert!(
            b["lower"].as_f64() <= b["empirical"].as_f64()
                && b["empirical"].as_f64() <= b["upper"].as_f64()
        );
    }
    for key in ["eigenvectors", "eigenvectors_squared"] {
        for t in [&e[key], &e["tightened"][key]] {
            assert_brackets(&t["lower"], &t["empirical"], &t["upper"], key);
        }
    }
    let pr = &r["precision"];
    assert_brackets(
        &pr["eigen"]["lower"],
        &pr["eigen"]["empirical"],
        &pr["eigen"]["upper"],
        "precision eigen",
    );
    assert_brackets(
        &pr["l2"]["lower"],
        &pr["theta_hat"],
        &pr["l2"]["upper"],
        "precision l2",
    );

    let tests = r["tests"].as_array().unwrap();
    assert_eq!(tests.len(), 2);
    assert!(tests
        .iter()
        .all(|t| t["results"].as_array().unwrap().len() == 6));
    let dot = std::fs::read_to_string(dir.path().join("graph-proposed.dot")).unwrap();
    assert!(dot.starts_with("graph dependence {"));
    assert!(dot.contains("style=solid") || dot.contains("style=dashed"));
    for f in r["files"].as_array().unwrap() {
        assert!(
            dir.path().join(f.as_str().unwrap()).exists(),
            "{f} listed but missing"
        );
    }
    for panel in [
        "eigenvalues",
        "eigenvectors",
        "precision_eigen",
        "precision_l2",
    ] {
        for layer in ["lower", "empirical", "upper"] {
            assert!(dir
                .path()
                .join(format!("panels/{panel}_{layer}.csv"))
                .exists());
        }
        assert!(dir.path().join(format!("panels/{panel}.svg")).exists());
    }
}

#[test]
fn routes_select_interval_families() {
    let dir = tempfile::tempdir().unwrap();
    for (route, eigen, l2) in [
        ("both", true, true),
        ("eigen", true, false),
        ("l2", false, true),
    ] {
        let out = run_in(
            dir.path(),
            &[
                "precision-bounds",
                "--p",
                "3",
                "--n",
                "5000",
                "--route",
                route,
            ],
        );
        assert_eq!(out.status.code(), Some(0));
        let r = read_json(dir.path().join("report.json"));
        assert_valid(&r);
        assert_eq!(!r["precision"]["eigen"].is_null(), eigen, "{route}");
        assert_eq!(!r["precision"]["l2"].is_null(), l2, "{route}");
        assert!(r["tests"].is_null());
    }
}

#[test]
fn estimate_matches_direct_covariance() {
    let dir = tempfile::tempdir().unwrap();
    let rows = [
        [1.0, 2.0, 0.5],
        [2.0, 1.5, -1.0],
        [4.0, 3.0, 0.0],
        [0.5, 0.0, 2.0],
        [3.0, 3.5, 1.0],
    ];
    let mut text = String::from("a,b,c\n");
    for r in rows {
        text.push_str(&format!("{},{},{}\n", r[0], r[1], r[2]));
    }
    let csv = write_csv(dir.path(), "in.csv", &text);
    let out = run_in(dir.path(), &["estimate", "--input", csv.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = read_json(dir.path().join("report.json"));
    assert_valid(&r);
    assert!(r["eigen"].is_null());
    let n = rows.len() as f64;
    let mean: Vec<f64> = (0..3)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    for i in 0..3 {
        for j in 0..3 {
            let s: f64 = rows
                .iter()
                .map(|r| (r[i] - mean[i]) * (r[j] - mean[j]))
                .sum::<f64>()
                / (n - 1.0);
            let got = r["estimate"]["sigma_hat"][i][j].as_f64().unwrap();
            assert!((got - s).abs() < 1e-12, "({i},{j}) {got} vs {s}");
        }
    }
    assert_eq!(r["estimate"]["cov_of_cov"].as_array().unwrap().len(), 6);
    assert_eq!(r["data"]["names"], serde_json::json!(["a", "b", "c"]));
}

#[test]
fn fixed_seed_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "test",
        "--p",
        "3",
        "--n",
        "3000",
        "--seed",
        "11",
        "--distribution",
        "laplace",
    ];
    run_in(a.path(), &args);
    run_in(b.path(), &args);
    let read =
        |d: &Path| std::fs::read_to_string(d.join("panels/precision_eigen_upper.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    let strip = |d: &Path| {
        let mut v = read_json(d.join("report.json"));
        v["files"] = Value::Null;
        v
    };
    assert_eq!(strip(a.path()), strip(b.path()));
}

#[test]
fn ingestion_errors_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(dir.path(), "nan.csv", "a,b\n1,2\n3,NaN\n5,6\n");
    let out = run_in(dir.path(), &["estimate", "--input", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let e = stderr_json(&out);
    assert_eq!(e["error"]["kind"], "ingestion");
    assert_eq!(e["error"]["row"], 2);
    assert_eq!(e["error"]["column"], "b");

    let csv = write_csv(dir.path(), "empty.csv", "a,b\n");
    let out = run_in(dir.path(), &["estimate", "--input", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["error"]["message"]
        .as_str()
        .unwrap()
        .contains("n < 3"));

    let out = run_in(
        dir.path(),
        &["estimate", "--input", csv.to_str().unwrap(), "--delta", "2"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "configuration");
}

#[test]
fn whitening_standardizes_and_rejects_constants() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(dir.path(), "w.csv", "x,y\n1,10\n2,30\n3,20\n4,60\n");
    let out = run_in(
        dir.path(),
        &["estimate", "--input", csv.to_str().unwrap(), "--whiten"],
    );
    assert_eq!(out.status.code(), Some(0));
    let r = read_json(dir.path().join("report.json"));
    assert_eq!(r["data"]["whitened"], true);
    for i in 0..2 {
        assert!((r["estimate"]["sigma_hat"][i][i].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
    let csv = write_csv(dir.path(), "c.csv", "x,k\n1,5\n2,5\n3,5\n");
    let out = run_in(
        dir.path(),
        &["estimate", "--input", csv.to_str().unwrap(), "--whiten"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_json(&out)["error"]["message"]
        .as_str()
        .unwrap()
        .contains("'k'"));
}

#[test]
fn singular_covariance_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(dir.path(), "dup.csv", "x,y\n1,1\n2,2\n4,4\n3,3\n");
    let out = run_in(
        dir.path(),
        &["precision-bounds", "--input", csv.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"]["kind"], "numerical");
}

#[test]
fn all_inconclusive_exits_4_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["test", "--p", "5", "--n", "30"]);
    assert_eq!(
        out.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = read_json(dir.path().join("report.json"));
    assert_valid(&r);
    assert_eq!(r["tests"][0]["all_inconclusive"], true);
    assert!(r["precision"]["l2"].is_null());
    // Fisher-z always decides, so asking for it too is not inconclusive.
    let out = run_in(
        dir.path(),
        &["test", "--p", "5", "--n", "30", "--method", "both"],
    );
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn simulate_round_trips_through_ingestion() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "simulate",
            "--p",
            "4",
            "--n",
            "200",
            "--seed",
            "5",
            "--distribution",
            "laplace",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let sim = read_json(dir.path().join("simulation.json"));
    assert_valid(&sim);
    assert!(!sim["zero_entries"].as_array().unwrap().is_empty());
    let sample = dir.path().join("sample.csv");
    let parsed = covci_cli::ingest_csv(&sample).unwrap();
    assert_eq!((parsed.p(), parsed.n()), (4, 200));

    let spec = covci::SyntheticSpec::new(4, 200, covci::Distribution::Laplace, 5);
    let theta = spec.precision().unwrap().theta;
    let direct = spec.sample(&theta, 0).unwrap();
    assert_eq!(parsed.data(), direct.data());
}

#[test]
fn calibrate_zero_replicates_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["calibrate", "--p", "3", "--n", "100", "--replicates", "0"],
    );
    assert_eq!(out.status.code(), Some(0));
    let c = read_json(dir.path().join("calibration.json"));
    assert_valid(&c);
    for m in c["methods"].as_array().unwrap() {
        assert_eq!(m["false_positive"]["trials"], 0);
        assert!(m["false_positive"]["rate"].is_null());
    }
}

#[test]
fn calibrate_laplace_compares_tests() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "calibrate",
            "--p",
            "5",
            "--n",
            "20000",
            "--replicates",
            "40",
            "--distribution",
            "laplace",
            "--theta-per-replicate",
            "--seed",
            "2",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let c = read_json(dir.path().join("calibration.json"));
    assert_valid(&c);
    let methods = c["methods"].as_array().unwrap();
    let fp = |k: usize| methods[k]["false_positive"].clone();
    assert_eq!(methods[0]["method"], "proposed");
    let total =
        fp(0)["trials"].as_u64().unwrap() + methods[0]["true_positive"]["trials"].as_u64().unwrap();
    assert_eq!(total, 40 * 10);
    let (proposed, fisher) = (
        fp(0)["rate"].as_f64().unwrap(),
        fp(1)["rate"].as_f64().unwrap(),
    );
    assert!(proposed <= 0.05, "proposed FPR {proposed}");
    assert!(fisher > 0.05, "Fisher-z FPR {fisher} on Laplace data");
    let lo = fp(1)["ci_lower"].as_f64().unwrap();
    let hi = fp(1)["ci_upper"].as_f64().unwrap();
    assert!(lo <= fisher && fisher <= hi);
    let csv = std::fs::read_to_string(dir.path().join("calibration.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn config_file_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("res");
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "delta = 0.1\nsource = \"trace\"\nroute = \"eigen\"\nout = {:?}\nmax_iters = 0\n[synthetic]\np = 3\nn = 4000\n",
            out_dir.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = covci(&["eigen-bounds", "--config", cfg.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = read_json(out_dir.join("report.json"));
    assert_valid(&r);
    assert_eq!(r["bound"]["source"], "trace");
    assert_eq!(r["bound"]["delta"], 0.1);
    assert!(r["eigen"]["tightened"].is_null());
}

#[test]
fn schema_rejects_malformed_reports() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["estimate", "--p", "3", "--n", "500"]);
    let mut r = read_json(dir.path().join("report.json"));
    assert_valid(&r);
    r["bound"]["epsilon"] = Value::from(-1.0);
    let schema: Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    assert!(!validator.is_valid(&r));
    let mut r = read_json(dir.path().join("report.json"));
    r["unexpected"] = Value::from(1);
    assert!(!validator.is_valid(&r));
}
