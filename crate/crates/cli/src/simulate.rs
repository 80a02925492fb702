//! `simulate` and `calibrate`: synthetic data with a known precision matrix.

use std::fmt::Write as _;

use covci::normal;
use covci::stattest::{pairs_from_context, TestContext};
use covci::synth::{random_precision_with, rng_for, write_csv, GeneratedPrecision};
use covci::{Method, SyntheticSpec, Verdict};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{exit, CliError, CliResult};
use crate::plot::{matrix_csv, write_file};
use crate::report::{mat, Mat, SCHEMA_VERSION};
use crate::run::{create_dir, write_json};

/// Streams `0..2^32` are reserved for samples; per-replicate precision
/// matrices use streams above.
const THETA_STREAM_BASE: u64 = 1 << 32;

fn synthetic(cfg: &RunConfig, command: &str) -> CliResult<SyntheticSpec> {
    cfg.synthetic()
        .cloned()
        .ok_or_else(|| CliError::Config(format!("{command} needs synthetic parameters (--p, --n)")))
}

#[derive(Serialize)]
struct SimulationReport {
    kind: &'static str,
    schema_version: u32,
    spec: SyntheticSpec,
    replicate: u64,
    theta: Mat,
    zero_entries: Vec<(usize, usize)>,
    nonzero_entries: Vec<(usize, usize)>,
    edge_probability: f64,
    nu: f64,
    attempts: usize,
    files: Vec<String>,
}

pub fn simulate(cfg: &RunConfig, replicate: u64) -> CliResult<i32> {
    let spec = synthetic(cfg, "simulate")?;
    let truth = spec.precision()?;
    let sample = spec.sample(&truth.theta, replicate)?;
    create_dir(&cfg.out)?;
    let sample_path = cfg.out.join("sample.csv");
    let mut buf = Vec::new();
    write_csv(&sample, &mut buf).expect("writing to memory");
    write_file(&sample_path, std::str::from_utf8(&buf).expect("ascii"))?;
    let names = sample.names();
    let theta_path = cfg.out.join("theta.csv");
    write_file(&theta_path, &matrix_csv(&truth.theta, &names, &names))?;
    let json_path = cfg.out.join("simulation.json");
    let report = SimulationReport {
        kind: "simulation",
        schema_version: SCHEMA_VERSION,
        theta: mat(&truth.theta),
        zero_entries: truth.zero_entries(),
        nonzero_entries: truth.nonzero_entries(),
        edge_probability: truth.t,
        nu: truth.nu,
        attempts: truth.attempts,
        spec,
        replicate,
        files: vec![
            "sample.csv".into(),
            "theta.csv".into(),
            "simulation.json".into(),
        ],
    };
    write_json(&json_path, &report)?;
    Ok(exit::SUCCESS)
}

/// A binomial proportion with its Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rate {
    pub successes: u64,
    pub trials: u64,
    pub rate: Option<f64>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
}

pub const CI_LEVEL: f64 = 0.95;

impl Rate {
    pub fn new(successes: u64, trials: u64) -> Self {
        if trials == 0 {
            return Self {
                successes,
                trials,
                rate: None,
                ci_lower: None,
                ci_upper: None,
            };
        }
        let z = normal::quantile(1.0 - (1.0 - CI_LEVEL) / 2.0);
        let n = trials as f64;
        let phat = successes as f64 / n;
        let denom = 1.0 + z * z / n;
        let centre = (phat + z * z / (2.0 * n)) / denom;
        let half = z * (phat * (1.0 - phat) / n + z * z / (4.0 * n * n)).sqrt() / denom;
        Self {
            successes,
            trials,
            rate: Some(phat),
            ci_lower: Some((centre - half).max(0.0)),
            ci_upper: Some((centre + half).min(1.0)),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodCalibration {
    pub method: Method,
    pub delta: f64,
    /// Rejections among entries with `Theta_ij = 0`.
    pub false_positive: Rate,
    /// Rejections among entries with `Theta_ij != 0`.
    pub true_positive: Rate,
    pub inconclusive: u64,
}

#[derive(Serialize)]
struct CalibrationReport {
    kind: &'static str,
    schema_version: u32,
    spec: SyntheticSpec,
    replicates: u64,
    theta_per_replicate: bool,
    delta: f64,
    bonferroni: bool,
    ci_level: f64,
    methods: Vec<MethodCalibration>,
    files: Vec<String>,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    fp: u64,
    zeros: u64,
    tp: u64,
    nonzeros: u64,
    inconclusive: u64,
}

pub fn calibrate(cfg: &RunConfig, replicates: u64, theta_per_replicate: bool) -> CliResult<i32> {
    let spec = synthetic(cfg, "calibrate")?;
    let methods = [Method::Proposed, Method::FisherZ];
    let delta = cfg.test_delta(spec.p);
    let mut tallies = [Tally::default(); 2];
    let fixed = if theta_per_replicate {
        None
    } else {
        Some(spec.precision()?)
    };
    for r in 0..replicates {
        let truth: GeneratedPrecision = match &fixed {
            Some(t) => t.clone(),
            None => random_precision_with(
                &mut rng_for(spec.seed, THETA_STREAM_BASE + r),
                spec.p,
                spec.affinity_scale,
            )?,
        };
        let sample = spec.sample(&truth.theta, r)?;
        let sample = if cfg.whiten { sample.whiten()? } else { sample };
        for (m, tally) in methods.iter().zip(tallies.iter_mut()) {
            let ctx = TestContext::new(&sample, delta, *m)?;
            for res in pairs_from_context(&ctx, *m).results {
                let zero = truth.theta[res.entry] == 0.0;
                let reject = res.reject_null();
                if res.verdict == Verdict::Inconclusive {
                    tally.inconclusive += 1;
                }
                if zero {
                    tally.zeros += 1;
                    tally.fp += reject as u64;
                } else {
                    tally.nonzeros += 1;
                    tally.tp += reject as u64;
                }
            }
        }
    }
    let results: Vec<MethodCalibration> = methods
        .iter()
        .zip(&tallies)
        .map(|(&method, t)| MethodCalibration {
            method,
            delta,
            false_positive: Rate::new(t.fp, t.zeros),
            true_positive: Rate::new(t.tp, t.nonzeros),
            inconclusive: t.inconclusive,
        })
        .collect();

    create_dir(&cfg.out)?;
    let csv_path = cfg.out.join("calibration.csv");
    write_file(&csv_path, &calibration_csv(&results))?;
    let report = CalibrationReport {
        kind: "calibration",
        schema_version: SCHEMA_VERSION,
        spec,
        replicates,
        theta_per_replicate,
        delta: cfg.delta,
        bonferroni: cfg.bonferroni,
        ci_level: CI_LEVEL,
        methods: results,
        files: vec!["calibration.csv".into(), "calibration.json".into()],
    };
    write_json(&cfg.out.join("calibration.json"), &report)?;
    Ok(exit::SUCCESS)
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x}"))
}

fn calibration_csv(results: &[MethodCalibration]) -> String {
    let mut s = String::from("method,measure,successes,trials,rate,ci_lower,ci_upper\n");
    for r in results {
        let name = match r.method {
            Method::Proposed => "proposed",
            Method::FisherZ => "fisher-z",
        };
        for (measure, rate) in [
            ("false_positive", &r.false_positive),
            ("true_positive", &r.true_positive),
        ] {
            let _ = writeln!(
                s,
                "{name},{measure},{},{},{},{},{}",
                rate.successes,
                rate.trials,
                opt(rate.rate),
                opt(rate.ci_lower),
                opt(rate.ci_upper)
            );
        }
    }
    s
}
