//! Orchestration of the analysis subcommands.

use std::path::{Path, PathBuf};

use covci::eigenbounds::{epsilon_bound, tighten_orthonormal};
use covci::linalg::eigenvalues_desc;
use covci::precision::{l2_threshold_from_epsilon, precision_point, PrecisionReport};
use covci::stattest::{pairs_from_context, TestContext};
use covci::synth::GeneratedPrecision;
use covci::{cov_of_cov, EigenBounds, Method, SampleMatrix, Verdict};
use nalgebra::DMatrix;

use crate::config::{Command, InputSource, RunConfig};
use crate::error::{exit, CliError, CliResult};
use crate::ingest::ingest_csv;
use crate::plot::{write_file, write_panel, Panel};
use crate::report::*;

/// How far an analysis subcommand goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Estimate,
    EigenBounds,
    PrecisionBounds,
    Test,
}

impl Stage {
    pub fn of(command: &Command) -> Option<Stage> {
        match command {
            Command::Estimate => Some(Stage::Estimate),
            Command::EigenBounds => Some(Stage::EigenBounds),
            Command::PrecisionBounds => Some(Stage::PrecisionBounds),
            Command::Test => Some(Stage::Test),
            _ => None,
        }
    }
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Output {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("report types serialize");
    write_file(path, &(text + "\n"))
}

/// Reads or generates the sample, whitening it if asked.
pub fn load_sample(cfg: &RunConfig) -> CliResult<(SampleMatrix, Option<GeneratedPrecision>)> {
    let (sample, truth) = match &cfg.input {
        InputSource::Csv(path) => (ingest_csv(path)?, None),
        InputSource::Synthetic(spec) => {
            let truth = spec.precision()?;
            (spec.sample(&truth.theta, 0)?, Some(truth))
        }
    };
    let sample = if cfg.whiten { sample.whiten()? } else { sample };
    Ok((sample, truth))
}

fn labels(prefix: &str, p: usize) -> Vec<String> {
    (1..=p).map(|k| format!("{prefix}{k}")).collect()
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn record(&mut self, paths: impl IntoIterator<Item = PathBuf>) {
        for p in paths {
            let rel = p.strip_prefix(&self.dir).unwrap_or(&p);
            self.files.push(rel.display().to_string());
        }
    }
}

fn eigen_triples(eb: &EigenBounds) -> (Triple, Triple, Vec<Vec<bool>>) {
    let signed = Triple::from_intervals(&eb.evec_signed, &eb.eigenvectors);
    let squared = Triple::from_intervals(&eb.evec_sq, &eb.eigenvectors.map(|v| v * v));
    let sign = eb
        .sign_known
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    (signed, squared, sign)
}

/// Runs estimate / eigen-bounds / precision-bounds / test and writes the
/// report. Returns the exit code.
pub fn analyze(cfg: &RunConfig, stage: Stage, command: &'static str) -> CliResult<i32> {
    let (sample, truth) = load_sample(cfg)?;
    let names = sample.names();
    let p = sample.p();
    create_dir(&cfg.out)?;
    let panels_dir = cfg.out.join("panels");
    let mut out = Outputs {
        dir: cfg.out.clone(),
        files: Vec::new(),
    };
    let mut notes = Vec::new();

    let cov = cov_of_cov(&sample)?;
    let bound = epsilon_bound(&cov, cfg.delta, cfg.source)?;
    let full = p <= COV_OF_COV_MAX_P;
    if !full {
        notes.push(format!(
            "Cov(Sigma_hat) has {q}x{q} entries; only its summary is reported for p > {COV_OF_COV_MAX_P}",
            q = cov.pairs.len()
        ));
    }
    let estimate = EstimateSection {
        sigma_hat: mat(&cov.sigma_hat),
        cov_of_cov_summary: CovOfCovSummary {
            q: cov.pairs.len(),
            lambda_max: cov.lambda_max(),
            lambda_min: cov.lambda_min(),
            trace: cov.trace(),
            clamped: cov.clamped,
        },
        pairs: full.then(|| cov.pairs.pairs().to_vec()),
        cov_of_cov: full.then(|| mat(&cov.cov_of_cov)),
    };

    let need_panels = stage >= Stage::EigenBounds;
    if need_panels {
        create_dir(&panels_dir)?;
    }

    let eigen = if stage >= Stage::EigenBounds {
        let eb = EigenBounds::new(&cov.sigma_hat, bound.epsilon)?;
        let value_bounds = eb
            .eigenvalue_intervals
            .iter()
            .zip(&eb.eigenvalues)
            .map(|(&iv, &l)| Bounds::new(iv, l))
            .collect();
        let inverse_eigenvalues = match eb.inverse_eigenvalue_intervals() {
            Ok(ivs) => Some(
                ivs.into_iter()
                    .zip(&eb.eigenvalues)
                    .map(|(iv, &l)| Bounds::new(iv, 1.0 / l))
                    .collect(),
            ),
            Err(e) => {
                notes.push(format!("inverse eigenvalue intervals unavailable: {e}"));
                None
            }
        };
        let tightened = cfg
            .tightening()
            .map(|(iters, tol)| tighten_orthonormal(&eb, iters, tol));
        let shown = tightened.as_ref().unwrap_or(&eb);
        let vlabels = labels("v", p);
        let lambda = DMatrix::from_row_slice(1, p, &eb.eigenvalues);
        let lambda_panel = Panel {
            name: "eigenvalues",
            title: "Eigenvalue bounds",
            row_labels: vec!["lambda".into()],
            col_labels: vlabels.clone(),
            lower: DMatrix::from_fn(1, p, |_, k| eb.eigenvalue_intervals[k].lo()),
            empirical: lambda,
            upper: DMatrix::from_fn(1, p, |_, k| eb.eigenvalue_intervals[k].hi()),
        };
        out.record(write_panel(&panels_dir, &lambda_panel, cfg.svg)?);
        let vec_panel = Panel {
            name: "eigenvectors",
            title: "Eigenvector entry bounds (rows: variables, columns: eigenvectors)",
            row_labels: names.clone(),
            col_labels: vlabels,
            lower: shown.evec_signed.map(|i| i.lo()),
            empirical: shown.eigenvectors.clone(),
            upper: shown.evec_signed.map(|i| i.hi()),
        };
        out.record(write_panel(&panels_dir, &vec_panel, cfg.svg)?);
        let (eigenvectors, eigenvectors_squared, sign_known) = eigen_triples(&eb);
        let tightened_section = tightened.as_ref().map(|t| {
            let (eigenvectors, eigenvectors_squared, sign_known) = eigen_triples(t);
            TightenedSection {
                eigenvectors,
                eigenvectors_squared,
                sign_known,
                total_width: t.total_width(),
                stats: t.tightening.expect("set by tightening"),
            }
        });
        if let Some(stats) = tightened.as_ref().and_then(|t| t.tightening) {
            if !stats.converged {
                notes.push(format!(
                    "tightening stopped after {} sweeps without converging",
                    stats.sweeps
                ));
            }
            if stats.inconsistencies > 0 {
                notes.push(format!(
                    "tightening met {} contradictory updates; the affected entries kept their previous bounds",
                    stats.inconsistencies
                ));
            }
        }
        Some(EigenSection {
            eigenvalues: value_bounds,
            inverse_eigenvalues,
            eigenvectors,
            eigenvectors_squared,
            sign_known,
            total_width: eb.total_width(),
            tightened: tightened_section,
        })
    } else {
        None
    };

    let precision = if stage >= Stage::PrecisionBounds {
        let pr = PrecisionReport::compute(&cov, bound, cfg.route, cfg.tightening())?;
        let eigen = pr.entry_intervals_eigen.as_ref().map(|iv| {
            let panel = Panel {
                name: "precision_eigen",
                title: "Precision matrix bounds, eigendecomposition route",
                row_labels: names.clone(),
                col_labels: names.clone(),
                lower: iv.map(|i| i.lo()),
                empirical: pr.theta_hat.clone(),
                upper: iv.map(|i| i.hi()),
            };
            (Triple::from_intervals(iv, &pr.theta_hat), panel)
        });
        let eigen = match eigen {
            Some((triple, panel)) => {
                out.record(write_panel(&panels_dir, &panel, cfg.svg)?);
                if pr.diagnostics.unbounded_intervals > 0 {
                    notes.push(format!(
                        "{} precision entries have unbounded eigen-route intervals",
                        pr.diagnostics.unbounded_intervals
                    ));
                }
                Some(triple)
            }
            None => None,
        };
        let l2 = match (pr.l2_intervals(), pr.l2_threshold) {
            (Some(iv), Some(t)) => {
                let panel = Panel {
                    name: "precision_l2",
                    title: "Precision matrix bounds, L2 route",
                    row_labels: names.clone(),
                    col_labels: names.clone(),
                    lower: iv.map(|i| i.lo()),
                    empirical: pr.theta_hat.clone(),
                    upper: iv.map(|i| i.hi()),
                };
                out.record(write_panel(&panels_dir, &panel, cfg.svg)?);
                Some(L2Section {
                    threshold: t,
                    lower: mat(&panel.lower),
                    upper: mat(&panel.upper),
                })
            }
            _ => {
                if matches!(
                    cfg.route,
                    covci::precision::Route::L2 | covci::precision::Route::Both
                ) {
                    notes.push(format!(
                        "L2 precision bound is vacuous: lambda_min(Sigma_hat) = {:e} <= epsilon = {:e}",
                        pr.diagnostics.lambda_min, bound.epsilon
                    ));
                }
                None
            }
        };
        Some(PrecisionSection {
            route: cfg.route,
            theta_hat: mat(&pr.theta_hat),
            eigen,
            l2,
            diagnostics: pr.diagnostics,
        })
    } else {
        None
    };

    let mut code = exit::SUCCESS;
    let tests = if stage >= Stage::Test {
        let delta = cfg.test_delta(p);
        let mut sections = Vec::new();
        for method in cfg.method.methods() {
            let ctx = match method {
                Method::Proposed => {
                    let eps = epsilon_bound(&cov, delta, cfg.source)?.epsilon;
                    let theta_hat = precision_point(&cov.sigma_hat)?;
                    let lambda_min = *eigenvalues_desc(&cov.sigma_hat).last().expect("p >= 1");
                    TestContext {
                        n: sample.n(),
                        delta,
                        sigma_hat: cov.sigma_hat.clone(),
                        theta_hat,
                        epsilon: Some(eps),
                        lambda_min,
                        threshold: l2_threshold_from_epsilon(lambda_min, eps),
                    }
                }
                Method::FisherZ => TestContext::new(&sample, delta, Method::FisherZ)?,
            };
            let pairs = pairs_from_context(&ctx, method);
            if cfg.dot {
                let tag = match method {
                    Method::Proposed => "proposed",
                    Method::FisherZ => "fisher-z",
                };
                let path = cfg.out.join(format!("graph-{tag}.dot"));
                write_file(&path, &pairs.to_dot(&names))?;
                out.record([path]);
            }
            sections.push(TestSection {
                method,
                delta,
                epsilon: ctx.epsilon,
                threshold: ctx.threshold,
                edges: pairs.edges(),
                all_inconclusive: pairs.all_inconclusive(),
                results: pairs.results,
            });
        }
        let inconclusive = sections
            .iter()
            .all(|s| s.results.iter().all(|r| r.verdict == Verdict::Inconclusive));
        if inconclusive && sections.iter().any(|s| !s.results.is_empty()) {
            notes.push(
                "every requested test is inconclusive: the bound is vacuous at this sample size"
                    .into(),
            );
            code = exit::INCONCLUSIVE;
        }
        Some(sections)
    } else {
        None
    };

    let report_path = cfg.out.join("report.json");
    out.record([report_path.clone()]);
    let report = Report {
        kind: "report",
        schema_version: SCHEMA_VERSION,
        command,
        config: cfg.into(),
        data: DataSummary {
            p,
            n: sample.n(),
            names,
            whitened: cfg.whiten,
        },
        ground_truth: truth.map(|g| GroundTruth {
            theta: mat(&g.theta),
            zero_entries: g.zero_entries(),
            edge_probability: g.t,
            nu: g.nu,
            attempts: g.attempts,
        }),
        estimate,
        bound,
        eigen,
        precision,
        tests,
        notes,
        files: out.files,
    };
    write_json(&report_path, &report)?;
    Ok(code)
}
