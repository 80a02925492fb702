//! The serialized form of `report.json`. Matrices are arrays of rows;
//! infinite interval endpoints serialize as `null`.

use covci::eigenbounds::TighteningStats;
use covci::precision::{PrecisionDiagnostics, Route};
use covci::{Interval, Method, PerturbationBound, SyntheticSpec, TestResult};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::{InputSource, MethodArg, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// Largest `p` for which the full `Cov(Sigma_hat)` is written out.
pub const COV_OF_COV_MAX_P: usize = 30;

pub type Mat = Vec<Vec<f64>>;

pub fn mat(m: &DMatrix<f64>) -> Mat {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Debug, Serialize)]
pub struct Triple {
    pub lower: Mat,
    pub empirical: Mat,
    pub upper: Mat,
}

impl Triple {
    pub fn from_intervals(iv: &DMatrix<Interval>, empirical: &DMatrix<f64>) -> Self {
        Self {
            lower: mat(&iv.map(|i| i.lo())),
            empirical: mat(empirical),
            upper: mat(&iv.map(|i| i.hi())),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Bounds {
    pub lower: f64,
    pub empirical: f64,
    pub upper: f64,
}

impl Bounds {
    pub fn new(iv: Interval, empirical: f64) -> Self {
        Self {
            lower: iv.lo(),
            empirical,
            upper: iv.hi(),
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSummary {
    Csv(String),
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Serialize)]
pub struct ConfigSummary {
    pub input: InputSummary,
    pub delta: f64,
    pub source: covci::BoundSource,
    pub route: Route,
    pub whiten: bool,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
    pub bonferroni: bool,
    pub method: MethodArg,
}

impl From<&RunConfig> for ConfigSummary {
    fn from(c: &RunConfig) -> Self {
        Self {
            input: match &c.input {
                InputSource::Csv(p) => InputSummary::Csv(p.display().to_string()),
                InputSource::Synthetic(s) => InputSummary::Synthetic(s.clone()),
            },
            delta: c.delta,
            source: c.source,
            route: c.route,
            whiten: c.whiten,
            seed: c.seed,
            max_iters: c.max_iters,
            tol: c.tol,
            bonferroni: c.bonferroni,
            method: c.method,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DataSummary {
    pub p: usize,
    pub n: usize,
    pub names: Vec<String>,
    pub whitened: bool,
}

#[derive(Debug, Serialize)]
pub struct GroundTruth {
    pub theta: Mat,
    pub zero_entries: Vec<(usize, usize)>,
    pub edge_probability: f64,
    pub nu: f64,
    pub attempts: usize,
}

#[derive(Debug, Serialize)]
pub struct CovOfCovSummary {
    pub q: usize,
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub trace: f64,
    /// Negative variances reset to zero.
    pub clamped: usize,
}

#[derive(Debug, Serialize)]
pub struct EstimateSection {
    pub sigma_hat: Mat,
    pub cov_of_cov_summary: CovOfCovSummary,
    /// Upper-triangular pair `(i, j)` for each row/column of `cov_of_cov`.
    pub pairs: Option<Vec<(usize, usize)>>,
    pub cov_of_cov: Option<Mat>,
}

#[derive(Debug, Serialize)]
pub struct EigenSection {
    pub eigenvalues: Vec<Bounds>,
    /// Intervals on `1 / lambda_k`; `upper` is null when unbounded.
    pub inverse_eigenvalues: Option<Vec<Bounds>>,
    /// Rows are variables, columns are eigenvectors.
    pub eigenvectors: Triple,
    pub eigenvectors_squared: Triple,
    pub sign_known: Vec<Vec<bool>>,
    pub total_width: f64,
    pub tightened: Option<TightenedSection>,
}

#[derive(Debug, Serialize)]
pub struct TightenedSection {
    pub eigenvectors: Triple,
    pub eigenvectors_squared: Triple,
    pub sign_known: Vec<Vec<bool>>,
    pub total_width: f64,
    pub stats: TighteningStats,
}

#[derive(Debug, Serialize)]
pub struct L2Section {
    pub threshold: f64,
    pub lower: Mat,
    pub upper: Mat,
}

#[derive(Debug, Serialize)]
pub struct PrecisionSection {
    pub route: Route,
    pub theta_hat: Mat,
    pub eigen: Option<Triple>,
    /// Null when not requested or when the bound is vacuous.
    pub l2: Option<L2Section>,
    pub diagnostics: PrecisionDiagnostics,
}

#[derive(Debug, Serialize)]
pub struct TestSection {
    pub method: Method,
    /// Per-test level after any Bonferroni correction.
    pub delta: f64,
    pub epsilon: Option<f64>,
    pub threshold: Option<f64>,
    pub edges: Vec<(usize, usize)>,
    pub all_inconclusive: bool,
    pub results: Vec<TestResult>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub kind: &'static str,
    pub schema_version: u32,
    pub command: &'static str,
    pub config: ConfigSummary,
    pub data: DataSummary,
    pub ground_truth: Option<GroundTruth>,
    pub estimate: EstimateSection,
    pub bound: PerturbationBound,
    pub eigen: Option<EigenSection>,
    pub precision: Option<PrecisionSection>,
    pub tests: Option<Vec<TestSection>>,
    pub notes: Vec<String>,
    pub files: Vec<String>,
}
