//! Tests of `H0: Theta_ij = 0` (no partial correlation between `i` and `j`).
//!
//! The proposed test rejects when `|Theta_hat_ij|` exceeds the L2 radius
//! around `Theta_hat`; it is conservative for any distribution with finite
//! fourth moments. The Fisher-z test on partial correlations is the usual
//! Gaussian baseline.
//!
//! Not rejecting does not establish conditional independence.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::eigenbounds::{epsilon_bound, BoundSource};
use crate::error::{Error, Result};
use crate::normal;
use crate::precision::{l2_threshold_from_epsilon, precision_point};
use crate::sample::SampleMatrix;
use crate::ustat::{cov_of_cov, estimate_covariance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Proposed,
    FisherZ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Reject,
    NotRejected,
    /// The bound was vacuous at this confidence level; no decision.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub entry: (usize, usize),
    pub method: Method,
    pub delta: f64,
    pub theta_hat_ij: f64,
    /// Rejection threshold on `|Theta_hat_ij|` (proposed) or `|z|` (Fisher-z).
    pub threshold: Option<f64>,
    pub verdict: Verdict,
    /// Fisher-z only.
    pub statistic: Option<f64>,
    /// Fisher-z only.
    pub p_value: Option<f64>,
}

impl TestResult {
    pub fn reject_null(&self) -> bool {
        self.verdict == Verdict::Reject
    }
}

fn check_pair(i: usize, j: usize, p: usize) -> Result<()> {
    for index in [i, j] {
        if index >= p {
            return Err(Error::IndexOutOfRange { index, p });
        }
    }
    if i == j {
        return Err(Error::InvalidArgument(format!(
            "test needs two distinct variables, got ({i}, {j})"
        )));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "delta must lie in (0, 1), got {delta}"
        )))
    }
}

/// Proposed-test decision for one entry given a threshold.
pub fn proposed_decision(
    entry: (usize, usize),
    theta_hat_ij: f64,
    threshold: Option<f64>,
    delta: f64,
) -> TestResult {
    let verdict = match threshold {
        None => Verdict::Inconclusive,
        Some(t) if theta_hat_ij.abs() > t => Verdict::Reject,
        Some(_) => Verdict::NotRejected,
    };
    TestResult {
        entry,
        method: Method::Proposed,
        delta,
        theta_hat_ij,
        threshold,
        verdict,
        statistic: None,
        p_value: None,
    }
}

/// Fisher-z decision from a precision estimate with `dof = n - p - 1`.
pub fn fisher_z_decision(
    theta_hat: &DMatrix<f64>,
    i: usize,
    j: usize,
    n: usize,
    delta: f64,
) -> TestResult {
    let p = theta_hat.nrows();
    let dof = (n - p - 1) as f64;
    let r = -theta_hat[(i, j)] / (theta_hat[(i, i)] * theta_hat[(j, j)]).sqrt();
    let z = r.clamp(-1.0, 1.0).atanh() * dof.sqrt();
    let p_value = (2.0 * normal::sf(z.abs())).min(1.0);
    TestResult {
        entry: (i, j),
        method: Method::FisherZ,
        delta,
        theta_hat_ij: theta_hat[(i, j)],
        threshold: Some(normal::quantile(1.0 - delta / 2.0)),
        verdict: if p_value < delta {
            Verdict::Reject
        } else {
            Verdict::NotRejected
        },
        statistic: Some(z),
        p_value: Some(p_value),
    }
}

/// Everything shared by the tests of all pairs in one sample.
#[derive(Debug, Clone)]
pub struct TestContext {
    pub n: usize,
    pub delta: f64,
    pub sigma_hat: DMatrix<f64>,
    pub theta_hat: DMatrix<f64>,
    pub epsilon: Option<f64>,
    pub lambda_min: f64,
    /// L2 radius; `None` when vacuous or not computed.
    pub threshold: Option<f64>,
}

impl TestContext {
    /// Shared estimates for `method`.
    pub fn new(sample: &SampleMatrix, delta: f64, method: Method) -> Result<Self> {
        check_delta(delta)?;
        let (sigma_hat, epsilon) = match method {
            Method::Proposed => {
                let cov = cov_of_cov(sample)?;
                let eps = epsilon_bound(&cov, delta, BoundSource::LargestEigenvalue)?.epsilon;
                (cov.sigma_hat, Some(eps))
            }
            Method::FisherZ => {
                let p = sample.p();
                if sample.n() <= p + 1 {
                    return Err(Error::InvalidArgument(format!(
                        "Fisher-z test needs n > p + 1, got n = {} with p = {p}",
                        sample.n()
                    )));
                }
                (estimate_covariance(sample)?, None)
            }
        };
        let theta_hat = precision_point(&sigma_hat)?;
        let lambda_min = *crate::linalg::eigenvalues_desc(&sigma_hat)
            .last()
            .expect("p >= 1");
        let threshold = epsilon.and_then(|e| l2_threshold_from_epsilon(lambda_min, e));
        Ok(Self {
            n: sample.n(),
            delta,
            sigma_hat,
            theta_hat,
            epsilon,
            lambda_min,
            threshold,
        })
    }

    pub fn p(&self) -> usize {
        self.sigma_hat.nrows()
    }

    pub fn proposed(&self, i: usize, j: usize) -> Result<TestResult> {
        check_pair(i, j, self.p())?;
        Ok(proposed_decision(
            (i, j),
            self.theta_hat[(i, j)],
            self.threshold,
            self.delta,
        ))
    }

    pub fn fisher_z(&self, i: usize, j: usize) -> Result<TestResult> {
        check_pair(i, j, self.p())?;
        if self.n <= self.p() + 1 {
            return Err(Error::InvalidArgument(format!(
                "Fisher-z test needs n > p + 1, got n = {} with p = {}",
                self.n,
                self.p()
            )));
        }
        Ok(fisher_z_decision(&self.theta_hat, i, j, self.n, self.delta))
    }
}

/// The proposed test for one entry. A vacuous bound yields
/// [`Verdict::Inconclusive`]; a singular `Sigma_hat` is an error.
pub fn test_entry(sample: &SampleMatrix, i: usize, j: usize, delta: f64) -> Result<TestResult> {
    check_pair(i, j, sample.p())?;
    TestContext::new(sample, delta, Method::Proposed)?.proposed(i, j)
}

pub fn fisher_z_test(sample: &SampleMatrix, i: usize, j: usize, delta: f64) -> Result<TestResult> {
    check_pair(i, j, sample.p())?;
    TestContext::new(sample, delta, Method::FisherZ)?.fisher_z(i, j)
}

/// All `i < j` tests of one method, with the inferred dependence graph.
#[derive(Debug, Clone, Serialize)]
pub struct PairTests {
    pub p: usize,
    pub method: Method,
    pub delta: f64,
    /// Row-major over `i < j`.
    pub results: Vec<TestResult>,
}

impl PairTests {
    /// `true` where the null was rejected.
    pub fn adjacency(&self) -> DMatrix<bool> {
        let mut a = DMatrix::from_element(self.p, self.p, false);
        for r in self.results.iter().filter(|r| r.reject_null()) {
            let (i, j) = r.entry;
            a[(i, j)] = true;
            a[(j, i)] = true;
        }
        a
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.results
            .iter()
            .filter(|r| r.reject_null())
            .map(|r| r.entry)
            .collect()
    }

    pub fn all_inconclusive(&self) -> bool {
        !self.results.is_empty()
            && self
                .results
                .iter()
                .all(|r| r.verdict == Verdict::Inconclusive)
    }

    /// Graphviz rendering: solid edges for rejections, dashed for
    /// non-rejections, dotted for inconclusive pairs.
    pub fn to_dot(&self, names: &[String]) -> String {
        let mut out = String::from("graph dependence {\n  node [shape=ellipse];\n");
        for name in names {
            let _ = writeln!(out, "  \"{}\";", escape(name));
        }
        for r in &self.results {
            let style = match r.verdict {
                Verdict::Reject => "solid",
                Verdict::NotRejected => "dashed",
                Verdict::Inconclusive => "dotted",
            };
            let (i, j) = r.entry;
            let _ = writeln!(
                out,
                "  \"{}\" -- \"{}\" [style={style}];",
                escape(&names[i]),
                escape(&names[j])
            );
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Tests every pair with one shared estimation pass.
pub fn test_all_pairs(sample: &SampleMatrix, delta: f64, method: Method) -> Result<PairTests> {
    let ctx = TestContext::new(sample, delta, method)?;
    Ok(pairs_from_context(&ctx, method))
}

/// Tests every pair against an already-built context.
pub fn pairs_from_context(ctx: &TestContext, method: Method) -> PairTests {
    let p = ctx.p();
    let results = (0..p)
        .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
        .map(|(i, j)| match method {
            Method::Proposed => {
                proposed_decision((i, j), ctx.theta_hat[(i, j)], ctx.threshold, ctx.delta)
            }
            Method::FisherZ => fisher_z_decision(&ctx.theta_hat, i, j, ctx.n, ctx.delta),
        })
        .collect();
    PairTests {
        p,
        method,
        delta: ctx.delta,
        results,
    }
}
