//! Command-line flags, the optional TOML config file, and their merge.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use covci::eigenbounds::{DEFAULT_MAX_ITERS, DEFAULT_TOL};
use covci::precision::Route;
use covci::{BoundSource, Distribution, SyntheticSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "covci",
    version,
    about = "Confidence intervals for covariance eigendecompositions and precision matrices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Sigma_hat, Cov(Sigma_hat) and the perturbation bound.
    Estimate,
    /// Eigenvalue and eigenvector intervals.
    EigenBounds,
    /// Precision-matrix intervals.
    PrecisionBounds,
    /// Conditional-independence tests on every pair of variables.
    Test,
    /// Write a synthetic sample and its ground-truth precision matrix.
    Simulate {
        /// Replicate index; each index is an independent sample.
        #[arg(long, default_value_t = 0)]
        replicate: u64,
    },
    /// False- and true-positive rates of both tests over replicates.
    Calibrate {
        #[arg(long, default_value_t = 100)]
        replicates: u64,
        /// Draw a fresh ground-truth precision matrix for every replicate.
        #[arg(long)]
        theta_per_replicate: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Estimate => "estimate",
            Command::EigenBounds => "eigen-bounds",
            Command::PrecisionBounds => "precision-bounds",
            Command::Test => "test",
            Command::Simulate { .. } => "simulate",
            Command::Calibrate { .. } => "calibrate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceArg {
    Eigenvalue,
    Trace,
}

impl From<SourceArg> for BoundSource {
    fn from(s: SourceArg) -> Self {
        match s {
            SourceArg::Eigenvalue => BoundSource::LargestEigenvalue,
            SourceArg::Trace => BoundSource::Trace,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RouteArg {
    Eigen,
    L2,
    Both,
}

impl From<RouteArg> for Route {
    fn from(r: RouteArg) -> Self {
        match r {
            RouteArg::Eigen => Route::Eigen,
            RouteArg::L2 => Route::L2,
            RouteArg::Both => Route::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Proposed,
    FisherZ,
    Both,
}

impl MethodArg {
    pub fn methods(self) -> Vec<covci::Method> {
        match self {
            MethodArg::Proposed => vec![covci::Method::Proposed],
            MethodArg::FisherZ => vec![covci::Method::FisherZ],
            MethodArg::Both => vec![covci::Method::Proposed, covci::Method::FisherZ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistributionArg {
    Gaussian,
    Laplace,
}

impl From<DistributionArg> for Distribution {
    fn from(d: DistributionArg) -> Self {
        match d {
            DistributionArg::Gaussian => Distribution::Gaussian,
            DistributionArg::Laplace => Distribution::Laplace,
        }
    }
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML file with any of the options below.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// CSV input: header of variable names, one row per observation.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Confidence level is 1 - delta.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub source: Option<SourceArg>,
    #[arg(long, global = true, value_enum)]
    pub route: Option<RouteArg>,
    /// Z-score every variable before estimation.
    #[arg(long, global = true)]
    pub whiten: bool,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Tightening sweep cap; 0 disables tightening.
    #[arg(long, global = true)]
    pub max_iters: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Divide delta by the number of tested pairs.
    #[arg(long, global = true)]
    pub bonferroni: bool,
    #[arg(long, global = true, value_enum)]
    pub method: Option<MethodArg>,
    /// Also render SVG heatmaps of each panel.
    #[arg(long, global = true)]
    pub svg: bool,
    /// Also write the inferred graph in DOT format.
    #[arg(long, global = true)]
    pub dot: bool,
    #[command(flatten)]
    pub synthetic: SyntheticArgs,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticArgs {
    /// Synthetic input: number of variables.
    #[arg(long = "p", global = true)]
    pub p: Option<usize>,
    /// Synthetic input: number of observations.
    #[arg(long = "n", global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub distribution: Option<DistributionArg>,
    /// Laplace location vector, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub location: Option<Vec<f64>>,
    /// Scale c of the random affinities.
    #[arg(long, global = true)]
    pub affinity_scale: Option<f64>,
}

impl SyntheticArgs {
    fn is_set(&self) -> bool {
        self.p.is_some()
            || self.n.is_some()
            || self.distribution.is_some()
            || self.location.is_some()
            || self.affinity_scale.is_some()
    }

    fn or(self, other: SyntheticArgs) -> SyntheticArgs {
        SyntheticArgs {
            p: self.p.or(other.p),
            n: self.n.or(other.n),
            distribution: self.distribution.or(other.distribution),
            location: self.location.or(other.location),
            affinity_scale: self.affinity_scale.or(other.affinity_scale),
        }
    }
}

/// The config file mirrors the long flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub delta: Option<f64>,
    pub source: Option<SourceArg>,
    pub route: Option<RouteArg>,
    pub whiten: Option<bool>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub bonferroni: Option<bool>,
    pub method: Option<MethodArg>,
    pub svg: Option<bool>,
    pub dot: Option<bool>,
    pub synthetic: Option<SyntheticArgs>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    Csv(PathBuf),
    Synthetic(SyntheticSpec),
}

/// Fully resolved and validated settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: InputSource,
    pub delta: f64,
    pub source: BoundSource,
    pub route: Route,
    pub whiten: bool,
    pub seed: u64,
    pub out: PathBuf,
    pub max_iters: usize,
    pub tol: f64,
    pub bonferroni: bool,
    pub method: MethodArg,
    pub svg: bool,
    pub dot: bool,
}

pub const DEFAULT_DELTA: f64 = 0.05;

impl RunConfig {
    /// Merges flags over the config file over defaults and validates.
    pub fn resolve(args: &CommonArgs) -> CliResult<Self> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let seed = args.seed.or(file.seed).unwrap_or(0);
        let synthetic = args
            .synthetic
            .clone()
            .or(file.synthetic.unwrap_or_default());
        let csv = args.input.clone().or(file.input);
        let input = match (csv, synthetic.is_set()) {
            (Some(_), true) => {
                return Err(CliError::Config(
                    "give either an input CSV or synthetic parameters, not both".into(),
                ))
            }
            (Some(path), false) => InputSource::Csv(path),
            (None, true) => InputSource::Synthetic(synthetic_spec(synthetic, seed)?),
            (None, false) => {
                return Err(CliError::Config(
                    "no input: pass --input FILE or synthetic --p and --n".into(),
                ))
            }
        };
        let delta = args.delta.or(file.delta).unwrap_or(DEFAULT_DELTA);
        if !(delta > 0.0 && delta < 1.0) {
            return Err(CliError::Config(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        let tol = args.tol.or(file.tol).unwrap_or(DEFAULT_TOL);
        if tol.is_nan() || tol < 0.0 {
            return Err(CliError::Config(format!(
                "tol must be non-negative, got {tol}"
            )));
        }
        Ok(Self {
            input,
            delta,
            source: args
                .source
                .or(file.source)
                .map_or(BoundSource::default(), Into::into),
            route: args
                .route
                .or(file.route)
                .map_or(Route::default(), Into::into),
            whiten: args.whiten || file.whiten.unwrap_or(false),
            seed,
            out: args
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from("covci-out")),
            max_iters: args
                .max_iters
                .or(file.max_iters)
                .unwrap_or(DEFAULT_MAX_ITERS),
            tol,
            bonferroni: args.bonferroni || file.bonferroni.unwrap_or(false),
            method: args.method.or(file.method).unwrap_or(MethodArg::Proposed),
            svg: args.svg || file.svg.unwrap_or(false),
            dot: args.dot || file.dot.unwrap_or(false),
        })
    }

    pub fn synthetic(&self) -> Option<&SyntheticSpec> {
        match &self.input {
            InputSource::Synthetic(s) => Some(s),
            InputSource::Csv(_) => None,
        }
    }

    /// Tightening parameters, `None` when disabled.
    pub fn tightening(&self) -> Option<(usize, f64)> {
        (self.max_iters > 0).then_some((self.max_iters, self.tol))
    }

    /// Per-test level: `delta`, or `delta / m` under Bonferroni.
    pub fn test_delta(&self, p: usize) -> f64 {
        let m = p * p.saturating_sub(1) / 2;
        if self.bonferroni && m > 1 {
            self.delta / m as f64
        } else {
            self.delta
        }
    }
}

fn synthetic_spec(args: SyntheticArgs, seed: u64) -> CliResult<SyntheticSpec> {
    let p = args
        .p
        .ok_or_else(|| CliError::Config("synthetic input needs --p".into()))?;
    let n = args
        .n
        .ok_or_else(|| CliError::Config("synthetic input needs --n".into()))?;
    if p < 2 {
        return Err(CliError::Config(format!(
            "synthetic p must be at least 2, got {p}"
        )));
    }
    if n < 3 {
        return Err(CliError::Config(format!(
            "synthetic n must be at least 3, got {n}"
        )));
    }
    let distribution: Distribution = args.distribution.map_or(Distribution::Gaussian, Into::into);
    let mut spec = SyntheticSpec::new(p, n, distribution, seed);
    if let Some(c) = args.affinity_scale {
        if !(c > 0.0 && c.is_finite()) {
            return Err(CliError::Config(format!(
                "affinity scale must be positive, got {c}"
            )));
        }
        spec.affinity_scale = c;
    }
    if let Some(m) = args.location {
        if distribution != Distribution::Laplace {
            return Err(CliError::Config(
                "--location only applies to laplace data".into(),
            ));
        }
        if m.len() != p {
            return Err(CliError::Config(format!(
                "location has {} entries, p = {p}",
                m.len()
            )));
        }
        spec.location = Some(m);
    }
    Ok(spec)
}
