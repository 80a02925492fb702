//! Confidence intervals on the eigendecomposition of a covariance matrix.
//!
//! Given `||Sigma_hat - Sigma||_2 <= epsilon`, Weyl's inequality bounds every
//! eigenvalue, and the eigenvalue-eigenvector identity
//!
//! ```text
//! |V_rc|^2 prod_{k != c} (l_c - l_k) = prod_k (l_c - m_k(M_r))
//! ```
//!
//! (`l` the spectrum, `M_r` the minor without row/column `r`) turns those into
//! bounds on each squared eigenvector entry.
//!
//! Layout: all `p x p` matrices here are indexed `[component, eigenvector]`,
//! so column `c` is the `c`-th eigenvector and eigenvalues are in descending
//! order.

mod tighten;

pub use tighten::{
    bounds_on_sum, orthogonality_update, tighten_orthonormal, SignCase, TighteningStats,
    DEFAULT_MAX_ITERS, DEFAULT_TOL,
};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::linalg::{eigenvalues_desc, minor, sym_eigen};
use crate::normal;
use crate::ustat::CovEstimate;

/// Which spectral summary of `Cov(Sigma_hat)` drives epsilon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BoundSource {
    /// `sqrt(2 lambda_max(Cov(Sigma_hat))) Phi^-1(1 - delta/2)`.
    #[default]
    LargestEigenvalue,
    /// `sqrt(2 tr(Cov(Sigma_hat))) Phi^-1(1 - delta/2)`, looser.
    Trace,
}

/// A high-probability bound on `||Sigma - Sigma_hat||_2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationBound {
    pub epsilon: f64,
    pub delta: f64,
    pub source: BoundSource,
}

/// `sqrt(2 * spread) * Phi^-1(1 - delta/2)`.
pub fn epsilon_from_spread(spread: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    Ok((2.0 * spread.max(0.0)).sqrt() * normal::quantile(1.0 - delta / 2.0))
}

/// Epsilon computed directly from a (clamped) covariance-of-covariance matrix.
pub fn epsilon_for_matrix(
    cov_of_cov: &DMatrix<f64>,
    delta: f64,
    source: BoundSource,
) -> Result<PerturbationBound> {
    let spread = match source {
        BoundSource::LargestEigenvalue => {
            eigenvalues_desc(cov_of_cov).first().copied().unwrap_or(0.0)
        }
        BoundSource::Trace => cov_of_cov.trace(),
    };
    Ok(PerturbationBound {
        epsilon: epsilon_from_spread(spread, delta)?,
        delta,
        source,
    })
}

pub fn epsilon_bound(
    cov: &CovEstimate,
    delta: f64,
    source: BoundSource,
) -> Result<PerturbationBound> {
    epsilon_for_matrix(&cov.cov_of_cov, delta, source)
}

/// Weyl intervals `[l_k - eps, l_k + eps]` around the descending spectrum.
pub fn eigenvalue_intervals(sigma_hat: &DMatrix<f64>, epsilon: f64) -> Vec<Interval> {
    eigenvalues_desc(sigma_hat)
        .into_iter()
        .map(|l| weyl_interval(l, epsilon))
        .collect()
}

fn weyl_interval(lambda_hat: f64, epsilon: f64) -> Interval {
    Interval::new(lambda_hat - epsilon, lambda_hat + epsilon).expect("epsilon is non-negative")
}

/// Bounds on `1 / lambda_k(Sigma)`: `[1/(l + eps), 1/(l - eps)]`, with an
/// infinite upper end when `l <= eps`.
pub fn inverse_eigenvalue_interval(lambda_hat: f64, epsilon: f64) -> Result<Interval> {
    if lambda_hat + epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "eigenvalue {lambda_hat} is not positive at perturbation level {epsilon}"
        )));
    }
    let lo = 1.0 / (lambda_hat + epsilon);
    let hi = if lambda_hat > epsilon {
        1.0 / (lambda_hat - epsilon)
    } else {
        f64::INFINITY
    };
    Ok(Interval::new(lo, hi).expect("ordered by construction"))
}

/// Lower and upper bounds on `|V_rc|^2`, indexed `[component, eigenvector]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredBounds {
    pub lower: DMatrix<f64>,
    pub upper: DMatrix<f64>,
    /// Descending spectrum of `Sigma_hat`.
    pub eigenvalues: Vec<f64>,
    /// Descending spectrum of each minor `M_r`.
    pub minors_spectra: Vec<Vec<f64>>,
}

/// Squared eigenvector-entry bounds from the eigenvalue-eigenvector identity.
///
/// An eigengap within `2 eps` makes the corresponding bound trivial (upper 1,
/// or lower 0) rather than failing.
pub fn eigenvector_sq_bounds(sigma_hat: &DMatrix<f64>, epsilon: f64) -> SquaredBounds {
    let lambdas = eigenvalues_desc(sigma_hat);
    let p = lambdas.len();
    let minors: Vec<Vec<f64>> = (0..p)
        .map(|r| eigenvalues_desc(&minor(sigma_hat, r)))
        .collect();
    sq_bounds_from_spectra(lambdas, minors, epsilon)
}

pub(crate) fn sq_bounds_from_spectra(
    lambdas: Vec<f64>,
    minors: Vec<Vec<f64>>,
    epsilon: f64,
) -> SquaredBounds {
    let p = lambdas.len();
    let two_eps = 2.0 * epsilon;
    let mut lower = DMatrix::zeros(p, p);
    let mut upper = DMatrix::zeros(p, p);
    for c in 0..p {
        let lc = lambdas[c];
        let gaps: Vec<f64> = (0..p)
            .filter(|&k| k != c)
            .map(|k| (lc - lambdas[k]).abs())
            .collect();
        let degenerate_gap = gaps.iter().any(|&g| g <= two_eps);
        for r in 0..p {
            let minor_gaps: Vec<f64> = minors[r].iter().map(|m| (lc - m).abs()).collect();
            upper[(r, c)] = if degenerate_gap {
                1.0
            } else {
                let num: f64 = minor_gaps.iter().map(|g| g + two_eps).product();
                let den: f64 = gaps.iter().map(|g| g - two_eps).product();
                (num / den).min(1.0)
            };
            lower[(r, c)] = if minor_gaps.iter().any(|&g| g <= two_eps) {
                0.0
            } else {
                let num: f64 = minor_gaps.iter().map(|g| (g - two_eps).max(0.0)).product();
                let den: f64 = gaps.iter().map(|g| g + two_eps).product();
                (num / den).clamp(0.0, 1.0).min(upper[(r, c)])
            };
        }
    }
    SquaredBounds {
        lower,
        upper,
        eigenvalues: lambdas,
        minors_spectra: minors,
    }
}

/// Signed entry bounds: when the squared lower bound is positive the sign is
/// taken from the empirical eigenvector, otherwise the interval is symmetric.
pub fn signed_bounds(
    evec_sq: &DMatrix<Interval>,
    v_hat: &DMatrix<f64>,
) -> (DMatrix<Interval>, DMatrix<bool>) {
    let (rows, cols) = evec_sq.shape();
    let mut signed = DMatrix::from_element(rows, cols, Interval::ZERO);
    let mut known = DMatrix::from_element(rows, cols, false);
    for c in 0..cols {
        for r in 0..rows {
            let (s, k) = signed_entry(&evec_sq[(r, c)], v_hat[(r, c)]);
            signed[(r, c)] = s;
            known[(r, c)] = k;
        }
    }
    (signed, known)
}

pub(crate) fn signed_entry(sq: &Interval, v_hat: f64) -> (Interval, bool) {
    let root = sq.sqrt().unwrap_or(Interval::ZERO);
    if sq.lo() > 0.0 && v_hat != 0.0 {
        if v_hat > 0.0 {
            (root, true)
        } else {
            (-root, true)
        }
    } else {
        (Interval::symmetric(root.hi()), false)
    }
}

/// Everything known about the eigendecomposition of `Sigma` at one epsilon.
#[derive(Debug, Clone)]
pub struct EigenBounds {
    pub epsilon: f64,
    /// Descending point estimates `lambda_k(Sigma_hat)`.
    pub eigenvalues: Vec<f64>,
    pub eigenvalue_intervals: Vec<Interval>,
    /// Empirical unit eigenvectors as columns, matching `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
    pub evec_sq: DMatrix<Interval>,
    pub evec_signed: DMatrix<Interval>,
    pub sign_known: DMatrix<bool>,
    pub minors_spectra: Vec<Vec<f64>>,
    /// Set once [`tighten_orthonormal`] has run.
    pub tightening: Option<TighteningStats>,
}

impl EigenBounds {
    /// Untightened bounds for `Sigma_hat` at perturbation level `epsilon`.
    pub fn new(sigma_hat: &DMatrix<f64>, epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be finite and >= 0, got {epsilon}"
            )));
        }
        if sigma_hat.nrows() != sigma_hat.ncols() || sigma_hat.is_empty() {
            return Err(Error::InvalidArgument(
                "sigma_hat must be a non-empty square matrix".into(),
            ));
        }
        let eig = sym_eigen(sigma_hat);
        let p = eig.values.len();
        let minors: Vec<Vec<f64>> = (0..p)
            .map(|r| eigenvalues_desc(&minor(sigma_hat, r)))
            .collect();
        let sq = sq_bounds_from_spectra(eig.values.clone(), minors, epsilon);
        let evec_sq = DMatrix::from_fn(p, p, |r, c| {
            Interval::new(sq.lower[(r, c)], sq.upper[(r, c)]).expect("lower <= upper")
        });
        let (evec_signed, sign_known) = signed_bounds(&evec_sq, &eig.vectors);
        Ok(Self {
            epsilon,
            eigenvalue_intervals: eig
                .values
                .iter()
                .map(|&l| weyl_interval(l, epsilon))
                .collect(),
            eigenvalues: eig.values,
            eigenvectors: eig.vectors,
            evec_sq,
            evec_signed,
            sign_known,
            minors_spectra: sq.minors_spectra,
            tightening: None,
        })
    }

    pub fn p(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Bounds on `1 / lambda_k(Sigma)` for every k.
    pub fn inverse_eigenvalue_intervals(&self) -> Result<Vec<Interval>> {
        self.eigenvalues
            .iter()
            .map(|&l| inverse_eigenvalue_interval(l, self.epsilon))
            .collect()
    }

    /// Sum of the widths of all squared and signed entry intervals.
    pub fn total_width(&self) -> f64 {
        self.evec_sq
            .iter()
            .chain(self.evec_signed.iter())
            .map(Interval::width)
            .sum()
    }
}
