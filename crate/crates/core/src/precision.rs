//! The precision matrix `Theta = Sigma^-1`: point estimate and two kinds of
//! confidence region.
//!
//! * Eigen route: `Theta_ij = sum_k V_ik V_jk / lambda_k`, evaluated in
//!   interval arithmetic over the eigenvalue and eigenvector intervals.
//! * L2 route: `||Theta_hat - Theta||_2 <= eps / (l_min (l_min - eps))`, which
//!   also bounds every entry since no entry exceeds the spectral norm.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::eigenbounds::{
    epsilon_bound, inverse_eigenvalue_interval, tighten_orthonormal, BoundSource, EigenBounds,
    PerturbationBound,
};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::linalg::eigenvalues_desc;
use crate::ustat::CovEstimate;

/// Matrices whose smallest eigenvalue falls below this fraction of the
/// largest are treated as singular.
pub const SINGULARITY_RATIO: f64 = 1e-12;

fn check_definite(sigma_hat: &DMatrix<f64>) -> Result<(f64, f64)> {
    let l = eigenvalues_desc(sigma_hat);
    let (l_max, l_min) = (l[0], l[l.len() - 1]);
    if l_min <= 0.0 {
        return Err(Error::NotPositiveDefinite { lambda_min: l_min });
    }
    if l_min < SINGULARITY_RATIO * l_max {
        return Err(Error::NearSingular {
            lambda_min: l_min,
            lambda_max: l_max,
        });
    }
    Ok((l_min, l_max))
}

/// `Sigma_hat^-1` via Cholesky, symmetrized.
pub fn precision_point(sigma_hat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if sigma_hat.is_empty() || !sigma_hat.is_square() {
        return Err(Error::InvalidArgument(
            "sigma_hat must be a non-empty square matrix".into(),
        ));
    }
    let (l_min, _) = check_definite(sigma_hat)?;
    let chol = sigma_hat
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { lambda_min: l_min })?;
    let inv = chol.inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

/// Entry intervals for `Theta` from the eigen bounds.
///
/// Eigenvalues within `epsilon` of zero give an unbounded reciprocal and
/// hence unbounded entries; diagonal entries use the squared-entry bounds.
pub fn precision_intervals_eigen(bounds: &EigenBounds) -> Result<DMatrix<Interval>> {
    let p = bounds.p();
    let inv: Vec<Interval> = bounds
        .eigenvalues
        .iter()
        .map(|&l| {
            inverse_eigenvalue_interval(l, bounds.epsilon)
                .map_err(|_| Error::NotPositiveDefinite { lambda_min: l })
        })
        .collect::<Result<_>>()?;
    let s = &bounds.evec_signed;
    let sq = &bounds.evec_sq;
    Ok(DMatrix::from_fn(p, p, |i, j| {
        (0..p).fold(Interval::ZERO, |acc, k| {
            let v = if i == j {
                sq[(i, k)]
            } else {
                s[(i, k)] * s[(j, k)]
            };
            acc + v * inv[k]
        })
    }))
}

/// `eps / (l_min (l_min - eps))`, or `None` when `l_min <= eps`.
pub fn l2_threshold_from_epsilon(lambda_min: f64, epsilon: f64) -> Option<f64> {
    (lambda_min > epsilon).then(|| epsilon / (lambda_min * (lambda_min - epsilon)))
}

/// Spectral-norm radius around `Theta_hat` at confidence `1 - delta`, with
/// epsilon from the largest eigenvalue of `Cov(Sigma_hat)`.
pub fn precision_l2_threshold(
    sigma_hat: &DMatrix<f64>,
    cov: &CovEstimate,
    delta: f64,
) -> Result<f64> {
    let bound = epsilon_bound(cov, delta, BoundSource::LargestEigenvalue)?;
    let (l_min, _) = check_definite(sigma_hat)?;
    l2_threshold_from_epsilon(l_min, bound.epsilon).ok_or(Error::VacuousBound {
        delta,
        lambda_min: l_min,
        epsilon: bound.epsilon,
    })
}

/// Which confidence region(s) to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Eigen,
    L2,
    #[default]
    Both,
}

impl Route {
    fn eigen(self) -> bool {
        matches!(self, Route::Eigen | Route::Both)
    }
    fn l2(self) -> bool {
        matches!(self, Route::L2 | Route::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrecisionDiagnostics {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `lambda_min(Sigma_hat) - epsilon`; the L2 route needs this positive.
    pub lambda_min_margin: f64,
    /// Eigen-route entries with an infinite endpoint.
    pub unbounded_intervals: usize,
    /// Negative variances in `Cov(Sigma_hat)` reset to zero.
    pub clamped: usize,
}

#[derive(Debug, Clone)]
pub struct PrecisionReport {
    pub theta_hat: DMatrix<f64>,
    pub entry_intervals_eigen: Option<DMatrix<Interval>>,
    /// `None` when the route was not requested or the bound is vacuous.
    pub l2_threshold: Option<f64>,
    pub bound: PerturbationBound,
    pub diagnostics: PrecisionDiagnostics,
}

/// Tightening parameters; `None` skips tightening.
pub type TighteningParams = Option<(usize, f64)>;

impl PrecisionReport {
    pub fn compute(
        cov: &CovEstimate,
        bound: PerturbationBound,
        route: Route,
        tightening: TighteningParams,
    ) -> Result<Self> {
        let theta_hat = precision_point(&cov.sigma_hat)?;
        let (lambda_min, lambda_max) = check_definite(&cov.sigma_hat)?;
        let entry_intervals_eigen = if route.eigen() {
            let mut eb = EigenBounds::new(&cov.sigma_hat, bound.epsilon)?;
            if let Some((iters, tol)) = tightening {
                eb = tighten_orthonormal(&eb, iters, tol);
            }
            Some(precision_intervals_eigen(&eb)?)
        } else {
            None
        };
        let l2_threshold = if route.l2() {
            l2_threshold_from_epsilon(lambda_min, bound.epsilon)
        } else {
            None
        };
        let unbounded_intervals = entry_intervals_eigen
            .as_ref()
            .map_or(0, |m| m.iter().filter(|i| !i.is_bounded()).count());
        Ok(Self {
            theta_hat,
            entry_intervals_eigen,
            l2_threshold,
            bound,
            diagnostics: PrecisionDiagnostics {
                lambda_min,
                lambda_max,
                lambda_min_margin: lambda_min - bound.epsilon,
                unbounded_intervals,
                clamped: cov.clamped,
            },
        })
    }

    /// Entrywise intervals `[Theta_hat_ij - t, Theta_hat_ij + t]` from the L2
    /// threshold.
    pub fn l2_intervals(&self) -> Option<DMatrix<Interval>> {
        let t = self.l2_threshold?;
        Some(
            self.theta_hat
                .map(|v| Interval::new(v - t, v + t).expect("t >= 0")),
        )
    }
}
