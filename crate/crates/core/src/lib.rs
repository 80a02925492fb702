//! Confidence intervals for covariance and precision matrices.
//!
//! The pipeline runs from a `p x n` sample to:
//!
//! 1. the unbiased covariance estimate `Sigma_hat` and the covariance of its
//!    upper-triangular entries, computed in one pass from moments of degree at
//!    most four ([`ustat`]);
//! 2. a high-probability bound `epsilon` on `||Sigma_hat - Sigma||_2`, and from
//!    it intervals on eigenvalues and eigenvector entries ([`eigenbounds`]);
//! 3. intervals on the precision matrix `Sigma^-1`, either entrywise via
//!    interval arithmetic or as a spectral-norm ball ([`precision`]);
//! 4. a conservative test for zero partial correlations ([`stattest`]).
//!
//! [`synth`] generates precision matrices with known zeros and samples from
//! Gaussian or Laplace distributions for calibration.

pub mod eigenbounds;
pub mod error;
pub mod interval;
pub mod linalg;
pub mod moments;
pub mod normal;
pub mod precision;
pub mod sample;
pub mod stattest;
pub mod synth;
pub mod ustat;

pub use eigenbounds::{
    epsilon_bound, tighten_orthonormal, BoundSource, EigenBounds, PerturbationBound,
};
pub use error::{Error, Result};
pub use interval::{sum_of_products, Interval, IntervalError};
pub use moments::{compute_moments, MomentTable, Monomial};
pub use precision::{
    precision_intervals_eigen, precision_l2_threshold, precision_point, PrecisionReport,
};
pub use sample::SampleMatrix;
pub use stattest::{
    fisher_z_test, test_all_pairs, test_entry, Method, PairTests, TestResult, Verdict,
};
pub use synth::{Distribution, SyntheticSpec};
pub use ustat::{cov_of_cov, estimate_covariance, CovEstimate};
