use thiserror::Error;

/// Errors surfaced by the estimation, bounding and testing routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("variable index {index} out of range for dimension {p}")]
    IndexOutOfRange { index: usize, p: usize },

    #[error("matrix is not positive definite (lambda_min = {lambda_min:e})")]
    NotPositiveDefinite { lambda_min: f64 },

    #[error(
        "matrix is numerically singular (lambda_min = {lambda_min:e}, lambda_max = {lambda_max:e}); \
         whiten the data or collect more samples"
    )]
    NearSingular { lambda_min: f64, lambda_max: f64 },

    /// The perturbation bound is at least as large as the smallest eigenvalue,
    /// so no finite bound on the inverse exists at this confidence level.
    #[error(
        "insufficient samples for bound at delta = {delta}: \
         lambda_min(sigma_hat) = {lambda_min:e} <= epsilon = {epsilon:e}"
    )]
    VacuousBound {
        delta: f64,
        lambda_min: f64,
        epsilon: f64,
    },

    #[error("random precision generation failed after {attempts} attempts (last t = {last_t})")]
    Generation { attempts: usize, last_t: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
