//! Inputs shared by the benchmarks.

use covci::synth::{random_precision, sample_gaussian};
use covci::{cov_of_cov, CovEstimate, SampleMatrix};

/// A Gaussian sample from a random sparse precision matrix.
pub fn gaussian_sample(p: usize, n: usize, seed: u64) -> SampleMatrix {
    let theta = random_precision(p, 1.0, seed).expect("generation").theta;
    sample_gaussian(&theta, n, seed + 1).expect("sampling")
}

/// Estimates on a moderately large sample, for the bound benchmarks.
pub fn estimate(p: usize, seed: u64) -> CovEstimate {
    cov_of_cov(&gaussian_sample(p, 20_000, seed)).expect("estimation")
}
