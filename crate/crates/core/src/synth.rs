//! Synthetic ground truth: random precision matrices with structural zeros,
//! and Gaussian or multivariate Laplace samples with that precision.
//!
//! Every generator draws from a [`ChaCha20Rng`] (rand_chacha 0.9). Replicate
//! `k` of a run with seed `s` uses `ChaCha20Rng::seed_from_u64(s)` switched to
//! stream `k` (see [`rng_for`]), so replicates are independent of each other
//! and of the order in which they run.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::sym_eigen;
use crate::precision::precision_point;
use crate::sample::SampleMatrix;

/// Off-diagonal entries of `Theta` at most this large in absolute value are
/// set to exactly zero. Besides the gaps of the adjacency graph, flooring can
/// erase an edge whose whole component ends up on the floor.
pub const ZERO_TOL: f64 = 1e-9;

/// Rejection-sampling cap for [`random_precision`].
pub const MAX_ATTEMPTS: usize = 10_000;

/// The generator for `(seed, stream)`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    #[default]
    Gaussian,
    Laplace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedPrecision {
    pub theta: DMatrix<f64>,
    /// Symmetric adjacency with empty diagonal.
    pub adjacency: DMatrix<bool>,
    /// Edge probability of the accepted draw.
    pub t: f64,
    /// Eigenvalue floor is `1 + nu`.
    pub nu: f64,
    pub attempts: usize,
}

impl GeneratedPrecision {
    /// Off-diagonal `(i, j)`, `i < j`, where `Theta_ij = 0`.
    pub fn zero_entries(&self) -> Vec<(usize, usize)> {
        self.entries_where(|v| v == 0.0)
    }

    /// Off-diagonal `(i, j)`, `i < j`, where `Theta_ij != 0`.
    pub fn nonzero_entries(&self) -> Vec<(usize, usize)> {
        self.entries_where(|v| v != 0.0)
    }

    fn entries_where(&self, keep: impl Fn(f64) -> bool) -> Vec<(usize, usize)> {
        let p = self.theta.nrows();
        (0..p)
            .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
            .filter(|&(i, j)| keep(self.theta[(i, j)]))
            .collect()
    }
}

fn symmetric_draw<T: Clone + nalgebra::Scalar>(
    p: usize,
    diagonal: T,
    mut draw: impl FnMut() -> T,
) -> DMatrix<T> {
    let mut m = DMatrix::from_element(p, p, diagonal);
    for i in 0..p {
        for j in i + 1..p {
            let v = draw();
            m[(i, j)] = v.clone();
            m[(j, i)] = v;
        }
    }
    m
}

/// One attempt: `Theta` and its adjacency, or `None` if it has no zero.
fn attempt(rng: &mut ChaCha20Rng, p: usize, c: f64) -> (Option<GeneratedPrecision>, f64) {
    let t: f64 = rng.random();
    let adjacency = symmetric_draw(p, false, || rng.random_bool(t));
    let r = symmetric_draw(p, 0.0, || rng.random::<f64>());
    let affinity = DMatrix::from_fn(p, p, |i, j| {
        if adjacency[(i, j)] {
            c * (1.0 + r[(i, j)])
        } else {
            0.0
        }
    });
    let nu: f64 = rng.random();
    let eig = sym_eigen(&affinity);
    let floored = DVector::from_iterator(p, eig.values.iter().map(|&s| s.max(1.0 + nu.abs())));
    let v = &eig.vectors;
    let mut theta = v * DMatrix::from_diagonal(&floored) * v.transpose();
    theta = (&theta + theta.transpose()) * 0.5;

    let mut zeros = 0;
    for i in 0..p {
        for j in i + 1..p {
            if theta[(i, j)].abs() <= ZERO_TOL {
                theta[(i, j)] = 0.0;
                theta[(j, i)] = 0.0;
                zeros += 1;
            }
        }
    }
    let out = (zeros > 0).then_some(GeneratedPrecision {
        theta,
        adjacency,
        t,
        nu,
        attempts: 0,
    });
    (out, t)
}

/// A random precision matrix with `lambda_min >= 1` and at least one
/// off-diagonal zero. Draws violating the zero requirement are rejected.
pub fn random_precision(p: usize, c: f64, seed: u64) -> Result<GeneratedPrecision> {
    random_precision_with(&mut rng_for(seed, 0), p, c)
}

pub fn random_precision_with(
    rng: &mut ChaCha20Rng,
    p: usize,
    c: f64,
) -> Result<GeneratedPrecision> {
    if p < 2 {
        return Err(Error::InvalidArgument(format!(
            "random precision needs p >= 2, got {p}"
        )));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "affinity scale must be positive, got {c}"
        )));
    }
    let mut last_t = f64::NAN;
    for k in 1..=MAX_ATTEMPTS {
        let (out, t) = attempt(rng, p, c);
        last_t = t;
        if let Some(mut g) = out {
            g.attempts = k;
            return Ok(g);
        }
    }
    Err(Error::Generation {
        attempts: MAX_ATTEMPTS,
        last_t,
    })
}

/// Lower Cholesky factor of `Theta^-1`.
fn covariance_factor(theta: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sigma = precision_point(theta)
        .map_err(|e| Error::InvalidArgument(format!("precision matrix is unusable: {e}")))?;
    let chol = sigma.cholesky().ok_or_else(|| {
        Error::InvalidArgument("precision matrix is not positive definite".into())
    })?;
    Ok(chol.l())
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 observations, got {n}"
        )));
    }
    Ok(())
}

fn draw(
    rng: &mut ChaCha20Rng,
    l: &DMatrix<f64>,
    n: usize,
    location: Option<&[f64]>,
) -> Result<SampleMatrix> {
    let p = l.nrows();
    let mut data = DMatrix::zeros(p, n);
    let mut g = DVector::zeros(p);
    for t in 0..n {
        let w: f64 = if location.is_some() {
            rng.sample(Exp1)
        } else {
            1.0
        };
        for v in g.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let z = l * &g;
        let mut col = data.column_mut(t);
        match location {
            None => col.copy_from(&z),
            Some(m) => {
                let s = w.sqrt();
                for i in 0..p {
                    col[i] = m[i] * w + s * z[i];
                }
            }
        }
    }
    SampleMatrix::new(data)
}

/// `n` draws from `N(0, Theta^-1)`.
pub fn sample_gaussian(theta: &DMatrix<f64>, n: usize, seed: u64) -> Result<SampleMatrix> {
    sample_gaussian_with(&mut rng_for(seed, 0), theta, n)
}

pub fn sample_gaussian_with(
    rng: &mut ChaCha20Rng,
    theta: &DMatrix<f64>,
    n: usize,
) -> Result<SampleMatrix> {
    check_n(n)?;
    draw(rng, &covariance_factor(theta)?, n, None)
}

/// `n` draws of `Y = m W + sqrt(W) Z` with `W ~ Exp(1)` shared across the
/// coordinates of one observation and `Z ~ N(0, Theta^-1)`. With `m = 0`
/// the covariance is `Theta^-1`.
pub fn sample_laplace(
    theta: &DMatrix<f64>,
    m: &[f64],
    n: usize,
    seed: u64,
) -> Result<SampleMatrix> {
    sample_laplace_with(&mut rng_for(seed, 0), theta, m, n)
}

pub fn sample_laplace_with(
    rng: &mut ChaCha20Rng,
    theta: &DMatrix<f64>,
    m: &[f64],
    n: usize,
) -> Result<SampleMatrix> {
    check_n(n)?;
    if m.len() != theta.nrows() {
        return Err(Error::InvalidArgument(format!(
            "location has length {} but the dimension is {}",
            m.len(),
            theta.nrows()
        )));
    }
    draw(rng, &covariance_factor(theta)?, n, Some(m))
}

/// A complete synthetic run: ground truth plus one sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticSpec {
    pub p: usize,
    pub n: usize,
    pub distribution: Distribution,
    /// Laplace location; zeros when absent.
    pub location: Option<Vec<f64>>,
    pub seed: u64,
    /// Affinity scale `c`.
    pub affinity_scale: f64,
}

impl SyntheticSpec {
    pub fn new(p: usize, n: usize, distribution: Distribution, seed: u64) -> Self {
        Self {
            p,
            n,
            distribution,
            location: None,
            seed,
            affinity_scale: 1.0,
        }
    }

    /// The ground-truth precision matrix for this seed.
    pub fn precision(&self) -> Result<GeneratedPrecision> {
        random_precision(self.p, self.affinity_scale, self.seed)
    }

    /// Replicate `k` drawn from `theta`.
    pub fn sample(&self, theta: &DMatrix<f64>, replicate: u64) -> Result<SampleMatrix> {
        let mut rng = rng_for(self.seed, replicate + 1);
        match self.distribution {
            Distribution::Gaussian => sample_gaussian_with(&mut rng, theta, self.n),
            Distribution::Laplace => {
                let zeros = vec![0.0; self.p];
                let m = self.location.as_deref().unwrap_or(&zeros);
                sample_laplace_with(&mut rng, theta, m, self.n)
            }
        }
    }
}

fn format_value(v: f64) -> String {
    // `{}` on f64 is the shortest string that round-trips.
    format!("{v}")
}

/// Writes a sample as CSV: a header of variable names, then one row per
/// observation.
pub fn write_csv<W: Write>(sample: &SampleMatrix, mut out: W) -> io::Result<()> {
    writeln!(out, "{}", sample.names().join(","))?;
    let data = sample.data();
    for t in 0..sample.n() {
        let row: Vec<String> = data.column(t).iter().map(|&v| format_value(v)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
