use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A `p x n` data matrix: one row per variable, one column per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: DMatrix<f64>,
    column_names: Option<Vec<String>>,
}

impl SampleMatrix {
    /// Wraps a `p x n` matrix. Requires `n >= 2` and finite entries.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(Error::InvalidArgument("sample has no variables".into()));
        }
        if data.ncols() < 2 {
            return Err(Error::InvalidArgument(format!(
                "sample needs at least 2 observations, got {}",
                data.ncols()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let (var, obs) = (pos % data.nrows(), pos / data.nrows());
            return Err(Error::InvalidArgument(format!(
                "non-finite value at variable {var}, observation {obs}"
            )));
        }
        Ok(Self {
            data,
            column_names: None,
        })
    }

    /// Builds a sample from a list of observations, each of length `p`.
    pub fn from_observations(observations: &[Vec<f64>]) -> Result<Self> {
        let p = observations.first().map_or(0, Vec::len);
        if let Some(bad) = observations.iter().position(|o| o.len() != p) {
            return Err(Error::InvalidArgument(format!(
                "observation {bad} has {} values, expected {p}",
                observations[bad].len()
            )));
        }
        let n = observations.len();
        Self::new(DMatrix::from_fn(p, n, |i, q| observations[q][i]))
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::InvalidArgument(format!(
                "{} names given for {} variables",
                names.len(),
                self.p()
            )));
        }
        self.column_names = Some(names);
        Ok(self)
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.data.ncols()
    }

    /// Number of variables.
    pub fn p(&self) -> usize {
        self.data.nrows()
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    /// Variable names, falling back to `x0, x1, ...`.
    pub fn names(&self) -> Vec<String> {
        match &self.column_names {
            Some(names) => names.clone(),
            None => (0..self.p()).map(|i| format!("x{i}")).collect(),
        }
    }

    /// Per-variable centering and scaling to unit sample variance.
    pub fn whiten(&self) -> Result<Self> {
        let n = self.n() as f64;
        let mut out = self.data.clone();
        for (i, mut row) in out.row_iter_mut().enumerate() {
            let mean = row.sum() / n;
            let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
            if var.is_nan() || var <= 0.0 {
                let name = self.names().swap_remove(i);
                return Err(Error::InvalidArgument(format!(
                    "variable '{name}' has zero variance and cannot be whitened"
                )));
            }
            let sd = var.sqrt();
            row.apply(|x| *x = (*x - mean) / sd);
        }
        Ok(Self {
            data: out,
            column_names: self.column_names.clone(),
        })
    }
}
