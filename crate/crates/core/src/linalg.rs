//! Thin wrappers over nalgebra's symmetric eigensolver, with descending order.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigenvalues (descending) and matching unit eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn sym_eigen(m: &DMatrix<f64>) -> SortedEigen {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let cols: Vec<DVector<f64>> = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).into())
        .collect();
    let vectors = if cols.is_empty() {
        DMatrix::zeros(0, 0)
    } else {
        DMatrix::from_columns(&cols)
    };
    SortedEigen { values, vectors }
}

pub fn eigenvalues_desc(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// The principal submatrix with row and column `j` removed.
pub fn minor(m: &DMatrix<f64>, j: usize) -> DMatrix<f64> {
    m.clone().remove_row(j).remove_column(j)
}

/// Spectral norm of a symmetric matrix.
pub fn sym_spectral_norm(m: &DMatrix<f64>) -> f64 {
    eigenvalues_desc(m)
        .iter()
        .fold(0.0, |acc, v| acc.max(v.abs()))
}
