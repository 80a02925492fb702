//! Unbiased covariance estimation and the covariance of the estimator.
//!
//! `Cov(Sigma_hat_ij, Sigma_hat_kl)` is estimated to first order as
//! `C(n,2)^-1 * 2(n-2) * zeta1`, where `zeta1` is the covariance of the
//! projected kernels. Depending on which of `(i, j, k, l)` coincide, `zeta1`
//! takes one of seven closed forms in raw moments of order at most four.
//! The `O(n^-2)` remainder is not estimated.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::moments::{compute_moments, MomentTable, Monomial};
use crate::sample::SampleMatrix;

/// Unbiased sample covariance with the `1/(n-1)` normalization.
pub fn estimate_covariance(sample: &SampleMatrix) -> Result<DMatrix<f64>> {
    let n = sample.n();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "covariance needs n >= 2, got {n}"
        )));
    }
    let data = sample.data();
    let means = data.column_mean();
    let mut centered = data.clone();
    for mut col in centered.column_iter_mut() {
        col -= &means;
    }
    let mut cov = &centered * centered.transpose() / (n as f64 - 1.0);
    symmetrize(&mut cov);
    Ok(cov)
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let p = m.nrows();
    for i in 0..p {
        for j in (i + 1)..p {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Bijection between upper-triangular pairs `(i, j)`, `i <= j`, and `0..q`,
/// `q = p(p+1)/2`, in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairIndex {
    p: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairIndex {
    pub fn new(p: usize) -> Self {
        let pairs = (0..p).flat_map(|i| (i..p).map(move |j| (i, j))).collect();
        Self { p, pairs }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair(&self, r: usize) -> (usize, usize) {
        self.pairs[r]
    }

    /// Position of `(i, j)` (or `(j, i)`).
    pub fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        debug_assert!(j < self.p);
        // rows 0..i contribute p + (p-1) + ... + (p-i+1) entries
        i * self.p - i * i.saturating_sub(1) / 2 + (j - i)
    }
}

/// The seven index-coincidence patterns of `Cov(Sigma_hat_ij, Sigma_hat_kl)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Case {
    /// `Cov(S_ij, S_kl)`, all four distinct.
    AllDistinct,
    /// `Cov(S_ii, S_kk)`.
    TwoDiagonals,
    /// `Cov(S_ii, S_kl)`.
    DiagonalAndOffDiagonal,
    /// `Cov(S_ij, S_il)`.
    SharedIndex,
    /// `Var(S_ij)`.
    OffDiagonalVariance,
    /// `Cov(S_ii, S_il)`.
    DiagonalAndAdjacent,
    /// `Var(S_ii)`.
    DiagonalVariance,
}

impl Case {
    pub const ALL: [Case; 7] = [
        Case::AllDistinct,
        Case::TwoDiagonals,
        Case::DiagonalAndOffDiagonal,
        Case::SharedIndex,
        Case::OffDiagonalVariance,
        Case::DiagonalAndAdjacent,
        Case::DiagonalVariance,
    ];

    /// The conventional case number, 1 through 7.
    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_number(id: u8) -> Option<Self> {
        Self::ALL.get(usize::from(id).checked_sub(1)?).copied()
    }

    /// Canonical index pattern over `(i, j, k, l)`: each position holds the
    /// position of the first index equal to it. Variables are named by
    /// position, so `a = 0, b = 1, c = 2, d = 3`.
    pub fn pattern(self) -> [usize; 4] {
        match self {
            Case::AllDistinct => [0, 1, 2, 3],
            Case::TwoDiagonals => [0, 0, 2, 2],
            Case::DiagonalAndOffDiagonal => [0, 0, 2, 3],
            Case::SharedIndex => [0, 1, 0, 3],
            Case::OffDiagonalVariance => [0, 1, 0, 1],
            Case::DiagonalAndAdjacent => [0, 0, 0, 3],
            Case::DiagonalVariance => [0, 0, 0, 0],
        }
    }

    /// Sorted multiplicities of the distinct indices in the pattern.
    fn multiplicities(self) -> Vec<usize> {
        multiplicities(&self.pattern())
    }
}

fn multiplicities(t: &[usize; 4]) -> Vec<usize> {
    let mut counts: Vec<usize> = t
        .iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(|v| t.iter().filter(|&&x| x == *v).count())
        .collect();
    counts.sort_unstable_by(|a, b| b.cmp(a));
    counts
}

fn reduced_form(t: &[usize; 4]) -> [usize; 4] {
    let mut out = [0; 4];
    for (pos, v) in t.iter().enumerate() {
        out[pos] = t.iter().position(|x| x == v).unwrap();
    }
    out
}

/// The eight index permutations under which `Cov(S_ij, S_kl)` is invariant:
/// swapping the two entries, and transposing either entry.
const SYMMETRIES: [[usize; 4]; 8] = [
    [0, 1, 2, 3],
    [0, 1, 3, 2],
    [1, 0, 2, 3],
    [1, 0, 3, 2],
    [2, 3, 0, 1],
    [3, 2, 0, 1],
    [2, 3, 1, 0],
    [3, 2, 1, 0],
];

/// A case together with the reoriented index tuple that matches its pattern.
///
/// Because canonical variables are named by position, the substitution is
/// `a -> indices[0]`, `b -> indices[1]`, `c -> indices[2]`, `d -> indices[3]`
/// restricted to the variables the pattern uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CaseAssignment {
    pub case: Case,
    pub indices: [usize; 4],
}

impl CaseAssignment {
    /// `(canonical variable, concrete index)` for each variable the case uses.
    pub fn substitution(&self) -> Vec<(char, usize)> {
        let pat = self.case.pattern();
        (0..4)
            .filter(|&pos| pat[pos] == pos)
            .map(|pos| ((b'a' + pos as u8) as char, self.indices[pos]))
            .collect()
    }

    fn map(&self, canonical: usize) -> usize {
        self.indices[canonical]
    }
}

/// Maps `(i, j, k, l)` to its case and substitution.
///
/// Variables are relabeled by occurrence count to narrow the candidates;
/// ties are resolved by trying the covariance symmetries in a fixed order.
pub fn classify_case(i: usize, j: usize, k: usize, l: usize) -> CaseAssignment {
    let t = [i, j, k, l];
    let counts = multiplicities(&t);
    let candidates: Vec<Case> = Case::ALL
        .into_iter()
        .filter(|c| c.multiplicities() == counts)
        .collect();
    for perm in SYMMETRIES {
        let oriented = [t[perm[0]], t[perm[1]], t[perm[2]], t[perm[3]]];
        let form = reduced_form(&oriented);
        if let Some(&case) = candidates.iter().find(|c| c.pattern() == form) {
            return CaseAssignment {
                case,
                indices: oriented,
            };
        }
    }
    unreachable!("the seven cases are exhaustive")
}

/// Read access to raw moments for the closed forms.
pub trait MomentLookup {
    /// Mean of the product over `indices`; panics if absent.
    fn moment(&self, indices: &[usize]) -> f64;
}

impl MomentLookup for MomentTable {
    fn moment(&self, indices: &[usize]) -> f64 {
        MomentTable::moment(self, indices)
    }
}

/// The moment multisets appearing in a case's closed form, over canonical
/// variables `a = 0, b = 1, c = 2, d = 3`.
pub fn moment_requirements(case: Case) -> Vec<Monomial> {
    const A: usize = 0;
    const B: usize = 1;
    const C: usize = 2;
    const D: usize = 3;
    let sets: &[&[usize]] = match case {
        Case::AllDistinct => &[
            &[A],
            &[B],
            &[C],
            &[D],
            &[A, B],
            &[A, C],
            &[A, D],
            &[B, C],
            &[B, D],
            &[C, D],
            &[A, B, C],
            &[A, B, D],
            &[A, C, D],
            &[B, C, D],
            &[A, B, C, D],
        ],
        Case::TwoDiagonals => &[
            &[A],
            &[C],
            &[A, A],
            &[C, C],
            &[A, C],
            &[A, A, C],
            &[A, C, C],
            &[A, A, C, C],
        ],
        Case::DiagonalAndOffDiagonal => &[
            &[A],
            &[C],
            &[D],
            &[A, A],
            &[A, C],
            &[A, D],
            &[C, D],
            &[A, A, C],
            &[A, A, D],
            &[A, C, D],
            &[A, A, C, D],
        ],
        Case::SharedIndex => &[
            &[A],
            &[B],
            &[D],
            &[A, A],
            &[A, B],
            &[A, D],
            &[B, D],
            &[A, A, B],
            &[A, A, D],
            &[A, B, D],
            &[A, A, B, D],
        ],
        Case::OffDiagonalVariance => &[
            &[A],
            &[B],
            &[A, A],
            &[B, B],
            &[A, B],
            &[A, A, B],
            &[A, B, B],
            &[A, A, B, B],
        ],
        Case::DiagonalAndAdjacent => &[
            &[A],
            &[D],
            &[A, A],
            &[A, D],
            &[A, A, A],
            &[A, A, D],
            &[A, A, A, D],
        ],
        Case::DiagonalVariance => &[&[A], &[A, A], &[A, A, A], &[A, A, A, A]],
    };
    sets.iter().map(|s| Monomial::new(s)).collect()
}

/// Plug-in estimate of `zeta1` for one case, evaluating its closed form with
/// the supplied moments.
pub fn zeta1<M: MomentLookup + ?Sized>(assignment: &CaseAssignment, m: &M) -> f64 {
    let v = |c: usize| assignment.map(c);
    let mm = |idx: &[usize]| {
        let mapped: Vec<usize> = idx.iter().map(|&c| v(c)).collect();
        m.moment(&mapped)
    };
    let (a, b, c, d) = (0, 1, 2, 3);
    let inner = match assignment.case {
        Case::AllDistinct => {
            let (ma, mb, mc, md) = (mm(&[a]), mm(&[b]), mm(&[c]), mm(&[d]));
            mm(&[a, b, c, d]) - ma * mm(&[b, c, d]) - mb * mm(&[a, c, d]) - mc * mm(&[a, b, d])
                + ma * mc * mm(&[b, d])
                + mb * mc * mm(&[a, d])
                - mm(&[a, b, c]) * md
                + ma * md * mm(&[b, c])
                + mb * md * mm(&[a, c])
                - (mm(&[a, b]) - 2.0 * ma * mb) * (mm(&[c, d]) - 2.0 * mc * md)
        }
        Case::TwoDiagonals => {
            let (ma, mc) = (mm(&[a]), mm(&[c]));
            mm(&[a, a, c, c]) - 2.0 * ma * mm(&[a, c, c]) - 2.0 * mm(&[a, a, c]) * mc
                + 4.0 * mm(&[a, c]) * ma * mc
                - (mm(&[a, a]) - 2.0 * ma * ma) * (mm(&[c, c]) - 2.0 * mc * mc)
        }
        Case::DiagonalAndOffDiagonal => {
            let (ma, mc, md) = (mm(&[a]), mm(&[c]), mm(&[d]));
            mm(&[a, a, c, d]) - 2.0 * mm(&[a, c, d]) * ma - mm(&[a, a, d]) * mc
                + 2.0 * mm(&[a, d]) * ma * mc
                - mm(&[a, a, c]) * md
                + 2.0 * mm(&[a, c]) * ma * md
                - (mm(&[a, a]) - 2.0 * ma * ma) * (mm(&[c, d]) - 2.0 * mc * md)
        }
        Case::SharedIndex => {
            let (ma, mb, md) = (mm(&[a]), mm(&[b]), mm(&[d]));
            mm(&[a, a, b, d]) - ma * mm(&[b, a, d]) - mm(&[a, a, d]) * mb - mm(&[a, b, d]) * ma
                + ma * ma * mm(&[b, d])
                + mm(&[a, d]) * mb * ma
                - mm(&[a, a, b]) * md
                + ma * mm(&[b, a]) * md
                + mm(&[a, a]) * mb * md
                - (mm(&[a, b]) - 2.0 * ma * mb) * (mm(&[a, d]) - 2.0 * ma * md)
        }
        Case::OffDiagonalVariance => {
            let (ma, mb) = (mm(&[a]), mm(&[b]));
            let centered = mm(&[a, b]) - 2.0 * ma * mb;
            mm(&[a, a, b, b]) - 2.0 * mm(&[a, b, b]) * ma + ma * ma * mm(&[b, b])
                - 2.0 * mm(&[a, a, b]) * mb
                + 2.0 * ma * mb * mm(&[b, a])
                + mm(&[a, a]) * mb * mb
                - centered * centered
        }
        Case::DiagonalAndAdjacent => {
            let (ma, md) = (mm(&[a]), mm(&[d]));
            mm(&[a, a, a, d]) - 3.0 * mm(&[a, a, d]) * ma + 2.0 * mm(&[a, d]) * ma * ma
                - mm(&[a, a, a]) * md
                + 2.0 * mm(&[a, a]) * ma * md
                - (mm(&[a, a]) - 2.0 * ma * ma) * (mm(&[a, d]) - 2.0 * ma * md)
        }
        Case::DiagonalVariance => {
            let ma = mm(&[a]);
            let centered = mm(&[a, a]) - 2.0 * ma * ma;
            mm(&[a, a, a, a]) - 4.0 * mm(&[a, a, a]) * ma + 4.0 * mm(&[a, a]) * ma * ma
                - centered * centered
        }
    };
    0.25 * inner
}

/// `2(n-2) / C(n,2) = 4(n-2) / (n(n-1))`, the leading coefficient of `zeta1`.
pub fn leading_coefficient(n: usize) -> f64 {
    let n = n as f64;
    4.0 * (n - 2.0) / (n * (n - 1.0))
}

/// Every moment needed to fill the covariance of `p` variables' covariance.
pub fn required_moments(p: usize) -> BTreeSet<Monomial> {
    let pairs = PairIndex::new(p);
    let mut out = BTreeSet::new();
    for r in 0..pairs.len() {
        for s in r..pairs.len() {
            let ((i, j), (k, l)) = (pairs.pair(r), pairs.pair(s));
            let asg = classify_case(i, j, k, l);
            out.extend(
                moment_requirements(asg.case)
                    .iter()
                    .map(|m| m.substitute(|c| asg.map(c))),
            );
        }
    }
    out
}

/// Fills the `q x q` first-order covariance of the upper-triangular covariance
/// entries from moments, scaling by the leading coefficient at sample size `n`.
///
/// Returns the matrix and the number of negative diagonal entries clamped to 0.
pub fn cov_of_cov_from_moments<M: MomentLookup + ?Sized>(
    moments: &M,
    p: usize,
    n: usize,
) -> Result<(DMatrix<f64>, usize)> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "covariance of the covariance estimator needs n >= 3, got {n}"
        )));
    }
    let pairs = PairIndex::new(p);
    let q = pairs.len();
    let scale = leading_coefficient(n);
    let mut out = DMatrix::zeros(q, q);
    for r in 0..q {
        for s in r..q {
            let ((i, j), (k, l)) = (pairs.pair(r), pairs.pair(s));
            let v = scale * zeta1(&classify_case(i, j, k, l), moments);
            out[(r, s)] = v;
            out[(s, r)] = v;
        }
    }
    let mut clamped = 0;
    for r in 0..q {
        if out[(r, r)] < 0.0 {
            out[(r, r)] = 0.0;
            clamped += 1;
        }
    }
    Ok((out, clamped))
}

/// The covariance estimate together with the estimated covariance of its
/// upper-triangular entries.
#[derive(Debug, Clone)]
pub struct CovEstimate {
    pub sigma_hat: DMatrix<f64>,
    pub cov_of_cov: DMatrix<f64>,
    pub n: usize,
    pub pairs: PairIndex,
    /// Negative diagonal entries of `cov_of_cov` reset to zero.
    pub clamped: usize,
}

impl CovEstimate {
    pub fn p(&self) -> usize {
        self.sigma_hat.nrows()
    }

    /// `Cov(Sigma_hat_ij, Sigma_hat_kl)`.
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.cov_of_cov[(self.pairs.index(i, j), self.pairs.index(k, l))]
    }

    pub fn trace(&self) -> f64 {
        self.cov_of_cov.trace()
    }

    /// Largest eigenvalue of `cov_of_cov`.
    pub fn lambda_max(&self) -> f64 {
        crate::linalg::eigenvalues_desc(&self.cov_of_cov)
            .first()
            .copied()
            .unwrap_or(0.0)
            .max(0.0)
    }

    /// Smallest eigenvalue of `cov_of_cov`.
    pub fn lambda_min(&self) -> f64 {
        crate::linalg::eigenvalues_desc(&self.cov_of_cov)
            .last()
            .copied()
            .unwrap_or(0.0)
    }
}

/// `Sigma_hat` and the first-order `Cov(Sigma_hat)` in one moment sweep.
pub fn cov_of_cov(sample: &SampleMatrix) -> Result<CovEstimate> {
    let (p, n) = (sample.p(), sample.n());
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "covariance of the covariance estimator needs n >= 3, got {n}"
        )));
    }
    let sigma_hat = estimate_covariance(sample)?;
    let moments = compute_moments(sample, required_moments(p))?;
    let (cov_of_cov, clamped) = cov_of_cov_from_moments(&moments, p, n)?;
    Ok(CovEstimate {
        sigma_hat,
        cov_of_cov,
        n,
        pairs: PairIndex::new(p),
        clamped,
    })
}

#[cfg(test)]
mod tests;
