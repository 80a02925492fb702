//! Raw (uncentered) sample moments up to order four.
//!
//! Every quantity the covariance-of-covariance estimator needs is a mean of a
//! product of at most four variables, `(1/n) sum_q X_{a,q} X_{b,q} ...`. The
//! requests are keyed by sorted index multiset so that the many overlapping
//! requests of the seven cases collapse, and the whole table is filled in one
//! sweep over the observations.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::sample::SampleMatrix;

/// Maximum total degree of a stored moment.
pub const MAX_DEGREE: usize = 4;

/// A multiset of variable indices of total degree at most four, stored sorted.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    vars: [usize; MAX_DEGREE],
    degree: u8,
}

impl Monomial {
    /// Panics if more than [`MAX_DEGREE`] indices are given.
    pub fn new(indices: &[usize]) -> Self {
        Self::try_new(indices).expect("moments are limited to degree four")
    }

    pub fn try_new(indices: &[usize]) -> Option<Self> {
        if indices.len() > MAX_DEGREE {
            return None;
        }
        let mut vars = [usize::MAX; MAX_DEGREE];
        vars[..indices.len()].copy_from_slice(indices);
        vars[..indices.len()].sort_unstable();
        Some(Self {
            vars,
            degree: indices.len() as u8,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree as usize
    }

    pub fn indices(&self) -> &[usize] {
        &self.vars[..self.degree()]
    }

    /// Applies a variable substitution, re-sorting the result.
    pub fn substitute(&self, f: impl Fn(usize) -> usize) -> Self {
        let mapped: Vec<usize> = self.indices().iter().map(|&v| f(v)).collect();
        Self::new(&mapped)
    }

    fn product(&self, column: &[f64]) -> f64 {
        self.indices().iter().map(|&v| column[v]).product()
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, v) in self.indices().iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

/// Every monomial over `p` variables with degree in `1..=max_degree`.
pub fn all_monomials(p: usize, max_degree: usize) -> Vec<Monomial> {
    fn rec(p: usize, start: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Monomial>) {
        if !cur.is_empty() {
            out.push(Monomial::new(cur));
        }
        if left == 0 {
            return;
        }
        for v in start..p {
            cur.push(v);
            rec(p, v, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(p, 0, max_degree.min(MAX_DEGREE), &mut Vec::new(), &mut out);
    out
}

/// Sample means of products of variables, keyed by index multiset.
#[derive(Debug, Clone)]
pub struct MomentTable {
    values: HashMap<Monomial, f64>,
    n: usize,
}

impl MomentTable {
    /// Builds a table from precomputed values, e.g. exact population moments.
    pub fn from_values(values: impl IntoIterator<Item = (Monomial, f64)>, n: usize) -> Self {
        Self {
            values: values.into_iter().collect(),
            n,
        }
    }

    /// Number of observations the moments were averaged over.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Looks up the mean of the product over `indices`, in any order.
    /// The empty product is 1.
    pub fn get(&self, indices: &[usize]) -> Option<f64> {
        if indices.is_empty() {
            return Some(1.0);
        }
        self.values.get(&Monomial::try_new(indices)?).copied()
    }

    /// Like [`get`](Self::get), but a missing entry is a bug in the caller's
    /// request list and panics.
    pub fn moment(&self, indices: &[usize]) -> f64 {
        self.get(indices)
            .unwrap_or_else(|| panic!("moment {:?} was not requested", Monomial::new(indices)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &f64)> {
        self.values.iter()
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Computes each requested moment in a single pass over the observations.
///
/// Duplicate and permuted requests share one accumulator. Cost is
/// `O(n * distinct requests)`.
pub fn compute_moments(
    sample: &SampleMatrix,
    requests: impl IntoIterator<Item = Monomial>,
) -> Result<MomentTable> {
    let p = sample.p();
    let keys: Vec<Monomial> = requests
        .into_iter()
        .filter(|m| m.degree() > 0)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    for key in &keys {
        if let Some(&index) = key.indices().iter().find(|&&v| v >= p) {
            return Err(Error::IndexOutOfRange { index, p });
        }
    }
    let n = sample.n();
    if n == 0 {
        return Err(Error::InvalidArgument("empty sample".into()));
    }

    let mut acc = vec![CompensatedSum::default(); keys.len()];
    for column in sample.data().column_iter() {
        let column = column.as_slice();
        for (a, key) in acc.iter_mut().zip(&keys) {
            a.add(key.product(column));
        }
    }
    let inv_n = 1.0 / n as f64;
    let values = keys
        .into_iter()
        .zip(acc)
        .map(|(k, a)| (k, a.value() * inv_n));
    Ok(MomentTable::from_values(values, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn two_by_two() -> SampleMatrix {
        SampleMatrix::from_observations(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap()
    }

    #[test]
    fn first_and_mixed_moments() {
        let t =
            compute_moments(&two_by_two(), [Monomial::new(&[0]), Monomial::new(&[0, 1])]).unwrap();
        assert_eq!(t.get(&[0]), Some(2.0));
        assert_eq!(t.get(&[0, 1]), Some(7.0));
        assert_eq!(t.get(&[1, 0]), Some(7.0));
        assert_eq!(t.get(&[]), Some(1.0));
        assert_eq!(t.get(&[1]), None);
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let err = compute_moments(&two_by_two(), [Monomial::new(&[0, 2])]).unwrap_err();
        assert_eq!(err, Error::IndexOutOfRange { index: 2, p: 2 });
    }

    #[test]
    fn fourth_moment_of_standard_normal() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let n = 200_000;
        let data = DMatrix::from_fn(1, n, |_, _| StandardNormal.sample(&mut rng));
        let s = SampleMatrix::new(data).unwrap();
        let t = compute_moments(&s, [Monomial::new(&[0, 0, 0, 0])]).unwrap();
        // Var(X^4) = 96, so the standard error here is about 0.022.
        assert!(
            (t.moment(&[0; 4]) - 3.0).abs() < 0.1,
            "{}",
            t.moment(&[0; 4])
        );
    }

    #[test]
    fn deduplicates_permuted_requests() {
        let reqs = [
            Monomial::new(&[1, 0, 0]),
            Monomial::new(&[0, 1, 0]),
            Monomial::new(&[0, 0, 1]),
        ];
        let t = compute_moments(&two_by_two(), reqs).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get(&[0, 0, 1]), Some((2.0 + 36.0) / 2.0));
    }

    #[test]
    fn monomial_enumeration_counts() {
        // C(p + d, d) - 1 monomials of degree 1..=d
        assert_eq!(all_monomials(5, 4).len(), 125);
        assert_eq!(all_monomials(3, 4).len(), 34);
        assert_eq!(all_monomials(1, 4).len(), 4);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn brute(data: &DMatrix<f64>, idx: &[usize]) -> f64 {
            let n = data.ncols();
            (0..n)
                .map(|q| idx.iter().map(|&v| data[(v, q)]).product::<f64>())
                .sum::<f64>()
                / n as f64
        }

        proptest! {
            #[test]
            fn matches_nested_loop_and_is_symmetric(
                vals in proptest::collection::vec(-3.0f64..3.0, 3 * 40),
                idx in proptest::collection::vec(0usize..3, 1..=4),
            ) {
                let data = DMatrix::from_vec(3, 40, vals);
                let s = SampleMatrix::new(data.clone()).unwrap();
                let t = compute_moments(&s, [Monomial::new(&idx)]).unwrap();
                let expect = brute(&data, &idx);
                prop_assert!((t.moment(&idx) - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
                let mut rev = idx.clone();
                rev.reverse();
                prop_assert_eq!(t.get(&rev), t.get(&idx));
            }
        }
    }
}
