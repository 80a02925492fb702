//! Fixed-point tightening of eigenvector-entry bounds under the constraints
//! that each eigenvector has unit norm and distinct eigenvectors are
//! orthogonal. Every update is an intersection, so no interval ever widens.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{signed_entry, EigenBounds};
use crate::interval::Interval;

pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TighteningStats {
    pub sweeps: usize,
    pub converged: bool,
    /// Largest endpoint movement in the last sweep.
    pub final_change: f64,
    /// Updates that would have emptied an interval; the entry was left as is.
    pub inconsistencies: usize,
}

/// Where the partner entry `y = [b, a]` sits relative to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignCase {
    /// `a < 0`.
    Negative,
    /// `b > 0`.
    Positive,
    /// `b < 0 < a`.
    Straddle,
    /// `b = 0 < a`.
    ZeroLower,
    /// `b < 0 = a`.
    ZeroUpper,
    /// `a = b = 0`: no information.
    Zero,
}

impl SignCase {
    pub fn of(y: &Interval) -> Self {
        let (b, a) = (y.lo(), y.hi());
        if a < 0.0 {
            SignCase::Negative
        } else if b > 0.0 {
            SignCase::Positive
        } else if b < 0.0 && a > 0.0 {
            SignCase::Straddle
        } else if b == 0.0 && a > 0.0 {
            SignCase::ZeroLower
        } else if b < 0.0 {
            SignCase::ZeroUpper
        } else {
            SignCase::Zero
        }
    }
}

/// Narrows `x` given `x * y in [-nu, -mu]` where `rest = [mu, nu]` encloses
/// the remaining terms of an inner product that must vanish.
///
/// Returns `None` when no `x` in the current interval is compatible.
pub fn orthogonality_update(x: Interval, y: Interval, rest: Interval) -> Option<Interval> {
    let (mu, nu) = (rest.lo(), rest.hi());
    let target = -rest;
    let (b, a) = (y.lo(), y.hi());
    let (mut lo, mut hi) = (x.lo(), x.hi());
    match SignCase::of(&y) {
        SignCase::Negative | SignCase::Positive => {
            let q = target.checked_div(&y).expect("y excludes zero");
            return x.intersect(&q);
        }
        SignCase::Straddle => {
            if lo >= 0.0 {
                lo = lo.max(-mu / b).max(-nu / a);
            }
            if hi < 0.0 {
                hi = hi.min(-mu / a).min(-nu / b);
            }
        }
        SignCase::ZeroLower => {
            if nu < 0.0 {
                lo = lo.max(-nu / a);
            }
            if mu > 0.0 {
                hi = hi.min(-mu / a);
            }
        }
        SignCase::ZeroUpper => {
            if mu > 0.0 {
                lo = lo.max(-mu / b);
            }
            if nu < 0.0 {
                hi = hi.min(-nu / b);
            }
        }
        SignCase::Zero => {}
    }
    Interval::new(lo, hi).ok()
}

/// Enclosure of `sum_{k != l} V[k, i] V[k, j]` from the signed bounds.
pub fn bounds_on_sum(signed: &DMatrix<Interval>, i: usize, j: usize, l: usize) -> Interval {
    (0..signed.nrows())
        .filter(|&k| k != l)
        .fold(Interval::ZERO, |acc, k| {
            acc + signed[(k, i)] * signed[(k, j)]
        })
}

/// Norm constraint within each eigenvector: `sum_r |V_rc|^2 = 1`.
fn apply_norm(sq: &mut DMatrix<Interval>, inconsistencies: &mut usize) {
    let (p, q) = sq.shape();
    for c in 0..q {
        let sum_lo: f64 = (0..p).map(|r| sq[(r, c)].lo()).sum();
        let sum_hi: f64 = (0..p).map(|r| sq[(r, c)].hi()).sum();
        let current: Vec<Interval> = (0..p).map(|r| sq[(r, c)]).collect();
        for (r, cur) in current.iter().enumerate() {
            let lo = (1.0 - (sum_hi - cur.hi())).max(0.0);
            let hi = (1.0 - (sum_lo - cur.lo())).min(1.0);
            match Interval::new(lo.min(1.0), hi.max(0.0))
                .ok()
                .and_then(|n| cur.intersect(&n))
            {
                Some(next) => sq[(r, c)] = next,
                None => *inconsistencies += 1,
            }
        }
    }
}

fn max_change(a: &DMatrix<Interval>, b: &DMatrix<Interval>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x.lo() - y.lo()).abs().max((x.hi() - y.hi()).abs()))
        .fold(0.0, f64::max)
}

/// Repeats the norm, sign and orthogonality updates until no endpoint moves
/// by more than `tol`, or `max_iters` sweeps have run.
pub fn tighten_orthonormal(bounds: &EigenBounds, max_iters: usize, tol: f64) -> EigenBounds {
    let p = bounds.p();
    let v_hat = &bounds.eigenvectors;
    let mut sq = bounds.evec_sq.clone();
    let mut signed = bounds.evec_signed.clone();
    let mut stats = TighteningStats {
        sweeps: 0,
        converged: false,
        final_change: 0.0,
        inconsistencies: 0,
    };

    while stats.sweeps < max_iters {
        stats.sweeps += 1;
        let (sq_before, signed_before) = (sq.clone(), signed.clone());

        apply_norm(&mut sq, &mut stats.inconsistencies);

        for idx in 0..sq.len() {
            let (from_sq, _) = signed_entry(&sq[idx], v_hat[idx]);
            match signed[idx].intersect(&from_sq) {
                Some(s) => signed[idx] = s,
                None => stats.inconsistencies += 1,
            }
        }

        let snapshot = signed.clone();
        for i in 0..p {
            for j in (0..p).filter(|&j| j != i) {
                for l in 0..p {
                    let rest = bounds_on_sum(&snapshot, i, j, l);
                    match orthogonality_update(signed[(l, i)], snapshot[(l, j)], rest) {
                        Some(x) => signed[(l, i)] = x,
                        None => stats.inconsistencies += 1,
                    }
                }
            }
        }

        for idx in 0..sq.len() {
            match sq[idx].intersect(&signed[idx].square()) {
                Some(s) => sq[idx] = s,
                None => stats.inconsistencies += 1,
            }
        }

        stats.final_change = max_change(&sq, &sq_before).max(max_change(&signed, &signed_before));
        if stats.final_change < tol {
            stats.converged = true;
            break;
        }
    }

    let sign_known = DMatrix::from_fn(p, p, |r, c| {
        let s = signed[(r, c)];
        (s.lo() >= 0.0 && s.hi() > 0.0) || (s.hi() <= 0.0 && s.lo() < 0.0)
    });
    EigenBounds {
        evec_sq: sq,
        evec_signed: signed,
        sign_known,
        tightening: Some(stats),
        ..bounds.clone()
    }
}
