//! Closed real intervals `[lo, hi]` with inclusion-preserving arithmetic.
//!
//! Endpoints are plain `f64` without outward rounding; the statistical slack
//! in every bound built on top of this module is many orders of magnitude
//! larger than one ulp. Infinite endpoints are allowed so that an unbounded
//! reciprocal can flow through sums and products.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum IntervalError {
    #[error("invalid interval bounds [{lo}, {hi}]")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("division by an interval containing zero")]
    DivisionByZero,
}

#[derive(Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

/// Endpoint product with `0 * inf = 0`, the convention that keeps products
/// with unbounded intervals tight and NaN-free.
#[inline]
fn emul(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

impl Interval {
    /// `[0, 1]`.
    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0 };
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(IntervalError::InvalidBounds { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// The degenerate interval `[x, x]`. Panics on NaN or infinity.
    pub fn point(x: f64) -> Self {
        assert!(x.is_finite(), "point interval at {x}");
        Self { lo: x, hi: x }
    }

    /// `[lo, +inf)`.
    pub fn at_least(lo: f64) -> Self {
        assert!(lo.is_finite());
        Self {
            lo,
            hi: f64::INFINITY,
        }
    }

    /// `[-r, r]`.
    pub fn symmetric(r: f64) -> Self {
        let r = r.abs();
        Self { lo: -r, hi: r }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    /// True when every point has the same strict sign.
    pub fn excludes_zero(&self) -> bool {
        self.lo > 0.0 || self.hi < 0.0
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi)).ok()
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn scale(&self, k: f64) -> Interval {
        let (a, b) = (emul(k, self.lo), emul(k, self.hi));
        Interval {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn recip(&self) -> Result<Interval, IntervalError> {
        if self.contains_zero() {
            return Err(IntervalError::DivisionByZero);
        }
        Ok(Interval {
            lo: 1.0 / self.hi,
            hi: 1.0 / self.lo,
        })
    }

    /// Endpoint quotients; rounding is monotone, so any `x / y` computed in
    /// floating point stays inside the result.
    pub fn checked_div(&self, rhs: &Interval) -> Result<Interval, IntervalError> {
        if rhs.contains_zero() {
            return Err(IntervalError::DivisionByZero);
        }
        let q = [
            self.lo / rhs.lo,
            self.lo / rhs.hi,
            self.hi / rhs.lo,
            self.hi / rhs.hi,
        ];
        let q = q.map(|v| if v.is_nan() { 0.0 } else { v });
        Ok(Interval {
            lo: q.iter().copied().fold(f64::INFINITY, f64::min),
            hi: q.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }

    /// Smallest absolute value over the interval (the mignitude).
    pub fn abs_lower(&self) -> f64 {
        if self.contains_zero() {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    /// Largest absolute value over the interval (the magnitude).
    pub fn abs_upper(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn abs(&self) -> Interval {
        Interval {
            lo: self.abs_lower(),
            hi: self.abs_upper(),
        }
    }

    /// `{x^2 : x in self}`, tighter than `self * self`.
    pub fn square(&self) -> Interval {
        let (lo, hi) = (self.abs_lower(), self.abs_upper());
        Interval {
            lo: lo * lo,
            hi: hi * hi,
        }
    }

    /// Square root of the non-negative part; `None` if entirely negative.
    pub fn sqrt(&self) -> Option<Interval> {
        if self.hi < 0.0 {
            return None;
        }
        Some(Interval {
            lo: self.lo.max(0.0).sqrt(),
            hi: self.hi.sqrt(),
        })
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: self.lo + rhs.lo,
            hi: self.hi + rhs.hi,
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval {
            lo: self.lo - rhs.hi,
            hi: self.hi - rhs.lo,
        }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let p = [
            emul(self.lo, rhs.lo),
            emul(self.lo, rhs.hi),
            emul(self.hi, rhs.lo),
            emul(self.hi, rhs.hi),
        ];
        Interval {
            lo: p.iter().copied().fold(f64::INFINITY, f64::min),
            hi: p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}, {:?}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Encloses `sum_k a_k * b_k`, term by term over endpoint products.
///
/// Panics if the slices differ in length.
pub fn sum_of_products(a: &[Interval], b: &[Interval]) -> Interval {
    assert_eq!(a.len(), b.len(), "sum_of_products needs equal lengths");
    a.iter()
        .zip(b)
        .fold(Interval::ZERO, |acc, (x, y)| acc + *x * *y)
}
