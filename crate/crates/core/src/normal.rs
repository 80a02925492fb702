//! Standard normal CDF and quantile.

use libm::erfc;
use statrs::function::erf::erfc_inv;

/// `Phi(x)`.
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `1 - Phi(x)` without cancellation in the upper tail.
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `Phi^-1(p)` for `p` in `(0, 1)`; infinite at the endpoints.
///
/// The inverse error function alone is good to about 1e-10; one Halley step
/// against `erfc` brings the result to near machine precision.
pub fn quantile(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    let x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    if !x.is_finite() {
        return x;
    }
    let resid = if p < 0.5 {
        cdf(x) - p
    } else {
        (1.0 - p) - sf(x)
    };
    let u = resid * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}
