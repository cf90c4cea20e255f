//! Shared numerical substrate: dense Cholesky factorization, Gaussian
//! densities and distribution functions, quadrature rules, finite-difference
//! derivatives and seedable random streams.

pub mod diff;
pub mod linalg;
pub mod quadrature;
pub mod rng;
pub mod special;

pub use diff::{fd_gradient, fd_hessian, fd_step, EvalFailure};
pub use linalg::{mvn_logdensity, CholeskyFactor};
pub use quadrature::{gauss_hermite, gauss_legendre, QuadratureKind, QuadratureRule};
pub use special::{norm_cdf, norm_quantile, norm_sf};

/// Log of the sum of exponentials, shifted by the maximum.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Sample quantile by linear interpolation of order statistics ("type 7").
/// `sorted` must be sorted ascending and nonempty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// 2.5%, 50% and 97.5% percentiles of a set of draws.
pub fn percentile_band(values: &mut [f64]) -> (f64, f64, f64) {
    values.sort_by(f64::total_cmp);
    (
        quantile_sorted(values, 0.5),
        quantile_sorted(values, 0.025),
        quantile_sorted(values, 0.975),
    )
}
