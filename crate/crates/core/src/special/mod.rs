//! Special functions used by the densities and characteristic functions.

mod bessel;
mod dilog;

pub use bessel::{bessel_k, bessel_k_scaled, ln_bessel_k};
pub use dilog::dilog;

pub use statrs::function::gamma::{gamma, ln_gamma};

/// Apéry's constant ζ(3).
pub const ZETA3: f64 = 1.202_056_903_159_594_3;

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Two-sided Gaussian tail `P(|Z| > c)` for a standard normal `Z`.
pub fn gauss_two_sided_tail(c: f64) -> f64 {
    libm::erfc(c / std::f64::consts::SQRT_2)
}

/// Standard normal log density.
pub fn ln_norm_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - 0.5 * d * d / var
}
