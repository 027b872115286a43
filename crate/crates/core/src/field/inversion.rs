use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{integrate_with_breaks, QuadOptions};
use crate::special::gauss_two_sided_tail;

/// Settings for Gil-Pelaez inversion.
#[derive(Debug, Clone, Copy)]
pub struct InversionOptions {
    /// Truncate the integral where `|φ(u)|` falls below this value.
    pub cf_floor: f64,
    /// Absolute tolerance on the probability.
    pub abs_tol: f64,
    /// Below this `η` the exact Gaussian tail is returned.
    pub gaussian_eta: f64,
    /// Largest truncation point, in units of `1/sd`.
    pub max_u_sd: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            cf_floor: 1e-12,
            abs_tol: 1e-11,
            gaussian_eta: 1e-5,
            max_u_sd: 1e7,
        }
    }
}

/// `P(|X| > c) = 1 − (2/π) ∫₀^∞ Re φ(u) sin(u c)/u du` for the variable with
/// log characteristic function `log_cf` and standard deviation `sd`.
///
/// With `gaussian = true` the normal tail with the same variance is returned.
pub fn two_sided_tail(
    log_cf: impl Fn(f64) -> Result<Complex64>,
    c: f64,
    sd: f64,
    gaussian: bool,
    opts: &InversionOptions,
) -> Result<f64> {
    if !(c > 0.0) {
        return Err(crate::error::invalid(format!("threshold must be positive, got {c}")));
    }
    if gaussian {
        return Ok(gauss_two_sided_tail(c / sd));
    }
    let ln_floor = opts.cf_floor.ln();
    let mut upper = 1.0 / sd;
    loop {
        let lp = log_cf(upper)?;
        if lp.re < ln_floor {
            break;
        }
        upper *= 1.5;
        if upper > opts.max_u_sd / sd {
            return Err(Error::Quadrature {
                estimate: lp.re.exp(),
                error: f64::NAN,
                tolerance: opts.cf_floor,
                evaluations: 0,
                context: format!("characteristic function still above floor at u = {upper:.3e}"),
            });
        }
    }
    let half = std::f64::consts::PI / c;
    let n_half = (upper / half).ceil() as usize;
    let breaks: Vec<f64> = (1..n_half).map(|k| k as f64 * half).collect();
    let mut failure = None;
    let integrand = |u: f64| {
        if u == 0.0 {
            return c;
        }
        match log_cf(u) {
            Ok(l) => l.exp().re * (u * c).sin() / u,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let quad = integrate_with_breaks(
        integrand,
        0.0,
        upper,
        &breaks,
        QuadOptions {
            abs_tol: opts.abs_tol,
            rel_tol: 1e-12,
            max_intervals: breaks.len() + 4000,
        },
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let quad = quad?;
    let p = 1.0 - 2.0 / std::f64::consts::PI * quad.value;
    Ok(p.clamp(0.0, 1.0))
}
