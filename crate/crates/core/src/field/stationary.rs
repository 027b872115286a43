use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::inversion::{two_sided_tail, InversionOptions};
use crate::error::{invalid, Error, Result};
use crate::noise::{self, Moments, NoiseParams, Variant};
use crate::quad::{integrate_with_breaks, QuadOptions};
use crate::special::{bessel_k, dilog, ln_gamma};

/// Stationary moving-average models `X = ∫ G(s) dΛ(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MarginalModel {
    /// `G(t) = e^{−κt}`, `t ≥ 0`.
    #[serde(rename = "OU_d1")]
    OuD1,
    /// `G(r) = e^{−κ|r|}/(2κ)`.
    #[serde(rename = "Matern2_d1")]
    Matern2D1,
    /// `G(r) = K₀(κ‖r‖)/(2π)`.
    #[serde(rename = "Matern2_d2")]
    Matern2D2,
}

impl std::str::FromStr for MarginalModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "ou" | "ou_d1" => Ok(MarginalModel::OuD1),
            "matern2_d1" | "matern_d1" | "matern1d" => Ok(MarginalModel::Matern2D1),
            "matern2_d2" | "matern_d2" | "matern2d" => Ok(MarginalModel::Matern2D2),
            _ => Err(invalid(format!("unknown marginal model '{s}' (expected OU_d1, Matern2_d1 or Matern2_d2)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalSpec {
    pub model: MarginalModel,
    pub kappa: f64,
    pub noise: NoiseParams,
}

/// `σ κ^{−(α−d/2)} √(Γ(α−d/2) / (Γ(α) (4π)^{d/2}))`.
pub fn sigma_marg(kappa: f64, alpha: f64, d: u32, sigma: f64) -> Result<f64> {
    let nu = alpha - d as f64 / 2.0;
    if !(nu > 0.0) {
        return Err(invalid(format!("sigma_marg needs alpha > d/2, got alpha={alpha}, d={d}")));
    }
    if !(kappa > 0.0) {
        return Err(invalid(format!("kappa must be positive, got {kappa}")));
    }
    let ln_ratio = ln_gamma(nu) - ln_gamma(alpha) - 0.5 * d as f64 * (4.0 * std::f64::consts::PI).ln();
    Ok(sigma * kappa.powf(-nu) * (0.5 * ln_ratio).exp())
}

fn quad_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-9,
        max_intervals: 4000,
    }
}

/// `∫₀^∞ s K₀(s)^k ds`.
fn k0_power_integral(k: i32) -> Result<f64> {
    let f = |s: f64| s * bessel_k(0.0, s).powi(k);
    let breaks = [1e-8, 1e-4, 1e-2, 0.1, 0.5, 1.0, 2.0, 5.0];
    Ok(integrate_with_breaks(f, 0.0, 60.0 / k as f64, &breaks, QuadOptions::tol(1e-15, 1e-12))?.value)
}

impl MarginalSpec {
    pub fn new(model: MarginalModel, kappa: f64, noise: NoiseParams) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(invalid(format!("kappa must be positive, got {kappa}")));
        }
        Ok(Self { model, kappa, noise })
    }

    /// `∫ G(s)^k ds` over the index space.
    pub fn green_power_integral(&self, k: i32) -> Result<f64> {
        let kap = self.kappa;
        let kf = k as f64;
        Ok(match self.model {
            MarginalModel::OuD1 => 1.0 / (kf * kap),
            MarginalModel::Matern2D1 => 2.0 / ((2.0 * kap).powi(k) * kf * kap),
            MarginalModel::Matern2D2 => {
                (2.0 * std::f64::consts::PI).powi(1 - k) / (kap * kap) * k0_power_integral(k)?
            }
        })
    }

    pub fn variance(&self) -> f64 {
        let s2 = self.noise.sigma * self.noise.sigma;
        let k = self.kappa;
        match self.model {
            MarginalModel::OuD1 => s2 / (2.0 * k),
            MarginalModel::Matern2D1 => s2 / (4.0 * k.powi(3)),
            MarginalModel::Matern2D2 => s2 / (4.0 * std::f64::consts::PI * k * k),
        }
    }

    pub fn sd(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn cumulants(&self) -> Result<[f64; 4]> {
        let unit = noise::cumulants(&self.noise, 1.0);
        let mut out = [0.0; 4];
        for k in 2..=4 {
            out[k - 1] = unit[k - 1] * self.green_power_integral(k as i32)?;
        }
        Ok(out)
    }

    pub fn moments(&self) -> Result<Moments> {
        Ok(Moments::from_cumulants(self.cumulants()?))
    }

    /// `∫ log φ_Λ(G(s) u) ds`, where `log φ_Λ` is the noise log-CF per unit
    /// weight.
    pub fn log_cf(&self, u: f64) -> Result<Complex64> {
        if u == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let p = self.noise;
        let k = self.kappa;
        let kern = |t: f64| noise::log_cf(&p, 1.0, t);
        let geometric: Vec<f64> = (1..=10).map(|j| 10f64.powi(-j)).collect();
        let value = match self.model {
            // s = e^{−κt}: ∫₀¹ K(u w) / (κ w) dw
            MarginalModel::OuD1 => {
                integrate_with_breaks(|w: f64| kern(u * w) / (k * w), 0.0, 1.0, &geometric, quad_opts())
                    .map_err(|e| context(e, self, u))?
                    .value
            }
            MarginalModel::Matern2D1 => {
                integrate_with_breaks(
                    |w: f64| kern(u * w / (2.0 * k)) * (2.0 / (k * w)),
                    0.0,
                    1.0,
                    &geometric,
                    quad_opts(),
                )
                .map_err(|e| context(e, self, u))?
                .value
            }
            // s = κ r: (2π/κ²) ∫₀^∞ s K(u K₀(s)/(2π)) ds
            MarginalModel::Matern2D2 => {
                let two_pi = 2.0 * std::f64::consts::PI;
                let scale = u.abs() * p.sigma / two_pi;
                let mut upper = 2.0;
                while bessel_k(0.0, upper) * scale > 1e-10 {
                    upper += 1.0;
                }
                let mut breaks = geometric.clone();
                breaks.extend([0.2, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0]);
                integrate_with_breaks(
                    |s: f64| kern(u * bessel_k(0.0, s) / two_pi) * (two_pi * s / (k * k)),
                    0.0,
                    upper,
                    &breaks,
                    quad_opts(),
                )
                .map_err(|e| context(e, self, u))?
                .value
            }
        };
        Ok(value)
    }

    /// `P(|X| > c)` by Gil-Pelaez inversion of [`MarginalSpec::log_cf`].
    pub fn tail_prob(&self, threshold: f64, opts: &InversionOptions) -> Result<f64> {
        let gaussian = self.noise.to_variance_corrected().eta < opts.gaussian_eta;
        let closed = closed_form_log_cf(self, 1.0).is_some();
        two_sided_tail(
            |u| match closed {
                true => Ok(closed_form_log_cf(self, u).expect("closed form")),
                false => self.log_cf(u),
            },
            threshold,
            self.sd(),
            gaussian,
            opts,
        )
    }
}

fn context(e: Error, spec: &MarginalSpec, u: f64) -> Error {
    match e {
        Error::Quadrature {
            estimate,
            error,
            tolerance,
            evaluations,
            context,
        } => Error::Quadrature {
            estimate,
            error,
            tolerance,
            evaluations,
            context: format!("{context}; {:?} stationary log-CF at u = {u}, kappa = {}", spec.model, spec.kappa),
        },
        other => other,
    }
}

/// Closed-form stationary log-CF for symmetric noise in `d = 1`.
pub fn closed_form_log_cf(spec: &MarginalSpec, u: f64) -> Option<Complex64> {
    let p = spec.noise.to_variance_corrected();
    if p.mu != 0.0 || p.eta == 0.0 || spec.model == MarginalModel::Matern2D2 {
        return None;
    }
    let (eta, s2, k) = (p.eta, p.sigma * p.sigma, spec.kappa);
    let c = eta * s2 * u * u;
    let v = match (p.variant, spec.model) {
        (Variant::Gal, MarginalModel::OuD1) => dilog(-c / 2.0) / (2.0 * k * eta),
        (Variant::Gal, MarginalModel::Matern2D1) => dilog(-c / (8.0 * k * k)) / (k * eta),
        (Variant::Nig, MarginalModel::OuD1) => nig_ma(c) / (k * eta),
        (Variant::Nig, MarginalModel::Matern2D1) => 2.0 * nig_ma(c / (4.0 * k * k)) / (k * eta),
        _ => return None,
    };
    Some(Complex64::new(v, 0.0))
}

/// `1 − √(1+c) + ln((1 + √(1+c))/2)`, accurate for small `c`.
fn nig_ma(c: f64) -> f64 {
    let q = (1.0 + c).sqrt();
    let qm1 = c / (1.0 + q);
    -qm1 + (0.5 * qm1).ln_1p()
}
