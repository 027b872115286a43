//! NIG and GAL noise under the variance-corrected and tail-corrected
//! parameterizations.
//!
//! A noise component with weight `h` is the normal variance-mean mixture
//! `Λ | V ~ N(σ̃ μ (V − h), σ̃² V)`, `σ̃ = σ / √(1 + η μ²)`, where `V` is
//! inverse Gaussian with mean `h` and shape `h²/η` (NIG) or gamma with shape
//! `h/η` and rate `1/η` (GAL). Then `E[Λ] = 0` and `Var[Λ] = σ² h` for every
//! `(η, μ)`. The inverse Gaussian shape follows the `h²/η` convention so that
//! `Var[V] = h η` for all `h`.

mod cf;
mod density;
mod sampling;

pub use cf::{log_cf, log_cf_complex};
pub use density::{density, log_density};
pub use sampling::{
    sample_gamma, sample_gig, sample_gig_one, sample_ig, sample_mixing, sample_mixing_weighted,
    sample_noise, sample_noise_with_mixing,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "NIG", alias = "nig")]
    Nig,
    #[serde(rename = "GAL", alias = "gal")]
    Gal,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Nig => "NIG",
            Variant::Gal => "GAL",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nig" => Ok(Variant::Nig),
            "gal" => Ok(Variant::Gal),
            _ => Err(invalid(format!("unknown noise variant '{s}' (expected NIG or GAL)"))),
        }
    }
}

/// Which pair `(η, μ)` or `(η★, μ★)` a [`NoiseParams`] stores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameterization {
    VarianceCorrected,
    TailCorrected,
}

/// Noise parameters. With `TailCorrected`, `eta` and `mu` hold `η★` and `μ★`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub variant: Variant,
    pub sigma: f64,
    pub eta: f64,
    pub mu: f64,
    pub parameterization: Parameterization,
}

/// Generalized hyperbolic parameters `(λ, α, β, δ, μ̃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalGhParams {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub mu_tilde: f64,
}

/// Exponential decay rates of the two tails of the log density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSummary {
    pub xi_left: f64,
    pub xi_right: f64,
    pub xi: f64,
    pub gamma: f64,
}

impl NoiseParams {
    fn checked(self) -> Result<Self> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(invalid(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(invalid(format!("eta must be non-negative, got {}", self.eta)));
        }
        if !self.mu.is_finite() {
            return Err(invalid(format!("mu must be finite, got {}", self.mu)));
        }
        Ok(self)
    }

    /// Variance-corrected parameters `(σ, η, μ)`.
    pub fn new(variant: Variant, sigma: f64, eta: f64, mu: f64) -> Result<Self> {
        Self {
            variant,
            sigma,
            eta,
            mu,
            parameterization: Parameterization::VarianceCorrected,
        }
        .checked()
    }

    /// Tail-corrected parameters `(σ, η★, μ★)`.
    pub fn tail_corrected(variant: Variant, sigma: f64, eta_star: f64, mu_star: f64) -> Result<Self> {
        Self {
            variant,
            sigma,
            eta: eta_star,
            mu: mu_star,
            parameterization: Parameterization::TailCorrected,
        }
        .checked()
    }

    /// Gaussian limit `η = 0`.
    pub fn gaussian(variant: Variant, sigma: f64) -> Result<Self> {
        Self::new(variant, sigma, 0.0, 0.0)
    }

    pub fn is_gaussian(&self) -> bool {
        self.eta == 0.0
    }

    pub fn to_variance_corrected(&self) -> Self {
        match self.parameterization {
            Parameterization::VarianceCorrected => *self,
            Parameterization::TailCorrected => {
                let (eta, mu) = tail_correct(self.variant, self.eta, self.mu);
                Self {
                    eta,
                    mu,
                    parameterization: Parameterization::VarianceCorrected,
                    ..*self
                }
            }
        }
    }

    pub fn to_tail_corrected(&self) -> Self {
        match self.parameterization {
            Parameterization::TailCorrected => *self,
            Parameterization::VarianceCorrected => {
                let (eta_star, mu_star) = tail_uncorrect(self.variant, self.eta, self.mu);
                Self {
                    eta: eta_star,
                    mu: mu_star,
                    parameterization: Parameterization::TailCorrected,
                    ..*self
                }
            }
        }
    }

    /// `(σ̃, η, μ)` in the variance-corrected form.
    pub(crate) fn mixture_form(&self) -> (f64, f64, f64) {
        let vc = self.to_variance_corrected();
        let st = vc.sigma / (1.0 + vc.eta * vc.mu * vc.mu).sqrt();
        (st, vc.eta, vc.mu)
    }

    /// `σ̃ = σ / √(1 + η μ²)` for the variance-corrected `(η, μ)`.
    pub fn sigma_tilde(&self) -> f64 {
        self.mixture_form().0
    }
}

/// Maps `(η★, μ★)` to the variance-corrected `(η, μ)` so that the slower
/// tail decays at a rate that depends only on `η★`.
pub fn tail_correct(variant: Variant, eta_star: f64, mu_star: f64) -> (f64, f64) {
    if mu_star == 0.0 {
        return (eta_star, 0.0);
    }
    let eta = eta_star * tail_factor(variant, mu_star);
    let mu = if eta > 0.0 { mu_star / eta.sqrt() } else { 0.0 };
    (eta, mu)
}

/// `η / η★`: `(1 + μ★² − |μ★|√(1 + μ★²))²` for NIG and
/// `½(1 + μ★²)(√(2 + μ★²) − |μ★|)²` for GAL, written without cancellation.
fn tail_factor(variant: Variant, mu_star: f64) -> f64 {
    let m = mu_star.abs();
    let m2 = m * m;
    match variant {
        Variant::Nig => {
            let r = (1.0 + m2).sqrt();
            (r / (r + m)).powi(2)
        }
        Variant::Gal => {
            let d = 2.0 / ((2.0 + m2).sqrt() + m);
            0.5 * (1.0 + m2) * d * d
        }
    }
}

/// Inverse of [`tail_correct`].
pub fn tail_uncorrect(variant: Variant, eta: f64, mu: f64) -> (f64, f64) {
    if mu == 0.0 {
        return (eta, 0.0);
    }
    let mu_star = mu * eta.sqrt();
    (eta / tail_factor(variant, mu_star), mu_star)
}

/// Recovers `(η★, μ★)` from the tail rates `(ξ, γ)` at scale `σ`.
pub fn tail_params_from_summary(variant: Variant, sigma: f64, xi: f64, gamma: f64) -> (f64, f64) {
    let s = (0.5 * gamma.ln()).sinh();
    match variant {
        Variant::Nig => (1.0 / (sigma * xi).powi(2), s),
        Variant::Gal => (2.0 / (sigma * xi).powi(2), std::f64::consts::SQRT_2 * s),
    }
}

/// Classical generalized hyperbolic parameters of a component with weight `h`.
pub fn to_classical(p: &NoiseParams, h: f64) -> Result<ClassicalGhParams> {
    if !(h > 0.0) {
        return Err(invalid(format!("weight h must be positive, got {h}")));
    }
    let (st, eta, mu) = p.mixture_form();
    if eta == 0.0 {
        return Err(invalid("no classical representation at the Gaussian limit eta = 0"));
    }
    let beta = mu / st;
    let mu_tilde = -st * mu * h;
    Ok(match p.variant {
        Variant::Nig => ClassicalGhParams {
            lambda: -0.5,
            alpha: (1.0 / eta + mu * mu).sqrt() / st,
            beta,
            delta: st * h / eta.sqrt(),
            mu_tilde,
        },
        Variant::Gal => ClassicalGhParams {
            lambda: h / eta,
            alpha: (2.0 / eta + mu * mu).sqrt() / st,
            beta,
            delta: 0.0,
            mu_tilde,
        },
    })
}

/// Tail decay rates. Both variants decay like `exp(−(α ∓ β)|x|)`, so
/// `ξ_R = α − β` and `ξ_L = α + β`; these do not depend on `h`.
pub fn tail_summary(p: &NoiseParams) -> Result<TailSummary> {
    let c = to_classical(p, 1.0)?;
    let xi_right = c.alpha - c.beta;
    let xi_left = c.alpha + c.beta;
    Ok(TailSummary {
        xi_left,
        xi_right,
        xi: xi_left.min(xi_right),
        gamma: xi_left / xi_right,
    })
}

/// Cumulants `κ₁..κ₄` of a component with weight `h`.
pub fn cumulants(p: &NoiseParams, h: f64) -> [f64; 4] {
    let (st, eta, mu) = p.mixture_form();
    // cumulants of V
    let (k2v, k3v, k4v) = match p.variant {
        Variant::Nig => (h * eta, 3.0 * h * eta * eta, 15.0 * h * eta.powi(3)),
        Variant::Gal => (h * eta, 2.0 * h * eta * eta, 6.0 * h * eta.powi(3)),
    };
    let m2 = mu * mu;
    let k2 = st * st * (h + m2 * k2v);
    let k3 = st.powi(3) * (3.0 * k2v * mu + k3v * mu * m2);
    let k4 = st.powi(4) * (3.0 * k2v + 6.0 * k3v * m2 + k4v * m2 * m2);
    [0.0, k2, k3, k4]
}

/// Mean, variance, skewness and excess kurtosis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl Moments {
    pub fn from_cumulants(k: [f64; 4]) -> Self {
        Self {
            mean: k[0],
            variance: k[1],
            skewness: k[2] / k[1].powf(1.5),
            excess_kurtosis: k[3] / (k[1] * k[1]),
        }
    }
}

pub fn moments(p: &NoiseParams, h: f64) -> Moments {
    Moments::from_cumulants(cumulants(p, h))
}
