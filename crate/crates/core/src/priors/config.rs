//! Prior configurations (schema `ngflex-prior-1`).
//!
//! ```toml
//! schema = "ngflex-prior-1"
//! name = "PC1"
//! eta_star = { kind = "exponential", rate = 30.0 }
//! mu_star = { kind = "laplace", rate = 13.0 }
//! sigma = { kind = "inv_gamma", shape = 1.0, scale = 1.0 }
//! sigma_eps = { kind = "fixed", value = 0.8366 }
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::special::ln_gamma;

pub const PRIOR_SCHEMA: &str = "ngflex-prior-1";

/// Univariate prior for one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamPrior {
    Fixed { value: f64 },
    Exponential { rate: f64 },
    Laplace { rate: f64 },
    InvGamma { shape: f64, scale: f64 },
    Normal { mean: f64, sd: f64 },
    Uniform { lower: f64, upper: f64 },
    LogNormal { meanlog: f64, sdlog: f64 },
    Gamma { shape: f64, rate: f64 },
}

impl ParamPrior {
    pub fn is_fixed(&self) -> bool {
        matches!(self, ParamPrior::Fixed { .. })
    }

    pub fn fixed_value(&self) -> Option<f64> {
        match self {
            ParamPrior::Fixed { value } => Some(*value),
            _ => None,
        }
    }

    /// Log density; `−∞` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        use std::f64::consts::PI;
        match *self {
            ParamPrior::Fixed { value } => {
                if x == value {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            ParamPrior::Exponential { rate } => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    rate.ln() - rate * x
                }
            }
            ParamPrior::Laplace { rate } => (0.5 * rate).ln() - rate * x.abs(),
            ParamPrior::InvGamma { shape, scale } => {
                if x <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
                }
            }
            ParamPrior::Normal { mean, sd } => -0.5 * (2.0 * PI).ln() - sd.ln() - 0.5 * ((x - mean) / sd).powi(2),
            ParamPrior::Uniform { lower, upper } => {
                if x < lower || x > upper {
                    f64::NEG_INFINITY
                } else {
                    -(upper - lower).ln()
                }
            }
            ParamPrior::LogNormal { meanlog, sdlog } => {
                if x <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    let z = (x.ln() - meanlog) / sdlog;
                    -0.5 * (2.0 * PI).ln() - sdlog.ln() - x.ln() - 0.5 * z * z
                }
            }
            ParamPrior::Gamma { shape, rate } => {
                if x <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        use statrs::distribution::{ContinuousCDF, Gamma, InverseGamma, LogNormal, Normal};
        match *self {
            ParamPrior::Fixed { value } => (x >= value) as u8 as f64,
            ParamPrior::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            ParamPrior::Laplace { rate } => {
                if x < 0.0 {
                    0.5 * (rate * x).exp()
                } else {
                    1.0 - 0.5 * (-rate * x).exp()
                }
            }
            ParamPrior::InvGamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    InverseGamma::new(shape, scale).map_or(f64::NAN, |d| d.cdf(x))
                }
            }
            ParamPrior::Normal { mean, sd } => Normal::new(mean, sd).map_or(f64::NAN, |d| d.cdf(x)),
            ParamPrior::Uniform { lower, upper } => ((x - lower) / (upper - lower)).clamp(0.0, 1.0),
            ParamPrior::LogNormal { meanlog, sdlog } => {
                if x <= 0.0 {
                    0.0
                } else {
                    LogNormal::new(meanlog, sdlog).map_or(f64::NAN, |d| d.cdf(x))
                }
            }
            ParamPrior::Gamma { shape, rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    Gamma::new(shape, rate).map_or(f64::NAN, |d| d.cdf(x))
                }
            }
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        use statrs::distribution::{ContinuousCDF, Gamma, InverseGamma, LogNormal, Normal};
        match *self {
            ParamPrior::Fixed { value } => value,
            ParamPrior::Exponential { rate } => -(-p).ln_1p() / rate,
            ParamPrior::Laplace { rate } => {
                if p < 0.5 {
                    (2.0 * p).ln() / rate
                } else {
                    -(2.0 * (1.0 - p)).ln() / rate
                }
            }
            ParamPrior::InvGamma { shape, scale } => InverseGamma::new(shape, scale).map_or(f64::NAN, |d| d.inverse_cdf(p)),
            ParamPrior::Normal { mean, sd } => Normal::new(mean, sd).map_or(f64::NAN, |d| d.inverse_cdf(p)),
            ParamPrior::Uniform { lower, upper } => lower + p * (upper - lower),
            ParamPrior::LogNormal { meanlog, sdlog } => LogNormal::new(meanlog, sdlog).map_or(f64::NAN, |d| d.inverse_cdf(p)),
            ParamPrior::Gamma { shape, rate } => Gamma::new(shape, rate).map_or(f64::NAN, |d| d.inverse_cdf(p)),
        }
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// Inverse-CDF draw.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random_range(1e-300..1.0);
        self.quantile(u)
    }

    fn validate(&self, name: &str) -> Result<()> {
        let ok = match *self {
            ParamPrior::Fixed { value } => value.is_finite(),
            ParamPrior::Exponential { rate } | ParamPrior::Laplace { rate } => rate > 0.0,
            ParamPrior::InvGamma { shape, scale } => shape > 0.0 && scale > 0.0,
            ParamPrior::Normal { mean, sd } => mean.is_finite() && sd > 0.0,
            ParamPrior::Uniform { lower, upper } => lower.is_finite() && upper.is_finite() && upper > lower,
            ParamPrior::LogNormal { meanlog, sdlog } => meanlog.is_finite() && sdlog > 0.0,
            ParamPrior::Gamma { shape, rate } => shape > 0.0 && rate > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid hyperparameters for prior on {name}: {self:?}")))
        }
    }
}

/// Model hyperparameters in the tail-corrected parameterization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub sigma: f64,
    /// `κ` or `ρ`, when the operator has a structural parameter.
    pub structure: Option<f64>,
    pub eta_star: f64,
    pub mu_star: f64,
    pub sigma_eps: f64,
}

/// One prior per parameter. `structure` applies to `κ` (`ρ` for AR1/SAR);
/// when absent the operator's own value is kept fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    #[serde(default = "schema_default")]
    pub schema: String,
    #[serde(default)]
    pub name: String,
    pub sigma: ParamPrior,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<ParamPrior>,
    pub eta_star: ParamPrior,
    pub mu_star: ParamPrior,
    pub sigma_eps: ParamPrior,
}

fn schema_default() -> String {
    PRIOR_SCHEMA.to_string()
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema != PRIOR_SCHEMA {
            return Err(Error::Schema {
                expected: PRIOR_SCHEMA.into(),
                found: self.schema.clone(),
            });
        }
        self.sigma.validate("sigma")?;
        if let Some(s) = &self.structure {
            s.validate("structure")?;
        }
        self.eta_star.validate("eta_star")?;
        self.mu_star.validate("mu_star")?;
        self.sigma_eps.validate("sigma_eps")?;
        if let ParamPrior::Fixed { value } = self.eta_star {
            if value < 0.0 {
                return Err(invalid("fixed eta_star must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    /// Reads TOML or JSON, chosen by the file extension.
    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "toml") {
            Self::from_toml(&text)
        } else {
            Self::from_json(&text)
        }
    }

    /// Sum of the component log densities.
    pub fn log_prior(&self, p: &ParameterSet) -> f64 {
        let mut lp = self.sigma.ln_pdf(p.sigma) + self.eta_star.ln_pdf(p.eta_star) + self.mu_star.ln_pdf(p.mu_star) + self.sigma_eps.ln_pdf(p.sigma_eps);
        if let (Some(s), Some(prior)) = (p.structure, &self.structure) {
            if !prior.is_fixed() {
                lp += prior.ln_pdf(s);
            }
        }
        lp
    }

    /// PC priors with an inverse-gamma prior on `σ` and fixed `σ_ε`.
    pub fn pc(name: &str, theta_eta: f64, theta_mu: f64, sigma: ParamPrior, sigma_eps: ParamPrior) -> Self {
        Self {
            schema: schema_default(),
            name: name.to_string(),
            sigma,
            structure: None,
            eta_star: ParamPrior::Exponential { rate: theta_eta },
            mu_star: ParamPrior::Laplace { rate: theta_mu },
            sigma_eps,
        }
    }

    /// Gaussian model: `η★ = 0` fixed (and hence `μ★` irrelevant).
    pub fn gaussian(name: &str, sigma: ParamPrior, sigma_eps: ParamPrior) -> Self {
        Self {
            schema: schema_default(),
            name: name.to_string(),
            sigma,
            structure: None,
            eta_star: ParamPrior::Fixed { value: 0.0 },
            mu_star: ParamPrior::Fixed { value: 0.0 },
            sigma_eps,
        }
    }
}

/// How a [`PcPrior`] was calibrated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub method: String,
    pub alpha_eta: Option<f64>,
    pub alpha_mu: Option<f64>,
    pub context: String,
}

/// Rates of the PC priors `η★ ~ Exp(θ_η)` and `μ★ ~ Laplace(θ_μ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcPrior {
    pub theta_eta: f64,
    pub theta_mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationRecord>,
}

impl PcPrior {
    pub fn new(theta_eta: f64, theta_mu: f64) -> Result<Self> {
        if !(theta_eta > 0.0 && theta_mu > 0.0) {
            return Err(invalid(format!("PC prior rates must be positive, got ({theta_eta}, {theta_mu})")));
        }
        Ok(Self {
            theta_eta,
            theta_mu,
            calibration: None,
        })
    }

    pub fn with_calibration(mut self, record: CalibrationRecord) -> Self {
        self.calibration = Some(record);
        self
    }

    pub fn eta_prior(&self) -> ParamPrior {
        ParamPrior::Exponential { rate: self.theta_eta }
    }

    pub fn mu_prior(&self) -> ParamPrior {
        ParamPrior::Laplace { rate: self.theta_mu }
    }

    pub fn to_config(&self, name: &str, sigma: ParamPrior, sigma_eps: ParamPrior) -> PriorConfig {
        PriorConfig::pc(name, self.theta_eta, self.theta_mu, sigma, sigma_eps)
    }
}
