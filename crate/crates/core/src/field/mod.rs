//! The latent vector `x` with `D x = Λ`.
//!
//! Conditionally on the mixing variables, `x | V ~ N(σ̃ μ D⁻¹(V − h),
//! σ̃² D⁻¹ diag(V) D⁻ᵀ)`, which gives exact simulation by one sparse solve.
//! Marginals of node `i` are linear combinations `Σ_j (D⁻¹)_{ij} Λ_j`, so their
//! cumulants and log characteristic functions are sums over row `i` of `D⁻¹`.

mod inversion;
mod stationary;

pub use inversion::{two_sided_tail, InversionOptions};
pub use stationary::{closed_form_log_cf, sigma_marg, MarginalModel, MarginalSpec};

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SparseLu;
use crate::noise::{self, Moments, NoiseParams};
use crate::operators::ModelOperator;

/// A realization of `x` with the mixing variables used to draw it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub params: NoiseParams,
}

impl FieldSample {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// CSV with header `node,x,v`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "node,x,v")?;
        for (i, (x, v)) in self.x.iter().zip(&self.v).enumerate() {
            writeln!(w, "{i},{x},{v}")?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Reusable sampler holding the factorization of `D`.
#[derive(Debug, Clone)]
pub struct FieldSampler {
    lu: SparseLu,
    h: Vec<f64>,
    params: NoiseParams,
}

impl FieldSampler {
    pub fn new(op: &ModelOperator, params: &NoiseParams) -> Result<Self> {
        Ok(Self {
            lu: op.lu()?,
            h: op.h().to_vec(),
            params: *params,
        })
    }

    /// Draws `(V, x)`. In the Gaussian limit `η = 0`, `V ≡ h`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<FieldSample> {
        let (st, eta, mu) = self.params.mixture_form();
        let v = if eta == 0.0 {
            self.h.clone()
        } else {
            noise::sample_mixing_weighted(self.params.variant, eta, &self.h, rng)?
        };
        let rhs: Vec<f64> = v
            .iter()
            .zip(&self.h)
            .map(|(&vi, &hi)| {
                let z: f64 = rng.sample(StandardNormal);
                st * mu * (vi - hi) + st * vi.sqrt() * z
            })
            .collect();
        let x = self.lu.solve(&rhs);
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                chain: 0,
                iteration: 0,
                state: format!("non-finite field value at node {i}"),
            });
        }
        Ok(FieldSample {
            x,
            v,
            params: self.params,
        })
    }
}

pub fn sample_field<R: Rng + ?Sized>(op: &ModelOperator, params: &NoiseParams, rng: &mut R) -> Result<FieldSample> {
    FieldSampler::new(op, params)?.sample(rng)
}

/// `Q = σ⁻² Dᵀ diag(h)⁻¹ D`.
pub fn precision(op: &ModelOperator, sigma: f64) -> crate::linalg::CsrMatrix {
    op.precision(sigma)
}

/// Marginal law of one node: weights `c = (D⁻¹)_{i·}` and noise weights `h`.
#[derive(Debug, Clone)]
pub struct NodeMarginal {
    pub weights: Vec<f64>,
    pub h: Vec<f64>,
    pub params: NoiseParams,
}

impl NodeMarginal {
    pub fn new(i: usize, op: &ModelOperator, params: &NoiseParams) -> Result<Self> {
        Self::from_lu(i, &op.lu()?, op.h(), params)
    }

    pub fn from_lu(i: usize, lu: &SparseLu, h: &[f64], params: &NoiseParams) -> Result<Self> {
        if i >= h.len() {
            return Err(crate::error::invalid(format!("node {i} out of range for n = {}", h.len())));
        }
        Ok(Self {
            weights: lu.inverse_row(i),
            h: h.to_vec(),
            params: *params,
        })
    }

    pub fn log_cf(&self, t: f64) -> Complex64 {
        self.weights
            .iter()
            .zip(&self.h)
            .filter(|(c, _)| **c != 0.0)
            .map(|(&c, &h)| noise::log_cf(&self.params, h, c * t))
            .sum()
    }

    pub fn cumulants(&self) -> [f64; 4] {
        let mut k = [0.0; 4];
        for (&c, &h) in self.weights.iter().zip(&self.h) {
            let kj = noise::cumulants(&self.params, h);
            let mut ck = c;
            for item in k.iter_mut().zip(kj) {
                *item.0 += ck * item.1;
                ck *= c;
            }
        }
        k
    }

    pub fn moments(&self) -> Moments {
        Moments::from_cumulants(self.cumulants())
    }

    /// `P(|x_i| > threshold)` by characteristic-function inversion.
    pub fn tail_prob(&self, threshold: f64, opts: &InversionOptions) -> Result<f64> {
        let sd = self.cumulants()[1].sqrt();
        two_sided_tail(|u| Ok(self.log_cf(u)), threshold, sd, self.params.is_gaussian() || self.params.to_variance_corrected().eta < opts.gaussian_eta, opts)
    }
}

/// `log E[exp(i t x_i)]` for node `i`.
pub fn marginal_log_cf(i: usize, op: &ModelOperator, params: &NoiseParams, t: f64) -> Result<Complex64> {
    Ok(NodeMarginal::new(i, op, params)?.log_cf(t))
}

/// Mean, variance, skewness and excess kurtosis of node `i`.
pub fn marginal_moments(i: usize, op: &ModelOperator, params: &NoiseParams) -> Result<Moments> {
    Ok(NodeMarginal::new(i, op, params)?.moments())
}
