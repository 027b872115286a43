//! Bayesian fitting of `y = A x + ε` with a non-Gaussian latent field.
//!
//! The sampler alternates exact Gibbs draws of `x | V` (Gaussian) and
//! `V | x` (independent GIG) with adaptive random-walk Metropolis updates of
//! the hyperparameters `(σ, κ or ρ, η★, μ★, σ_ε)`.

mod chains;
mod conditionals;
mod config;
mod mh;
mod report;
mod sampler;
pub mod study;

pub use chains::{ParamSummary, PosteriorChains};
pub use conditionals::{
    conditional_mean_x, gibbs_v, gibbs_x, ln_mixing_density, ln_mixing_density_sum, ln_x_given_v, ln_y_given_v,
    ln_y_given_x, mixture_params, v_conditional, Factorizer,
};
pub use config::{FitConfig, HyperTarget, LatentModel, McmcConfig, ModelConfig, FIT_SCHEMA};
pub use mh::AdaptiveRwm;
pub use report::{gaussianity_report, GaussianityReport, NodeReport};
pub use sampler::{chain_rng, fit, Chain, ChainState};

use crate::error::{invalid, Result};
use crate::linalg::CsrMatrix;
use crate::noise::Variant;
use crate::operators::{ModelKind, ModelOperator};

/// How the structural parameter of the operator is moved by the sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureKind {
    /// No free structural parameter.
    None,
    /// `κ > 0`, updated on the log scale.
    Scale,
    /// `ρ ∈ (−1, 1)`, updated on the atanh scale.
    Correlation,
}

impl StructureKind {
    pub fn of(op: &ModelOperator) -> Self {
        if !op.has_parameter() {
            return StructureKind::None;
        }
        match op.kind() {
            ModelKind::Ar1 { .. } | ModelKind::Sar { .. } => StructureKind::Correlation,
            _ => StructureKind::Scale,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StructureKind::None => "structure",
            StructureKind::Scale => "kappa",
            StructureKind::Correlation => "rho",
        }
    }
}

/// Observations `y = A x + ε` of the latent field built by `op`.
#[derive(Debug, Clone)]
pub struct ObservationModel {
    pub y: Vec<f64>,
    pub a: CsrMatrix,
    /// Operator at its initial structural parameter; rebuilt through
    /// [`ModelOperator::with_parameter`] when that parameter is sampled.
    pub op: ModelOperator,
    pub variant: Variant,
    ata: CsrMatrix,
    aty: Vec<f64>,
}

impl ObservationModel {
    pub fn new(y: Vec<f64>, a: CsrMatrix, op: ModelOperator, variant: Variant) -> Result<Self> {
        if y.is_empty() {
            return Err(invalid("at least one observation is required"));
        }
        if a.nrows() != y.len() || a.ncols() != op.dim() {
            return Err(invalid(format!(
                "projector is {}x{}, expected {}x{}",
                a.nrows(),
                a.ncols(),
                y.len(),
                op.dim()
            )));
        }
        if let Some(bad) = y.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("observation {bad} is not finite")));
        }
        let ata = a.transpose().matmul(&a);
        let aty = a.matvec_transpose(&y);
        Ok(Self {
            y,
            a,
            op,
            variant,
            ata,
            aty,
        })
    }

    /// No observations: the posterior equals the prior. Used for
    /// prior-recovery checks of the sampler.
    pub fn prior_only(op: ModelOperator, variant: Variant) -> Self {
        let n = op.dim();
        Self {
            y: Vec::new(),
            a: CsrMatrix::from_triplets(0, n, &[], &[], &[]),
            op,
            variant,
            ata: CsrMatrix::from_triplets(n, n, &[], &[], &[]),
            aty: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn structure(&self) -> StructureKind {
        StructureKind::of(&self.op)
    }

    pub(crate) fn ata(&self) -> &CsrMatrix {
        &self.ata
    }

    pub(crate) fn aty(&self) -> &[f64] {
        &self.aty
    }
}
