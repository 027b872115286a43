//! Non-Gaussian extensions of latent Gaussian models.
//!
//! A latent vector `x` is defined through a sparse non-singular operator,
//! `D x = Λ`, where `Λ` is independent normal inverse Gaussian (NIG) or
//! generalized asymmetric Laplace (GAL) noise with mean zero and variance
//! `σ² h_i`. The crate provides
//!
//! * [`noise`]: densities, characteristic functions, moments, the
//!   variance- and tail-corrected parameterizations and exact samplers;
//! * [`operators`]: AR1, SAR and finite element (SPDE Matérn, OU, CRW)
//!   operators together with the projector matrix;
//! * [`field`]: sampling of `x`, precision matrices, marginal
//!   characteristic functions and moments, and tail probabilities of
//!   stationary marginals by characteristic-function inversion;
//! * [`priors`]: Kullback–Leibler divergences to the Gaussian base model and
//!   penalized complexity priors for the flexibility parameters;
//! * [`calibration`]: translation of tail-event probabilities into prior
//!   rates;
//! * [`inference`]: an MH-within-Gibbs sampler for `y = A x + ε` and the
//!   `V★` Gaussianity diagnostic.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod error;
pub mod field;
pub mod inference;
pub mod linalg;
pub mod noise;
pub mod operators;
pub mod priors;
pub mod quad;
pub mod special;
pub mod stats;

#[cfg(test)]
mod properties;

pub use error::{Error, Result};
pub use field::{FieldSample, MarginalModel, MarginalSpec};
pub use inference::{
    FitConfig, GaussianityReport, McmcConfig, ObservationModel, PosteriorChains, StructureKind,
};
pub use linalg::CsrMatrix;
pub use noise::{ClassicalGhParams, NoiseParams, Parameterization, TailSummary, Variant};
pub use operators::{Boundary, Mesh1D, Mesh2D, ModelKind, ModelOperator};
pub use priors::{ParamPrior, PcPrior, PriorConfig};
