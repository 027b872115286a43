use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::McmcConfig;
use super::sampler::ChainOutput;
use crate::error::Result;
use crate::priors::PriorConfig;
use crate::stats::{effective_sample_size, mean, quantile_sorted, split_rhat, variance};

/// Posterior summary of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub fixed: bool,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q05: f64,
    pub median: f64,
    pub q95: f64,
    pub q975: f64,
    pub rhat: f64,
    pub ess: f64,
}

impl ParamSummary {
    /// Width of the central 90% interval.
    pub fn width90(&self) -> f64 {
        self.q95 - self.q05
    }
}

/// Draws of all chains, indexed `[chain][parameter][iteration]`; mixing
/// vectors are thinned and indexed `[chain][draw][node]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PosteriorChains {
    pub names: Vec<String>,
    pub fixed: Vec<bool>,
    pub draws: Vec<Vec<Vec<f64>>>,
    pub v_draws: Vec<Vec<Vec<f64>>>,
    pub h: Vec<f64>,
    /// Posterior mean of the latent field, pooled over chains.
    pub x_mean: Vec<f64>,
    /// Post-warmup acceptance rates of the free parameters, per chain.
    pub acceptance: Vec<Vec<f64>>,
    pub proposal_scales: Vec<Vec<f64>>,
    pub config: McmcConfig,
    pub prior: PriorConfig,
}

impl PosteriorChains {
    pub(crate) fn from_outputs(
        names: Vec<String>,
        fixed: Vec<bool>,
        outputs: Vec<ChainOutput>,
        h: Vec<f64>,
        config: McmcConfig,
        prior: PriorConfig,
    ) -> Self {
        let total = (outputs.len() * config.samples) as f64;
        let mut x_mean = vec![0.0; outputs.first().map_or(0, |o| o.x_sum.len())];
        for o in &outputs {
            for (m, s) in x_mean.iter_mut().zip(&o.x_sum) {
                *m += s / total;
            }
        }
        let mut draws = Vec::new();
        let mut v_draws = Vec::new();
        let mut acceptance = Vec::new();
        let mut proposal_scales = Vec::new();
        for o in outputs {
            draws.push(o.draws);
            v_draws.push(o.v);
            acceptance.push(o.acceptance);
            proposal_scales.push(o.scales);
        }
        Self {
            names,
            fixed,
            draws,
            v_draws,
            h,
            x_mean,
            acceptance,
            proposal_scales,
            config,
            prior,
        }
    }

    pub fn n_chains(&self) -> usize {
        self.draws.len()
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Per-chain draws of a parameter.
    pub fn chains_of(&self, name: &str) -> Option<Vec<Vec<f64>>> {
        let j = self.index(name)?;
        Some(self.draws.iter().map(|c| c[j].clone()).collect())
    }

    /// Draws of a parameter pooled over chains.
    pub fn pooled(&self, name: &str) -> Option<Vec<f64>> {
        Some(self.chains_of(name)?.concat())
    }

    pub fn summary(&self) -> Vec<ParamSummary> {
        self.names
            .iter()
            .zip(&self.fixed)
            .map(|(name, &fixed)| {
                let chains = self.chains_of(name).expect("known name");
                let mut all = chains.concat();
                all.sort_by(f64::total_cmp);
                let (rhat, ess) = if fixed {
                    (f64::NAN, f64::NAN)
                } else {
                    (split_rhat(&chains), effective_sample_size(&chains))
                };
                ParamSummary {
                    name: name.clone(),
                    fixed,
                    mean: mean(&all),
                    sd: variance(&all).sqrt(),
                    q025: quantile_sorted(&all, 0.025),
                    q05: quantile_sorted(&all, 0.05),
                    median: quantile_sorted(&all, 0.5),
                    q95: quantile_sorted(&all, 0.95),
                    q975: quantile_sorted(&all, 0.975),
                    rhat,
                    ess,
                }
            })
            .collect()
    }

    pub fn param_summary(&self, name: &str) -> Option<ParamSummary> {
        self.summary().into_iter().find(|s| s.name == name)
    }

    /// Largest split-R̂ over the sampled parameters.
    pub fn max_rhat(&self) -> f64 {
        self.summary()
            .iter()
            .filter(|s| !s.fixed)
            .map(|s| s.rhat)
            .fold(f64::NEG_INFINITY, |a, b| if b.is_nan() { f64::INFINITY } else { a.max(b) })
    }

    /// All sampled parameters have split-R̂ below `threshold`.
    pub fn converged(&self, threshold: f64) -> bool {
        self.max_rhat() < threshold
    }

    /// One row per chain and iteration.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["chain".to_string(), "iteration".to_string()];
        header.extend(self.names.iter().cloned());
        out.write_record(&header).map_err(std::io::Error::other)?;
        for (c, chain) in self.draws.iter().enumerate() {
            let n = chain.first().map_or(0, Vec::len);
            for it in 0..n {
                let mut row = vec![c.to_string(), it.to_string()];
                row.extend(chain.iter().map(|d| d[it].to_string()));
                out.write_record(&row).map_err(std::io::Error::other)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Summary document: per-parameter statistics, acceptance rates and the
    /// resolved configuration.
    pub fn summary_json(&self) -> Result<serde_json::Value> {
        Ok(serde_json::json!({
            "schema": super::config::FIT_SCHEMA,
            "parameters": self.summary(),
            "max_rhat": self.max_rhat(),
            "acceptance": self.acceptance,
            "proposal_scales": self.proposal_scales,
            "mcmc": self.config,
            "prior": self.prior,
        }))
    }
}
