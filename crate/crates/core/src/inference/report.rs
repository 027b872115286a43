use std::io::Write;

use serde::{Deserialize, Serialize};

use super::chains::PosteriorChains;
use crate::error::{invalid, Result};
use crate::stats::quantile_sorted;

/// Posterior of `V★_i = V_i / h_i` at one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeReport {
    pub node: usize,
    pub mean: f64,
    pub q025: f64,
    pub q05: f64,
    pub q95: f64,
    pub q975: f64,
    /// The 95% interval excludes 1.
    pub flagged: bool,
}

/// Local departures from Gaussianity: nodes whose `V★` interval excludes 1
/// need more (`V★ > 1`) or less flexibility than the Gaussian model gives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianityReport {
    pub nodes: Vec<NodeReport>,
    pub draws: usize,
}

impl GaussianityReport {
    pub fn flagged(&self) -> Vec<usize> {
        self.nodes.iter().filter(|n| n.flagged).map(|n| n.node).collect()
    }

    pub fn n_flagged(&self) -> usize {
        self.nodes.iter().filter(|n| n.flagged).count()
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for n in &self.nodes {
            out.serialize(n).map_err(std::io::Error::other)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn gaussianity_report(chains: &PosteriorChains) -> Result<GaussianityReport> {
    let draws: Vec<&Vec<f64>> = chains.v_draws.iter().flatten().collect();
    if draws.is_empty() {
        return Err(invalid("no thinned mixing-variable draws were stored"));
    }
    let n = chains.h.len();
    let nodes = (0..n)
        .map(|i| {
            let mut s: Vec<f64> = draws.iter().map(|v| v[i] / chains.h[i]).collect();
            s.sort_by(f64::total_cmp);
            let q025 = quantile_sorted(&s, 0.025);
            let q975 = quantile_sorted(&s, 0.975);
            NodeReport {
                node: i,
                mean: s.iter().sum::<f64>() / s.len() as f64,
                q025,
                q05: quantile_sorted(&s, 0.05),
                q95: quantile_sorted(&s, 0.95),
                q975,
                flagged: q025 > 1.0 || q975 < 1.0,
            }
        })
        .collect();
    Ok(GaussianityReport {
        nodes,
        draws: draws.len(),
    })
}
