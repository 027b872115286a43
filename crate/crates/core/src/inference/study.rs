//! Replicated simulation studies on a one-dimensional Matérn model with
//! `κ = 0.2` on unit spacing, observed with Gaussian noise at every node.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit, gaussianity_report, McmcConfig, ObservationModel};
use crate::error::{invalid, Result};
use crate::field::sample_field;
use crate::linalg::CsrMatrix;
use crate::noise::{NoiseParams, Variant};
use crate::operators::{diff_operator_1d, Boundary, DiffKind, Mesh1D, ModelOperator};
use crate::priors::{ParamPrior, PriorConfig};

/// How the measurement-noise figure is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScale {
    #[default]
    Variance,
    Sd,
}

/// Data-generating scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub sigma: f64,
    pub eta_star: f64,
    pub mu_star: f64,
    /// Offset added to the latent path at two interior nodes.
    #[serde(default)]
    pub jump: f64,
}

impl Scenario {
    fn new(name: &str, sigma: f64, eta_star: f64, mu_star: f64, jump: f64) -> Self {
        Self {
            name: name.to_string(),
            sigma,
            eta_star,
            mu_star,
            jump,
        }
    }

    /// Gaussian, symmetric non-Gaussian and skewed non-Gaussian truths.
    pub fn set1() -> Vec<Self> {
        vec![
            Self::new("gaussian", 1.0, 0.0, 0.0, 0.0),
            Self::new("symmetric", 1.0, 2.0, 0.0, 0.0),
            Self::new("skewed", 1.0, 5.0, 1.0, 0.0),
        ]
    }

    /// Gaussian truth with no jumps and with two jumps of size 25 and 50.
    pub fn set2() -> Vec<Self> {
        vec![
            Self::new("no_jump", 1.0, 0.0, 0.0, 0.0),
            Self::new("jump25", 1.0, 0.0, 0.0, 25.0),
            Self::new("jump50", 1.0, 0.0, 0.0, 50.0),
        ]
    }
}

/// Prior configurations for `(η★, μ★)`, all with `σ ~ IG(1, 1)` and `σ_ε`
/// fixed at `sigma_eps`.
pub fn prior_sets(sigma_eps: f64) -> Vec<PriorConfig> {
    let sigma = ParamPrior::InvGamma { shape: 1.0, scale: 1.0 };
    let eps = ParamPrior::Fixed { value: sigma_eps };
    let with = |name: &str, eta: ParamPrior, mu: ParamPrior| PriorConfig {
        eta_star: eta,
        mu_star: mu,
        ..PriorConfig::pc(name, 1.0, 1.0, sigma, eps)
    };
    vec![
        PriorConfig::pc("PC1", 30.0, 13.0, sigma, eps),
        PriorConfig::pc("PC2", 2.3, 1.0, sigma, eps),
        with(
            "IG1/N1",
            ParamPrior::InvGamma { shape: 2.0, scale: 0.1 },
            ParamPrior::Normal { mean: 0.0, sd: 0.3 },
        ),
        with(
            "IG2/N2",
            ParamPrior::InvGamma { shape: 2.0, scale: 0.43 },
            ParamPrior::Normal { mean: 0.0, sd: 1.0 },
        ),
        with(
            "Uniform",
            ParamPrior::Uniform { lower: 0.0, upper: 50.0 },
            ParamPrior::Uniform { lower: -50.0, upper: 50.0 },
        ),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub set: u8,
    pub n: usize,
    pub replications: usize,
    pub kappa: f64,
    pub variant: Variant,
    pub noise: f64,
    pub noise_scale: NoiseScale,
    /// Subset of prior names; empty means all.
    pub priors: Vec<String>,
    /// Subset of scenario names; empty means all.
    pub scenarios: Vec<String>,
    pub mcmc: McmcConfig,
    pub seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            set: 1,
            n: 100,
            replications: 20,
            kappa: 0.2,
            variant: Variant::Nig,
            noise: 0.7,
            noise_scale: NoiseScale::Variance,
            priors: Vec::new(),
            scenarios: Vec::new(),
            mcmc: McmcConfig {
                chains: 2,
                ..McmcConfig::default()
            },
            seed: 2024,
        }
    }
}

impl StudyConfig {
    pub fn sigma_eps(&self) -> f64 {
        match self.noise_scale {
            NoiseScale::Variance => self.noise.sqrt(),
            NoiseScale::Sd => self.noise,
        }
    }

    pub fn scenario_list(&self) -> Result<Vec<Scenario>> {
        let all = match self.set {
            1 => Scenario::set1(),
            2 => Scenario::set2(),
            s => return Err(invalid(format!("unknown simulation set {s} (expected 1 or 2)"))),
        };
        select(all, &self.scenarios, |s| &s.name)
    }

    pub fn prior_list(&self) -> Result<Vec<PriorConfig>> {
        select(prior_sets(self.sigma_eps()), &self.priors, |p| &p.name)
    }

    pub fn operator(&self) -> Result<ModelOperator> {
        let mesh = Mesh1D::uniform(0.0, (self.n - 1) as f64, self.n, Boundary::Neumann)?;
        diff_operator_1d(DiffKind::Matern2, self.kappa, &mesh)
    }
}

fn select<T: Clone>(all: Vec<T>, names: &[String], name: impl Fn(&T) -> &String) -> Result<Vec<T>> {
    if names.is_empty() {
        return Ok(all);
    }
    names
        .iter()
        .map(|n| {
            all.iter()
                .find(|t| name(t).eq_ignore_ascii_case(n))
                .cloned()
                .ok_or_else(|| invalid(format!("unknown study entry '{n}'")))
        })
        .collect()
}

/// Interior nodes receiving the jumps.
pub fn jump_nodes(n: usize) -> [usize; 2] {
    [n / 3, (2 * n) / 3]
}

/// Simulated latent path and observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub y: Vec<f64>,
}

pub fn simulate_dataset<R: Rng + ?Sized>(
    op: &ModelOperator,
    variant: Variant,
    scenario: &Scenario,
    sigma_eps: f64,
    rng: &mut R,
) -> Result<Dataset> {
    let p = NoiseParams::tail_corrected(variant, scenario.sigma, scenario.eta_star, scenario.mu_star)?;
    let s = sample_field(op, &p, rng)?;
    let mut x = s.x;
    if scenario.jump != 0.0 {
        for i in jump_nodes(x.len()) {
            x[i] += scenario.jump;
        }
    }
    let y = x
        .iter()
        .map(|&xi| xi + sigma_eps * rng.sample::<f64, _>(rand_distr::StandardNormal))
        .collect();
    Ok(Dataset { x, v: s.v, y })
}

/// Posterior summaries of one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub set: u8,
    pub scenario: String,
    pub prior: String,
    pub replication: usize,
    pub eta_star_mean: f64,
    pub eta_star_width: f64,
    pub mu_star_mean: f64,
    pub mu_star_width: f64,
    pub sigma_mean: f64,
    pub max_rhat: f64,
    pub flagged_nodes: usize,
}

fn dataset_seed(seed: u64, set: u8, scenario: usize, rep: usize) -> u64 {
    seed ^ ((set as u64) << 56) ^ ((scenario as u64) << 40) ^ (rep as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Fits every prior to every replicated dataset. Datasets depend only on
/// `(seed, set, scenario, replication)`, so all priors see the same data.
pub fn run_study(config: &StudyConfig) -> Result<Vec<StudyRow>> {
    if config.replications == 0 || config.n < 3 {
        return Err(invalid("need at least one replication and three nodes"));
    }
    let op = config.operator()?;
    let scenarios = config.scenario_list()?;
    let priors = config.prior_list()?;
    let sigma_eps = config.sigma_eps();
    let (ns, nr, np) = (scenarios.len(), config.replications, priors.len());
    let jobs: Vec<(usize, usize, usize)> = (0..ns * nr * np).map(|k| (k / (nr * np), (k / np) % nr, k % np)).collect();
    let rows: Vec<Result<StudyRow>> = jobs
        .par_iter()
        .map(|&(s, r, p)| {
            let seed = dataset_seed(config.seed, config.set, s, r);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = simulate_dataset(&op, config.variant, &scenarios[s], sigma_eps, &mut rng)?;
            let model = ObservationModel::new(data.y, CsrMatrix::identity(config.n), op.clone(), config.variant)?;
            let mcmc = McmcConfig {
                seed: seed.wrapping_add(p as u64 + 1),
                ..config.mcmc.clone()
            };
            let chains = fit(&model, &priors[p], &mcmc)?;
            let eta = chains.param_summary("eta_star").expect("eta_star");
            let mu = chains.param_summary("mu_star").expect("mu_star");
            let sigma = chains.param_summary("sigma").expect("sigma");
            Ok(StudyRow {
                set: config.set,
                scenario: scenarios[s].name.clone(),
                prior: priors[p].name.clone(),
                replication: r,
                eta_star_mean: eta.mean,
                eta_star_width: eta.width90(),
                mu_star_mean: mu.mean,
                mu_star_width: mu.width90(),
                sigma_mean: sigma.mean,
                max_rhat: chains.max_rhat(),
                flagged_nodes: gaussianity_report(&chains)?.n_flagged(),
            })
        })
        .collect();
    rows.into_iter().collect()
}

/// Medians over replications for one (scenario, prior) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyAggregate {
    pub set: u8,
    pub scenario: String,
    pub prior: String,
    pub replications: usize,
    pub median_eta_star_mean: f64,
    pub median_eta_star_width: f64,
    pub median_mu_star_mean: f64,
    pub median_mu_star_width: f64,
    pub median_sigma_mean: f64,
    pub share_rhat_below_1_05: f64,
}

pub fn aggregate(rows: &[StudyRow]) -> Vec<StudyAggregate> {
    let mut keys: Vec<(u8, String, String)> = Vec::new();
    for r in rows {
        let k = (r.set, r.scenario.clone(), r.prior.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(set, scenario, prior)| {
            let cell: Vec<&StudyRow> = rows.iter().filter(|r| r.set == set && r.scenario == scenario && r.prior == prior).collect();
            let med = |f: fn(&StudyRow) -> f64| {
                let v: Vec<f64> = cell.iter().map(|r| f(r)).collect();
                crate::stats::quantile(&v, 0.5)
            };
            StudyAggregate {
                set,
                scenario,
                prior,
                replications: cell.len(),
                median_eta_star_mean: med(|r| r.eta_star_mean),
                median_eta_star_width: med(|r| r.eta_star_width),
                median_mu_star_mean: med(|r| r.mu_star_mean),
                median_mu_star_width: med(|r| r.mu_star_width),
                median_sigma_mean: med(|r| r.sigma_mean),
                share_rhat_below_1_05: cell.iter().filter(|r| r.max_rhat < 1.05).count() as f64 / cell.len() as f64,
            }
        })
        .collect()
}
