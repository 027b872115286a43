use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chains::PosteriorChains;
use super::conditionals::{
    conditional_mean_x, gibbs_v, gibbs_x, ln_mixing_density_sum, ln_x_given_theta, ln_x_given_v, ln_y_given_v,
    ln_y_given_x, mixture_params, Factorizer,
};
use super::config::{HyperTarget, McmcConfig};
use super::mh::AdaptiveRwm;
use super::{ObservationModel, StructureKind};
use crate::error::{invalid, Error, Result};
use crate::linalg::SparseLu;
use crate::operators::ModelOperator;
use crate::priors::{ParamPrior, ParameterSet, PriorConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Coord {
    Sigma,
    Structure(StructureKind),
    EtaStar,
    MuStar,
    SigmaEps,
}

impl Coord {
    fn get(self, p: &ParameterSet) -> f64 {
        match self {
            Coord::Sigma => p.sigma,
            Coord::Structure(_) => p.structure.unwrap_or(f64::NAN),
            Coord::EtaStar => p.eta_star,
            Coord::MuStar => p.mu_star,
            Coord::SigmaEps => p.sigma_eps,
        }
    }

    fn set(self, p: &mut ParameterSet, value: f64) {
        match self {
            Coord::Sigma => p.sigma = value,
            Coord::Structure(_) => p.structure = Some(value),
            Coord::EtaStar => p.eta_star = value,
            Coord::MuStar => p.mu_star = value,
            Coord::SigmaEps => p.sigma_eps = value,
        }
    }

    /// Unconstrained coordinate.
    fn to_z(self, value: f64) -> f64 {
        match self {
            Coord::MuStar => value,
            Coord::Structure(StructureKind::Correlation) => value.atanh(),
            _ => value.ln(),
        }
    }

    /// Value and log Jacobian `log |dθ/dz|`.
    fn from_z(self, z: f64) -> (f64, f64) {
        match self {
            Coord::MuStar => (z, 0.0),
            Coord::Structure(StructureKind::Correlation) => {
                let r = z.tanh();
                (r, (1.0 - r * r).ln())
            }
            _ => (z.exp(), z),
        }
    }
}

/// Conditioning of a hyperparameter update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Block {
    /// Given `V` and `y`, `x` integrated out.
    GivenV,
    /// Given `x`, `V` and `y`.
    Joint,
    /// Given `x` and `y`, `V` integrated out.
    GivenX,
}

/// Current `(θ, x, V)` of a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub hyper: ParameterSet,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

/// One Markov chain over `(θ, x, V)`.
pub struct Chain<'a> {
    model: &'a ObservationModel,
    prior: &'a PriorConfig,
    config: McmcConfig,
    coords: Vec<Coord>,
    op: ModelOperator,
    lu: SparseLu,
    state: ChainState,
    rwm: AdaptiveRwm,
    /// Proposal scales of the `V`-marginal update.
    rwm_x: AdaptiveRwm,
    factorizer: Factorizer,
    index: usize,
    iteration: usize,
}

fn reject(e: &Error) -> bool {
    matches!(
        e,
        Error::NotPositiveDefinite { .. } | Error::Singular { .. } | Error::InvalidParameter(_)
    )
}

fn fixed_or_median(p: &ParamPrior) -> f64 {
    p.fixed_value().unwrap_or_else(|| p.median())
}

impl<'a> Chain<'a> {
    /// Starts at `V = h`, hyperparameters at their prior medians and `x` at
    /// its conditional mean.
    pub fn new(model: &'a ObservationModel, prior: &'a PriorConfig, config: &McmcConfig, index: usize) -> Result<Self> {
        let structure = match (&prior.structure, model.structure()) {
            (None, _) => model.op.kind().parameter(),
            (Some(p), StructureKind::None) if !p.is_fixed() => {
                return Err(invalid("a prior on the structural parameter needs an operator with kappa or rho"));
            }
            (Some(p), _) => Some(fixed_or_median(p)),
        };
        let hyper = ParameterSet {
            sigma: fixed_or_median(&prior.sigma),
            structure: structure.filter(|v| v.is_finite()),
            eta_star: fixed_or_median(&prior.eta_star),
            mu_star: fixed_or_median(&prior.mu_star),
            sigma_eps: fixed_or_median(&prior.sigma_eps),
        };
        let op = match (hyper.structure, model.op.has_parameter()) {
            (Some(s), true) if Some(s) != model.op.kind().parameter() => model.op.with_parameter(s)?,
            _ => model.op.clone(),
        };
        let v = op.h().to_vec();
        let mut factorizer = Factorizer::default();
        let x = conditional_mean_x(model, &op, &v, &hyper, &mut factorizer)?;
        Self::assemble(model, prior, config, index, op, ChainState { hyper, x, v }, factorizer)
    }

    /// Starts from a given state, e.g. a draw from the joint prior.
    pub fn with_state(
        model: &'a ObservationModel,
        prior: &'a PriorConfig,
        config: &McmcConfig,
        index: usize,
        state: ChainState,
    ) -> Result<Self> {
        let op = match (state.hyper.structure, model.op.has_parameter()) {
            (Some(s), true) if Some(s) != model.op.kind().parameter() => model.op.with_parameter(s)?,
            _ => model.op.clone(),
        };
        Self::assemble(model, prior, config, index, op, state, Factorizer::default())
    }

    fn assemble(
        model: &'a ObservationModel,
        prior: &'a PriorConfig,
        config: &McmcConfig,
        index: usize,
        op: ModelOperator,
        state: ChainState,
        factorizer: Factorizer,
    ) -> Result<Self> {
        config.validate()?;
        let mut coords = Vec::new();
        if !prior.sigma.is_fixed() {
            coords.push(Coord::Sigma);
        }
        if prior.structure.as_ref().is_some_and(|p| !p.is_fixed()) {
            coords.push(Coord::Structure(model.structure()));
        }
        if !prior.eta_star.is_fixed() {
            coords.push(Coord::EtaStar);
        }
        if !prior.mu_star.is_fixed() {
            coords.push(Coord::MuStar);
        }
        if !prior.sigma_eps.is_fixed() {
            coords.push(Coord::SigmaEps);
        }
        let lu = op.lu()?;
        let rwm = AdaptiveRwm::new(&vec![config.initial_scale; coords.len()], config.target_accept);
        let rwm_x = rwm.clone();
        let chain = Self {
            model,
            prior,
            config: config.clone(),
            coords,
            op,
            lu,
            state,
            rwm,
            rwm_x,
            factorizer,
            index,
            iteration: 0,
        };
        let lt = chain.current_log_target()?;
        if !lt.is_finite() {
            return Err(chain.divergence(lt));
        }
        Ok(chain)
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn sampler(&self) -> &AdaptiveRwm {
        &self.rwm
    }

    pub fn operator(&self) -> &ModelOperator {
        &self.op
    }

    fn divergence(&self, value: f64) -> Error {
        Error::Divergence {
            chain: self.index,
            iteration: self.iteration,
            state: format!("log target {value} at {:?}; V range [{:e}, {:e}]", self.state.hyper, vmin(&self.state.v), vmax(&self.state.v)),
        }
    }

    fn first_block(&self) -> Block {
        match self.config.target {
            HyperTarget::Joint => Block::Joint,
            _ => Block::GivenV,
        }
    }

    fn current_log_target(&self) -> Result<f64> {
        let z: Vec<f64> = self.coords.iter().map(|c| c.to_z(c.get(&self.state.hyper))).collect();
        let mut f = self.factorizer.clone();
        log_target(self.model, self.prior, &self.coords, self.first_block(), &self.op, &self.lu, &self.state, &z, &mut f)
    }

    /// One sweep: hyperparameters, then `x`, then `V` (collapsed target);
    /// `x`, `V`, hyperparameters (joint target); or hyperparameters given
    /// `V`, `x`, hyperparameters given `x`, `V` (alternating target).
    pub fn step<R: rand::Rng + ?Sized>(&mut self, adapt: bool, rng: &mut R) -> Result<()> {
        self.iteration += 1;
        match self.config.target {
            HyperTarget::Collapsed => {
                self.update_hyper(Block::GivenV, adapt, rng)?;
                self.update_x(rng)?;
                self.update_v(rng)?;
            }
            HyperTarget::Joint => {
                self.update_x(rng)?;
                self.update_v(rng)?;
                self.update_hyper(Block::Joint, adapt, rng)?;
            }
            HyperTarget::Alternating => {
                self.update_hyper(Block::GivenV, adapt, rng)?;
                self.update_x(rng)?;
                self.update_hyper(Block::GivenX, adapt, rng)?;
                self.update_v(rng)?;
            }
        }
        Ok(())
    }

    fn update_x<R: rand::Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.state.x = gibbs_x(self.model, &self.op, &self.state.v, &self.state.hyper, &mut self.factorizer, rng)?;
        Ok(())
    }

    fn update_v<R: rand::Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.state.v = gibbs_v(self.model.variant, &self.op, &self.state.x, &self.state.hyper, rng)?;
        Ok(())
    }

    fn update_hyper<R: rand::Rng + ?Sized>(&mut self, block: Block, adapt: bool, rng: &mut R) -> Result<()> {
        if self.coords.is_empty() {
            return Ok(());
        }
        let mut z: Vec<f64> = self.coords.iter().map(|c| c.to_z(c.get(&self.state.hyper))).collect();
        let mut current = log_target(
            self.model,
            self.prior,
            &self.coords,
            block,
            &self.op,
            &self.lu,
            &self.state,
            &z,
            &mut self.factorizer,
        )?;
        if !current.is_finite() {
            return Err(self.divergence(current));
        }
        let (model, prior, coords) = (self.model, self.prior, &self.coords);
        let (op, lu, state, factorizer) = (&self.op, &self.lu, &self.state, &mut self.factorizer);
        let (index, iteration) = (self.index, self.iteration);
        let rwm = if block == Block::GivenX { &mut self.rwm_x } else { &mut self.rwm };
        let outcome = rwm.sweep(
            &mut z,
            &mut current,
            adapt,
            rng,
            |zz| {
                let v = log_target(model, prior, coords, block, op, lu, state, zz, factorizer)?;
                if v.is_nan() || v == f64::INFINITY {
                    return Err(Error::Divergence {
                        chain: index,
                        iteration,
                        state: format!("log target {v} at z = {zz:?} from {:?}", state.hyper),
                    });
                }
                Ok(v)
            },
            reject,
        );
        outcome?;
        let old_structure = self.state.hyper.structure;
        for (c, &zi) in self.coords.iter().zip(&z) {
            c.set(&mut self.state.hyper, c.from_z(zi).0);
        }
        if self.state.hyper.structure != old_structure {
            if let Some(s) = self.state.hyper.structure {
                self.op = self.model.op.with_parameter(s)?;
                self.lu = self.op.lu()?;
            }
        }
        Ok(())
    }
}

fn vmin(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn vmax(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

#[allow(clippy::too_many_arguments)]
fn log_target(
    model: &ObservationModel,
    prior: &PriorConfig,
    coords: &[Coord],
    block: Block,
    op: &ModelOperator,
    lu: &SparseLu,
    state: &ChainState,
    z: &[f64],
    factorizer: &mut Factorizer,
) -> Result<f64> {
    let mut hp = state.hyper;
    let mut jac = 0.0;
    for (c, &zi) in coords.iter().zip(z) {
        let (value, lj) = c.from_z(zi);
        if !value.is_finite() {
            return Ok(f64::NEG_INFINITY);
        }
        c.set(&mut hp, value);
        jac += lj;
    }
    let lp = prior.log_prior(&hp);
    if lp == f64::NEG_INFINITY {
        return Ok(lp);
    }
    let rebuilt;
    let (op, lu) = match (hp.structure, state.hyper.structure) {
        (Some(s), Some(old)) if s != old => {
            let o = model.op.with_parameter(s)?;
            let l = o.lu()?;
            rebuilt = (o, l);
            (&rebuilt.0, &rebuilt.1)
        }
        _ => (op, lu),
    };
    let (st, eta, mu) = mixture_params(model.variant, &hp)?;
    let mix = || {
        if eta > 0.0 {
            ln_mixing_density_sum(model.variant, eta, op.h(), &state.v)
        } else {
            0.0
        }
    };
    let lik = match block {
        Block::GivenV => mix() + ln_y_given_v(model, op, lu, &state.v, &hp, factorizer)?,
        Block::Joint => {
            mix()
                + ln_x_given_v(op, lu.ln_abs_det(), &state.x, &state.v, st, mu)
                + ln_y_given_x(model, &state.x, hp.sigma_eps)
        }
        Block::GivenX => {
            ln_x_given_theta(model.variant, op, lu.ln_abs_det(), &state.x, st, eta, mu)
                + ln_y_given_x(model, &state.x, hp.sigma_eps)
        }
    };
    Ok(lp + jac + lik)
}

/// Per-chain outputs before merging.
pub(crate) struct ChainOutput {
    pub draws: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub x_sum: Vec<f64>,
    pub acceptance: Vec<f64>,
    pub scales: Vec<f64>,
}

pub(crate) fn parameter_names(model: &ObservationModel) -> Vec<String> {
    let mut names = vec!["sigma".to_string()];
    if model.structure() != StructureKind::None {
        names.push(model.structure().name().to_string());
    }
    names.extend(["eta_star", "mu_star", "sigma_eps"].map(String::from));
    names
}

fn record(model: &ObservationModel, hp: &ParameterSet) -> Vec<f64> {
    let mut out = vec![hp.sigma];
    if model.structure() != StructureKind::None {
        out.push(hp.structure.unwrap_or(f64::NAN));
    }
    out.extend([hp.eta_star, hp.mu_star, hp.sigma_eps]);
    out
}

/// RNG of chain `index`: one ChaCha8 stream per chain from a common seed.
pub fn chain_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn run_chain(model: &ObservationModel, prior: &PriorConfig, config: &McmcConfig, index: usize) -> Result<ChainOutput> {
    let mut rng = chain_rng(config.seed, index);
    let mut chain = Chain::new(model, prior, config, index)?;
    for _ in 0..config.warmup {
        chain.step(config.adapt, &mut rng)?;
    }
    chain.rwm.reset_counts();
    chain.rwm_x.reset_counts();
    let names = parameter_names(model).len();
    let mut draws = vec![Vec::with_capacity(config.samples); names];
    let mut v = Vec::new();
    let mut x_sum = vec![0.0; chain.state.x.len()];
    for it in 0..config.samples {
        chain.step(false, &mut rng)?;
        for (d, value) in draws.iter_mut().zip(record(model, &chain.state.hyper)) {
            d.push(value);
        }
        if (it + 1) % config.thin_v == 0 {
            v.push(chain.state.v.clone());
        }
        for (s, x) in x_sum.iter_mut().zip(&chain.state.x) {
            *s += x;
        }
    }
    Ok(ChainOutput {
        draws,
        v,
        x_sum,
        acceptance: chain.rwm.acceptance(),
        scales: chain.rwm.scales(),
    })
}

/// Runs `config.chains` chains in parallel and merges them by chain index.
pub fn fit(model: &ObservationModel, prior: &PriorConfig, config: &McmcConfig) -> Result<PosteriorChains> {
    prior.validate()?;
    config.validate()?;
    let outputs: Vec<Result<ChainOutput>> =
        (0..config.chains).into_par_iter().map(|c| run_chain(model, prior, config, c)).collect();
    let outputs = outputs.into_iter().collect::<Result<Vec<_>>>()?;
    let names = parameter_names(model);
    let fixed: Vec<bool> = names
        .iter()
        .map(|n| match n.as_str() {
            "sigma" => prior.sigma.is_fixed(),
            "eta_star" => prior.eta_star.is_fixed(),
            "mu_star" => prior.mu_star.is_fixed(),
            "sigma_eps" => prior.sigma_eps.is_fixed(),
            _ => prior.structure.as_ref().is_none_or(|p| p.is_fixed()),
        }
        )
        .collect();
    Ok(PosteriorChains::from_outputs(names, fixed, outputs, model.op.h().to_vec(), config.clone(), prior.clone()))
}
