use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::CsrMatrix;
use crate::noise::Variant;
use crate::operators::{
    ar1_operator, diff_operator_1d, fem_matern_2d, regular_triangulation, Boundary, DiffKind, Mesh1D, ModelOperator,
};
use crate::priors::PriorConfig;

pub const FIT_SCHEMA: &str = "ngflex-fit-1";

/// Target of the hyperparameter updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperTarget {
    /// `p(θ | V, y)` followed by `p(θ | x, y)`, integrating out `x` and `V`
    /// in turn.
    #[default]
    Alternating,
    /// `p(θ | V, y)` with `x` integrated out.
    Collapsed,
    /// `p(θ | x, V, y)`.
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    pub chains: usize,
    pub warmup: usize,
    pub samples: usize,
    /// Keep every `thin_v`-th mixing vector after warmup.
    pub thin_v: usize,
    pub seed: u64,
    pub target_accept: f64,
    pub target: HyperTarget,
    /// Initial random-walk scale on the transformed scale.
    pub initial_scale: f64,
    /// Adapt proposal scales during warmup.
    pub adapt: bool,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            warmup: 500,
            samples: 500,
            thin_v: 10,
            seed: 1,
            target_accept: 0.3,
            target: HyperTarget::Alternating,
            initial_scale: 0.3,
            adapt: true,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 || self.warmup == 0 || self.samples == 0 || self.thin_v == 0 {
            return Err(invalid("chains, warmup, samples and thin_v must be at least 1"));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) || !(self.initial_scale > 0.0) {
            return Err(invalid("target_accept must lie in (0, 1) and initial_scale be positive"));
        }
        Ok(())
    }
}

/// Latent model families that can be built from observation locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatentModel {
    Ar1 { rho: f64 },
    Crw1,
    Crw2,
    Ou { kappa: f64 },
    Matern1d { kappa: f64 },
    Matern2d {
        kappa: f64,
        #[serde(default = "default_alpha")]
        alpha: u32,
    },
}

fn default_alpha() -> u32 {
    2
}

/// Latent model plus its discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(flatten)]
    pub latent: LatentModel,
    /// Number of mesh nodes per axis. One-dimensional models default to the
    /// distinct observation locations, 2D models to 20.
    #[serde(default)]
    pub mesh_nodes: Option<usize>,
    #[serde(default)]
    pub boundary: Boundary,
}

impl ModelConfig {
    pub fn new(latent: LatentModel) -> Self {
        Self {
            latent,
            mesh_nodes: None,
            boundary: Boundary::Neumann,
        }
    }

    pub fn dimension(&self) -> usize {
        match self.latent {
            LatentModel::Matern2d { .. } => 2,
            _ => 1,
        }
    }

    /// Operator and projector for one-dimensional locations.
    pub fn build_1d(&self, locations: &[f64]) -> Result<(ModelOperator, CsrMatrix)> {
        if locations.is_empty() {
            return Err(invalid("no locations"));
        }
        let mut nodes = locations.to_vec();
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        if let LatentModel::Ar1 { rho } = self.latent {
            let op = ar1_operator(rho, nodes.len())?;
            let cols: Vec<usize> = locations
                .iter()
                .map(|l| nodes.binary_search_by(|n| n.total_cmp(l)).expect("location is a node"))
                .collect();
            let rows: Vec<usize> = (0..locations.len()).collect();
            let a = CsrMatrix::from_triplets(locations.len(), nodes.len(), &rows, &cols, &vec![1.0; locations.len()]);
            return Ok((op, a));
        }
        let mesh = match self.mesh_nodes {
            Some(n) => Mesh1D::uniform(nodes[0], *nodes.last().expect("nonempty"), n, self.boundary)?,
            None => Mesh1D::new(nodes, self.boundary)?,
        };
        let op = match self.latent {
            LatentModel::Crw1 => diff_operator_1d(DiffKind::Crw1, 0.0, &mesh)?,
            LatentModel::Crw2 => diff_operator_1d(DiffKind::Crw2, 0.0, &mesh)?,
            LatentModel::Ou { kappa } => diff_operator_1d(DiffKind::Ou, kappa, &mesh)?,
            LatentModel::Matern1d { kappa } => diff_operator_1d(DiffKind::Matern2, kappa, &mesh)?,
            LatentModel::Ar1 { .. } => unreachable!(),
            LatentModel::Matern2d { .. } => return Err(invalid("matern2d needs two-dimensional locations")),
        };
        let a = mesh.projector(locations)?;
        Ok((op, a))
    }

    /// Operator and projector for planar locations on a regular
    /// triangulation of their bounding box.
    pub fn build_2d(&self, locations: &[[f64; 2]]) -> Result<(ModelOperator, CsrMatrix)> {
        let LatentModel::Matern2d { kappa, alpha } = self.latent else {
            return Err(invalid("two-dimensional locations need the matern2d model"));
        };
        if locations.is_empty() {
            return Err(invalid("no locations"));
        }
        let fold = |f: fn(f64, f64) -> f64, k: usize, init: f64| locations.iter().map(|p| p[k]).fold(init, f);
        let bounds = [
            fold(f64::min, 0, f64::INFINITY),
            fold(f64::max, 0, f64::NEG_INFINITY),
            fold(f64::min, 1, f64::INFINITY),
            fold(f64::max, 1, f64::NEG_INFINITY),
        ];
        let n = self.mesh_nodes.unwrap_or(20);
        let mesh = regular_triangulation(bounds, n, n)?;
        let op = fem_matern_2d(kappa, alpha, &mesh)?;
        let a = mesh.projector(locations)?;
        Ok((op, a))
    }
}

/// Fit configuration document (schema `ngflex-fit-1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    #[serde(default = "fit_schema")]
    pub schema: String,
    pub variant: Variant,
    pub model: ModelConfig,
    pub prior: PriorConfig,
    #[serde(default)]
    pub mcmc: McmcConfig,
}

fn fit_schema() -> String {
    FIT_SCHEMA.to_string()
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema != FIT_SCHEMA {
            return Err(Error::Schema {
                expected: FIT_SCHEMA.into(),
                found: self.schema.clone(),
            });
        }
        self.prior.validate()?;
        self.mcmc.validate()
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

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "toml") {
            Self::from_toml(&text)
        } else {
            Self::from_json(&text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let text = r#"
schema = "ngflex-fit-1"
variant = "NIG"

[model]
kind = "matern1d"
kappa = 0.2

[prior]
schema = "ngflex-prior-1"
sigma = { kind = "inv_gamma", shape = 1.0, scale = 1.0 }
eta_star = { kind = "exponential", rate = 30.0 }
mu_star = { kind = "laplace", rate = 13.0 }
sigma_eps = { kind = "fixed", value = 0.8 }

[mcmc]
chains = 2
samples = 300
"#;
        let c = FitConfig::from_toml(text).unwrap();
        assert_eq!(c.mcmc.chains, 2);
        assert_eq!(c.mcmc.warmup, 500);
        assert_eq!(c.model.latent, LatentModel::Matern1d { kappa: 0.2 });
        let back = FitConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(FitConfig::from_toml(&text.replace("chains = 2", "chains = 0")).is_err());
    }

    #[test]
    fn builds_from_locations() {
        let locs: Vec<f64> = (0..30).map(|i| (i % 10) as f64).collect();
        let m = ModelConfig::new(LatentModel::Matern1d { kappa: 0.5 });
        let (op, a) = m.build_1d(&locs).unwrap();
        assert_eq!(op.dim(), 10);
        assert_eq!(a.nrows(), 30);
        assert!(a.row_sums().iter().all(|s| (s - 1.0).abs() < 1e-12));
        let (op, a) = ModelConfig::new(LatentModel::Ar1 { rho: 0.3 }).build_1d(&[2.0, 5.0, 2.0]).unwrap();
        assert_eq!(op.dim(), 2);
        assert_eq!(a.get(2, 0), 1.0);
        let pts = [[0.0, 0.0], [1.0, 2.0], [0.5, 0.5]];
        let mut m2 = ModelConfig::new(LatentModel::Matern2d { kappa: 1.0, alpha: 2 });
        m2.mesh_nodes = Some(5);
        let (op, a) = m2.build_2d(&pts).unwrap();
        assert_eq!(op.dim(), 25);
        assert!(a.row_sums().iter().all(|s| (s - 1.0).abs() < 1e-12));
    }
}
