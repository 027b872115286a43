use anyhow::{bail, Result};
use ngflex_core::field::FieldSampler;
use ngflex_core::noise::Parameterization;
use ngflex_core::operators::{
    ar1_operator, diff_operator_1d, fem_matern_2d, lattice_weights, regular_triangulation, sar_operator, DiffKind,
};
use ngflex_core::{Boundary, Mesh1D, ModelOperator, NoiseParams, Variant};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::output::Outputs;

pub const SIMULATE_SCHEMA: &str = "ngflex-simulate-1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimModel {
    Ar1 {
        rho: f64,
        nodes: usize,
    },
    Sar {
        rho: f64,
        nx: usize,
        ny: usize,
    },
    Crw1 {
        nodes: usize,
        #[serde(default = "unit")]
        length: f64,
        #[serde(default)]
        boundary: Boundary,
    },
    Crw2 {
        nodes: usize,
        #[serde(default = "unit")]
        length: f64,
        #[serde(default)]
        boundary: Boundary,
    },
    Ou {
        kappa: f64,
        nodes: usize,
        #[serde(default = "unit")]
        length: f64,
        #[serde(default)]
        boundary: Boundary,
    },
    Matern1d {
        kappa: f64,
        nodes: usize,
        #[serde(default = "unit")]
        length: f64,
        #[serde(default)]
        boundary: Boundary,
    },
    Matern2d {
        kappa: f64,
        #[serde(default = "two")]
        alpha: u32,
        nx: usize,
        ny: usize,
        #[serde(default = "unit_square")]
        bounds: [f64; 4],
    },
}

fn unit() -> f64 {
    1.0
}

fn two() -> u32 {
    2
}

fn unit_square() -> [f64; 4] {
    [0.0, 1.0, 0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedModel {
    pub name: String,
    #[serde(flatten)]
    pub model: SimModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "schema")]
    pub schema: String,
    pub variant: Variant,
    pub sigma: f64,
    /// `η★` (tail corrected) or `η` (variance corrected).
    pub eta: f64,
    pub mu: f64,
    #[serde(default = "tail")]
    pub parameterization: Parameterization,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default = "one_u64")]
    pub seed: u64,
    pub models: Vec<NamedModel>,
}

fn schema() -> String {
    SIMULATE_SCHEMA.into()
}

fn tail() -> Parameterization {
    Parameterization::TailCorrected
}

fn one() -> usize {
    1
}

fn one_u64() -> u64 {
    1
}

/// Operator with the node coordinates used for output.
struct Built {
    op: ModelOperator,
    coords: Vec<Vec<f64>>,
}

fn build(model: &SimModel, path: &str) -> Result<Built> {
    let line = |nodes: usize, length: f64, boundary: Boundary| -> Result<Mesh1D> {
        if nodes < 3 {
            bail!("{path}.nodes must be at least 3, got {nodes}");
        }
        if !(length > 0.0) {
            bail!("{path}.length must be positive, got {length}");
        }
        Ok(Mesh1D::uniform(0.0, length, nodes, boundary)?)
    };
    let positive = |name: &str, v: f64| -> Result<()> {
        if v > 0.0 {
            Ok(())
        } else {
            bail!("{path}.{name} must be positive, got {v}")
        }
    };
    let on_line = |mesh: &Mesh1D| mesh.nodes().iter().map(|&s| vec![s]).collect();
    Ok(match *model {
        SimModel::Ar1 { rho, nodes } => {
            if nodes == 0 {
                bail!("{path}.nodes must be at least 1");
            }
            let op = ar1_operator(rho, nodes).map_err(|e| anyhow::anyhow!("{path}.rho: {e}"))?;
            Built {
                op,
                coords: (0..nodes).map(|i| vec![i as f64]).collect(),
            }
        }
        SimModel::Sar { rho, nx, ny } => {
            if nx == 0 || ny == 0 {
                bail!("{path}.nx and {path}.ny must be at least 1");
            }
            let op = sar_operator(&lattice_weights(nx, ny), rho).map_err(|e| anyhow::anyhow!("{path}.rho: {e}"))?;
            Built {
                op,
                coords: (0..nx * ny).map(|k| vec![(k % nx) as f64, (k / nx) as f64]).collect(),
            }
        }
        SimModel::Crw1 { nodes, length, boundary } | SimModel::Crw2 { nodes, length, boundary } => {
            let mesh = line(nodes, length, boundary)?;
            let kind = if matches!(model, SimModel::Crw1 { .. }) { DiffKind::Crw1 } else { DiffKind::Crw2 };
            Built {
                op: diff_operator_1d(kind, 0.0, &mesh)?,
                coords: on_line(&mesh),
            }
        }
        SimModel::Ou { kappa, nodes, length, boundary } | SimModel::Matern1d { kappa, nodes, length, boundary } => {
            positive("kappa", kappa)?;
            let mesh = line(nodes, length, boundary)?;
            let kind = if matches!(model, SimModel::Ou { .. }) { DiffKind::Ou } else { DiffKind::Matern2 };
            Built {
                op: diff_operator_1d(kind, kappa, &mesh)?,
                coords: on_line(&mesh),
            }
        }
        SimModel::Matern2d { kappa, alpha, nx, ny, bounds } => {
            positive("kappa", kappa)?;
            if alpha != 2 && alpha != 4 {
                bail!("{path}.alpha must be 2 or 4, got {alpha}");
            }
            let mesh = regular_triangulation(bounds, nx, ny).map_err(|e| anyhow::anyhow!("{path}: {e}"))?;
            Built {
                op: fem_matern_2d(kappa, alpha, &mesh)?,
                coords: mesh.vertices().iter().map(|v| v.to_vec()).collect(),
            }
        }
    })
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema != SIMULATE_SCHEMA {
            bail!("schema: expected {SIMULATE_SCHEMA}, found {}", self.schema);
        }
        if self.models.is_empty() {
            bail!("models: at least one model is required");
        }
        if self.replicates == 0 {
            bail!("replicates must be at least 1");
        }
        self.noise().map(|_| ())
    }

    pub fn noise(&self) -> Result<NoiseParams> {
        let p = match self.parameterization {
            Parameterization::TailCorrected => NoiseParams::tail_corrected(self.variant, self.sigma, self.eta, self.mu),
            Parameterization::VarianceCorrected => NoiseParams::new(self.variant, self.sigma, self.eta, self.mu),
        };
        p.map_err(|e| anyhow::anyhow!("sigma/eta/mu: {e}"))
    }
}

/// Writes `<name>_noise.csv` and `<name>_path.csv` for every model.
pub fn run(config: &SimulateConfig, out: &Outputs) -> Result<Vec<std::path::PathBuf>> {
    config.validate()?;
    let params = config.noise()?;
    let mut written = Vec::new();
    for (k, named) in config.models.iter().enumerate() {
        let built = build(&named.model, &format!("models[{k}]"))?;
        let sampler = FieldSampler::new(&built.op, &params)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(k as u64);
        let draws = (0..config.replicates).map(|_| sampler.sample(&mut rng)).collect::<ngflex_core::Result<Vec<_>>>()?;
        let h = built.op.h();
        let dim = built.coords.first().map_or(1, Vec::len);
        let coord_names: Vec<String> = if dim == 1 { vec!["s".into()] } else { (1..=dim).map(|d| format!("s{d}")).collect() };
        let details = serde_json::json!({ "model": named, "nodes": h.len(), "sum_h": h.iter().sum::<f64>() });

        written.push(out.csv_with(&format!("{}_noise.csv", named.name), details.clone(), |w| {
            w.write_record(["replicate", "node", "h", "lambda"])?;
            for (r, s) in draws.iter().enumerate() {
                let lambda = built.op.d().matvec(&s.x);
                for (i, l) in lambda.iter().enumerate() {
                    w.write_record([r.to_string(), i.to_string(), h[i].to_string(), l.to_string()])?;
                }
            }
            Ok(())
        })?);
        written.push(out.csv_with(&format!("{}_path.csv", named.name), details, |w| {
            let mut header = vec!["replicate".to_string(), "node".into()];
            header.extend(coord_names.iter().cloned());
            header.extend(["h".into(), "x".into(), "v".into()]);
            w.write_record(&header)?;
            for (r, s) in draws.iter().enumerate() {
                for i in 0..s.x.len() {
                    let mut row = vec![r.to_string(), i.to_string()];
                    row.extend(built.coords[i].iter().map(f64::to_string));
                    row.extend([h[i].to_string(), s.x[i].to_string(), s.v[i].to_string()]);
                    w.write_record(&row)?;
                }
            }
            Ok(())
        })?);
    }
    Ok(written)
}
