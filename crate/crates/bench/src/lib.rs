//! Shared fixtures for the benchmarks.

use ngflex_core::inference::study::{simulate_dataset, Scenario, StudyConfig};
use ngflex_core::{CsrMatrix, ModelOperator, ObservationModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Matérn operator on `n` unit-spaced nodes with `κ = 0.2`.
pub fn matern_operator(n: usize) -> ModelOperator {
    StudyConfig { n, ..StudyConfig::default() }.operator().expect("valid mesh")
}

/// Gaussian-truth dataset observed at every node.
pub fn gaussian_model(n: usize, seed: u64) -> ObservationModel {
    let cfg = StudyConfig { n, ..StudyConfig::default() };
    let op = matern_operator(n);
    let scenario = Scenario { name: "bench".into(), sigma: 1.0, eta_star: 0.0, mu_star: 0.0, jump: 0.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = simulate_dataset(&op, cfg.variant, &scenario, cfg.sigma_eps(), &mut rng).expect("simulation");
    ObservationModel::new(data.y, CsrMatrix::identity(n), op, cfg.variant).expect("model")
}
