//! Kullback–Leibler divergences to the Gaussian base model and the
//! penalized complexity priors for `η★` and `μ★`, together with the baseline
//! priors used for comparison.

mod config;
mod kld;

pub use config::{CalibrationRecord, ParamPrior, ParameterSet, PcPrior, PriorConfig, PRIOR_SCHEMA};
pub use kld::{
    distance_eta_taylor, kld_eta_taylor, kld_mu_bound, kld_mu_bound_checked, kld_mu_exact_nig, kld_noise_numeric,
    MuBound,
};

/// Exponential PC prior density `θ e^{−θ η★}` on `η★ ≥ 0`.
pub fn pc_prior_eta_density(eta_star: f64, theta_eta: f64) -> f64 {
    if eta_star < 0.0 {
        0.0
    } else {
        theta_eta * (-theta_eta * eta_star).exp()
    }
}

/// Conditional PC prior of `μ` given `η`: Laplace with rate `θ_μ √η`.
pub fn pc_prior_mu_conditional_density(mu: f64, eta: f64, theta_mu: f64) -> f64 {
    let rate = theta_mu * eta.sqrt();
    0.5 * rate * (-rate * mu.abs()).exp()
}

/// Laplace PC prior density of `μ★ = √η μ`.
pub fn pc_prior_mu_star_density(mu_star: f64, theta_mu: f64) -> f64 {
    0.5 * theta_mu * (-theta_mu * mu_star.abs()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate_with_breaks, QuadOptions};

    #[test]
    fn eta_prior() {
        let th = 30.0;
        let mass = integrate_with_breaks(|e| pc_prior_eta_density(e, th), 0.0, 5.0, &[0.1], QuadOptions::default()).unwrap().value;
        assert!((mass - 1.0).abs() < 1e-10);
        let mean = integrate_with_breaks(|e| e * pc_prior_eta_density(e, th), 0.0, 5.0, &[0.1], QuadOptions::default()).unwrap().value;
        assert!((mean - 1.0 / th).abs() < 1e-10);
        let tail = integrate_with_breaks(|e| pc_prior_eta_density(e, th), 0.1, 5.0, &[0.5], QuadOptions::default()).unwrap().value;
        assert!((tail - (-3.0f64).exp()).abs() < 1e-10);
        assert!(pc_prior_eta_density(0.0, th) > pc_prior_eta_density(1e-3, th));
    }

    #[test]
    fn mu_prior() {
        for &eta in &[0.1, 1.0, 10.0] {
            let th = 13.0;
            let mass = integrate_with_breaks(|m| pc_prior_mu_conditional_density(m, eta, th), -20.0, 20.0, &[0.0], QuadOptions::default()).unwrap().value;
            assert!((mass - 1.0).abs() < 1e-9);
            for &m in &[0.05, 0.3, 1.0] {
                let a = pc_prior_mu_conditional_density(m, eta, th);
                assert_eq!(a, pc_prior_mu_conditional_density(-m, eta, th));
                assert!(a < pc_prior_mu_conditional_density(0.0, eta, th));
                // μ★ = √η μ has density p(μ★/√η)/√η
                let star = pc_prior_mu_conditional_density(m / eta.sqrt(), eta, th) / eta.sqrt();
                assert!((star - pc_prior_mu_star_density(m, th)).abs() < 1e-12 * star);
            }
        }
        assert_eq!(pc_prior_mu_conditional_density(0.4, 1.0, 2.0), pc_prior_mu_star_density(0.4, 2.0));
    }
}
