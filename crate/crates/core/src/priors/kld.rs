use crate::error::{invalid, Result};
use crate::noise::{log_density, tail_summary, to_classical, NoiseParams, Variant};
use crate::quad::{integrate_with_breaks, QuadOptions};
use crate::special::ln_norm_pdf;

/// `KLD(Λ ‖ Z)` between a noise component and the Gaussian `N(0, hσ²)`
/// with the same variance, by adaptive quadrature at `σ = 1`.
pub fn kld_noise_numeric(variant: Variant, eta: f64, mu: f64, h: f64) -> Result<f64> {
    if !(eta > 0.0) || !(h > 0.0) {
        return Err(invalid(format!("KLD needs eta > 0 and h > 0, got eta={eta}, h={h}")));
    }
    let p = NoiseParams::new(variant, 1.0, eta, mu)?;
    let t = tail_summary(&p)?;
    let mt = to_classical(&p, h)?.mu_tilde;
    let half = (40.0 * h.sqrt()).max(40.0 / t.xi);
    let f = |x: f64| {
        let lp = log_density(&p, h, x);
        if lp == f64::NEG_INFINITY {
            return 0.0;
        }
        lp.exp() * (lp - ln_norm_pdf(x, 0.0, h))
    };
    let sd = h.sqrt();
    let mut breaks = vec![mt, 0.0];
    for k in [0.25, 1.0, 3.0, 8.0] {
        breaks.push(mt + k * sd);
        breaks.push(mt - k * sd);
    }
    let r = integrate_with_breaks(
        f,
        mt - half,
        mt + half,
        &breaks,
        QuadOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-9,
            max_intervals: 4000,
        },
    )?;
    Ok(r.value.max(0.0))
}

/// Fourth-order small-`η` expansion of `Σ_i KLD(Λ_i ‖ Z_i)` at `μ = 0`.
pub fn kld_eta_taylor(variant: Variant, eta: f64, h: &[f64]) -> f64 {
    let c4 = match variant {
        Variant::Nig => 261.0 / 128.0,
        Variant::Gal => 401.0 / 128.0,
    };
    h.iter()
        .map(|&hi| {
            let r = eta / hi;
            3.0 / 16.0 * r * r - 9.0 / 16.0 * r.powi(3) + c4 * r.powi(4)
        })
        .sum()
}

/// Distance `d(η) = √(2 KLD)` from the Taylor expansion.
pub fn distance_eta_taylor(variant: Variant, eta: f64, h: &[f64]) -> f64 {
    (2.0 * kld_eta_taylor(variant, eta, h)).sqrt()
}

/// Upper bound `(n/2) η μ²` on the KLD between the asymmetric and the
/// symmetric model with the same `η`.
pub fn kld_mu_bound(n: usize, eta: f64, mu: f64) -> f64 {
    0.5 * n as f64 * eta * mu * mu
}

/// Exact augmented KLD for NIG, `(n/2) log(1 + η μ²)`.
pub fn kld_mu_exact_nig(n: usize, eta: f64, mu: f64) -> f64 {
    0.5 * n as f64 * (eta * mu * mu).ln_1p()
}

/// [`kld_mu_bound`] together with whether its stated validity holds
/// (always for NIG; `η < min h_i` for GAL).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuBound {
    pub value: f64,
    pub within_validity: bool,
}

pub fn kld_mu_bound_checked(variant: Variant, eta: f64, mu: f64, h: &[f64]) -> MuBound {
    let min_h = h.iter().copied().fold(f64::INFINITY, f64::min);
    MuBound {
        value: kld_mu_bound(h.len(), eta, mu),
        within_validity: variant == Variant::Nig || eta < min_h,
    }
}
