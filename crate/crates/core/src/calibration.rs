//! Scaling of the PC priors: turning interpretable tail-event probabilities
//! `α_η`, `α_μ` into the rates `θ_η`, `θ_μ`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{sigma_marg, InversionOptions, MarginalModel, MarginalSpec};
use crate::noise::{self, NoiseParams, Variant};
use crate::quad::bisect;
use crate::special::gauss_two_sided_tail;

#[derive(Debug, Clone, Copy)]
pub struct CalibrationOptions {
    /// Events are `|X| > threshold · sd`.
    pub threshold: f64,
    /// Target value of `Q` for the marginal-event method.
    pub q_target: f64,
    /// Absolute residual tolerance in the `Q` value.
    pub q_tol: f64,
    /// Search interval for `η`.
    pub eta_range: (f64, f64),
    pub inversion: InversionOptions,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            threshold: 3.0,
            q_target: 2.0,
            q_tol: 1e-3,
            eta_range: (1e-6, 1e3),
            inversion: InversionOptions::default(),
        }
    }
}

fn check_alpha(alpha: f64, name: &str) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in (0, 1), got {alpha}")))
    }
}

fn unit_spec(model: MarginalModel, variant: Variant, kappa: f64, eta: f64) -> Result<MarginalSpec> {
    MarginalSpec::new(model, kappa, NoiseParams::new(variant, 1.0, eta, 0.0)?)
}

fn dim_alpha(model: MarginalModel) -> (u32, f64) {
    match model {
        // the OU kernel e^{−κt} has the variance of an α = 1 Matérn in d = 1
        MarginalModel::OuD1 => (1, 1.0),
        MarginalModel::Matern2D1 => (1, 2.0),
        MarginalModel::Matern2D2 => (2, 2.0),
    }
}

/// Marginal standard deviation at `σ = 1`.
pub fn unit_sigma_marg(model: MarginalModel, kappa: f64) -> Result<f64> {
    let (d, alpha) = dim_alpha(model);
    match model {
        MarginalModel::OuD1 => Ok((0.5 / kappa).sqrt()),
        _ => sigma_marg(kappa, alpha, d, 1.0),
    }
}

/// `Q(η) = P(|X| > 3σ_marg) / (2Φ(−3))` for the symmetric stationary model.
pub fn q_ratio(eta: f64, model: MarginalModel, variant: Variant, kappa: f64, opts: &CalibrationOptions) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(invalid(format!("eta must be positive, got {eta}")));
    }
    let spec = unit_spec(model, variant, kappa, eta)?;
    let c = opts.threshold * unit_sigma_marg(model, kappa)?;
    Ok(spec.tail_prob(c, &opts.inversion)? / gauss_two_sided_tail(opts.threshold))
}

/// Published closed forms `Q⁻¹(2 | κ)` of the stationary models.
///
/// The Matérn `d = 1` constants are about 15% (NIG) and 19% (GAL) below the
/// root-finding values. Those are exactly twice the OU roots, since the
/// Matérn log-CF is twice the OU log-CF at a rescaled argument.
pub fn q_inverse_table(model: MarginalModel, variant: Variant, kappa: f64) -> f64 {
    match (model, variant) {
        (MarginalModel::OuD1, Variant::Nig) => 0.1566 / kappa,
        (MarginalModel::OuD1, Variant::Gal) => 0.1540 / kappa,
        (MarginalModel::Matern2D1, Variant::Nig) => 0.2676 / kappa,
        (MarginalModel::Matern2D1, Variant::Gal) => 0.2488 / kappa,
        (MarginalModel::Matern2D2, _) => 0.2513 / (kappa * kappa),
    }
}

/// Root of `Q(η) = q_target` with its residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QRoot {
    pub eta: f64,
    pub q: f64,
    pub residual: f64,
}

/// Steps `x` up from `lo` by `ln 4` until `f` changes sign from its value
/// at `lo`.
fn grow_bracket(mut f: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let sign = f(lo)?.signum();
    let mut b = lo;
    loop {
        let next = (b + 4f64.ln()).min(hi);
        if next == b {
            return Err(Error::RootFinding(format!("no sign change on [{lo}, {hi}]")));
        }
        let a = b;
        b = next;
        if f(b)?.signum() != sign {
            return Ok((a, b));
        }
    }
}

/// Solves `Q(η) = q_target` by bisection on `log η`. The bracket is grown
/// geometrically from the lower end of `eta_range` so that the heavy-tailed
/// end of the range is only visited when needed.
pub fn q_inverse(model: MarginalModel, variant: Variant, kappa: f64, opts: &CalibrationOptions) -> Result<QRoot> {
    let (lo, hi) = opts.eta_range;
    let g = |ln_eta: f64| q_ratio(ln_eta.exp(), model, variant, kappa, opts).map(|q| q - opts.q_target);
    let (a, b) = grow_bracket(g, lo.ln(), hi.ln()).map_err(|_| {
        Error::RootFinding(format!(
            "Q(eta) stays below {} on [{lo}, {hi}] for {model:?} {variant}, kappa = {kappa}",
            opts.q_target
        ))
    })?;
    let ln_eta = bisect(g, a, b, 1e-10, opts.q_tol)?;
    let eta = ln_eta.exp();
    let q = q_ratio(eta, model, variant, kappa, opts)?;
    Ok(QRoot {
        eta,
        q,
        residual: (q - opts.q_target).abs(),
    })
}

/// `Q⁻¹(2 | κ)` by CF inversion and root-finding.
pub fn q_inverse_at_2(model: MarginalModel, variant: Variant, kappa: f64) -> Result<f64> {
    Ok(q_inverse(model, variant, kappa, &CalibrationOptions::default())?.eta)
}

/// How `Q⁻¹` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QMethod {
    /// Closed-form constants.
    Table,
    /// Characteristic-function inversion and bisection.
    RootFinding,
}

/// `θ_η = −log(α_η) / Q⁻¹(2 | κ)`.
pub fn calibrate_eta_marginal(
    alpha_eta: f64,
    model: MarginalModel,
    variant: Variant,
    kappa: f64,
    method: QMethod,
) -> Result<f64> {
    check_alpha(alpha_eta, "alpha_eta")?;
    let q_inv = match method {
        QMethod::Table => q_inverse_table(model, variant, kappa),
        QMethod::RootFinding => q_inverse_at_2(model, variant, kappa)?,
    };
    Ok(-alpha_eta.ln() / q_inv)
}

/// `P(|Λ| > threshold · σ √h)` by Gil-Pelaez inversion of the noise CF.
pub fn noise_event_prob_with(p: &NoiseParams, h: f64, threshold: f64, opts: &InversionOptions) -> Result<f64> {
    let vc = p.to_variance_corrected();
    let sd = vc.sigma * h.sqrt();
    crate::field::two_sided_tail(
        |t| Ok(noise::log_cf_complex(p, h, num_complex::Complex64::new(t, 0.0))),
        threshold * sd,
        sd,
        vc.eta < opts.gaussian_eta,
        opts,
    )
}

/// `p_i(η) = P(|Λ_i| > 3 σ √h_i)`. GAL characteristic functions decay like
/// `|u|^{−2h/η}`; below `2h/η = 3` the density is integrated instead.
pub fn noise_event_prob(p: &NoiseParams, h: f64) -> Result<f64> {
    let vc = p.to_variance_corrected();
    if vc.variant == Variant::Gal && vc.eta > 0.0 && 2.0 * h / vc.eta < 3.0 {
        return noise_event_prob_quadrature(p, h, 3.0);
    }
    noise_event_prob_with(p, h, 3.0, &InversionOptions::default())
}

/// The same probability by quadrature of the density.
pub fn noise_event_prob_quadrature(p: &NoiseParams, h: f64, threshold: f64) -> Result<f64> {
    use crate::quad::{integrate_with_breaks, QuadOptions};
    let vc = p.to_variance_corrected();
    let sd = vc.sigma * h.sqrt();
    let c = threshold * sd;
    let xi = noise::tail_summary(p)?.xi;
    let reach = c + 60.0 * sd.max(1.0 / xi);
    let f = |x: f64| noise::density(p, h, x);
    let opts = QuadOptions::tol(1e-14, 1e-11);
    if vc.eta == 0.0 {
        return Ok(gauss_two_sided_tail(threshold));
    }
    let pole = noise::to_classical(p, h)?.mu_tilde;
    let mut breaks: Vec<f64> = (1..8).map(|k| c + k as f64 * (reach - c) / 64.0).collect();
    let mut left_breaks: Vec<f64> = breaks.iter().map(|b| -b).rev().collect();
    if pole > c {
        breaks.push(pole);
        breaks.sort_by(f64::total_cmp);
    } else if pole < -c {
        left_breaks.push(pole);
        left_breaks.sort_by(f64::total_cmp);
    }
    let right = integrate_with_breaks(f, c, reach, &breaks, opts)?.value;
    let left = integrate_with_breaks(f, -reach, -c, &left_breaks, opts)?.value;
    Ok(right + left)
}

/// `Q₁ = Σ p_i(η)`, the expected number of large noise events.
pub fn q1_expected_events(p: &NoiseParams, h: &[f64]) -> Result<f64> {
    h.iter().map(|&hi| noise_event_prob(p, hi)).sum()
}

/// `Q₂ = Π (1 − p_i(η))`, the probability of no large noise event.
pub fn q2_no_event_prob(p: &NoiseParams, h: &[f64]) -> Result<f64> {
    h.iter().map(|&hi| noise_event_prob(p, hi).map(|q| 1.0 - q)).product()
}

/// Which noise-event summary a calibration targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseEventSummary {
    /// `P(Q₁(η★) > U) = α_η`.
    ExpectedEvents,
    /// `P(Q₂(η★) < U) = α_η`.
    NoEventProb,
}

/// Calibrates `θ_η` from a bound `U` on a noise-event summary. Returns
/// `(θ_η, η_root, residual)`.
pub fn calibrate_eta_noise(
    alpha_eta: f64,
    variant: Variant,
    h: &[f64],
    bound: f64,
    summary: NoiseEventSummary,
) -> Result<(f64, f64, f64)> {
    check_alpha(alpha_eta, "alpha_eta")?;
    let q = |eta: f64| -> Result<f64> {
        let p = NoiseParams::new(variant, 1.0, eta, 0.0)?;
        match summary {
            NoiseEventSummary::ExpectedEvents => q1_expected_events(&p, h).map(|v| v - bound),
            NoiseEventSummary::NoEventProb => q2_no_event_prob(&p, h).map(|v| bound - v),
        }
    };
    let (a, b) = grow_bracket(|l| q(l.exp()), 1e-6f64.ln(), 1e3f64.ln())?;
    let ln_root = bisect(|l| q(l.exp()), a, b, 1e-13, 1e-9)?;
    let eta = ln_root.exp();
    let residual = q(eta)?.abs();
    Ok((-alpha_eta.ln() / eta, eta, residual))
}

/// Solves `γ(μ★) = target` for `μ★ ≥ 0`.
pub fn gamma_inverse(variant: Variant, target: f64) -> Result<f64> {
    if !(target >= 1.0) {
        return Err(invalid(format!("tail asymmetry ratio must be at least 1, got {target}")));
    }
    let g = |m: f64| {
        let p = NoiseParams::tail_corrected(variant, 1.0, 1.0, m)?;
        Ok(noise::tail_summary(&p)?.gamma - target)
    };
    bisect(g, 0.0, 50.0, 1e-15, 0.0)
}

/// `γ⁻¹(2)`.
pub fn gamma_inverse_at_2(variant: Variant) -> Result<f64> {
    gamma_inverse(variant, 2.0)
}

/// `θ_μ` with `P(|γ| > 2) = α_μ` under `μ★ ~ Laplace(θ_μ)`; equals
/// `−2√2 log α_μ` for NIG and `−2 log α_μ` for GAL.
pub fn calibrate_mu(alpha_mu: f64, variant: Variant) -> Result<f64> {
    check_alpha(alpha_mu, "alpha_mu")?;
    Ok(-alpha_mu.ln() / gamma_inverse_at_2(variant)?)
}

/// Inverse of [`calibrate_mu`]: the `α_μ` implied by a given `θ_μ`.
pub fn alpha_mu_for(theta_mu: f64, variant: Variant) -> Result<f64> {
    Ok((-theta_mu * gamma_inverse_at_2(variant)?).exp())
}

/// Inverse of [`calibrate_eta_marginal`] with the closed forms.
pub fn alpha_eta_for(theta_eta: f64, model: MarginalModel, variant: Variant, kappa: f64) -> f64 {
    (-theta_eta * q_inverse_table(model, variant, kappa)).exp()
}

/// Calibration request, as read by the command-line front end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum CalibrationRequest {
    Marginal {
        variant: Variant,
        model: MarginalModel,
        kappa: f64,
        alpha_eta: f64,
        #[serde(default)]
        alpha_mu: Option<f64>,
        #[serde(default = "default_q_method")]
        q_method: QMethod,
    },
    NoiseEvents {
        variant: Variant,
        h: Vec<f64>,
        bound: f64,
        summary: NoiseEventSummary,
        alpha_eta: f64,
        #[serde(default)]
        alpha_mu: Option<f64>,
    },
    Mu {
        variant: Variant,
        alpha_mu: f64,
    },
}

fn default_q_method() -> QMethod {
    QMethod::Table
}

/// Inputs, outputs and residuals of a calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub request: CalibrationRequest,
    pub theta_eta: Option<f64>,
    pub theta_mu: Option<f64>,
    /// `Q⁻¹(U)` or the noise-event root.
    pub eta_root: Option<f64>,
    pub residual: Option<f64>,
    /// Closed-form value, when the root was found numerically.
    pub eta_root_table: Option<f64>,
    pub gamma_inverse_at_2: Option<f64>,
}

impl CalibrationReport {
    pub fn run(request: CalibrationRequest) -> Result<Self> {
        let mu_part = |variant: Variant, alpha: Option<f64>| -> Result<(Option<f64>, Option<f64>)> {
            match alpha {
                Some(a) => Ok((Some(calibrate_mu(a, variant)?), Some(gamma_inverse_at_2(variant)?))),
                None => Ok((None, None)),
            }
        };
        let report = match &request {
            CalibrationRequest::Marginal {
                variant,
                model,
                kappa,
                alpha_eta,
                alpha_mu,
                q_method,
            } => {
                check_alpha(*alpha_eta, "alpha_eta")?;
                let table = q_inverse_table(*model, *variant, *kappa);
                let (root, residual, table_col) = match q_method {
                    QMethod::Table => (table, None, None),
                    QMethod::RootFinding => {
                        let r = q_inverse(*model, *variant, *kappa, &CalibrationOptions::default())?;
                        (r.eta, Some(r.residual), Some(table))
                    }
                };
                let (theta_mu, g) = mu_part(*variant, *alpha_mu)?;
                CalibrationReport {
                    theta_eta: Some(-alpha_eta.ln() / root),
                    theta_mu,
                    eta_root: Some(root),
                    residual,
                    eta_root_table: table_col,
                    gamma_inverse_at_2: g,
                    request: request.clone(),
                }
            }
            CalibrationRequest::NoiseEvents {
                variant,
                h,
                bound,
                summary,
                alpha_eta,
                alpha_mu,
            } => {
                let (theta, root, residual) = calibrate_eta_noise(*alpha_eta, *variant, h, *bound, *summary)?;
                let (theta_mu, g) = mu_part(*variant, *alpha_mu)?;
                CalibrationReport {
                    theta_eta: Some(theta),
                    theta_mu,
                    eta_root: Some(root),
                    residual: Some(residual),
                    eta_root_table: None,
                    gamma_inverse_at_2: g,
                    request: request.clone(),
                }
            }
            CalibrationRequest::Mu { variant, alpha_mu } => {
                let (theta_mu, g) = mu_part(*variant, Some(*alpha_mu))?;
                CalibrationReport {
                    theta_eta: None,
                    theta_mu,
                    eta_root: None,
                    residual: None,
                    eta_root_table: None,
                    gamma_inverse_at_2: g,
                    request: request.clone(),
                }
            }
        };
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_ratio_limits_and_monotonicity() {
        let opts = CalibrationOptions::default();
        let q0 = q_ratio(1e-6, MarginalModel::Matern2D1, Variant::Nig, 1.0, &opts).unwrap();
        assert!((q0 - 1.0).abs() < 1e-9);
        let mut last = q0;
        for &eta in &[0.01, 0.05, 0.1, 0.3, 0.6] {
            let q = q_ratio(eta, MarginalModel::Matern2D1, Variant::Nig, 1.0, &opts).unwrap();
            assert!(q > last, "eta={eta} q={q} last={last}");
            last = q;
        }
    }

    #[test]
    fn one_dimensional_table_rows() {
        for (variant, kappa) in [(Variant::Nig, 1.0), (Variant::Gal, 0.5)] {
            let r = q_inverse(MarginalModel::OuD1, variant, kappa, &CalibrationOptions::default()).unwrap();
            let t = q_inverse_table(MarginalModel::OuD1, variant, kappa);
            assert!(r.residual < 1e-3);
            assert!((r.eta / t - 1.0).abs() < 0.02, "{variant}: {} vs {t}", r.eta);
        }
    }

    #[test]
    fn matern_d1_root_is_twice_ou() {
        for variant in [Variant::Nig, Variant::Gal] {
            let opts = CalibrationOptions {
                q_tol: 1e-6,
                ..Default::default()
            };
            let ou = q_inverse(MarginalModel::OuD1, variant, 2.0, &opts).unwrap().eta;
            let m = q_inverse(MarginalModel::Matern2D1, variant, 2.0, &opts).unwrap().eta;
            assert!((m / (2.0 * ou) - 1.0).abs() < 1e-4, "{variant}: {m} vs {ou}");
        }
    }

    #[test]
    fn marginal_theta() {
        let t = calibrate_eta_marginal((-1.0f64).exp(), MarginalModel::OuD1, Variant::Nig, 0.1566, QMethod::Table).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        let t = calibrate_eta_marginal(1e-5, MarginalModel::Matern2D1, Variant::Nig, 0.2, QMethod::Table).unwrap();
        assert!((t - 8.60).abs() < 0.01);
        let t = calibrate_eta_marginal(0.06, MarginalModel::Matern2D1, Variant::Nig, 0.2, QMethod::Table).unwrap();
        assert!((t - 2.1).abs() < 0.01);
        let mut last = f64::INFINITY;
        for &a in &[1e-4, 0.01, 0.1, 0.5, 0.9] {
            let t = calibrate_eta_marginal(a, MarginalModel::OuD1, Variant::Gal, 1.0, QMethod::Table).unwrap();
            assert!(t > 0.0 && t < last);
            last = t;
        }
        assert!(calibrate_eta_marginal(1.0, MarginalModel::OuD1, Variant::Gal, 1.0, QMethod::Table).is_err());
    }

    #[test]
    fn noise_events() {
        let g = NoiseParams::new(Variant::Nig, 1.0, 0.0, 0.0).unwrap();
        assert!((noise_event_prob(&g, 1.0).unwrap() - 0.0026997960632601866).abs() < 1e-17);
        assert_eq!(q1_expected_events(&g, &[]).unwrap(), 0.0);
        assert_eq!(q2_no_event_prob(&g, &[]).unwrap(), 1.0);
        let q1 = q1_expected_events(&g, &vec![1.0; 100]).unwrap();
        assert!((q1 - 0.27).abs() < 1e-3);
        for variant in [Variant::Nig, Variant::Gal] {
            let mut last = 0.0027;
            for &eta in &[0.05, 0.3, 1.0, 3.0] {
                let p = NoiseParams::new(variant, 1.3, eta, 0.4).unwrap();
                let a = noise_event_prob(&p, 0.7).unwrap();
                let b = noise_event_prob_quadrature(&p, 0.7, 3.0).unwrap();
                assert!((a - b).abs() < 1e-7, "{variant} eta={eta}: {a} vs {b}");
                let flipped = NoiseParams::new(variant, 1.3, eta, -0.4).unwrap();
                assert!((noise_event_prob(&flipped, 0.7).unwrap() - a).abs() < 1e-9);
                let sym = noise_event_prob(&NoiseParams::new(variant, 1.3, eta, 0.0).unwrap(), 0.7).unwrap();
                assert!(sym > last);
                last = sym;
            }
        }
    }

    #[test]
    fn noise_event_calibration() {
        let h = vec![0.01; 100];
        for (summary, bound) in [(NoiseEventSummary::ExpectedEvents, 0.4), (NoiseEventSummary::NoEventProb, 0.7)] {
            let (theta, eta, res) = calibrate_eta_noise(0.1, Variant::Nig, &h, bound, summary).unwrap();
            assert!(res < 1e-6);
            assert!((theta * eta + 0.1f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn mu_calibration() {
        let g = gamma_inverse_at_2(Variant::Nig).unwrap();
        assert!((g - 1.0 / 8f64.sqrt()).abs() < 1e-10);
        assert!((gamma_inverse_at_2(Variant::Gal).unwrap() - 0.5).abs() < 1e-10);
        let t = calibrate_mu(0.01, Variant::Nig).unwrap();
        assert!((t - 13.03).abs() < 0.005);
        assert!((calibrate_mu((-1.0f64).exp(), Variant::Gal).unwrap() - 2.0).abs() < 1e-9);
        // 2 P(μ★ > γ⁻¹(2)) under Laplace(θ) is exp(−θ γ⁻¹(2))
        for &a in &[0.01, 0.2, 0.5] {
            for variant in [Variant::Nig, Variant::Gal] {
                let theta = calibrate_mu(a, variant).unwrap();
                let g = gamma_inverse_at_2(variant).unwrap();
                let prior = crate::priors::ParamPrior::Laplace { rate: theta };
                assert!((2.0 * (1.0 - prior.cdf(g)) - a).abs() < 1e-12);
                assert!((alpha_mu_for(theta, variant).unwrap() - a).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn report_json() {
        let r = CalibrationReport::run(CalibrationRequest::Marginal {
            variant: Variant::Nig,
            model: MarginalModel::Matern2D1,
            kappa: 0.2,
            alpha_eta: 0.06,
            alpha_mu: Some(0.01),
            q_method: QMethod::Table,
        })
        .unwrap();
        let s = serde_json::to_string(&r).unwrap();
        let back: CalibrationReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        assert!(s.contains("\"method\":\"marginal\""));
    }
}
