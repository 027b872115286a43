use rand::Rng;
use rand_distr::StandardNormal;

use super::ObservationModel;
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, SparseCholesky, SparseLu};
use crate::noise::{sample_gig_one, NoiseParams, Variant};
use crate::operators::ModelOperator;
use crate::priors::ParameterSet;
use crate::special::{ln_bessel_k, ln_gamma};

/// `(σ̃, η, μ)` of the mixture form for tail-corrected hyperparameters.
pub fn mixture_params(variant: Variant, hyper: &ParameterSet) -> Result<(f64, f64, f64)> {
    Ok(NoiseParams::tail_corrected(variant, hyper.sigma, hyper.eta_star, hyper.mu_star)?.mixture_form())
}

/// `(p, a, b)` of the GIG full conditional of `V_i` given `Λ_i`, with density
/// `∝ V^{p−1} exp(−(aV + b/V)/2)`.
pub fn v_conditional(variant: Variant, lambda: f64, h: f64, st: f64, eta: f64, mu: f64) -> (f64, f64, f64) {
    let r = (lambda + st * mu * h) / st;
    match variant {
        Variant::Nig => (-1.0, mu * mu + 1.0 / eta, r * r + h * h / eta),
        Variant::Gal => (h / eta - 0.5, mu * mu + 2.0 / eta, r * r),
    }
}

/// Log density of the mixing variable: inverse Gaussian with mean `h` and
/// shape `h²/η` (NIG) or gamma with shape `h/η` and rate `1/η` (GAL).
pub fn ln_mixing_density(variant: Variant, eta: f64, h: f64, v: f64) -> f64 {
    if !(v > 0.0) {
        return f64::NEG_INFINITY;
    }
    match variant {
        Variant::Nig => {
            let shape = h * h / eta;
            0.5 * (shape / (2.0 * std::f64::consts::PI * v * v * v)).ln() - shape * (v - h).powi(2) / (2.0 * h * h * v)
        }
        Variant::Gal => {
            let k = h / eta;
            -k * eta.ln() - ln_gamma(k) + (k - 1.0) * v.ln() - v / eta
        }
    }
}

pub fn ln_mixing_density_sum(variant: Variant, eta: f64, h: &[f64], v: &[f64]) -> f64 {
    h.iter().zip(v).map(|(&hi, &vi)| ln_mixing_density(variant, eta, hi, vi)).sum()
}

/// Precision and linear term of `x | V, y`:
/// `Q = σ̃⁻² Dᵀ V⁻¹ D + σ_ε⁻² AᵀA`, `b = σ̃⁻¹ μ Dᵀ V⁻¹ (V − h) + σ_ε⁻² Aᵀ y`.
pub(crate) fn posterior_system(
    model: &ObservationModel,
    op: &ModelOperator,
    v: &[f64],
    st: f64,
    mu: f64,
    sigma_eps: f64,
) -> (CsrMatrix, Vec<f64>) {
    let d = op.d();
    let w: Vec<f64> = v.iter().map(|&vi| 1.0 / (st * st * vi)).collect();
    let mut q = d.gram_weighted(&w);
    let r: Vec<f64> = v.iter().zip(op.h()).map(|(&vi, &hi)| mu / st * (vi - hi) / vi).collect();
    let mut b = d.matvec_transpose(&r);
    if model.len() > 0 {
        let s2 = sigma_eps * sigma_eps;
        q = q.add_scaled(model.ata(), 1.0 / s2);
        for (bi, ai) in b.iter_mut().zip(model.aty()) {
            *bi += ai / s2;
        }
    }
    (q, b)
}

/// Reusable fill-reducing ordering for the posterior precision, whose
/// sparsity pattern does not change between sweeps.
#[derive(Debug, Clone, Default)]
pub struct Factorizer {
    perm: Option<Vec<usize>>,
}

impl Factorizer {
    pub fn factor(&mut self, q: &CsrMatrix, context: impl FnOnce() -> String) -> Result<SparseCholesky> {
        let result = match &self.perm {
            Some(p) => SparseCholesky::with_permutation(q, p.clone()),
            None => SparseCholesky::new(q),
        };
        match result {
            Ok(c) => {
                if self.perm.is_none() {
                    self.perm = Some(c.permutation().to_vec());
                }
                Ok(c)
            }
            Err(Error::NotPositiveDefinite { row, context: inner }) => Err(Error::NotPositiveDefinite {
                row,
                context: format!("{inner}; {}", context()),
            }),
            Err(e) => Err(e),
        }
    }
}

/// Exact draw from `x | V, y, θ`.
pub fn gibbs_x<R: Rng + ?Sized>(
    model: &ObservationModel,
    op: &ModelOperator,
    v: &[f64],
    hyper: &ParameterSet,
    factorizer: &mut Factorizer,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let (st, _, mu) = mixture_params(model.variant, hyper)?;
    let (q, b) = posterior_system(model, op, v, st, mu, hyper.sigma_eps);
    let chol = factorizer.factor(&q, || format!("x | V conditional at {hyper:?}"))?;
    let mean = chol.solve(&b);
    let z: Vec<f64> = (0..mean.len()).map(|_| rng.sample(StandardNormal)).collect();
    let dev = chol.solve_lt(&z);
    Ok(mean.iter().zip(dev).map(|(m, e)| m + e).collect())
}

/// Posterior mean of `x | V, y, θ`.
pub fn conditional_mean_x(
    model: &ObservationModel,
    op: &ModelOperator,
    v: &[f64],
    hyper: &ParameterSet,
    factorizer: &mut Factorizer,
) -> Result<Vec<f64>> {
    let (st, _, mu) = mixture_params(model.variant, hyper)?;
    let (q, b) = posterior_system(model, op, v, st, mu, hyper.sigma_eps);
    Ok(factorizer.factor(&q, || format!("x | V conditional at {hyper:?}"))?.solve(&b))
}

/// Independent GIG draws of every `V_i` given `Λ = D x`. In the Gaussian
/// limit `η = 0` the mixing variables equal `h`.
pub fn gibbs_v<R: Rng + ?Sized>(
    variant: Variant,
    op: &ModelOperator,
    x: &[f64],
    hyper: &ParameterSet,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let (st, eta, mu) = mixture_params(variant, hyper)?;
    if eta == 0.0 {
        return Ok(op.h().to_vec());
    }
    let lambda = op.d().matvec(x);
    Ok(lambda
        .iter()
        .zip(op.h())
        .map(|(&l, &h)| {
            let (p, a, b) = v_conditional(variant, l, h, st, eta, mu);
            sample_gig_one(p, a, b, rng).max(f64::MIN_POSITIVE)
        })
        .collect())
}

/// `log p(x | V, θ) = Σ log N(Λ_i; σ̃μ(V_i − h_i), σ̃² V_i) + log |det D|`.
pub fn ln_x_given_v(op: &ModelOperator, ln_abs_det_d: f64, x: &[f64], v: &[f64], st: f64, mu: f64) -> f64 {
    let lambda = op.d().matvec(x);
    let mut acc = ln_abs_det_d;
    for ((&l, &vi), &hi) in lambda.iter().zip(v).zip(op.h()) {
        acc += crate::special::ln_norm_pdf(l, st * mu * (vi - hi), st * st * vi);
    }
    acc
}

/// Log density of `Λ_i` with the mixing variable integrated out (NIG or
/// generalized asymmetric Laplace), from the GIG integral
/// `∫ V^{q−1} exp(−(AV + B/V)/2) dV = 2 (B/A)^{q/2} K_q(√(AB))`.
pub fn ln_noise_density(variant: Variant, lambda: f64, h: f64, st: f64, eta: f64, mu: f64) -> f64 {
    if eta == 0.0 {
        return crate::special::ln_norm_pdf(lambda, 0.0, st * st * h);
    }
    let r = (lambda + st * mu * h) / st;
    let (p, a, b) = match variant {
        Variant::Nig => (-0.5, 1.0 / eta, h * h / eta),
        Variant::Gal => (h / eta, 2.0 / eta, 0.0),
    };
    let ln_norm = match variant {
        Variant::Nig => 0.5 * h.ln() - std::f64::consts::LN_2 - ln_bessel_k(-0.5, h / eta),
        Variant::Gal => -(h / eta) * eta.ln() - ln_gamma(h / eta),
    };
    let q = p - 0.5;
    let big_a = a + mu * mu;
    let big_b = (b + r * r).max(1e-300);
    -0.5 * (2.0 * std::f64::consts::PI * st * st).ln()
        + r * mu
        + ln_norm
        + std::f64::consts::LN_2
        + 0.5 * q * (big_b / big_a).ln()
        + ln_bessel_k(q, (big_a * big_b).sqrt())
}

/// `log p(x | θ)` with `V` integrated out.
pub fn ln_x_given_theta(
    variant: Variant,
    op: &ModelOperator,
    ln_abs_det_d: f64,
    x: &[f64],
    st: f64,
    eta: f64,
    mu: f64,
) -> f64 {
    let lambda = op.d().matvec(x);
    ln_abs_det_d
        + lambda
            .iter()
            .zip(op.h())
            .map(|(&l, &h)| ln_noise_density(variant, l, h, st, eta, mu))
            .sum::<f64>()
}

/// `log p(y | x, σ_ε)`.
pub fn ln_y_given_x(model: &ObservationModel, x: &[f64], sigma_eps: f64) -> f64 {
    let ax = model.a.matvec(x);
    let s2 = sigma_eps * sigma_eps;
    model
        .y
        .iter()
        .zip(ax)
        .map(|(&y, m)| crate::special::ln_norm_pdf(y, m, s2))
        .sum()
}

/// `log p(y | V, θ)` with `x` integrated out, via
/// `log N(r; 0, σ_ε² I + A Q⁻¹ Aᵀ) = −N/2 log 2π − N log σ_ε + ½ log|Q| − ½ log|Q_y|
///  − ½ (σ_ε⁻² rᵀr − cᵀ Q_y⁻¹ c)`, with `r = y − A m`, `c = σ_ε⁻² Aᵀ r`.
pub fn ln_y_given_v(
    model: &ObservationModel,
    op: &ModelOperator,
    lu: &SparseLu,
    v: &[f64],
    hyper: &ParameterSet,
    factorizer: &mut Factorizer,
) -> Result<f64> {
    if model.len() == 0 {
        return Ok(0.0);
    }
    let (st, _, mu) = mixture_params(model.variant, hyper)?;
    let n = op.dim() as f64;
    let nobs = model.len() as f64;
    let s2 = hyper.sigma_eps * hyper.sigma_eps;
    let lam_mean: Vec<f64> = v.iter().zip(op.h()).map(|(&vi, &hi)| st * mu * (vi - hi)).collect();
    let m = if mu == 0.0 {
        vec![0.0; op.dim()]
    } else {
        lu.solve(&lam_mean)
    };
    let am = model.a.matvec(&m);
    let r: Vec<f64> = model.y.iter().zip(&am).map(|(y, a)| y - a).collect();
    let c: Vec<f64> = model.a.matvec_transpose(&r).iter().map(|x| x / s2).collect();
    let w: Vec<f64> = v.iter().map(|&vi| 1.0 / (st * st * vi)).collect();
    let q_prior_ln_det = 2.0 * lu.ln_abs_det() - 2.0 * n * st.ln() - v.iter().map(|vi| vi.ln()).sum::<f64>();
    let qy = op.d().gram_weighted(&w).add_scaled(model.ata(), 1.0 / s2);
    let chol = factorizer.factor(&qy, || format!("collapsed likelihood at {hyper:?}"))?;
    let sol = chol.solve(&c);
    let quad = r.iter().map(|x| x * x).sum::<f64>() / s2 - c.iter().zip(&sol).map(|(a, b)| a * b).sum::<f64>();
    Ok(-0.5 * nobs * (2.0 * std::f64::consts::PI).ln() - nobs * hyper.sigma_eps.ln() + 0.5 * q_prior_ln_det
        - 0.5 * chol.ln_det()
        - 0.5 * quad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::ar1_operator;
    use crate::quad::{integrate_with_breaks, QuadOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hyper(sigma: f64, eta_star: f64, mu_star: f64, sigma_eps: f64) -> ParameterSet {
        ParameterSet {
            sigma,
            structure: None,
            eta_star,
            mu_star,
            sigma_eps,
        }
    }

    /// Unnormalized log posterior of `V` given `Λ`, evaluated directly from
    /// the Gaussian kernel and the mixing density.
    fn grid_moments(variant: Variant, lambda: f64, h: f64, st: f64, eta: f64, mu: f64) -> (f64, f64) {
        let lp = |v: f64| {
            crate::special::ln_norm_pdf(lambda, st * mu * (v - h), st * st * v) + ln_mixing_density(variant, eta, h, v)
        };
        // locate the mode region on a log grid
        let grid: Vec<f64> = (0..4000).map(|k| 10f64.powf(-12.0 + 16.0 * k as f64 / 3999.0)).collect();
        let peak = grid.iter().map(|&v| lp(v)).fold(f64::NEG_INFINITY, f64::max);
        let vmax = grid.iter().rev().find(|&&v| lp(v) > peak - 60.0).copied().unwrap();
        let f = |v: f64, k: i32| if v <= 0.0 { 0.0 } else { v.powi(k) * (lp(v) - peak).exp() };
        let breaks: Vec<f64> = grid.iter().copied().filter(|&v| v < vmax).step_by(200).collect();
        let opts = QuadOptions::tol(0.0, 1e-10);
        let z = integrate_with_breaks(|v| f(v, 0), 0.0, vmax, &breaks, opts).unwrap().value;
        let m1 = integrate_with_breaks(|v| f(v, 1), 0.0, vmax, &breaks, opts).unwrap().value / z;
        let m2 = integrate_with_breaks(|v| f(v, 2), 0.0, vmax, &breaks, opts).unwrap().value / z;
        (m1, (m2 - m1 * m1).sqrt())
    }

    fn gig_moments(p: f64, a: f64, b: f64) -> (f64, f64) {
        use crate::special::ln_bessel_k;
        let w = (a * b).sqrt();
        let s = (b / a).sqrt();
        let k0 = ln_bessel_k(p, w);
        let m1 = s * (ln_bessel_k(p + 1.0, w) - k0).exp();
        let m2 = s * s * (ln_bessel_k(p + 2.0, w) - k0).exp();
        (m1, (m2 - m1 * m1).sqrt())
    }

    #[test]
    fn v_conditional_matches_grid_posterior() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut cases = vec![(Variant::Nig, 0.0, 1.0, 1.0, 0.5, 0.0)];
        for _ in 0..6 {
            for variant in [Variant::Nig, Variant::Gal] {
                let lambda: f64 = rng.random_range(-3.0..3.0);
                let h: f64 = rng.random_range(0.3..1.5);
                let eta: f64 = rng.random_range(0.05..2.0);
                let mu: f64 = rng.random_range(-1.5..1.5);
                let st = rng.random_range(0.5..2.0) / (1.0 + eta * mu * mu).sqrt();
                // GAL with b = 0 and p ≤ 0 is improper only when Λ hits the pole exactly
                cases.push((variant, lambda, h, st, eta, mu));
            }
        }
        for (variant, lambda, h, st, eta, mu) in cases {
            let (p, a, b) = v_conditional(variant, lambda, h, st, eta, mu);
            let (gm, gs) = grid_moments(variant, lambda, h, st, eta, mu);
            let (am, asd) = gig_moments(p, a, b);
            assert!((am / gm - 1.0).abs() < 1e-6, "{variant} mean {am} vs {gm}");
            assert!((asd / gs - 1.0).abs() < 1e-5, "{variant} sd {asd} vs {gs}");
            // and the sampler reproduces them
            let draws: Vec<f64> = (0..40_000).map(|_| sample_gig_one(p, a, b, &mut rng)).collect();
            let m = crate::stats::mean(&draws);
            let s = crate::stats::variance(&draws).sqrt();
            assert!((m - gm).abs() < 4.0 * gs / 200.0, "{variant} sample mean {m} vs {gm}");
            assert!((s / gs - 1.0).abs() < 0.05, "{variant} sample sd {s} vs {gs}");
        }
    }

    #[test]
    fn gaussian_limit_concentrates() {
        for variant in [Variant::Nig, Variant::Gal] {
            let (p, a, b) = v_conditional(variant, 0.8, 1.0, 1.0, 1e-4, 0.0);
            let (m, s) = gig_moments(p, a, b);
            assert!((m - 1.0).abs() < 1e-3 && s < 0.02, "{variant} {m} {s}");
        }
    }

    #[test]
    fn noise_density_integrates_mixture() {
        for (variant, lambda, h, st, eta, mu) in [
            (Variant::Nig, 0.7, 1.0, 0.9, 0.5, 0.4),
            (Variant::Nig, -2.0, 0.4, 1.2, 2.0, -1.0),
            (Variant::Gal, 0.3, 1.0, 0.8, 0.3, 0.5),
            (Variant::Gal, -1.5, 0.5, 1.0, 0.2, -0.7),
            (Variant::Gal, 0.9, 1.0, 1.0, 0.9, 0.0),
        ] {
            let integrand = |v: f64| {
                (crate::special::ln_norm_pdf(lambda, st * mu * (v - h), st * st * v) + ln_mixing_density(variant, eta, h, v)).exp()
            };
            let want = integrate_with_breaks(integrand, 0.0, 400.0, &[1e-3, 0.01, 0.1, h, 5.0, 30.0], QuadOptions::tol(1e-14, 1e-11))
                .unwrap()
                .value;
            let got = ln_noise_density(variant, lambda, h, st, eta, mu).exp();
            assert!((got / want - 1.0).abs() < 1e-8, "{variant}: {got} vs {want}");
            let total = integrate_with_breaks(
                |l| ln_noise_density(variant, l, h, st, eta, mu).exp(),
                -60.0,
                60.0,
                &[-st * mu * h - 0.01, -st * mu * h + 0.01],
                QuadOptions::tol(1e-12, 1e-10),
            )
            .unwrap()
            .value;
            assert!((total - 1.0).abs() < 1e-7, "{variant} mass {total}");
        }
        let g = ln_noise_density(Variant::Gal, 0.3, 1.0, 1.0, 1e-5, 0.2);
        assert!((g - crate::special::ln_norm_pdf(0.3, 0.0, 1.0)).abs() < 1e-3);
    }

    #[test]
    fn mixing_densities_normalize() {
        for (variant, eta, h) in [(Variant::Nig, 0.5, 1.0), (Variant::Nig, 2.0, 0.3), (Variant::Gal, 0.4, 1.0), (Variant::Gal, 0.1, 0.5)] {
            let z = integrate_with_breaks(
                |v| ln_mixing_density(variant, eta, h, v).exp(),
                0.0,
                200.0,
                &[0.01, 0.1, h, 5.0, 20.0],
                QuadOptions::tol(1e-12, 1e-10),
            )
            .unwrap()
            .value;
            assert!((z - 1.0).abs() < 1e-8, "{variant} {eta} {h}: {z}");
        }
    }

    fn dense_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = a.len();
        let mut m: Vec<Vec<f64>> = a.iter().enumerate().map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| (i == j) as u8 as f64));
            row
        }).collect();
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
            m.swap(c, p);
            let d = m[c][c];
            for v in m[c].iter_mut() {
                *v /= d;
            }
            for r in 0..n {
                if r != c {
                    let f = m[r][c];
                    let row_c = m[c].clone();
                    for (v, w) in m[r].iter_mut().zip(row_c) {
                        *v -= f * w;
                    }
                }
            }
        }
        m.into_iter().map(|r| r[n..].to_vec()).collect()
    }

    #[test]
    fn x_draws_without_data_follow_prior() {
        let op = ar1_operator(0.6, 4).unwrap();
        let model = ObservationModel::prior_only(op.clone(), Variant::Nig);
        let v = [0.5, 1.7, 0.9, 1.2];
        let hp = hyper(1.3, 0.8, 0.4, 1.0);
        let (st, _, mu) = mixture_params(Variant::Nig, &hp).unwrap();
        let dinv = dense_inverse(&op.d().to_dense());
        let lam_mean: Vec<f64> = v.iter().zip(op.h()).map(|(vi, hi)| st * mu * (vi - hi)).collect();
        let mean: Vec<f64> = dinv.iter().map(|r| r.iter().zip(&lam_mean).map(|(a, b)| a * b).sum()).collect();
        let cov = |i: usize, j: usize| (0..4).map(|k| dinv[i][k] * dinv[j][k] * st * st * v[k]).sum::<f64>();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut f = Factorizer::default();
        let n = 100_000;
        let draws: Vec<Vec<f64>> = (0..n).map(|_| gibbs_x(&model, &op, &v, &hp, &mut f, &mut rng).unwrap()).collect();
        for i in 0..4 {
            let m = draws.iter().map(|d| d[i]).sum::<f64>() / n as f64;
            assert!((m - mean[i]).abs() < 4.0 * (cov(i, i) / n as f64).sqrt(), "mean {i}");
            for j in 0..=i {
                let c = draws.iter().map(|d| (d[i] - mean[i]) * (d[j] - mean[j])).sum::<f64>() / n as f64;
                let se = ((cov(i, i) * cov(j, j) + cov(i, j).powi(2)) / n as f64).sqrt();
                assert!((c - cov(i, j)).abs() < 4.0 * se, "cov {i},{j}: {c} vs {}", cov(i, j));
            }
        }
    }

    #[test]
    fn scalar_conjugate_posterior() {
        // x ~ N(0, σ² v), y = x + ε: posterior precision 1/(σ² v) + 1/σ_ε²
        let op = ModelOperator::custom(CsrMatrix::identity(1), vec![1.0]).unwrap();
        let model = ObservationModel::new(vec![1.7], CsrMatrix::identity(1), op.clone(), Variant::Gal).unwrap();
        let hp = hyper(0.9, 0.0, 0.0, 0.6);
        let v = [1.0];
        let prec = 1.0 / (0.81) + 1.0 / 0.36;
        let post_mean = (1.7 / 0.36) / prec;
        let mut f = Factorizer::default();
        assert!((conditional_mean_x(&model, &op, &v, &hp, &mut f).unwrap()[0] - post_mean).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let d: Vec<f64> = (0..n).map(|_| gibbs_x(&model, &op, &v, &hp, &mut f, &mut rng).unwrap()[0]).collect();
        let var = crate::stats::variance(&d);
        assert!((crate::stats::mean(&d) - post_mean).abs() < 4.0 * (1.0 / prec / n as f64).sqrt());
        assert!((var * prec - 1.0).abs() < 0.015);
        // collapsed likelihood is the N(0, σ² + σ_ε²) density
        let ll = ln_y_given_v(&model, &op, &op.lu().unwrap(), &v, &hp, &mut f).unwrap();
        assert!((ll - crate::special::ln_norm_pdf(1.7, 0.0, 0.81 + 0.36)).abs() < 1e-12);
    }

    #[test]
    fn collapsed_likelihood_matches_dense_gaussian() {
        let op = ar1_operator(-0.4, 5).unwrap();
        let a = CsrMatrix::from_dense(&[
            vec![1.0, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.5, 0.5, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.2, 0.8],
        ]);
        let y = vec![0.3, -1.2, 2.5];
        let model = ObservationModel::new(y.clone(), a.clone(), op.clone(), Variant::Nig).unwrap();
        let v = [0.4, 1.1, 2.3, 0.7, 1.0];
        let hp = hyper(1.2, 0.7, -0.5, 0.45);
        let (st, _, mu) = mixture_params(Variant::Nig, &hp).unwrap();
        let dinv = dense_inverse(&op.d().to_dense());
        let lam_mean: Vec<f64> = v.iter().zip(op.h()).map(|(vi, hi)| st * mu * (vi - hi)).collect();
        let mx: Vec<f64> = dinv.iter().map(|r| r.iter().zip(&lam_mean).map(|(a, b)| a * b).sum()).collect();
        let ad = a.to_dense();
        let cx = |i: usize, j: usize| (0..5).map(|k| dinv[i][k] * dinv[j][k] * st * st * v[k]).sum::<f64>();
        let sy: Vec<Vec<f64>> = (0..3)
            .map(|r| {
                (0..3)
                    .map(|s| {
                        let mut acc = if r == s { 0.45 * 0.45 } else { 0.0 };
                        for i in 0..5 {
                            for j in 0..5 {
                                acc += ad[r][i] * cx(i, j) * ad[s][j];
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let my: Vec<f64> = (0..3).map(|r| (0..5).map(|i| ad[r][i] * mx[i]).sum()).collect();
        let inv = dense_inverse(&sy);
        let det = sy[0][0] * (sy[1][1] * sy[2][2] - sy[1][2] * sy[2][1]) - sy[0][1] * (sy[1][0] * sy[2][2] - sy[1][2] * sy[2][0])
            + sy[0][2] * (sy[1][0] * sy[2][1] - sy[1][1] * sy[2][0]);
        let r: Vec<f64> = (0..3).map(|i| y[i] - my[i]).collect();
        let q: f64 = (0..3).map(|i| (0..3).map(|j| r[i] * inv[i][j] * r[j]).sum::<f64>()).sum();
        let expect = -1.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln() - 0.5 * q;
        let got = ln_y_given_v(&model, &op, &op.lu().unwrap(), &v, &hp, &mut Factorizer::default()).unwrap();
        assert!((got - expect).abs() < 1e-10, "{got} vs {expect}");
    }
}
