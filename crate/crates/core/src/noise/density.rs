use super::{to_classical, NoiseParams, Variant};
use crate::special::{ln_bessel_k, ln_gamma, ln_norm_pdf};

/// Log density of a component with weight `h`.
///
/// For GAL with `λ = h/η ≤ 1/2` the density has an integrable pole at
/// `x = μ̃`, where `+∞` is returned.
pub fn log_density(p: &NoiseParams, h: f64, x: f64) -> f64 {
    if p.to_variance_corrected().eta == 0.0 {
        return ln_norm_pdf(x, 0.0, h * p.sigma * p.sigma);
    }
    let c = match to_classical(p, h) {
        Ok(c) => c,
        Err(_) => return f64::NAN,
    };
    let d = x - c.mu_tilde;
    let gap = c.alpha * c.alpha - c.beta * c.beta;
    match p.variant {
        Variant::Nig => {
            let q = c.delta.hypot(d);
            (c.alpha * c.delta / std::f64::consts::PI).ln() + ln_bessel_k(1.0, c.alpha * q) - q.ln()
                + c.delta * gap.sqrt()
                + c.beta * d
        }
        Variant::Gal => {
            let lam = c.lambda;
            let nu = lam - 0.5;
            let norm = lam * gap.ln()
                - 0.5 * std::f64::consts::PI.ln()
                - nu * (2.0 * c.alpha).ln()
                - ln_gamma(lam);
            let ad = d.abs();
            if ad == 0.0 {
                if nu <= 0.0 {
                    return f64::INFINITY;
                }
                // |d|^ν K_ν(α|d|) → Γ(ν) 2^{ν−1} α^{−ν}
                return norm + ln_gamma(nu) + (nu - 1.0) * std::f64::consts::LN_2 - nu * c.alpha.ln();
            }
            norm + nu * ad.ln() + ln_bessel_k(nu.abs(), c.alpha * ad) + c.beta * d
        }
    }
}

pub fn density(p: &NoiseParams, h: f64, x: f64) -> f64 {
    log_density(p, h, x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{cumulants, log_cf, tail_summary};
    use crate::quad::{integrate_with_breaks, QuadOptions};
    use crate::special::bessel_k;

    fn mass(p: &NoiseParams, h: f64, lo: f64, hi: f64) -> f64 {
        let mt = if p.variant == Variant::Gal { to_classical(p, h).unwrap().mu_tilde } else { 0.0 };
        integrate_with_breaks(|x| density(p, h, x), lo, hi, &[mt, 0.0], QuadOptions::tol(1e-12, 1e-10))
            .unwrap()
            .value
    }

    #[test]
    fn nig_reference_value() {
        let p = NoiseParams::new(Variant::Nig, 1.0, 1.0, 0.0).unwrap();
        let expect = std::f64::consts::E * bessel_k(1.0, 1.0) / std::f64::consts::PI;
        assert!((density(&p, 1.0, 0.0) - expect).abs() < 1e-14);
        assert!((expect - 0.520_803_83).abs() < 1e-8);
    }

    #[test]
    fn normalization_and_moments() {
        let cases = [
            (Variant::Nig, 1.0f64, 1.0, 0.0, 1.0f64),
            (Variant::Nig, 0.5, 0.2, 1.5, 2.0),
            (Variant::Gal, 1.0, 0.5, 0.0, 1.0),
            (Variant::Gal, 1.2, 0.3, -1.0, 0.8),
            (Variant::Gal, 1.0, 1.5, 0.5, 1.0),
        ];
        for &(v, s, e, m, h) in &cases {
            let p = NoiseParams::new(v, s, e, m).unwrap();
            let t = tail_summary(&p).unwrap();
            let span = 60.0 / t.xi + 20.0 * s * h.sqrt();
            let total = mass(&p, h, -span, span);
            assert!((total - 1.0).abs() < 1e-6, "{v:?} mass {total}");
            let mt = if v == Variant::Gal { to_classical(&p, h).unwrap().mu_tilde } else { 0.0 };
            let var = integrate_with_breaks(|x| x * x * density(&p, h, x), -span, span, &[mt, 0.0], QuadOptions::tol(1e-12, 1e-10))
                .unwrap()
                .value;
            assert!((var / cumulants(&p, h)[1] - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn gal_pole() {
        let p = NoiseParams::new(Variant::Gal, 1.0, 4.0, 0.2).unwrap();
        let mt = to_classical(&p, 1.0).unwrap().mu_tilde;
        assert_eq!(log_density(&p, 1.0, mt), f64::INFINITY);
        let q = NoiseParams::new(Variant::Gal, 1.0, 0.5, 0.2).unwrap();
        let mt = to_classical(&q, 1.0).unwrap().mu_tilde;
        let at = density(&q, 1.0, mt);
        let near = density(&q, 1.0, mt + 1e-7);
        assert!((at / near - 1.0).abs() < 1e-5);
    }

    #[test]
    fn gaussian_limit() {
        let p = NoiseParams::new(Variant::Nig, 1.0, 1e-4, 0.0).unwrap();
        let mut sup: f64 = 0.0;
        for k in -60..=60 {
            let x = k as f64 * 0.1;
            let g = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
            sup = sup.max((density(&p, 1.0, x) - g).abs());
        }
        assert!(sup < 1e-3, "sup {sup}");
        let g = NoiseParams::gaussian(Variant::Gal, 2.0).unwrap();
        assert!((log_density(&g, 1.0, 1.0) - ln_norm_pdf(1.0, 0.0, 4.0)).abs() < 1e-15);
    }

    #[test]
    fn fourier_transform_matches_cf() {
        for &(v, e, m) in &[(Variant::Nig, 0.5, 0.7), (Variant::Gal, 0.4, -0.6)] {
            let p = NoiseParams::new(v, 1.0, e, m).unwrap();
            let mt = to_classical(&p, 1.0).unwrap().mu_tilde;
            for &t in &[0.25, 1.0, 2.5] {
                let re = integrate_with_breaks(|x| density(&p, 1.0, x) * (t * x).cos(), -120.0, 120.0, &[mt], QuadOptions::tol(1e-12, 1e-10)).unwrap().value;
                let im = integrate_with_breaks(|x| density(&p, 1.0, x) * (t * x).sin(), -120.0, 120.0, &[mt], QuadOptions::tol(1e-12, 1e-10)).unwrap().value;
                let phi = log_cf(&p, 1.0, t).exp();
                assert!((phi.re - re).abs() < 1e-6 && (phi.im - im).abs() < 1e-6, "{v:?} t={t}");
            }
        }
    }

    /// Least-squares fit of `a + b x + c ln x`, returning `b`.
    fn fitted_slope(xs: &[f64], ys: &[f64]) -> f64 {
        let mut m = [[0.0; 4]; 3];
        for (&x, &y) in xs.iter().zip(ys) {
            let basis = [1.0, x, x.ln()];
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += basis[i] * basis[j];
                }
                m[i][3] += basis[i] * y;
            }
        }
        for k in 0..3 {
            for i in k + 1..3 {
                let f = m[i][k] / m[k][k];
                for j in k..4 {
                    m[i][j] -= f * m[k][j];
                }
            }
        }
        let c = m[2][3] / m[2][2];
        let b = (m[1][3] - m[1][2] * c) / m[1][1];
        b
    }

    #[test]
    fn right_tail_slope() {
        for v in [Variant::Nig, Variant::Gal] {
            for &sigma in &[1.0, 0.5] {
                let p = NoiseParams::new(v, sigma, 0.5, 0.8).unwrap();
                let t = tail_summary(&p).unwrap();
                let xs: Vec<f64> = (0..=40).map(|k| sigma * (20.0 + 0.5 * k as f64)).collect();
                let ys: Vec<f64> = xs.iter().map(|&x| log_density(&p, 1.0, x)).collect();
                let slope = fitted_slope(&xs, &ys);
                assert!((slope / -t.xi_right - 1.0).abs() < 0.02, "{v:?} slope {slope} vs {}", t.xi_right);
            }
        }
    }
}
