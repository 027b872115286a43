use num_complex::Complex64;

use super::{NoiseParams, Variant};

/// `log E[exp(i t Λ)]` for a component with weight `h`.
pub fn log_cf(p: &NoiseParams, h: f64, t: f64) -> Complex64 {
    log_cf_complex(p, h, Complex64::new(t, 0.0))
}

/// Analytic continuation of [`log_cf`] to complex `t` (valid inside the
/// strip of analyticity around the real axis).
pub fn log_cf_complex(p: &NoiseParams, h: f64, t: Complex64) -> Complex64 {
    let (st, eta, mu) = p.mixture_form();
    let i = Complex64::i();
    // w = log E[exp(s V)] / E[V] derivative argument: i t σ̃ μ − σ̃² t² / 2
    let w = i * t * st * mu - 0.5 * st * st * t * t;
    let drift = -i * t * st * mu;
    if eta == 0.0 {
        return h * (drift + w);
    }
    let z = eta * w;
    let g = match p.variant {
        // (1 − √(1 − 2z)) / η written without cancellation
        Variant::Nig => 2.0 * w / (1.0 + (1.0 - 2.0 * z).sqrt()),
        Variant::Gal => {
            if z.norm() < 1e-3 {
                // −log(1 − z)/η = w (1 + z/2 + z²/3 + ...)
                let mut s = Complex64::new(0.0, 0.0);
                let mut zk = Complex64::new(1.0, 0.0);
                for k in 1..=8 {
                    s += zk / k as f64;
                    zk *= z;
                }
                w * s
            } else {
                -(1.0 - z).ln() / eta
            }
        }
    };
    h * (drift + g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{cumulants, Variant};

    #[test]
    fn symmetric_nig_closed_form() {
        let p = NoiseParams::new(Variant::Nig, 1.4, 0.6, 0.0).unwrap();
        for &t in &[0.0f64, 0.3, 1.0, 5.0, 40.0] {
            let expect = (2.0 / 0.6) * (1.0 - (1.0 + 0.6 * 1.96 * t * t).sqrt());
            let got = log_cf(&p, 2.0, t);
            assert!((got.re - expect).abs() < 1e-12 * expect.abs().max(1.0));
            assert!(got.im.abs() < 1e-14);
        }
    }

    #[test]
    fn zero_and_curvature() {
        for v in [Variant::Nig, Variant::Gal] {
            let p = NoiseParams::new(v, 0.9, 0.7, -0.4).unwrap();
            assert_eq!(log_cf(&p, 1.3, 0.0), Complex64::new(0.0, 0.0));
            let d = 1e-4;
            let second = (log_cf(&p, 1.3, d) - 2.0 * log_cf(&p, 1.3, 0.0) + log_cf(&p, 1.3, -d)) / (d * d);
            assert!((second.re / (-1.3 * 0.81) - 1.0).abs() < 1e-6);
        }
    }

    /// Cumulants from Cauchy's integral formula applied to `log φ(−i s)`.
    fn contour_cumulants(p: &NoiseParams, h: f64, r: f64) -> [f64; 4] {
        let n = 256;
        let mut out = [0.0; 4];
        for (k, o) in out.iter_mut().enumerate() {
            let order = k + 1;
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                let s = Complex64::from_polar(r, th);
                // K(s) = log φ(−i s)
                let ks = log_cf_complex(p, h, -Complex64::i() * s);
                acc += ks * Complex64::from_polar(1.0, -(order as f64) * th);
            }
            let fact: f64 = (1..=order).map(|v| v as f64).product();
            *o = (acc / n as f64).re * fact / r.powi(order as i32);
        }
        out
    }

    #[test]
    fn cumulants_match_cf_derivatives() {
        for v in [Variant::Nig, Variant::Gal] {
            for &(s, e, m, h) in &[(1.0, 0.5, 0.8, 1.0), (0.7, 2.0, -1.5, 0.4), (2.0, 0.05, 3.0, 2.5)] {
                let p = NoiseParams::new(v, s, e, m).unwrap();
                let c = cumulants(&p, h);
                let num = contour_cumulants(&p, h, 0.05 / s);
                assert!(num[0].abs() < 1e-9, "mean {v:?} {num:?}");
                for k in 1..4 {
                    assert!((num[k] / c[k] - 1.0).abs() < 1e-6, "{v:?} order {} {} vs {}", k + 1, num[k], c[k]);
                }
            }
        }
    }
}
