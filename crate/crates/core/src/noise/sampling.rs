use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::{NoiseParams, Variant};
use crate::error::{invalid, Result};

/// Inverse Gaussian draw with mean `m` and shape `lambda`
/// (Michael–Schucany–Haas transformation with multiple roots).
pub fn sample_ig<R: Rng + ?Sized>(m: f64, lambda: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    let y = z * z;
    let my = m * y;
    // larger root, computed without cancellation; the smaller is m²/x2
    let x2 = m + m * (my + (4.0 * lambda * my + my * my).sqrt()) / (2.0 * lambda);
    let x1 = m * m / x2;
    let u: f64 = rng.random();
    if u <= m / (m + x1) {
        x1
    } else {
        x2
    }
}

/// Gamma draw with the given shape and rate, floored at the smallest
/// positive normal number (tiny shapes underflow otherwise).
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    let g = Gamma::new(shape, 1.0 / rate).expect("positive gamma parameters");
    g.sample(rng).max(f64::MIN_POSITIVE)
}

/// Generalized inverse Gaussian draws with density
/// `∝ x^{p−1} exp(−(a x + b/x)/2)`.
pub fn sample_gig<R: Rng + ?Sized>(p: f64, a: f64, b: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if !(a >= 0.0 && b >= 0.0) || (a == 0.0 && b == 0.0) || !p.is_finite() {
        return Err(invalid(format!("invalid GIG parameters p={p}, a={a}, b={b}")));
    }
    if (a == 0.0 && p >= 0.0) || (b == 0.0 && p <= 0.0) {
        return Err(invalid(format!("improper GIG with p={p}, a={a}, b={b}")));
    }
    Ok((0..n).map(|_| sample_gig_one(p, a, b, rng)).collect())
}

/// Single GIG draw; parameters are assumed valid (see [`sample_gig`]).
///
/// Uses the Hörmann–Leydold selection between ratio-of-uniforms with and
/// without mode shift and the Devroye-type hat for small `ω = √(ab)`.
pub fn sample_gig_one<R: Rng + ?Sized>(p: f64, a: f64, b: f64, rng: &mut R) -> f64 {
    let omega = (a * b).sqrt();
    if omega < 1e-12 {
        if p > 0.0 {
            return sample_gamma(p, 0.5 * a, rng);
        }
        if p < 0.0 {
            return 1.0 / sample_gamma(-p, 0.5 * b, rng);
        }
    }
    let alpha = (b / a).sqrt();
    let lambda = p.abs();
    let x = if lambda > 2.0 || omega > 3.0 {
        rou_shift(lambda, omega, rng)
    } else if lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
        rou_noshift(lambda, omega, rng)
    } else {
        small_omega(lambda, omega, rng)
    };
    if p < 0.0 {
        alpha / x
    } else {
        alpha * x
    }
}

fn gig_mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        ((lambda - 1.0).hypot(omega) + (lambda - 1.0)) / omega
    } else {
        omega / ((1.0 - lambda).hypot(omega) + (1.0 - lambda))
    }
}

fn rou_noshift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lambda + 1.0) + (lambda + 1.0).hypot(omega)) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let u = um * rng.random::<f64>();
        let v: f64 = rng.random();
        let x = u / v;
        if v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn rou_shift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    // roots of y³ + a y² + b y + c = 0 bracket the mode
    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let fi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt())).clamp(-1.0, 1.0).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - a / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * std::f64::consts::PI).cos() - a / 3.0;
    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();
    loop {
        let u = uminus + rng.random::<f64>() * (uplus - uminus);
        let v: f64 = rng.random();
        let x = u / v + xm;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

/// Three-piece hat for `0 ≤ λ < 1`, `ω ≤ 1`.
fn small_omega<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let xm = gig_mode(lambda, omega);
    let x0 = omega / (1.0 - lambda);
    let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
    let a0 = k0 * x0;
    let (k1, a1, k2, a2) = if x0 >= 2.0 / omega {
        let k2 = x0.powf(lambda - 1.0);
        (0.0, 0.0, k2, k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega)
    } else {
        let k1 = (-omega).exp();
        let a1 = if lambda == 0.0 {
            k1 * (2.0 / (omega * omega)).ln()
        } else {
            k1 / lambda * ((2.0 / omega).powf(lambda) - x0.powf(lambda))
        };
        let k2 = (2.0 / omega).powf(lambda - 1.0);
        (k1, a1, k2, k2 * 2.0 * (-1.0f64).exp() / omega)
    };
    let total = a0 + a1 + a2;
    loop {
        let mut v = total * rng.random::<f64>();
        let (x, hx) = if v <= a0 {
            (x0 * v / a0, k0)
        } else {
            v -= a0;
            if v <= a1 {
                if lambda == 0.0 {
                    let x = omega * (omega.exp() * v).exp();
                    (x, k1 / x)
                } else {
                    let x = (x0.powf(lambda) + lambda / k1 * v).powf(1.0 / lambda);
                    (x, k1 * x.powf(lambda - 1.0))
                }
            } else {
                v -= a1;
                let lo = x0.max(2.0 / omega);
                let x = -2.0 / omega * ((-omega / 2.0 * lo).exp() - omega / (2.0 * k2) * v).ln();
                (x, k2 * (-omega / 2.0 * x).exp())
            }
        };
        let u = rng.random::<f64>() * hx;
        if u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
            return x;
        }
    }
}

fn mixing_one<R: Rng + ?Sized>(variant: Variant, eta: f64, h: f64, rng: &mut R) -> f64 {
    match variant {
        Variant::Nig => sample_ig(h, h * h / eta, rng),
        Variant::Gal => sample_gamma(h / eta, 1.0 / eta, rng),
    }
}

fn check_mixing(eta: f64) -> Result<()> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(invalid(format!(
            "mixing variables need eta > 0 (got {eta}); eta = 0 is the Gaussian limit with V = h"
        )));
    }
    Ok(())
}

/// `n` mixing variables with common weight `h`: mean `h`, variance `h η`.
pub fn sample_mixing<R: Rng + ?Sized>(variant: Variant, eta: f64, h: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    check_mixing(eta)?;
    Ok((0..n).map(|_| mixing_one(variant, eta, h, rng)).collect())
}

/// One mixing variable per weight in `h`.
pub fn sample_mixing_weighted<R: Rng + ?Sized>(variant: Variant, eta: f64, h: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    check_mixing(eta)?;
    Ok(h.iter().map(|&hi| mixing_one(variant, eta, hi, rng)).collect())
}

/// Noise vector `Λ` together with its mixing variables `V`.
pub fn sample_noise_with_mixing<R: Rng + ?Sized>(
    p: &NoiseParams,
    h: &[f64],
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (st, eta, mu) = p.mixture_form();
    let v = sample_mixing_weighted(p.variant, eta, h, rng)?;
    let lambda = v
        .iter()
        .zip(h)
        .map(|(&vi, &hi)| {
            let z: f64 = rng.sample(StandardNormal);
            st * mu * (vi - hi) + st * vi.sqrt() * z
        })
        .collect();
    Ok((lambda, v))
}

pub fn sample_noise<R: Rng + ?Sized>(p: &NoiseParams, h: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    Ok(sample_noise_with_mixing(p, h, rng)?.0)
}
