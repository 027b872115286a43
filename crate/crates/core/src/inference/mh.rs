use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Component-wise random-walk Metropolis with Robbins–Monro adaptation of
/// the log proposal scales towards a target acceptance rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptiveRwm {
    pub log_scales: Vec<f64>,
    pub target_accept: f64,
    pub accepted: Vec<u64>,
    pub proposed: Vec<u64>,
    adapt_steps: u64,
}

impl AdaptiveRwm {
    pub fn new(scales: &[f64], target_accept: f64) -> Self {
        Self {
            log_scales: scales.iter().map(|s| s.ln()).collect(),
            target_accept,
            accepted: vec![0; scales.len()],
            proposed: vec![0; scales.len()],
            adapt_steps: 0,
        }
    }

    pub fn scales(&self) -> Vec<f64> {
        self.log_scales.iter().map(|s| s.exp()).collect()
    }

    pub fn acceptance(&self) -> Vec<f64> {
        self.accepted
            .iter()
            .zip(&self.proposed)
            .map(|(&a, &p)| if p == 0 { f64::NAN } else { a as f64 / p as f64 })
            .collect()
    }

    pub fn reset_counts(&mut self) {
        self.accepted.iter_mut().for_each(|a| *a = 0);
        self.proposed.iter_mut().for_each(|p| *p = 0);
    }

    /// One sweep over the coordinates of `z`. `log_target` returns the log
    /// density in the transformed space; `current` is its value at `z` and is
    /// updated in place. Proposals failing with an error matched by
    /// `reject_errors` are rejected; other errors are returned.
    pub fn sweep<R: Rng + ?Sized>(
        &mut self,
        z: &mut [f64],
        current: &mut f64,
        adapt: bool,
        rng: &mut R,
        mut log_target: impl FnMut(&[f64]) -> Result<f64>,
        reject_errors: impl Fn(&crate::error::Error) -> bool,
    ) -> Result<()> {
        let gain = if adapt {
            self.adapt_steps += 1;
            (self.adapt_steps as f64 + 1.0).powf(-0.6)
        } else {
            0.0
        };
        for j in 0..z.len() {
            let old = z[j];
            let step: f64 = rng.sample(StandardNormal);
            z[j] = old + self.log_scales[j].exp() * step;
            let proposal = match log_target(z) {
                Ok(v) => v,
                Err(e) if reject_errors(&e) => f64::NEG_INFINITY,
                Err(e) => {
                    z[j] = old;
                    return Err(e);
                }
            };
            let log_ratio = proposal - *current;
            let u: f64 = rng.random();
            let accept = log_ratio >= 0.0 || u.ln() < log_ratio;
            self.proposed[j] += 1;
            if accept {
                self.accepted[j] += 1;
                *current = proposal;
            } else {
                z[j] = old;
            }
            if adapt {
                let a = if log_ratio >= 0.0 { 1.0 } else { log_ratio.exp() };
                self.log_scales[j] = (self.log_scales[j] + gain * (a - self.target_accept) * 3.0).clamp(-15.0, 5.0);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn never(_: &crate::error::Error) -> bool {
        false
    }

    #[test]
    fn flat_target_always_accepts() {
        let mut k = AdaptiveRwm::new(&[0.5, 2.0], 0.3);
        let mut z = vec![0.0, 0.0];
        let mut cur = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            k.sweep(&mut z, &mut cur, false, &mut rng, |_| Ok(0.0), never).unwrap();
        }
        assert!(k.acceptance().iter().all(|&a| a == 1.0));
    }

    #[test]
    fn gaussian_target_mean_and_adaptation() {
        // N((1, −2), diag(0.25, 4))
        let lt = |z: &[f64]| Ok(-0.5 * ((z[0] - 1.0) / 0.5).powi(2) - 0.5 * ((z[1] + 2.0) / 2.0).powi(2));
        let mut k = AdaptiveRwm::new(&[0.01, 0.01], 0.3);
        let mut z = vec![0.0, 0.0];
        let mut cur = lt(&z).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..3000 {
            k.sweep(&mut z, &mut cur, true, &mut rng, lt, never).unwrap();
        }
        k.reset_counts();
        let n = 40_000;
        let mut draws = vec![Vec::with_capacity(n), Vec::with_capacity(n)];
        for _ in 0..n {
            k.sweep(&mut z, &mut cur, false, &mut rng, lt, never).unwrap();
            draws[0].push(z[0]);
            draws[1].push(z[1]);
        }
        for a in k.acceptance() {
            assert!((a - 0.3).abs() < 0.05, "acceptance {a}");
        }
        // scales were frozen after warmup and track the target sds
        let s = k.scales();
        assert!(s[1] / s[0] > 2.5 && s[1] / s[0] < 6.0);
        for (j, (m, sd)) in [(1.0, 0.5), (-2.0, 2.0)].iter().enumerate() {
            let ess = crate::stats::effective_sample_size(&[draws[j].clone()]);
            let mean = crate::stats::mean(&draws[j]);
            assert!((mean - m).abs() < 3.0 * sd / ess.sqrt(), "coordinate {j}: {mean} (ess {ess})");
        }
    }
}
