use crate::noise::{self, tail_correct, tail_summary, tail_uncorrect};
use crate::operators::{diff_operator_1d, DiffKind};
use crate::priors::{kld_noise_numeric, ParamPrior};
use crate::{Boundary, CsrMatrix, Mesh1D, NoiseParams, Variant};
use proptest::prelude::*;

fn variant() -> impl Strategy<Value = Variant> {
    prop_oneof![Just(Variant::Nig), Just(Variant::Gal)]
}

proptest! {
    #[test]
    fn tail_correction_round_trips(v in variant(), eta_star in 0.01..20.0f64, mu_star in -5.0..5.0f64) {
        let (eta, mu) = tail_correct(v, eta_star, mu_star);
        let (e2, m2) = tail_uncorrect(v, eta, mu);
        prop_assert!((e2 / eta_star - 1.0).abs() < 1e-9);
        prop_assert!((m2 - mu_star).abs() < 1e-9 * (1.0 + mu_star.abs()));
    }

    #[test]
    fn decay_rate_ignores_asymmetry(v in variant(), eta_star in 0.05..10.0f64, a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let xa = tail_summary(&NoiseParams::tail_corrected(v, 1.0, eta_star, a).unwrap()).unwrap();
        let xb = tail_summary(&NoiseParams::tail_corrected(v, 1.0, eta_star, b).unwrap()).unwrap();
        prop_assert!((xa.xi / xb.xi - 1.0).abs() < 1e-9);
        let same_mu = tail_summary(&NoiseParams::tail_corrected(v, 2.0, 2.0 * eta_star, a).unwrap()).unwrap();
        prop_assert!((same_mu.gamma / xa.gamma - 1.0).abs() < 1e-9);
    }

    #[test]
    fn noise_is_centred_with_variance_sigma2_h(
        v in variant(), sigma in 0.1..3.0f64, eta in 0.0..5.0f64, mu in -3.0..3.0f64, h in 0.05..4.0f64,
    ) {
        let p = NoiseParams::new(v, sigma, eta, mu).unwrap();
        let k = noise::cumulants(&p, h);
        prop_assert!(k[0].abs() < 1e-12);
        prop_assert!((k[1] / (sigma * sigma * h) - 1.0).abs() < 1e-10);
        prop_assert!(k[3] >= -1e-12);
    }

    #[test]
    fn log_cf_has_nonpositive_real_part(
        v in variant(), eta in 0.0..5.0f64, mu in -3.0..3.0f64, t in -20.0..20.0f64,
    ) {
        let p = NoiseParams::new(v, 1.0, eta, mu).unwrap();
        prop_assert!(noise::log_cf(&p, 1.0, 0.0).norm() < 1e-14);
        let l = noise::log_cf(&p, 1.0, t);
        prop_assert!(l.re <= 1e-12 && l.re.is_finite() && l.im.is_finite());
    }

    #[test]
    fn log_density_is_finite(v in variant(), eta in 0.01..5.0f64, mu in -3.0..3.0f64, x in -50.0..50.0f64) {
        let p = NoiseParams::new(v, 1.0, eta, mu).unwrap();
        let l = noise::log_density(&p, 1.0, x);
        prop_assert!(l.is_finite() && l < 5.0, "{l}");
    }

    #[test]
    fn prior_quantile_inverts_cdf(u in 0.01..0.99f64, rate in 0.1..30.0f64, shape in 0.5..5.0f64) {
        for prior in [
            ParamPrior::Exponential { rate },
            ParamPrior::Laplace { rate },
            ParamPrior::InvGamma { shape, scale: 1.0 / rate },
            ParamPrior::Normal { mean: 1.0, sd: 1.0 / rate },
            ParamPrior::Gamma { shape, rate },
        ] {
            let q = prior.quantile(u);
            prop_assert!((prior.cdf(q) - u).abs() < 1e-8, "{prior:?} at {u}");
        }
    }

    #[test]
    fn csr_matvec_matches_dense(entries in prop::collection::vec((0usize..6, 0usize..5, -3.0..3.0f64), 0..25),
                                x in prop::collection::vec(-2.0..2.0f64, 5)) {
        let rows: Vec<usize> = entries.iter().map(|e| e.0).collect();
        let cols: Vec<usize> = entries.iter().map(|e| e.1).collect();
        let vals: Vec<f64> = entries.iter().map(|e| e.2).collect();
        let m = CsrMatrix::from_triplets(6, 5, &rows, &cols, &vals);
        let mut dense = vec![vec![0.0; 5]; 6];
        for &(r, c, v) in &entries {
            dense[r][c] += v;
        }
        let y = m.matvec(&x);
        for r in 0..6 {
            let want: f64 = (0..5).map(|c| dense[r][c] * x[c]).sum();
            prop_assert!((y[r] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn projector_interpolates_linear_functions(locs in prop::collection::vec(0.0..10.0f64, 1..20), slope in -2.0..2.0f64) {
        let mesh = Mesh1D::uniform(0.0, 10.0, 11, Boundary::Neumann).unwrap();
        let a = mesh.projector(&locs).unwrap();
        let f: Vec<f64> = mesh.nodes().iter().map(|s| 1.0 + slope * s).collect();
        let y = a.matvec(&f);
        for (yi, s) in y.iter().zip(&locs) {
            prop_assert!((yi - (1.0 + slope * s)).abs() < 1e-12);
        }
        prop_assert!(a.row_sums().iter().all(|s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn lumped_weights_cover_the_interval(n in 3usize..40, length in 0.5..100.0f64, kappa in 0.05..3.0f64) {
        let mesh = Mesh1D::uniform(0.0, length, n, Boundary::Neumann).unwrap();
        let op = diff_operator_1d(DiffKind::Matern2, kappa, &mesh).unwrap();
        prop_assert!((op.h().iter().sum::<f64>() / length - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn kld_grows_with_eta(v in variant(), eta in 0.002..0.5f64, mu in 0.0..1.0f64) {
        let a = kld_noise_numeric(v, eta, mu, 1.0).unwrap();
        let b = kld_noise_numeric(v, 1.5 * eta, mu, 1.0).unwrap();
        prop_assert!(a >= 0.0 && b > a, "{a} {b}");
    }
}
