/// Real dilogarithm `Li₂(x)` for `x ≤ 1`.
pub fn dilog(x: f64) -> f64 {
    use std::f64::consts::PI;
    assert!(x <= 1.0, "dilog defined here for x <= 1");
    if x == 1.0 {
        return PI * PI / 6.0;
    }
    if x < -1.0 {
        // Li₂(x) = −π²/6 − ln²(−x)/2 − Li₂(1/x)
        let l = (-x).ln();
        return -PI * PI / 6.0 - 0.5 * l * l - dilog(1.0 / x);
    }
    if x > 0.5 {
        // Li₂(x) = π²/6 − ln x ln(1−x) − Li₂(1−x)
        return PI * PI / 6.0 - x.ln() * (1.0 - x).ln() - dilog(1.0 - x);
    }
    // Li₂(x) = Σ B_n u^{n+1}/(n+1)!, u = −ln(1−x), |u| ≤ ln 2 here
    const BERNOULLI: [f64; 14] = [
        1.0,
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
        43867.0 / 798.0,
        -174611.0 / 330.0,
        854513.0 / 138.0,
        -236364091.0 / 2730.0,
        8553103.0 / 6.0,
    ];
    let u = -(-x).ln_1p();
    let mut sum = u - 0.25 * u * u;
    // even-index Bernoulli numbers B_{2k}, term u^{2k+1}/(2k+1)!
    let u2 = u * u;
    let mut pow = u; // u^{2k+1}
    let mut fact = 1.0; // (2k+1)!
    for (k, b) in BERNOULLI.iter().enumerate().skip(1) {
        pow *= u2;
        fact *= (2 * k) as f64 * (2 * k + 1) as f64;
        let term = b * pow / fact;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn series(x: f64) -> f64 {
        (1..2000).map(|k| x.powi(k) / (k as f64 * k as f64)).sum()
    }

    #[test]
    fn special_values() {
        assert!((dilog(-1.0) + PI * PI / 12.0).abs() < 1e-15);
        assert!((dilog(0.5) - (PI * PI / 12.0 - 0.5 * 2f64.ln().powi(2))).abs() < 1e-15);
        assert_eq!(dilog(0.0), 0.0);
    }

    #[test]
    fn matches_power_series() {
        for x in [-0.9, -0.5, -0.1, 0.2, 0.45, 0.7] {
            assert!((dilog(x) - series(x)).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn reflection_for_large_negative() {
        // Li₂(x) + Li₂(1/x) = −π²/6 − ln²(−x)/2 checked against integral ∫_0^1 ln(1−xt)/t dt
        for x in [-2.0, -10.0, -1e4] {
            let s = crate::quad::integrate(
                |t: f64| -(-x * t).ln_1p() / t,
                0.0,
                1.0,
                crate::quad::QuadOptions::tol(0.0, 1e-12),
            )
            .unwrap()
            .value;
            assert!((dilog(x) - s).abs() < 1e-10 * s.abs(), "x={x}");
        }
    }
}
