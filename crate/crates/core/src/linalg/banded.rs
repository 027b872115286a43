use super::ordering::bandwidths;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// Pivots smaller than this fraction of the largest matrix entry are
/// treated as zero.
const PIVOT_REL_TOL: f64 = 1e-13;

/// Band LU factorization with partial pivoting.
///
/// Row `r` stores columns `r - kl ..= r + kl + ku`, which leaves room for
/// the fill created by row interchanges.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    lower: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(crate::error::invalid(format!(
                "LU needs a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = a.nrows();
        let (kl, ku) = bandwidths(a);
        let width = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            lower: vec![0.0; n * kl],
            piv: vec![0; n],
        };
        let mut scale = 0.0f64;
        for (i, j, v) in a.triplets() {
            *lu.at_mut(i, j) += v;
            scale = scale.max(v.abs());
        }
        let tol = PIVOT_REL_TOL * scale.max(f64::MIN_POSITIVE);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = lu.at(k, k).abs();
            for i in k + 1..=last_row {
                let v = lu.at(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tol) {
                return Err(Error::Singular { row: k, pivot: best });
            }
            lu.piv[k] = p;
            if p != k {
                for c in k..=last_col {
                    let t = lu.at(k, c);
                    *lu.at_mut(k, c) = lu.at(p, c);
                    *lu.at_mut(p, c) = t;
                }
            }
            let pivot = lu.at(k, k);
            for i in k + 1..=last_row {
                let m = lu.at(i, k) / pivot;
                lu.lower[k * kl + (i - k - 1)] = m;
                *lu.at_mut(i, k) = 0.0;
                if m != 0.0 {
                    for c in k + 1..=last_col {
                        let u = lu.at(k, c);
                        *lu.at_mut(i, c) -= m * u;
                    }
                }
            }
        }
        Ok(lu)
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + (c + self.kl - r)]
    }

    #[inline]
    fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.width + (c + self.kl - r)]
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut y = b.to_vec();
        for k in 0..n {
            y.swap(k, self.piv[k]);
            let yk = y[k];
            if yk != 0.0 {
                for i in k + 1..=(k + self.kl).min(n.saturating_sub(1)) {
                    y[i] -= self.lower[k * self.kl + (i - k - 1)] * yk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = y[k];
            for c in k + 1..=(k + self.kl + self.ku).min(n - 1) {
                s -= self.at(k, c) * y[c];
            }
            y[k] = s / self.at(k, k);
        }
        y
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let band = self.kl + self.ku;
        let mut y = b.to_vec();
        for k in 0..n {
            let mut s = y[k];
            for j in k.saturating_sub(band)..k {
                s -= self.at(j, k) * y[j];
            }
            y[k] = s / self.at(k, k);
        }
        for k in (0..n).rev() {
            let mut s = 0.0;
            for i in k + 1..=(k + self.kl).min(n - 1) {
                s += self.lower[k * self.kl + (i - k - 1)] * y[i];
            }
            y[k] -= s;
            y.swap(k, self.piv[k]);
        }
        y
    }

    pub fn ln_abs_det(&self) -> f64 {
        (0..self.n).map(|k| self.at(k, k).abs().ln()).sum()
    }

    pub fn min_abs_pivot(&self) -> f64 {
        (0..self.n).map(|k| self.at(k, k).abs()).fold(f64::INFINITY, f64::min)
    }
}

/// Band Cholesky factorization `A = L Lᵀ` of a symmetric positive definite
/// matrix; only the lower band of `A` is read.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    k: usize,
    data: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(crate::error::invalid("Cholesky needs a square matrix"));
        }
        let n = a.nrows();
        let (kl, _) = bandwidths(a);
        let k = kl;
        let w = k + 1;
        let mut data = vec![0.0; n * w];
        for (i, j, v) in a.triplets() {
            if j <= i {
                data[i * w + (j + k - i)] += v;
            }
        }
        for i in 0..n {
            for j in i.saturating_sub(k)..=i {
                let lo = i.saturating_sub(k).max(j.saturating_sub(k));
                let mut s = data[i * w + (j + k - i)];
                for m in lo..j {
                    s -= data[i * w + (m + k - i)] * data[j * w + (m + k - j)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite {
                            row: i,
                            context: format!("pivot {s:.3e}"),
                        });
                    }
                    data[i * w + k] = s.sqrt();
                } else {
                    data[i * w + (j + k - i)] = s / data[j * w + k];
                }
            }
        }
        Ok(Self { n, k, data })
    }

    #[inline]
    fn l(&self, i: usize, j: usize) -> f64 {
        self.data[i * (self.k + 1) + (j + self.k - i)]
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `L y = b`.
    pub fn solve_l(&self, b: &[f64]) -> Vec<f64> {
        let mut y = b.to_vec();
        for i in 0..self.n {
            let mut s = y[i];
            for j in i.saturating_sub(self.k)..i {
                s -= self.l(i, j) * y[j];
            }
            y[i] = s / self.l(i, i);
        }
        y
    }

    /// Solves `Lᵀ x = b`.
    pub fn solve_lt(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..=(i + self.k).min(n - 1) {
                s -= self.l(j, i) * x[j];
            }
            x[i] = s / self.l(i, i);
        }
        x
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_lt(&self.solve_l(b))
    }

    pub fn ln_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.l(i, i).ln()).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
    }

    #[test]
    fn lu_needs_pivoting() {
        let a = vec![
            vec![0.0, 2.0, 0.0, 0.0],
            vec![1.0, 1.0, 3.0, 0.0],
            vec![0.0, 4.0, 0.5, 1.0],
            vec![0.0, 0.0, 2.0, -1.0],
        ];
        let lu = BandLu::factor(&CsrMatrix::from_dense(&a)).unwrap();
        let x = [1.0, -2.0, 0.5, 3.0];
        let b = dense_matvec(&a, &x);
        for (u, v) in lu.solve(&b).iter().zip(&x) {
            assert!((u - v).abs() < 1e-12);
        }
        let bt = dense_matvec(&transpose(&a), &x);
        for (u, v) in lu.solve_transpose(&bt).iter().zip(&x) {
            assert!((u - v).abs() < 1e-12);
        }
        // det by cofactor expansion: -2 * det([[1,3,0],[0,.5,1],[0,2,-1]]) = -2 * (1 * (-.5 - 2)) = 5
        assert!((lu.ln_abs_det() - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn singular_is_reported() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(BandLu::factor(&a), Err(Error::Singular { row: 1, .. })));
    }

    #[test]
    fn cholesky_tridiagonal() {
        let n = 6;
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = 2.5;
            if i + 1 < n {
                a[i][i + 1] = -1.0;
                a[i + 1][i] = -1.0;
            }
        }
        let c = BandCholesky::factor(&CsrMatrix::from_dense(&a)).unwrap();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = dense_matvec(&a, &x);
        for (u, v) in c.solve(&b).iter().zip(&x) {
            assert!((u - v).abs() < 1e-12);
        }
        let lu = BandLu::factor(&CsrMatrix::from_dense(&a)).unwrap();
        assert!((c.ln_det() - lu.ln_abs_det()).abs() < 1e-12);
        let bad = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(BandCholesky::factor(&bad).is_err());
    }
}
