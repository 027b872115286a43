//! Sparse matrices and banded direct solvers.
//!
//! The operators in this crate are banded after a reverse Cuthill–McKee
//! ordering (tridiagonal-like in 1D, bandwidth ~ grid width in 2D), so band
//! LU and band Cholesky factorizations cover every solve.

mod banded;
mod ordering;
mod sparse;

pub use banded::{BandCholesky, BandLu};
pub use ordering::{bandwidths, reverse_cuthill_mckee};
pub use sparse::{CsrMatrix, Triplets};

use crate::error::Result;

/// LU factorization of a sparse square matrix, reordered to reduce bandwidth.
#[derive(Debug, Clone)]
pub struct SparseLu {
    perm: Vec<usize>,
    lu: BandLu,
}

impl SparseLu {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let perm = reverse_cuthill_mckee(a);
        let pa = a.permute_symmetric(&perm);
        let lu = BandLu::factor(&pa)?;
        Ok(Self { perm, lu })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        // (P A Pᵀ)(P x) = P b with (P v)_k = v[perm[k]]
        let pb: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        let py = self.lu.solve(&pb);
        let mut x = vec![0.0; b.len()];
        for (k, &i) in self.perm.iter().enumerate() {
            x[i] = py[k];
        }
        x
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let pb: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        let py = self.lu.solve_transpose(&pb);
        let mut x = vec![0.0; b.len()];
        for (k, &i) in self.perm.iter().enumerate() {
            x[i] = py[k];
        }
        x
    }

    /// Row `i` of `A⁻¹`.
    pub fn inverse_row(&self, i: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.dim()];
        e[i] = 1.0;
        self.solve_transpose(&e)
    }

    pub fn ln_abs_det(&self) -> f64 {
        self.lu.ln_abs_det()
    }

    pub fn min_abs_pivot(&self) -> f64 {
        self.lu.min_abs_pivot()
    }
}

/// Cholesky factorization `P A Pᵀ = L Lᵀ` of a sparse SPD matrix.
#[derive(Debug, Clone)]
pub struct SparseCholesky {
    perm: Vec<usize>,
    chol: BandCholesky,
}

impl SparseCholesky {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let perm = reverse_cuthill_mckee(a);
        Self::with_permutation(a, perm)
    }

    pub fn with_permutation(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let pa = a.permute_symmetric(&perm);
        let chol = BandCholesky::factor(&pa)?;
        Ok(Self { perm, chol })
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let pb: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        let py = self.chol.solve(&pb);
        self.unpermute(&py)
    }

    /// `x = A^{-1/2}`-type draw: solves `Lᵀ (P x) = z`, so that `x` has
    /// covariance `A⁻¹` when `z` is standard normal.
    pub fn solve_lt(&self, z: &[f64]) -> Vec<f64> {
        let py = self.chol.solve_lt(z);
        self.unpermute(&py)
    }

    fn unpermute(&self, py: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; py.len()];
        for (k, &i) in self.perm.iter().enumerate() {
            x[i] = py[k];
        }
        x
    }

    /// `ln det A`.
    pub fn ln_det(&self) -> f64 {
        self.chol.ln_det()
    }
}
