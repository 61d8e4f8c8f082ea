//! Hermitian eigendecomposition with a process-wide call counter.
//!
//! The counter exists so callers can verify structurally that a code path
//! (in particular HDC inference) performs no matrix decompositions.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

static DECOMPOSITIONS: AtomicU64 = AtomicU64::new(0);

/// Total Hermitian eigendecompositions performed by this process.
pub fn decomposition_count() -> u64 {
    DECOMPOSITIONS.load(Ordering::Relaxed)
}

/// Eigenpairs of a Hermitian matrix, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    /// Column k is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: Array2<Complex64>,
}

pub fn eigh(matrix: &Array2<Complex64>) -> Result<HermitianEigen> {
    let (r, c) = matrix.dim();
    if r != c {
        return Err(Error::Shape(format!(
            "eigendecomposition needs a square matrix, got {r}x{c}"
        )));
    }
    if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Degenerate("non-finite matrix entry".into()));
    }
    DECOMPOSITIONS.fetch_add(1, Ordering::Relaxed);

    let m = DMatrix::<Complex64>::from_fn(r, r, |i, j| matrix[(i, j)]);
    let eig = m.symmetric_eigen();

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("hermitian eigenvalues are finite reals")
    });

    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = Array2::zeros((r, r));
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..r {
            eigenvectors[(i, dst)] = eig.eigenvectors[(i, src)];
        }
    }
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// Numerical rank by the eigenvalue-gap test: eigenvalues above
/// `rel_tol · λ_max` count toward the rank.
pub fn numerical_rank(matrix: &Array2<Complex64>, rel_tol: f64) -> Result<usize> {
    let evals = eigh(matrix)?.eigenvalues;
    let max = evals.first().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return Ok(0);
    }
    Ok(evals.iter().filter(|&&l| l > rel_tol * max).count())
}
