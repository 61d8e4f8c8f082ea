//! Classical MUSIC estimator over the shared angular grid.

use ndarray::Array2;
use num_complex::Complex64;

use crate::decoder::{decode, DecoderConfig, DoaEstimate};
use crate::eig;
use crate::error::{Error, Result};
use crate::grid::{AngularGrid, PseudoSpectrum};
use crate::signal::{sample_covariance, steering_vector, CovarianceMatrix, SnapshotMatrix};

/// Floor added to the projection onto the noise subspace so exact nulls
/// keep the spectrum finite.
const NULL_GUARD: f64 = 1e-12;

/// Signal/noise split of a covariance eigendecomposition.
#[derive(Debug, Clone)]
pub struct SubspaceDecomposition {
    /// All eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Columns span the noise subspace: the N−M smallest eigenpairs.
    pub noise_basis: Array2<Complex64>,
}

pub fn subspace_decomposition(
    r: &CovarianceMatrix,
    n_sources: usize,
) -> Result<SubspaceDecomposition> {
    let n = r.size();
    if n_sources < 1 || n_sources >= n {
        return Err(Error::Config(format!(
            "source count {n_sources} must satisfy 1 ≤ M < N = {n}"
        )));
    }
    let e = eig::eigh(&r.data)?;
    let noise_dim = n - n_sources;
    let mut noise_basis = Array2::zeros((n, noise_dim));
    for (dst, src) in (n_sources..n).enumerate() {
        for i in 0..n {
            noise_basis[(i, dst)] = e.eigenvectors[(i, src)];
        }
    }
    Ok(SubspaceDecomposition {
        eigenvalues: e.eigenvalues,
        noise_basis,
    })
}

/// MUSIC pseudo-spectrum: score(θ) = 1 / (‖U_Nᴴ·a(θ)‖² + ε).
pub fn music_spectrum(
    r: &CovarianceMatrix,
    n_sources: usize,
    grid: &AngularGrid,
) -> Result<PseudoSpectrum> {
    let decomp = subspace_decomposition(r, n_sources)?;
    let n = r.size();
    let noise_dim = decomp.noise_basis.ncols();
    let scores = grid
        .angles()
        .map(|theta| {
            let a = steering_vector(theta, n)?;
            let mut q = 0.0;
            for col in 0..noise_dim {
                let mut proj = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    proj += decomp.noise_basis[(i, col)].conj() * a[i];
                }
                q += proj.norm_sqr();
            }
            Ok(1.0 / (q + NULL_GUARD))
        })
        .collect::<Result<Vec<f64>>>()?;
    PseudoSpectrum::new(scores, *grid)
}

/// Full MUSIC pipeline: sample covariance, spectrum, greedy peak picking
/// with the same decoder the HDC path uses.
pub fn music_estimate(
    x: &SnapshotMatrix,
    n_sources: usize,
    grid: &AngularGrid,
    cfg: &DecoderConfig,
) -> Result<DoaEstimate> {
    let r = sample_covariance(x);
    let spectrum = music_spectrum(&r, n_sources, grid)?;
    decode(&spectrum, cfg)
}
