//! Synthetic uniform-linear-array snapshot generation and sample covariance.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Name of the generator used everywhere seeded randomness is needed;
/// recorded in dataset and model headers so files are self-describing.
pub const RNG_ALGORITHM: &str = "chacha12";

/// Geometry and acquisition parameters of the half-wavelength ULA.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrayConfig {
    pub n_antennas: usize,
    pub n_snapshots: usize,
}

impl ArrayConfig {
    pub fn new(n_antennas: usize, n_snapshots: usize) -> Result<Self> {
        if n_antennas < 2 {
            return Err(Error::Config(format!(
                "need at least 2 antennas, got {n_antennas}"
            )));
        }
        if n_snapshots < 1 {
            return Err(Error::Config("need at least 1 snapshot".into()));
        }
        Ok(Self {
            n_antennas,
            n_snapshots,
        })
    }
}

/// One emission scenario: source angles, per-source SNR, coherence, seed.
///
/// `noise_var` is the noise floor σ_V²; the SNR convention is per-source
/// power over a unit noise floor, so `noise_var` stays at 1.0 except for
/// the noise-free debug switch.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceScenario {
    pub doas_deg: Vec<f64>,
    pub snr_db: f64,
    pub coherent: bool,
    pub rng_seed: u64,
    pub noise_var: f64,
}

impl SourceScenario {
    pub fn new(doas_deg: Vec<f64>, snr_db: f64, coherent: bool, rng_seed: u64) -> Self {
        Self {
            doas_deg,
            snr_db,
            coherent,
            rng_seed,
            noise_var: 1.0,
        }
    }

    /// Disable the noise term entirely (σ_V² = 0); debug/test use only.
    pub fn noise_free(mut self) -> Self {
        self.noise_var = 0.0;
        self
    }

    pub fn n_sources(&self) -> usize {
        self.doas_deg.len()
    }

    pub fn validate(&self, cfg: &ArrayConfig) -> Result<()> {
        let m = self.n_sources();
        if m == 0 {
            return Err(Error::Config("scenario needs at least one source".into()));
        }
        if m >= cfg.n_antennas {
            return Err(Error::Config(format!(
                "{m} sources do not fit an array of {} antennas (need M < N)",
                cfg.n_antennas
            )));
        }
        for &a in &self.doas_deg {
            if !(-90.0..=90.0).contains(&a) || !a.is_finite() {
                return Err(Error::Domain(format!("DoA {a}° outside [-90°, 90°]")));
            }
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Config("SNR must be finite".into()));
        }
        if self.noise_var < 0.0 || !self.noise_var.is_finite() {
            return Err(Error::Config("noise variance must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Complex N×T matrix of raw sensor measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    pub data: Array2<Complex64>,
}

impl SnapshotMatrix {
    pub fn n_antennas(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_snapshots(&self) -> usize {
        self.data.ncols()
    }
}

/// Hermitian spatial covariance (full-array or subarray sized).
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub data: Array2<Complex64>,
}

impl CovarianceMatrix {
    /// Wrap a matrix, checking squareness and Hermitian symmetry
    /// (1e-10 relative tolerance).
    pub fn new(data: Array2<Complex64>) -> Result<Self> {
        let (r, c) = data.dim();
        if r != c {
            return Err(Error::Shape(format!("covariance must be square, got {r}x{c}")));
        }
        let scale = data.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1e-300);
        for i in 0..r {
            for j in i..r {
                let d = data[(i, j)] - data[(j, i)].conj();
                if d.norm() > 1e-10 * scale {
                    return Err(Error::Domain(format!(
                        "matrix is not Hermitian at ({i},{j}): asymmetry {:.3e}",
                        d.norm()
                    )));
                }
            }
        }
        Ok(Self { data })
    }

    pub fn size(&self) -> usize {
        self.data.nrows()
    }
}

/// ULA steering vector a(θ): element k is exp(-jπ·k·sinθ).
pub fn steering_vector(theta_deg: f64, n_antennas: usize) -> Result<Array1<Complex64>> {
    if !(-90.0..=90.0).contains(&theta_deg) || !theta_deg.is_finite() {
        return Err(Error::Domain(format!(
            "steering angle {theta_deg}° outside [-90°, 90°]"
        )));
    }
    if n_antennas < 1 {
        return Err(Error::Config("steering vector needs at least 1 element".into()));
    }
    let s = theta_deg.to_radians().sin();
    Ok(Array1::from_iter((0..n_antennas).map(|k| {
        if k == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, -PI * k as f64 * s)
        }
    })))
}

fn steering_matrix(doas_deg: &[f64], n_antennas: usize) -> Result<Array2<Complex64>> {
    let mut a = Array2::zeros((n_antennas, doas_deg.len()));
    for (m, &theta) in doas_deg.iter().enumerate() {
        let col = steering_vector(theta, n_antennas)?;
        a.column_mut(m).assign(&col);
    }
    Ok(a)
}

/// One draw of a circular complex Gaussian with total variance 1.
fn complex_standard_normal<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Generate X = A(θ)S + V for the scenario.
///
/// Non-coherent sources draw independent Gaussian waveforms per source;
/// coherent sources share one Gaussian waveform scaled by per-source
/// unit-modulus random phase gains (rank-1 source covariance). Identical
/// inputs, including the seed, reproduce X bit-exactly.
pub fn generate_snapshots(cfg: &ArrayConfig, scn: &SourceScenario) -> Result<SnapshotMatrix> {
    scn.validate(cfg)?;
    let (n, t, m) = (cfg.n_antennas, cfg.n_snapshots, scn.n_sources());
    let mut rng = ChaCha12Rng::seed_from_u64(scn.rng_seed);

    let sigma_s = 10f64.powf(scn.snr_db / 20.0);
    let mut sources = Array2::<Complex64>::zeros((m, t));
    if scn.coherent {
        // Draw order is part of the reproducibility contract:
        // shared waveform first, then the per-source phase gains.
        let waveform: Vec<Complex64> = (0..t).map(|_| complex_standard_normal(&mut rng)).collect();
        let gains: Vec<Complex64> = (0..m)
            .map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * 2.0 * PI))
            .collect();
        for i in 0..m {
            for j in 0..t {
                sources[(i, j)] = gains[i] * waveform[j] * sigma_s;
            }
        }
    } else {
        for i in 0..m {
            for j in 0..t {
                sources[(i, j)] = complex_standard_normal(&mut rng) * sigma_s;
            }
        }
    }

    let a = steering_matrix(&scn.doas_deg, n)?;
    let mut x = a.dot(&sources);
    if scn.noise_var > 0.0 {
        let sigma_v = scn.noise_var.sqrt();
        for v in x.iter_mut() {
            *v += complex_standard_normal(&mut rng) * sigma_v;
        }
    }
    Ok(SnapshotMatrix { data: x })
}

/// Sample spatial covariance (1/T)·X·Xᴴ, Hermitian by construction.
pub fn sample_covariance(x: &SnapshotMatrix) -> CovarianceMatrix {
    let (n, t) = x.data.dim();
    let scale = 1.0 / t as f64;
    let mut r = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..t {
                acc += x.data[(i, k)] * x.data[(j, k)].conj();
            }
            acc *= scale;
            if i == j {
                r[(i, i)] = Complex64::new(acc.re, 0.0);
            } else {
                r[(i, j)] = acc;
                r[(j, i)] = acc.conj();
            }
        }
    }
    CovarianceMatrix { data: r }
}
