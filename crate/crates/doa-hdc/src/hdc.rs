//! FHRR fractional-power encoding into D-dimensional complex hypervectors.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::signal::RNG_ALGORITHM;

/// Default hypervector dimensionality.
pub const DEFAULT_DIM: usize = 10_000;

/// Everything needed to regenerate a basis; phases are never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderHeader {
    pub feature_dim: usize,
    pub dim: usize,
    pub bandwidth: f64,
    pub seed: u64,
    pub rng_algorithm: String,
}

/// Random base phases for the fractional-power encoder: one phase row per
/// feature dimension, each entry i.i.d. uniform over (−π, π].
#[derive(Debug, Clone)]
pub struct EncoderBasis {
    base_phases: Array2<f64>,
    pub feature_dim: usize,
    pub dim: usize,
    pub bandwidth: f64,
    pub seed: u64,
}

impl EncoderBasis {
    pub fn new(feature_dim: usize, dim: usize, bandwidth: f64, seed: u64) -> Result<Self> {
        if feature_dim < 1 || dim < 1 {
            return Err(Error::Config(format!(
                "encoder needs positive dimensions, got feature_dim={feature_dim}, dim={dim}"
            )));
        }
        if bandwidth <= 0.0 || !bandwidth.is_finite() {
            return Err(Error::Config(format!(
                "encoder bandwidth must be positive, got {bandwidth}"
            )));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        // u in [0, 1) maps to π − 2πu in (−π, π]
        let base_phases =
            Array2::from_shape_fn((feature_dim, dim), |_| PI - 2.0 * PI * rng.random::<f64>());
        Ok(Self {
            base_phases,
            feature_dim,
            dim,
            bandwidth,
            seed,
        })
    }

    pub fn header(&self) -> EncoderHeader {
        EncoderHeader {
            feature_dim: self.feature_dim,
            dim: self.dim,
            bandwidth: self.bandwidth,
            seed: self.seed,
            rng_algorithm: RNG_ALGORITHM.to_string(),
        }
    }

    pub fn from_header(h: &EncoderHeader) -> Result<Self> {
        if h.rng_algorithm != RNG_ALGORITHM {
            return Err(Error::Config(format!(
                "unsupported rng algorithm '{}' (this build provides '{RNG_ALGORITHM}')",
                h.rng_algorithm
            )));
        }
        Self::new(h.feature_dim, h.dim, h.bandwidth, h.seed)
    }

    /// Phase row for feature dimension `i`.
    pub(crate) fn phase_row(&self, i: usize) -> &[f64] {
        self.base_phases
            .row(i)
            .to_slice()
            .expect("basis rows are contiguous")
    }

    /// Encode a feature vector: element d of the result is
    /// exp(j · bandwidth · Σᵢ fᵢ·φᵢ,d) — a single phase-accumulation pass,
    /// algebraically identical to rotating each base vector by its feature
    /// value and binding the results elementwise.
    pub fn encode(&self, f: &FeatureVector) -> Result<Hypervector> {
        if f.dim() != self.feature_dim {
            return Err(Error::Shape(format!(
                "feature dim {} does not match encoder dim {}",
                f.dim(),
                self.feature_dim
            )));
        }
        if f.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("non-finite feature value".into()));
        }
        let mut phase = vec![0.0f64; self.dim];
        for (i, &fi) in f.values.iter().enumerate() {
            let row = self.phase_row(i);
            for (p, &phi) in phase.iter_mut().zip(row) {
                *p += fi * phi;
            }
        }
        let values = phase
            .iter()
            .map(|&p| Complex64::from_polar(1.0, self.bandwidth * p))
            .collect();
        Ok(Hypervector { values })
    }
}

/// D-dimensional complex hypervector; encoder outputs have unit-modulus
/// elements, centroids relax this until normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypervector {
    pub values: Vec<Complex64>,
}

impl Hypervector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Real part of the dot product over D: (1/D)·Re(Σ a_d·conj(b_d)).
pub fn similarity(a: &Hypervector, b: &Hypervector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!(
            "hypervector dims {} and {} differ",
            a.dim(),
            b.dim()
        )));
    }
    Ok(dot_re(&a.values, &b.values) / a.dim() as f64)
}

/// Unnormalized Re⟨a, b⟩; shared by `similarity` and the associative-memory
/// query paths so scalar and batched queries agree bit-for-bit.
pub(crate) fn dot_re(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x.re * y.re + x.im * y.im;
    }
    acc
}
