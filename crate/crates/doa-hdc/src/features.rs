//! Covariance-derived real feature vectors: spatial-lag autocorrelation and
//! spatially smoothed covariance, plus z-score normalization.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{sample_covariance, CovarianceMatrix, SnapshotMatrix};

/// Which feature path produced a vector, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FeatureMethod {
    /// Mean autocorrelation per spatial lag, optionally normalized by |r₀|.
    Lag { normalize_r0: bool },
    /// Upper triangle of the spatially smoothed covariance.
    SpatialSmoothing { subarray_size: usize },
}

impl FeatureMethod {
    /// Feature dimensionality for an N-antenna array.
    pub fn feature_dim(&self, n_antennas: usize) -> usize {
        match self {
            FeatureMethod::Lag { .. } => 2 * n_antennas,
            FeatureMethod::SpatialSmoothing { subarray_size } => {
                subarray_size * (subarray_size + 1)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FeatureMethod::Lag { .. } => "hdc-lag",
            FeatureMethod::SpatialSmoothing { .. } => "hdc-smoothing",
        }
    }
}

/// Real-valued feature vector fed to the HDC encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub method: FeatureMethod,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Subarray layout for spatial smoothing; L = N − M_sub + 1 subarrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoothingConfig {
    pub subarray_size: usize,
    pub n_subarrays: usize,
}

impl SmoothingConfig {
    pub fn new(subarray_size: usize, n_antennas: usize) -> Result<Self> {
        if subarray_size < 1 {
            return Err(Error::Config("subarray size must be at least 1".into()));
        }
        if subarray_size >= n_antennas {
            return Err(Error::Config(format!(
                "subarray size {subarray_size} must be below the array size {n_antennas}"
            )));
        }
        Ok(Self {
            subarray_size,
            n_subarrays: n_antennas - subarray_size + 1,
        })
    }
}

/// Mean autocorrelation r_k over the k-th superdiagonal of the covariance.
pub fn lag_vector(r: &CovarianceMatrix) -> Vec<Complex64> {
    let n = r.size();
    (0..n)
        .map(|k| {
            let sum: Complex64 = (0..n - k).map(|i| r.data[(i, i + k)]).sum();
            sum / (n - k) as f64
        })
        .collect()
}

/// Lag feature vector: real parts of r then imaginary parts, optionally
/// divided by |r₀| first.
pub fn lag_features(r: &CovarianceMatrix, normalize_r0: bool) -> Result<FeatureVector> {
    let mut lags = lag_vector(r);
    if normalize_r0 {
        let r0 = lags[0].norm();
        if r0 <= 1e-12 {
            return Err(Error::Degenerate(format!(
                "|r0| = {r0:.3e} too small to normalize by"
            )));
        }
        for v in lags.iter_mut() {
            *v /= r0;
        }
    }
    let mut values = Vec::with_capacity(2 * lags.len());
    values.extend(lags.iter().map(|z| z.re));
    values.extend(lags.iter().map(|z| z.im));
    Ok(FeatureVector {
        values,
        method: FeatureMethod::Lag { normalize_r0 },
    })
}

/// Spatially smoothed covariance: mean of the sample covariances of the L
/// overlapping subarrays (subarray j takes rows j..j+M_sub−1 of X).
pub fn spatial_smoothing(x: &SnapshotMatrix, cfg: &SmoothingConfig) -> Result<CovarianceMatrix> {
    let n = x.n_antennas();
    if cfg.subarray_size >= n {
        return Err(Error::Config(format!(
            "subarray size {} must be below the array size {n}",
            cfg.subarray_size
        )));
    }
    if cfg.n_subarrays != n - cfg.subarray_size + 1 {
        return Err(Error::Config(format!(
            "expected {} subarrays for N={n}, M_sub={}, got {}",
            n - cfg.subarray_size + 1,
            cfg.subarray_size,
            cfg.n_subarrays
        )));
    }
    let m_sub = cfg.subarray_size;
    let l = cfg.n_subarrays;
    let mut acc = Array2::<Complex64>::zeros((m_sub, m_sub));
    for j in 0..l {
        let sub = SnapshotMatrix {
            data: x.data.slice(ndarray::s![j..j + m_sub, ..]).to_owned(),
        };
        acc += &sample_covariance(&sub).data;
    }
    acc.mapv_inplace(|z| z / l as f64);
    Ok(CovarianceMatrix { data: acc })
}

/// Smoothing feature vector: upper triangle (diagonal included, row-major)
/// split as all real parts then all imaginary parts.
pub fn smoothing_features(rss: &CovarianceMatrix) -> FeatureVector {
    let p = rss.size();
    let mut re = Vec::with_capacity(p * (p + 1) / 2);
    let mut im = Vec::with_capacity(p * (p + 1) / 2);
    for i in 0..p {
        for j in i..p {
            re.push(rss.data[(i, j)].re);
            im.push(rss.data[(i, j)].im);
        }
    }
    re.extend_from_slice(&im);
    FeatureVector {
        values: re,
        method: FeatureMethod::SpatialSmoothing { subarray_size: p },
    }
}

/// Extract features from raw snapshots with the given method.
pub fn extract(x: &SnapshotMatrix, method: &FeatureMethod) -> Result<FeatureVector> {
    match method {
        FeatureMethod::Lag { normalize_r0 } => {
            lag_features(&sample_covariance(x), *normalize_r0)
        }
        FeatureMethod::SpatialSmoothing { subarray_size } => {
            let cfg = SmoothingConfig::new(*subarray_size, x.n_antennas())?;
            Ok(smoothing_features(&spatial_smoothing(x, &cfg)?))
        }
    }
}

/// Per-dimension z-score statistics, fitted on the training split only.
///
/// Uses the population (1/n) standard deviation; dimensions with
/// std below 1e-12 are clamped to 1 so constant features map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub fitted_on: u64,
}

impl Normalizer {
    /// Pass-through normalizer (mean 0, std 1).
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
            fitted_on: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

pub fn fit_normalizer(features: &[FeatureVector]) -> Result<Normalizer> {
    if features.len() < 2 {
        return Err(Error::Training(format!(
            "normalizer needs at least 2 samples, got {}",
            features.len()
        )));
    }
    let dim = features[0].dim();
    let method = features[0].method;
    for f in features {
        if f.dim() != dim || f.method != method {
            return Err(Error::Shape(
                "normalizer input mixes feature methods or dimensions".into(),
            ));
        }
    }
    let n = features.len() as f64;
    let mut mean = vec![0.0; dim];
    for f in features {
        for (m, v) in mean.iter_mut().zip(&f.values) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let mut var = vec![0.0; dim];
    for f in features {
        for ((s, v), m) in var.iter_mut().zip(&f.values).zip(&mean) {
            let d = v - m;
            *s += d * d;
        }
    }
    let std = var
        .iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd < 1e-12 {
                1.0
            } else {
                sd
            }
        })
        .collect();
    Ok(Normalizer {
        mean,
        std,
        fitted_on: features.len() as u64,
    })
}

pub fn apply_normalizer(norm: &Normalizer, f: &FeatureVector) -> Result<FeatureVector> {
    if f.dim() != norm.dim() {
        return Err(Error::Shape(format!(
            "feature dim {} does not match normalizer dim {}",
            f.dim(),
            norm.dim()
        )));
    }
    let values = f
        .values
        .iter()
        .zip(norm.mean.iter().zip(&norm.std))
        .map(|(v, (m, s))| (v - m) / s)
        .collect();
    Ok(FeatureVector {
        values,
        method: f.method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eig;
    use crate::signal::{generate_snapshots, steering_vector, ArrayConfig, SourceScenario};
    use ndarray::array;

    fn cov(data: Array2<Complex64>) -> CovarianceMatrix {
        CovarianceMatrix::new(data).unwrap()
    }

    #[test]
    fn lag_vector_of_identity() {
        let r = cov(Array2::eye(4));
        let lags = lag_vector(&r);
        assert_eq!(lags[0], Complex64::new(1.0, 0.0));
        for k in 1..4 {
            assert_eq!(lags[k], Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn lag_vector_two_by_two() {
        let r = cov(array![
            [Complex64::new(2.0, 0.0), Complex64::new(1.0, 1.0)],
            [Complex64::new(1.0, -1.0), Complex64::new(2.0, 0.0)]
        ]);
        let lags = lag_vector(&r);
        assert_eq!(lags, vec![Complex64::new(2.0, 0.0), Complex64::new(1.0, 1.0)]);
    }

    #[test]
    fn lag_vector_single_source_phases() {
        // R = a·aᴴ for a unit-power source at θ: r_k = e^{jπk·sinθ}
        let n = 6;
        let theta = 23.0f64;
        let a = steering_vector(theta, n).unwrap();
        let mut r = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                r[(i, j)] = a[i] * a[j].conj();
            }
        }
        let lags = lag_vector(&cov(r));
        let s = theta.to_radians().sin();
        for (k, got) in lags.iter().enumerate() {
            let expect = Complex64::from_polar(1.0, std::f64::consts::PI * k as f64 * s);
            assert!(
                (got - expect).norm() < 1e-10,
                "lag {k}: got {got}, expected {expect}"
            );
        }
        assert!(lags[0].im.abs() < 1e-10);
    }

    #[test]
    fn lag_features_layout() {
        let r = cov(Array2::eye(4));
        let f = lag_features(&r, false).unwrap();
        assert_eq!(f.values, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(f.dim(), 8);
    }

    #[test]
    fn lag_features_r0_normalization() {
        // r = [2, 2j] → divide by |r0| = 2 → f = [1, 0, 0, 1]
        let r = cov(array![
            [Complex64::new(2.0, 0.0), Complex64::new(0.0, 2.0)],
            [Complex64::new(0.0, -2.0), Complex64::new(2.0, 0.0)]
        ]);
        let f = lag_features(&r, true).unwrap();
        assert_eq!(f.values, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn lag_features_power_invariance() {
        // scaling X by c > 0 scales R by c²; with normalize_r0 the features
        // are unchanged up to floating-point rounding
        let cfg = ArrayConfig::new(6, 30).unwrap();
        let scn = SourceScenario::new(vec![-15.0, 40.0], 3.0, false, 17);
        let x = generate_snapshots(&cfg, &scn).unwrap();
        for c in [0.5, 3.0, 250.0] {
            let scaled = SnapshotMatrix {
                data: x.data.mapv(|z| z * c),
            };
            let f0 = extract(&x, &FeatureMethod::Lag { normalize_r0: true }).unwrap();
            let f1 = extract(&scaled, &FeatureMethod::Lag { normalize_r0: true }).unwrap();
            for (a, b) in f0.values.iter().zip(&f1.values) {
                assert!((a - b).abs() < 1e-9, "c={c}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn lag_features_degenerate_r0() {
        let r = cov(Array2::zeros((3, 3)));
        assert!(matches!(lag_features(&r, true), Err(Error::Degenerate(_))));
        assert!(lag_features(&r, false).is_ok());
    }

    #[test]
    fn smoothing_matches_unrolled_definition() {
        let cfg = ArrayConfig::new(3, 10).unwrap();
        let scn = SourceScenario::new(vec![12.0], 5.0, false, 8);
        let x = generate_snapshots(&cfg, &scn).unwrap();
        let sc = SmoothingConfig::new(2, 3).unwrap();
        let rss = spatial_smoothing(&x, &sc).unwrap();

        let top = SnapshotMatrix {
            data: x.data.slice(ndarray::s![0..2, ..]).to_owned(),
        };
        let bottom = SnapshotMatrix {
            data: x.data.slice(ndarray::s![1..3, ..]).to_owned(),
        };
        let expect =
            (&sample_covariance(&top).data + &sample_covariance(&bottom).data).mapv(|z| z * 0.5);
        for (a, b) in rss.data.iter().zip(expect.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn smoothing_restores_rank_of_coherent_pair() {
        let cfg = ArrayConfig::new(8, 64).unwrap();
        let scn = SourceScenario::new(vec![-25.0, 30.0], 0.0, true, 13).noise_free();
        let x = generate_snapshots(&cfg, &scn).unwrap();
        let full = sample_covariance(&x);
        assert_eq!(eig::numerical_rank(&full.data, 1e-8).unwrap(), 1);
        let sc = SmoothingConfig::new(6, 8).unwrap();
        assert_eq!(sc.n_subarrays, 3);
        let rss = spatial_smoothing(&x, &sc).unwrap();
        assert_eq!(eig::numerical_rank(&rss.data, 1e-8).unwrap(), 2);
    }

    #[test]
    fn smoothing_single_source_stays_rank_one() {
        let cfg = ArrayConfig::new(6, 40).unwrap();
        let scn = SourceScenario::new(vec![18.0], 0.0, false, 3).noise_free();
        let x = generate_snapshots(&cfg, &scn).unwrap();
        let rss = spatial_smoothing(&x, &SmoothingConfig::new(4, 6).unwrap()).unwrap();
        assert_eq!(eig::numerical_rank(&rss.data, 1e-8).unwrap(), 1);
    }

    #[test]
    fn smoothing_trace_linearity() {
        let cfg = ArrayConfig::new(8, 25).unwrap();
        let scn = SourceScenario::new(vec![-40.0, 10.0, 55.0], 2.0, true, 29);
        let x = generate_snapshots(&cfg, &scn).unwrap();
        let sc = SmoothingConfig::new(5, 8).unwrap();
        let rss = spatial_smoothing(&x, &sc).unwrap();
        let trace: f64 = (0..5).map(|i| rss.data[(i, i)].re).sum();
        let mut mean_sub_trace = 0.0;
        for j in 0..sc.n_subarrays {
            let sub = SnapshotMatrix {
                data: x.data.slice(ndarray::s![j..j + 5, ..]).to_owned(),
            };
            let r = sample_covariance(&sub);
            mean_sub_trace += (0..5).map(|i| r.data[(i, i)].re).sum::<f64>();
        }
        mean_sub_trace /= sc.n_subarrays as f64;
        assert!((trace - mean_sub_trace).abs() <= 1e-10 * trace.abs());
    }

    #[test]
    fn smoothing_rejects_oversized_subarray() {
        let cfg = ArrayConfig::new(4, 10).unwrap();
        let x = generate_snapshots(&cfg, &SourceScenario::new(vec![0.0], 0.0, false, 1)).unwrap();
        assert!(SmoothingConfig::new(4, 4).is_err());
        assert!(SmoothingConfig::new(5, 4).is_err());
        let bad = SmoothingConfig {
            subarray_size: 4,
            n_subarrays: 1,
        };
        assert!(spatial_smoothing(&x, &bad).is_err());
    }

    #[test]
    fn smoothing_features_identity() {
        let f = smoothing_features(&cov(Array2::eye(2)));
        assert_eq!(f.values, vec![1.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn smoothing_features_complex_entries() {
        let r = cov(array![
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)],
            [Complex64::new(0.0, -1.0), Complex64::new(1.0, 0.0)]
        ]);
        let f = smoothing_features(&r);
        assert_eq!(f.values, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn smoothing_features_round_trip() {
        let cfg = ArrayConfig::new(5, 20).unwrap();
        let scn = SourceScenario::new(vec![-5.0, 60.0], 4.0, false, 31);
        let x = generate_snapshots(&cfg, &scn).unwrap();
        let rss = spatial_smoothing(&x, &SmoothingConfig::new(3, 5).unwrap()).unwrap();
        let f = smoothing_features(&rss);
        // rebuild the upper triangle from the feature layout
        let half = f.values.len() / 2;
        let mut idx = 0;
        for i in 0..3 {
            for j in i..3 {
                let z = Complex64::new(f.values[idx], f.values[half + idx]);
                assert_eq!(z, rss.data[(i, j)]);
                idx += 1;
            }
        }
    }

    #[test]
    fn normalizer_two_point_example() {
        let method = FeatureMethod::Lag { normalize_r0: false };
        let fs = vec![
            FeatureVector { values: vec![0.0, 0.0], method },
            FeatureVector { values: vec![2.0, 2.0], method },
        ];
        let n = fit_normalizer(&fs).unwrap();
        assert_eq!(n.mean, vec![1.0, 1.0]);
        assert_eq!(n.std, vec![1.0, 1.0]);
        assert_eq!(apply_normalizer(&n, &fs[0]).unwrap().values, vec![-1.0, -1.0]);
        assert_eq!(apply_normalizer(&n, &fs[1]).unwrap().values, vec![1.0, 1.0]);
    }

    #[test]
    fn normalizer_clamps_constant_dimension() {
        let method = FeatureMethod::Lag { normalize_r0: false };
        let fs = vec![
            FeatureVector { values: vec![3.0, 1.0], method },
            FeatureVector { values: vec![3.0, 5.0], method },
        ];
        let n = fit_normalizer(&fs).unwrap();
        assert_eq!(n.std[0], 1.0);
        assert_eq!(apply_normalizer(&n, &fs[0]).unwrap().values[0], 0.0);
    }

    #[test]
    fn normalized_set_has_zero_mean_unit_std() {
        let cfg = ArrayConfig::new(6, 30).unwrap();
        let method = FeatureMethod::Lag { normalize_r0: true };
        let fs: Vec<FeatureVector> = (0..64)
            .map(|i| {
                let scn = SourceScenario::new(vec![-60.0 + 1.5 * i as f64], 5.0, false, 100 + i);
                extract(&generate_snapshots(&cfg, &scn).unwrap(), &method).unwrap()
            })
            .collect();
        let n = fit_normalizer(&fs).unwrap();
        let transformed: Vec<FeatureVector> =
            fs.iter().map(|f| apply_normalizer(&n, f).unwrap()).collect();
        let m = fit_normalizer(&transformed).unwrap();
        for (mean, std) in m.mean.iter().zip(&m.std) {
            assert!(mean.abs() < 1e-9, "residual mean {mean}");
            // constant dims get clamped to 1, which also passes
            assert!((std - 1.0).abs() < 1e-9, "residual std {std}");
        }
    }

    #[test]
    fn normalizer_shape_errors() {
        let method = FeatureMethod::Lag { normalize_r0: false };
        let one = vec![FeatureVector { values: vec![1.0], method }];
        assert!(matches!(fit_normalizer(&one), Err(Error::Training(_))));
        let n = Normalizer::identity(3);
        let bad = FeatureVector { values: vec![1.0], method };
        assert!(matches!(apply_normalizer(&n, &bad), Err(Error::Shape(_))));
    }
}
