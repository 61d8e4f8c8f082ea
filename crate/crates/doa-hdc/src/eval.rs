//! MSPE scoring with permutation matching and the experiment harness that
//! trains, evaluates per SNR point, and emits reports.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;
use std::time::Instant;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::dataset::{generate_dataset, Dataset, DatasetHeader, DATASET_FORMAT_VERSION};
use crate::decoder::{decode, DecoderConfig};
use crate::eig;
use crate::error::{Error, Result};
use crate::estimator::Estimator;
use crate::features::{apply_normalizer, extract, fit_normalizer, FeatureMethod, FeatureVector};
use crate::hdc::EncoderBasis;
use crate::memory::{train, AssociativeMemory, TrainOptions, TrainSample};
use crate::music::music_estimate;
use crate::signal::RNG_ALGORITHM;

/// Squared periodic error charged to a decode failure when the
/// failure-penalty flag is on: every source maximally wrong.
pub const FAILURE_PENALTY_RAD2: f64 = FRAC_PI_2 * FRAC_PI_2;

/// Signed periodic angular difference in radians, period 180°.
fn periodic_diff_rad(a_deg: f64, b_deg: f64) -> f64 {
    let delta = (a_deg - b_deg).to_radians();
    (delta + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2
}

/// Minimum over source permutations of the mean squared periodic error,
/// in radians². Matching is brute force; M stays small here.
pub fn periodic_sq_error(est_deg: &[f64], true_deg: &[f64]) -> Result<f64> {
    if est_deg.len() != true_deg.len() || est_deg.is_empty() {
        return Err(Error::Shape(format!(
            "cannot match {} estimates to {} truths",
            est_deg.len(),
            true_deg.len()
        )));
    }
    let m = est_deg.len();
    let best = (0..m)
        .permutations(m)
        .map(|perm| {
            perm.iter()
                .enumerate()
                .map(|(i, &p)| {
                    let d = periodic_diff_rad(est_deg[p], true_deg[i]);
                    d * d
                })
                .sum::<f64>()
                / m as f64
        })
        .fold(f64::INFINITY, f64::min);
    Ok(best)
}

/// One record of the evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub snr_db: f64,
    pub mspe_db: f64,
    pub n_scored: u64,
    pub n_failed: u64,
}

/// Evaluation report: full config echo plus one row per method × SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MspeReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
}

impl MspeReport {
    pub fn row(&self, method: &str, snr_db: f64) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.snr_db == snr_db)
    }
}

/// Wall-clock and decomposition counters per method; reported on stdout,
/// never serialized, so report files stay byte-deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodTiming {
    pub method: String,
    pub mean_inference_us: f64,
    pub eig_decompositions: u64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: MspeReport,
    pub timing: Vec<MethodTiming>,
}

/// Aggregate of one test bucket under one method.
struct BucketScore {
    n_scored: u64,
    n_failed: u64,
    mean_sq_error_rad2: f64,
}

impl BucketScore {
    fn from_results(
        results: Vec<Result<Vec<f64>>>,
        truths: &[Vec<f64>],
        failure_penalty: bool,
    ) -> Result<Self> {
        let mut n_scored = 0u64;
        let mut n_failed = 0u64;
        let mut total = 0.0;
        for (res, truth) in results.into_iter().zip(truths) {
            match res {
                Ok(angles) => {
                    total += periodic_sq_error(&angles, truth)?;
                    n_scored += 1;
                }
                Err(Error::Decode { .. }) => {
                    n_failed += 1;
                    if failure_penalty {
                        total += FAILURE_PENALTY_RAD2;
                        n_scored += 1;
                    }
                }
                Err(other) => return Err(other),
            }
        }
        if n_scored == 0 {
            return Err(Error::Degenerate(
                "every sample in the bucket failed to decode".into(),
            ));
        }
        Ok(Self {
            n_scored,
            n_failed,
            mean_sq_error_rad2: total / n_scored as f64,
        })
    }

    fn mspe_db(&self) -> f64 {
        10.0 * self.mean_sq_error_rad2.log10()
    }
}

/// Dataset header for the training split: SNR drawn uniformly over the
/// span of the configured SNR points.
pub fn train_dataset_header(cfg: &ExperimentConfig) -> DatasetHeader {
    let snr_min = cfg.scenario.snr_db.iter().copied().fold(f64::INFINITY, f64::min);
    let snr_max = cfg.scenario.snr_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    DatasetHeader {
        format_version: DATASET_FORMAT_VERSION,
        n_antennas: cfg.array.n_antennas,
        n_snapshots: cfg.array.n_snapshots,
        m_sources: cfg.scenario.m_sources,
        coherent: cfg.scenario.coherent,
        snr_min_db: snr_min,
        snr_max_db: snr_max,
        min_separation_deg: cfg.scenario.min_separation_deg,
        grid_resolution_deg: cfg.grid.resolution_deg,
        rng_algorithm: RNG_ALGORITHM.to_string(),
        base_seed: cfg.dataset.base_seed,
        sample_count: cfg.dataset.train_size,
    }
}

/// Dataset header for test bucket `bucket` at a fixed SNR; seed ranges of
/// the training split and of every bucket are disjoint.
pub fn test_dataset_header(cfg: &ExperimentConfig, bucket: usize, snr_db: f64) -> DatasetHeader {
    let mut h = train_dataset_header(cfg);
    h.snr_min_db = snr_db;
    h.snr_max_db = snr_db;
    h.base_seed = cfg
        .dataset
        .base_seed
        .wrapping_add(cfg.dataset.train_size)
        .wrapping_add(bucket as u64 * cfg.dataset.test_size);
    h.sample_count = cfg.dataset.test_size;
    h
}

/// Extract, normalize, encode, and train an associative memory from a
/// dataset; the fitted normalizer travels with the model.
pub fn train_model(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    method: &FeatureMethod,
) -> Result<AssociativeMemory> {
    let raw: Vec<FeatureVector> = ds
        .samples
        .par_iter()
        .map(|s| extract(&s.snapshots, method))
        .collect::<Result<_>>()?;
    let norm = fit_normalizer(&raw)?;
    let samples: Vec<TrainSample> = raw
        .iter()
        .zip(&ds.samples)
        .map(|(f, s)| {
            Ok(TrainSample {
                features: apply_normalizer(&norm, f)?,
                doas_deg: s.doas_deg.clone(),
            })
        })
        .collect::<Result<_>>()?;
    let basis = EncoderBasis::new(
        method.feature_dim(cfg.array.n_antennas),
        cfg.encoder.dim,
        cfg.encoder.bandwidth,
        cfg.encoder.seed,
    )?;
    let opts = TrainOptions {
        eta: cfg.memory.eta,
        epochs: cfg.memory.epochs,
        adaptive: cfg.memory.adaptive,
    };
    let mut mem = train(&samples, &cfg.angular_grid()?, &basis, &opts)?;
    mem.meta.normalizer = norm;
    Ok(mem)
}

/// Score one dataset with a trained HDC model. Returns per-sample decoded
/// angles (or the decode failure) in dataset order.
fn hdc_decode_all(
    est: &Estimator,
    ds: &Dataset,
    dec: &DecoderConfig,
) -> Result<Vec<Result<Vec<f64>>>> {
    let xs: Vec<_> = ds.samples.iter().map(|s| s.snapshots.clone()).collect();
    let spectra = est.spectra(&xs)?;
    Ok(spectra
        .par_iter()
        .map(|sp| decode(sp, dec).map(|e| e.angles_deg))
        .collect())
}

fn music_decode_all(
    ds: &Dataset,
    m_sources: usize,
    grid: &crate::grid::AngularGrid,
    dec: &DecoderConfig,
) -> Result<Vec<Result<Vec<f64>>>> {
    Ok(ds
        .samples
        .par_iter()
        .map(|s| music_estimate(&s.snapshots, m_sources, grid, dec).map(|e| e.angles_deg))
        .collect())
}

/// Raw wall-clock and decomposition counters for one scored dataset.
#[derive(Debug, Clone, Copy)]
pub struct EvalCounters {
    pub wall: std::time::Duration,
    pub inferences: u64,
    pub eig_decompositions: u64,
}

/// Score one dataset under one method. `estimator` must be Some for the
/// HDC methods and is ignored for `music`.
pub fn evaluate_dataset(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    method_name: &str,
    estimator: Option<&Estimator>,
) -> Result<(ReportRow, EvalCounters)> {
    let dec = DecoderConfig::new(ds.header.m_sources, cfg.decoder.min_separation_deg)?;
    let truths: Vec<Vec<f64>> = ds.samples.iter().map(|s| s.doas_deg.clone()).collect();
    let is_hdc = cfg.feature_method_for(method_name)?.is_some();

    let eig_before = eig::decomposition_count();
    let started = Instant::now();
    let results = if is_hdc {
        let est = estimator.ok_or_else(|| {
            Error::State(format!("method '{method_name}' needs a trained model"))
        })?;
        hdc_decode_all(est, ds, &dec)?
    } else {
        music_decode_all(ds, ds.header.m_sources, &cfg.angular_grid()?, &dec)?
    };
    let wall = started.elapsed();
    let eig_delta = eig::decomposition_count() - eig_before;

    let score = BucketScore::from_results(results, &truths, cfg.eval.failure_penalty)?;
    let snr_db = if ds.header.snr_min_db == ds.header.snr_max_db {
        ds.header.snr_min_db
    } else {
        0.5 * (ds.header.snr_min_db + ds.header.snr_max_db)
    };
    Ok((
        ReportRow {
            method: method_name.to_string(),
            snr_db,
            mspe_db: score.mspe_db(),
            n_scored: score.n_scored,
            n_failed: score.n_failed,
        },
        EvalCounters {
            wall,
            inferences: ds.samples.len() as u64,
            eig_decompositions: eig_delta,
        },
    ))
}

/// Run the full protocol: one training split shared by the HDC methods,
/// one test bucket per configured SNR point shared by all methods.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let any_hdc = cfg.eval.methods.iter().any(|m| m != "music");
    let train_ds = if any_hdc {
        Some(generate_dataset(&train_dataset_header(cfg))?)
    } else {
        None
    };
    let test_sets: Vec<Dataset> = cfg
        .scenario
        .snr_db
        .iter()
        .enumerate()
        .map(|(b, &snr)| generate_dataset(&test_dataset_header(cfg, b, snr)))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut timing = Vec::new();
    for name in &cfg.eval.methods {
        let method = cfg.feature_method_for(name)?;
        let estimator = match &method {
            Some(fm) => {
                let ds = train_ds.as_ref().expect("training split exists for hdc methods");
                Some(Estimator::new(train_model(cfg, ds, fm)?)?)
            }
            None => None,
        };
        let mut spent = std::time::Duration::ZERO;
        let mut inferences = 0u64;
        let mut eig_total = 0u64;
        for ds in &test_sets {
            let (row, counters) = evaluate_dataset(cfg, ds, name, estimator.as_ref())?;
            rows.push(row);
            spent += counters.wall;
            inferences += counters.inferences;
            eig_total += counters.eig_decompositions;
        }
        timing.push(MethodTiming {
            method: name.clone(),
            mean_inference_us: spent.as_secs_f64() * 1e6 / inferences.max(1) as f64,
            eig_decompositions: eig_total,
        });
    }
    Ok(ExperimentOutcome {
        report: MspeReport {
            config: cfg.clone(),
            rows,
        },
        timing,
    })
}

pub fn sweep(cfgs: &[ExperimentConfig]) -> Result<Vec<ExperimentOutcome>> {
    cfgs.iter().map(run_experiment).collect()
}

/// Write a report as pretty JSON with a fixed field order.
pub fn export_report(report: &MspeReport, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Corrupt(format!("report serialization failed: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load_report(path: &Path) -> Result<MspeReport> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Corrupt(format!("bad report: {e}")))
}
