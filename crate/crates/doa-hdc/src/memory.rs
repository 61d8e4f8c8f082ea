//! Associative memory of per-angle centroid hypervectors: positive-only
//! multi-label training, unit normalization, and dot-product querying.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMethod, Normalizer};
use crate::grid::{AngularGrid, PseudoSpectrum};
use crate::hdc::{dot_re, EncoderBasis, EncoderHeader, Hypervector};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Queries are processed in blocks of this many hypervectors so each
/// centroid row is streamed from memory once per block instead of once
/// per query.
const QUERY_BLOCK: usize = 16;

/// Training provenance persisted with the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub eta: f64,
    pub epochs: u32,
    pub n_samples: u64,
    pub encoder: EncoderHeader,
    pub feature_method: FeatureMethod,
    pub normalizer: Normalizer,
}

/// One training example: features plus the true DoAs that produced them.
#[derive(Debug, Clone)]
pub struct TrainSample {
    pub features: crate::features::FeatureVector,
    pub doas_deg: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    pub eta: f64,
    pub epochs: u32,
    /// OnlineHD-style learning-rate scaling η·(1 − similarity); off by
    /// default, where the plain printed rule applies.
    pub adaptive: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            eta: 1.0,
            epochs: 1,
            adaptive: false,
        }
    }
}

/// Grid-size × D matrix of centroids plus the metadata needed to rebuild
/// the full inference pipeline from a saved model.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociativeMemory {
    centroids: Array2<Complex64>,
    grid: AngularGrid,
    normalized: bool,
    update_counts: Vec<u64>,
    pub meta: TrainMeta,
}

#[derive(Serialize, Deserialize)]
struct ModelHeader {
    format_version: u32,
    grid: AngularGrid,
    meta: TrainMeta,
    normalized: bool,
    update_counts: Vec<u64>,
}

impl AssociativeMemory {
    /// Fresh all-zero memory, not yet finalized.
    pub fn new(grid: AngularGrid, encoder: EncoderHeader, feature_method: FeatureMethod) -> Self {
        let g = grid.len();
        let d = encoder.dim;
        Self {
            centroids: Array2::zeros((g, d)),
            grid,
            normalized: false,
            update_counts: vec![0; g],
            meta: TrainMeta {
                eta: 1.0,
                epochs: 1,
                n_samples: 0,
                feature_method,
                normalizer: Normalizer::identity(encoder.feature_dim),
                encoder,
            },
        }
    }

    pub fn grid(&self) -> &AngularGrid {
        self.grid_ref()
    }

    fn grid_ref(&self) -> &AngularGrid {
        &self.grid
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn update_counts(&self) -> &[u64] {
        &self.update_counts
    }

    pub fn centroid(&self, k: usize) -> &[Complex64] {
        self.centroids
            .row(k)
            .to_slice()
            .expect("centroid rows are contiguous")
    }

    /// Apply one sample's positive update: every true label pulls its
    /// nearest-grid-point centroid toward the query hypervector. There is
    /// no subtractive path; a nonpositive η is rejected outright.
    pub fn update(
        &mut self,
        h: &Hypervector,
        labels_deg: &[f64],
        eta: f64,
        adaptive: bool,
    ) -> Result<()> {
        if self.normalized {
            return Err(Error::State("memory already finalized".into()));
        }
        if h.dim() != self.meta.encoder.dim {
            return Err(Error::Shape(format!(
                "hypervector dim {} does not match memory dim {}",
                h.dim(),
                self.meta.encoder.dim
            )));
        }
        if !(eta > 0.0) {
            return Err(Error::Training(format!("learning rate must be positive, got {eta}")));
        }
        if labels_deg.is_empty() {
            return Err(Error::Label("sample has no labels".into()));
        }
        // resolve all labels before mutating anything
        let indices: Vec<usize> = labels_deg
            .iter()
            .map(|&a| self.grid.nearest_index(a))
            .collect::<Result<_>>()?;
        let d = self.meta.encoder.dim as f64;
        for k in indices {
            let factor = if adaptive {
                let sim = dot_re(self.centroid(k), &h.values) / d;
                (eta * (1.0 - sim)).max(0.0)
            } else {
                eta
            };
            let mut row = self.centroids.row_mut(k);
            for (c, v) in row.iter_mut().zip(&h.values) {
                *c += v * factor;
            }
            self.update_counts[k] += 1;
        }
        Ok(())
    }

    /// Scale every updated centroid to ‖C‖₂ = √D so that a centroid's
    /// self-similarity is 1, matching encoder outputs. Never-updated
    /// centroids stay exactly zero. Finalizing twice is a no-op.
    pub fn finalize(&mut self) {
        if self.normalized {
            return;
        }
        let target = (self.meta.encoder.dim as f64).sqrt();
        for (k, count) in self.update_counts.iter().enumerate() {
            if *count == 0 {
                continue;
            }
            let mut row = self.centroids.row_mut(k);
            let norm = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.0 {
                let scale = target / norm;
                for c in row.iter_mut() {
                    *c *= scale;
                }
            }
        }
        self.normalized = true;
    }

    /// Similarity of the query against every centroid.
    pub fn query(&self, h: &Hypervector) -> Result<PseudoSpectrum> {
        if !self.normalized {
            return Err(Error::State("memory must be finalized before querying".into()));
        }
        if h.dim() != self.meta.encoder.dim {
            return Err(Error::Shape(format!(
                "query dim {} does not match memory dim {}",
                h.dim(),
                self.meta.encoder.dim
            )));
        }
        let d = self.meta.encoder.dim as f64;
        let scores = (0..self.grid.len())
            .map(|k| dot_re(self.centroid(k), &h.values) / d)
            .collect();
        PseudoSpectrum::new(scores, self.grid)
    }

    /// Batched queries; identical results to calling `query` per vector,
    /// but each centroid row is read once per block of queries and rows
    /// are processed in parallel.
    pub fn query_batch(&self, queries: &[Hypervector]) -> Result<Vec<PseudoSpectrum>> {
        if !self.normalized {
            return Err(Error::State("memory must be finalized before querying".into()));
        }
        let dim = self.meta.encoder.dim;
        for q in queries {
            if q.dim() != dim {
                return Err(Error::Shape(format!(
                    "query dim {} does not match memory dim {dim}",
                    q.dim()
                )));
            }
        }
        let g = self.grid.len();
        let d = dim as f64;
        let rows = self
            .centroids
            .as_slice()
            .expect("centroid matrix is contiguous");
        let mut all_scores = vec![vec![0.0f64; g]; queries.len()];
        for (bi, block) in queries.chunks(QUERY_BLOCK).enumerate() {
            let base = bi * QUERY_BLOCK;
            let tiles: Vec<Vec<f64>> = (0..g)
                .into_par_iter()
                .map(|k| {
                    let row = &rows[k * dim..(k + 1) * dim];
                    block.iter().map(|q| dot_re(row, &q.values) / d).collect()
                })
                .collect();
            for (k, tile) in tiles.iter().enumerate() {
                for (qi, s) in tile.iter().enumerate() {
                    all_scores[base + qi][k] = *s;
                }
            }
        }
        all_scores
            .into_iter()
            .map(|scores| PseudoSpectrum::new(scores, self.grid))
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let header = ModelHeader {
            format_version: MODEL_FORMAT_VERSION,
            grid: self.grid,
            meta: self.meta.clone(),
            normalized: self.normalized,
            update_counts: self.update_counts.clone(),
        };
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, &header)
            .map_err(|e| Error::Corrupt(format!("header serialization failed: {e}")))?;
        w.write_all(b"\n")?;
        for z in self.centroids.iter() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut header_bytes = Vec::new();
        let mut byte = [0u8; 1];
        loop {
            let n = r.read(&mut byte)?;
            if n == 0 {
                return Err(Error::Corrupt("missing model header line".into()));
            }
            if byte[0] == b'\n' {
                break;
            }
            header_bytes.push(byte[0]);
        }
        let header: ModelHeader = serde_json::from_slice(&header_bytes)
            .map_err(|e| Error::Corrupt(format!("bad model header: {e}")))?;
        if header.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Version {
                found: header.format_version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let g = header.grid.len();
        let d = header.meta.encoder.dim;
        if header.update_counts.len() != g {
            return Err(Error::Corrupt(format!(
                "expected {g} update counts, found {}",
                header.update_counts.len()
            )));
        }
        let mut buf = vec![0u8; g * d * 16];
        r.read_exact(&mut buf)
            .map_err(|_| Error::Corrupt("centroid payload truncated".into()))?;
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::Corrupt("trailing bytes after centroid payload".into()));
        }
        let values: Vec<Complex64> = buf
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[0..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..16].try_into().unwrap()),
                )
            })
            .collect();
        let centroids = Array2::from_shape_vec((g, d), values)
            .map_err(|e| Error::Corrupt(format!("centroid shape: {e}")))?;
        Ok(Self {
            centroids,
            grid: header.grid,
            normalized: header.normalized,
            update_counts: header.update_counts,
            meta: header.meta,
        })
    }
}

/// Train a memory over the samples in dataset order: for every sample and
/// every one of its labels, the matching centroid accumulates +η·H_q;
/// there is no negative update. Centroids are normalized afterwards.
pub fn train(
    samples: &[TrainSample],
    grid: &AngularGrid,
    basis: &EncoderBasis,
    opts: &TrainOptions,
) -> Result<AssociativeMemory> {
    if samples.is_empty() {
        return Err(Error::Training("empty training set".into()));
    }
    if !(opts.eta > 0.0) {
        return Err(Error::Training(format!(
            "learning rate must be positive, got {}",
            opts.eta
        )));
    }
    if opts.epochs < 1 {
        return Err(Error::Training("epochs must be at least 1".into()));
    }
    let mut mem = AssociativeMemory::new(*grid, basis.header(), samples[0].features.method);
    mem.meta.eta = opts.eta;
    mem.meta.epochs = opts.epochs;
    mem.meta.n_samples = samples.len() as u64;
    for _ in 0..opts.epochs {
        for s in samples {
            let h = basis.encode(&s.features)?;
            mem.update(&h, &s.doas_deg, opts.eta, opts.adaptive)?;
        }
    }
    mem.finalize();
    Ok(mem)
}
