//! Inference pipeline for a trained model: features → normalize → encode →
//! query → decode. No matrix decompositions anywhere on this path.

use std::path::Path;

use rayon::prelude::*;

use crate::decoder::{decode, DecoderConfig, DoaEstimate};
use crate::error::Result;
use crate::features::{apply_normalizer, extract};
use crate::grid::PseudoSpectrum;
use crate::hdc::{EncoderBasis, Hypervector};
use crate::memory::AssociativeMemory;
use crate::signal::SnapshotMatrix;

/// A finalized associative memory plus its regenerated encoder basis.
pub struct Estimator {
    memory: AssociativeMemory,
    basis: EncoderBasis,
}

impl Estimator {
    pub fn new(memory: AssociativeMemory) -> Result<Self> {
        let basis = EncoderBasis::from_header(&memory.meta.encoder)?;
        Ok(Self { memory, basis })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::new(AssociativeMemory::load(path)?)
    }

    pub fn memory(&self) -> &AssociativeMemory {
        &self.memory
    }

    pub fn basis(&self) -> &EncoderBasis {
        &self.basis
    }

    /// Encode raw snapshots into the query hypervector.
    pub fn encode(&self, x: &SnapshotMatrix) -> Result<Hypervector> {
        let raw = extract(x, &self.memory.meta.feature_method)?;
        let f = apply_normalizer(&self.memory.meta.normalizer, &raw)?;
        self.basis.encode(&f)
    }

    pub fn spectrum(&self, x: &SnapshotMatrix) -> Result<PseudoSpectrum> {
        self.memory.query(&self.encode(x)?)
    }

    /// Spectra for a batch of samples; encodings run in parallel and the
    /// memory is scanned once per query block.
    pub fn spectra(&self, xs: &[SnapshotMatrix]) -> Result<Vec<PseudoSpectrum>> {
        let queries: Vec<Hypervector> = xs
            .par_iter()
            .map(|x| self.encode(x))
            .collect::<Result<_>>()?;
        self.memory.query_batch(&queries)
    }

    pub fn estimate(&self, x: &SnapshotMatrix, cfg: &DecoderConfig) -> Result<DoaEstimate> {
        decode(&self.spectrum(x)?, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{fit_normalizer, FeatureMethod};
    use crate::grid::AngularGrid;
    use crate::hdc::EncoderBasis;
    use crate::memory::{train, TrainOptions, TrainSample};
    use crate::signal::{generate_snapshots, ArrayConfig, SourceScenario};

    #[test]
    fn single_source_smoke_pipeline() {
        // train a coarse model on a handful of single-source samples and
        // check it recovers a held-out angle
        let cfg = ArrayConfig::new(8, 100).unwrap();
        let method = FeatureMethod::Lag { normalize_r0: true };
        let grid = AngularGrid::new(-90.0, 90.0, 1.0).unwrap();

        let angles: Vec<f64> = (0..181).map(|i| -90.0 + i as f64).collect();
        let raw: Vec<(crate::features::FeatureVector, Vec<f64>)> = angles
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let scn = SourceScenario::new(vec![a], 10.0, false, 5000 + i as u64);
                let x = generate_snapshots(&cfg, &scn).unwrap();
                (extract(&x, &method).unwrap(), vec![a])
            })
            .collect();
        let norm = fit_normalizer(&raw.iter().map(|(f, _)| f.clone()).collect::<Vec<_>>()).unwrap();
        let samples: Vec<TrainSample> = raw
            .iter()
            .map(|(f, doas)| TrainSample {
                features: apply_normalizer(&norm, f).unwrap(),
                doas_deg: doas.clone(),
            })
            .collect();
        let basis = EncoderBasis::new(method.feature_dim(8), 4096, 1.0, 99).unwrap();
        let mut mem = train(&samples, &grid, &basis, &TrainOptions::default()).unwrap();
        mem.meta.normalizer = norm;

        let est = Estimator::new(mem).unwrap();
        let probe = SourceScenario::new(vec![24.0], 10.0, false, 314159);
        let x = generate_snapshots(&cfg, &probe).unwrap();
        let out = est
            .estimate(&x, &DecoderConfig::new(1, 6.0).unwrap())
            .unwrap();
        assert!(
            (out.angles_deg[0] - 24.0).abs() <= 3.0,
            "estimated {:.1}° for a 24° source",
            out.angles_deg[0]
        );

        // batch path agrees with the scalar path exactly
        let spectra = est.spectra(std::slice::from_ref(&x)).unwrap();
        assert_eq!(spectra[0].scores, est.spectrum(&x).unwrap().scores);
    }
}
