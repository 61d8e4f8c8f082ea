//! Greedy non-maximum suppression over the angular pseudo-spectrum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PseudoSpectrum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub n_sources: usize,
    pub min_separation_deg: f64,
}

impl DecoderConfig {
    pub fn new(n_sources: usize, min_separation_deg: f64) -> Result<Self> {
        if n_sources < 1 {
            return Err(Error::Config("decoder needs at least one source".into()));
        }
        if !(min_separation_deg > 0.0 && min_separation_deg < 180.0) {
            return Err(Error::Config(format!(
                "suppression window must be in (0°, 180°), got {min_separation_deg}"
            )));
        }
        Ok(Self {
            n_sources,
            min_separation_deg,
        })
    }
}

/// Decoded angles with their scores, in descending score order.
#[derive(Debug, Clone, PartialEq)]
pub struct DoaEstimate {
    pub angles_deg: Vec<f64>,
    pub scores: Vec<f64>,
}

/// Pick the M most prominent peaks by greedy selection: take the global
/// maximum of the remaining scores, discard every grid point within the
/// suppression window (inclusive, no wraparound), repeat. Equal scores
/// resolve to the lowest angle.
pub fn decode(spectrum: &PseudoSpectrum, cfg: &DecoderConfig) -> Result<DoaEstimate> {
    let n = spectrum.scores.len();
    if n < cfg.n_sources {
        return Err(Error::Config(format!(
            "grid of {n} points cannot yield {} peaks",
            cfg.n_sources
        )));
    }
    let mut alive = vec![true; n];
    let mut angles = Vec::with_capacity(cfg.n_sources);
    let mut scores = Vec::with_capacity(cfg.n_sources);
    for _ in 0..cfg.n_sources {
        let mut best: Option<usize> = None;
        for k in 0..n {
            if !alive[k] {
                continue;
            }
            // strict > keeps the lowest angle on ties
            if best.is_none_or(|b| spectrum.scores[k] > spectrum.scores[b]) {
                best = Some(k);
            }
        }
        let Some(peak) = best else {
            return Err(Error::Decode {
                found: angles.len(),
                requested: cfg.n_sources,
            });
        };
        let peak_angle = spectrum.grid.angle(peak);
        angles.push(peak_angle);
        scores.push(spectrum.scores[peak]);
        for k in 0..n {
            if alive[k] && (spectrum.grid.angle(k) - peak_angle).abs() <= cfg.min_separation_deg {
                alive[k] = false;
            }
        }
    }
    Ok(DoaEstimate { angles_deg: angles, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AngularGrid;

    fn spectrum(scores: Vec<f64>) -> PseudoSpectrum {
        let grid = AngularGrid::default();
        assert_eq!(scores.len(), grid.len());
        PseudoSpectrum::new(scores, grid).unwrap()
    }

    fn spike_spectrum(spikes: &[(f64, f64)]) -> PseudoSpectrum {
        let grid = AngularGrid::default();
        let mut scores = vec![0.0; grid.len()];
        for &(angle, value) in spikes {
            scores[grid.nearest_index(angle).unwrap()] = value;
        }
        PseudoSpectrum::new(scores, grid).unwrap()
    }

    #[test]
    fn single_spike() {
        let spec = spike_spectrum(&[(10.0, 1.0)]);
        let est = decode(&spec, &DecoderConfig::new(1, 6.0).unwrap()).unwrap();
        assert_eq!(est.angles_deg, vec![10.0]);
        assert_eq!(est.scores, vec![1.0]);
    }

    #[test]
    fn nearby_spike_is_suppressed() {
        // 0.9 at 14.0° sits inside the ±6° window of the 10.0° peak, so the
        // second pick falls back to the best surviving point: the uniform
        // floor, lowest angle first
        let spec = spike_spectrum(&[(10.0, 1.0), (14.0, 0.9)]);
        let est = decode(&spec, &DecoderConfig::new(2, 6.0).unwrap()).unwrap();
        assert_eq!(est.angles_deg[0], 10.0);
        assert_eq!(est.angles_deg[1], -90.0);
        assert_eq!(est.scores, vec![1.0, 0.0]);
    }

    #[test]
    fn spike_outside_window_survives() {
        let spec = spike_spectrum(&[(10.0, 1.0), (16.1, 0.9)]);
        let est = decode(&spec, &DecoderConfig::new(2, 6.0).unwrap()).unwrap();
        assert_eq!(est.angles_deg[0], 10.0);
        assert!((est.angles_deg[1] - 16.1).abs() < 1e-9);
    }

    #[test]
    fn uniform_spectrum_walks_from_lowest_angle() {
        // ties resolve to the lowest angle; the inclusive 6° window kills
        // everything through -84.0, so the second pick is -83.9
        let spec = spectrum(vec![0.5; 1801]);
        let est = decode(&spec, &DecoderConfig::new(2, 6.0).unwrap()).unwrap();
        assert_eq!(est.angles_deg[0], -90.0);
        assert!((est.angles_deg[1] - (-83.9)).abs() < 1e-9);
    }

    #[test]
    fn boundary_point_exactly_on_window_is_suppressed() {
        let spec = spike_spectrum(&[(0.0, 1.0), (6.0, 0.9), (-6.0, 0.8), (12.1, 0.7)]);
        let est = decode(&spec, &DecoderConfig::new(2, 6.0).unwrap()).unwrap();
        assert_eq!(est.angles_deg[0], 0.0);
        assert!((est.angles_deg[1] - 12.1).abs() < 1e-9);
    }

    #[test]
    fn returned_scores_never_increase() {
        let spec = spike_spectrum(&[(-50.0, 0.3), (0.0, 0.9), (30.0, 0.6), (70.0, 0.6)]);
        let est = decode(&spec, &DecoderConfig::new(4, 6.0).unwrap()).unwrap();
        for w in est.scores.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn all_pairs_strictly_separated() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(4);
        let grid = AngularGrid::default();
        for _ in 0..200 {
            let scores: Vec<f64> = (0..grid.len()).map(|_| rng.random::<f64>()).collect();
            let spec = PseudoSpectrum::new(scores, grid).unwrap();
            let m = rng.random_range(1..=4);
            let est = decode(&spec, &DecoderConfig::new(m, 6.0).unwrap()).unwrap();
            for i in 0..est.angles_deg.len() {
                for j in i + 1..est.angles_deg.len() {
                    let sep = (est.angles_deg[i] - est.angles_deg[j]).abs();
                    assert!(sep > 6.0, "pair separated by only {sep}°");
                }
            }
        }
    }

    #[test]
    fn energy_far_from_peaks_cannot_move_first_pick() {
        let base = spike_spectrum(&[(20.0, 1.0)]);
        let mut boosted = base.clone();
        let grid = base.grid;
        for k in 0..grid.len() {
            if (grid.angle(k) - 20.0).abs() > 6.0 {
                boosted.scores[k] += 0.5;
            }
        }
        let cfg = DecoderConfig::new(1, 6.0).unwrap();
        assert_eq!(
            decode(&base, &cfg).unwrap().angles_deg[0],
            decode(&boosted, &cfg).unwrap().angles_deg[0]
        );
    }

    #[test]
    fn infeasible_request_reports_partial_count() {
        // window 89° on [-90°, 90°]: picks -90, 0, 90 and then runs dry
        let grid = AngularGrid::new(-90.0, 90.0, 1.0).unwrap();
        let spec = PseudoSpectrum::new(vec![1.0; grid.len()], grid).unwrap();
        let err = decode(&spec, &DecoderConfig::new(4, 89.0).unwrap()).unwrap_err();
        match err {
            Error::Decode { found, requested } => {
                assert_eq!(found, 3);
                assert_eq!(requested, 4);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn decode_is_deterministic() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(9);
        let grid = AngularGrid::default();
        let scores: Vec<f64> = (0..grid.len()).map(|_| rng.random::<f64>()).collect();
        let spec = PseudoSpectrum::new(scores, grid).unwrap();
        let cfg = DecoderConfig::new(3, 6.0).unwrap();
        assert_eq!(decode(&spec, &cfg).unwrap(), decode(&spec, &cfg).unwrap());
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(DecoderConfig::new(0, 6.0).is_err());
        assert!(DecoderConfig::new(2, 0.0).is_err());
        assert!(DecoderConfig::new(2, 180.0).is_err());
    }
}
