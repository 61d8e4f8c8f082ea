//! Angular grid of candidate directions and the pseudo-spectrum over it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniformly spaced candidate angles over `[min_deg, max_deg]`.
///
/// The default grid spans [-90°, +90°] at 0.1° resolution (1801 points).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularGrid {
    pub min_deg: f64,
    pub max_deg: f64,
    pub resolution_deg: f64,
}

impl Default for AngularGrid {
    fn default() -> Self {
        Self {
            min_deg: -90.0,
            max_deg: 90.0,
            resolution_deg: 0.1,
        }
    }
}

impl AngularGrid {
    pub fn new(min_deg: f64, max_deg: f64, resolution_deg: f64) -> Result<Self> {
        if !(min_deg.is_finite() && max_deg.is_finite() && resolution_deg.is_finite()) {
            return Err(Error::Config("grid bounds must be finite".into()));
        }
        if min_deg >= max_deg {
            return Err(Error::Config(format!(
                "grid min {min_deg} must be below max {max_deg}"
            )));
        }
        if resolution_deg <= 0.0 {
            return Err(Error::Config(format!(
                "grid resolution must be positive, got {resolution_deg}"
            )));
        }
        Ok(Self {
            min_deg,
            max_deg,
            resolution_deg,
        })
    }

    /// Number of grid points: floor((max - min) / resolution) + 1.
    pub fn len(&self) -> usize {
        // Small epsilon so resolutions that divide the span exactly in real
        // arithmetic are not truncated by floating-point rounding.
        (((self.max_deg - self.min_deg) / self.resolution_deg) + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Angle of grid point `k` in degrees.
    pub fn angle(&self, k: usize) -> f64 {
        self.min_deg + k as f64 * self.resolution_deg
    }

    pub fn angles(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.angle(k))
    }

    /// Index of the grid point nearest to `deg`; exact midpoints resolve
    /// toward the lower angle.
    pub fn nearest_index(&self, deg: f64) -> Result<usize> {
        if !deg.is_finite() || deg < self.min_deg || deg > self.max_deg {
            return Err(Error::Label(format!(
                "angle {deg}° outside grid [{}, {}]",
                self.min_deg, self.max_deg
            )));
        }
        let t = (deg - self.min_deg) / self.resolution_deg;
        let k = t.floor();
        let frac = t - k;
        let idx = if frac > 0.5 { k as usize + 1 } else { k as usize };
        Ok(idx.min(self.len() - 1))
    }
}

/// Similarity (or MUSIC) score per grid angle; peaks mark estimated DoAs.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoSpectrum {
    pub scores: Vec<f64>,
    pub grid: AngularGrid,
}

impl PseudoSpectrum {
    pub fn new(scores: Vec<f64>, grid: AngularGrid) -> Result<Self> {
        if scores.len() != grid.len() {
            return Err(Error::Shape(format!(
                "spectrum has {} scores for a grid of {} points",
                scores.len(),
                grid.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Degenerate("non-finite spectrum score".into()));
        }
        Ok(Self { scores, grid })
    }
}
