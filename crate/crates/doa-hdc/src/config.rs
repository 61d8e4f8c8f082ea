//! Experiment configuration: TOML file plus key=value overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMethod;
use crate::grid::AngularGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraySection {
    pub n_antennas: usize,
    pub n_snapshots: usize,
}

impl Default for ArraySection {
    fn default() -> Self {
        Self {
            n_antennas: 8,
            n_snapshots: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub m_sources: usize,
    pub coherent: bool,
    pub min_separation_deg: f64,
    /// SNR points evaluated; training draws SNR uniformly over the span.
    pub snr_db: Vec<f64>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            m_sources: 3,
            coherent: true,
            min_separation_deg: 15.0,
            snr_db: vec![1.0, 3.0, 5.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub train_size: u64,
    /// Test samples generated at each SNR point.
    pub test_size: u64,
    pub base_seed: u64,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            train_size: 5000,
            test_size: 250,
            base_seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesSection {
    /// Feature path for single-model commands: "lag" or "smoothing".
    pub method: FeatureKind,
    pub normalize_r0: bool,
    /// Subarray size for smoothing; defaults to N − 3.
    pub subarray_size: Option<usize>,
}

impl Default for FeaturesSection {
    fn default() -> Self {
        Self {
            method: FeatureKind::Lag,
            normalize_r0: true,
            subarray_size: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    Lag,
    Smoothing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSection {
    pub dim: usize,
    pub bandwidth: f64,
    pub seed: u64,
}

impl Default for EncoderSection {
    fn default() -> Self {
        Self {
            dim: crate::hdc::DEFAULT_DIM,
            bandwidth: 1.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub min_deg: f64,
    pub max_deg: f64,
    pub resolution_deg: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            min_deg: -90.0,
            max_deg: 90.0,
            resolution_deg: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemorySection {
    pub eta: f64,
    pub epochs: u32,
    pub adaptive: bool,
}

impl Default for MemorySection {
    fn default() -> Self {
        Self {
            eta: 1.0,
            epochs: 1,
            adaptive: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoderSection {
    pub min_separation_deg: f64,
}

impl Default for DecoderSection {
    fn default() -> Self {
        Self {
            min_separation_deg: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Methods an experiment run scores: any of "hdc-lag",
    /// "hdc-smoothing", "music".
    pub methods: Vec<String>,
    /// Count failed decodes at the worst periodic error instead of
    /// excluding them from the mean.
    pub failure_penalty: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            methods: vec![
                "hdc-lag".to_string(),
                "hdc-smoothing".to_string(),
                "music".to_string(),
            ],
            failure_penalty: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub array: ArraySection,
    pub scenario: ScenarioSection,
    pub dataset: DatasetSection,
    pub features: FeaturesSection,
    pub encoder: EncoderSection,
    pub grid: GridSection,
    pub memory: MemorySection,
    pub decoder: DecoderSection,
    pub eval: EvalSection,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load a TOML config and apply `section.key=value` overrides on top.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if overrides.is_empty() {
            return Self::from_toml_str(&text);
        }
        let mut table: toml::Table =
            toml::from_str(&text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        for item in overrides {
            let (key, value) = item.split_once('=').ok_or_else(|| {
                Error::Config(format!("override '{item}' is not of the form key=value"))
            })?;
            apply_override(&mut table, key.trim(), value.trim())?;
        }
        let cfg: ExperimentConfig = table
            .try_into()
            .map_err(|e| Error::Config(format!("bad config after overrides: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.array.n_antennas < 2 {
            return Err(Error::Config("array.n_antennas must be at least 2".into()));
        }
        if self.array.n_snapshots < 1 {
            return Err(Error::Config("array.n_snapshots must be at least 1".into()));
        }
        if self.scenario.m_sources == 0 || self.scenario.m_sources >= self.array.n_antennas {
            return Err(Error::Config(format!(
                "scenario.m_sources = {} must satisfy 1 ≤ M < N = {}",
                self.scenario.m_sources, self.array.n_antennas
            )));
        }
        if self.scenario.snr_db.is_empty() || self.scenario.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("scenario.snr_db must list finite values".into()));
        }
        if self.dataset.test_size == 0 {
            return Err(Error::Config("dataset.test_size must be positive".into()));
        }
        if self.dataset.train_size < 2 {
            return Err(Error::Config("dataset.train_size must be at least 2".into()));
        }
        self.angular_grid()?;
        if self.encoder.dim < 1 {
            return Err(Error::Config("encoder.dim must be positive".into()));
        }
        if !(self.encoder.bandwidth > 0.0) {
            return Err(Error::Config("encoder.bandwidth must be positive".into()));
        }
        if !(self.memory.eta > 0.0) {
            return Err(Error::Config("memory.eta must be positive".into()));
        }
        if self.memory.epochs < 1 {
            return Err(Error::Config("memory.epochs must be at least 1".into()));
        }
        if !(self.decoder.min_separation_deg > 0.0 && self.decoder.min_separation_deg < 180.0) {
            return Err(Error::Config(
                "decoder.min_separation_deg must be in (0, 180)".into(),
            ));
        }
        for name in &self.eval.methods {
            self.feature_method_for(name)?;
        }
        // the smoothing path needs subarrays able to carry all sources
        let uses_smoothing = self.features.method == FeatureKind::Smoothing
            || self.eval.methods.iter().any(|m| m == "hdc-smoothing");
        if uses_smoothing {
            let m_sub = self.subarray_size();
            if m_sub >= self.array.n_antennas || m_sub < 1 {
                return Err(Error::Config(format!(
                    "features.subarray_size = {m_sub} must satisfy 1 ≤ M_sub < N"
                )));
            }
            if m_sub < self.scenario.m_sources + 1 {
                return Err(Error::Config(format!(
                    "features.subarray_size = {m_sub} too small for {} sources (need M_sub ≥ M+1)",
                    self.scenario.m_sources
                )));
            }
        }
        Ok(())
    }

    pub fn angular_grid(&self) -> Result<AngularGrid> {
        AngularGrid::new(self.grid.min_deg, self.grid.max_deg, self.grid.resolution_deg)
    }

    /// Effective subarray size: configured value or the N − 3 default.
    pub fn subarray_size(&self) -> usize {
        self.features
            .subarray_size
            .unwrap_or_else(|| self.array.n_antennas.saturating_sub(3).max(1))
    }

    /// Feature path for the configured single-model method.
    pub fn feature_method(&self) -> FeatureMethod {
        match self.features.method {
            FeatureKind::Lag => FeatureMethod::Lag {
                normalize_r0: self.features.normalize_r0,
            },
            FeatureKind::Smoothing => FeatureMethod::SpatialSmoothing {
                subarray_size: self.subarray_size(),
            },
        }
    }

    /// Feature path for an eval method name; `music` yields None.
    pub fn feature_method_for(&self, name: &str) -> Result<Option<FeatureMethod>> {
        match name {
            "hdc-lag" => Ok(Some(FeatureMethod::Lag {
                normalize_r0: self.features.normalize_r0,
            })),
            "hdc-smoothing" => Ok(Some(FeatureMethod::SpatialSmoothing {
                subarray_size: self.subarray_size(),
            })),
            "music" => Ok(None),
            other => Err(Error::Config(format!(
                "unknown eval method '{other}' (expected hdc-lag, hdc-smoothing, or music)"
            ))),
        }
    }

    /// Warning when the training set cannot plausibly touch every grid
    /// angle; surfaced by the CLI, not an error.
    pub fn coverage_warning(&self) -> Option<String> {
        let labels = self.dataset.train_size * self.scenario.m_sources as u64;
        let grid_points = self.angular_grid().ok()?.len() as u64;
        if labels < grid_points {
            Some(format!(
                "training set provides {labels} labels for {grid_points} grid angles; \
                 many centroids will stay empty"
            ))
        } else {
            None
        }
    }
}

fn apply_override(table: &mut toml::Table, key: &str, value: &str) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key '{key}'")));
    }
    let mut current = table;
    for part in &parts[..parts.len() - 1] {
        current = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override key '{key}' crosses a non-table")))?;
    }
    // parse the value as TOML when possible, else keep it as a string
    let parsed: toml::Value = match format!("v = {value}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(value.to_string()),
    };
    current.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.angular_grid().unwrap().len(), 1801);
        assert_eq!(cfg.subarray_size(), 5);
    }

    #[test]
    fn minimal_toml_round_trip() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        let text = toml::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn invalid_source_count_rejected() {
        let err = ExperimentConfig::from_toml_str(
            "[scenario]\nm_sources = 9\n[array]\nn_antennas = 8",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_toml_str("[scenario]\nbogus = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("[bogus_section]\nx = 1").is_err());
    }

    #[test]
    fn unknown_method_rejected() {
        let err =
            ExperimentConfig::from_toml_str("[eval]\nmethods = [\"hdc-lag\", \"esprit\"]")
                .unwrap_err();
        assert!(format!("{err}").contains("esprit"));
    }

    #[test]
    fn smoothing_needs_room_for_sources() {
        let err = ExperimentConfig::from_toml_str(
            "[scenario]\nm_sources = 5\n[features]\nsubarray_size = 5\n[eval]\nmethods = [\"hdc-smoothing\"]",
        )
        .unwrap_err();
        assert!(format!("{err}").contains("M_sub"));
    }

    #[test]
    fn overrides_apply() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, "[array]\nn_antennas = 8\n").unwrap();
        let cfg = ExperimentConfig::load(
            &path,
            &[
                "array.n_antennas=6".to_string(),
                "scenario.snr_db=[0.0]".to_string(),
                "scenario.m_sources=2".to_string(),
                "features.method=\"smoothing\"".to_string(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.array.n_antennas, 6);
        assert_eq!(cfg.scenario.snr_db, vec![0.0]);
        assert_eq!(cfg.features.method, FeatureKind::Smoothing);
        assert!(ExperimentConfig::load(&path, &["nonsense".to_string()]).is_err());
    }

    #[test]
    fn coverage_warning_fires_for_tiny_training_sets() {
        let mut cfg = ExperimentConfig::default();
        cfg.dataset.train_size = 10;
        assert!(cfg.coverage_warning().is_some());
        cfg.dataset.train_size = 5000;
        cfg.grid.resolution_deg = 1.0;
        assert!(cfg.coverage_warning().is_none());
    }
}
