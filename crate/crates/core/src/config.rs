//! Run configuration, read from TOML. Every field has a default, so a
//! config file only needs the keys it changes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cnn::CnnModel;
use crate::datasets::{DatasetKind, GeneratorConfig, SplitSpec};
use crate::error::{Error, Result};
use crate::fuzzy::TERM_COUNT;
use crate::pipeline::{ModelKind, ModelsConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub master_seed: u64,
    /// Where commands write their outputs when no directory is passed.
    pub output_dir: Option<PathBuf>,
    pub data: DataConfig,
    pub models: ModelsConfig,
    pub benchmark: BenchmarkSelection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            master_seed: 2024,
            output_dir: None,
            data: DataConfig::default(),
            models: ModelsConfig::default(),
            benchmark: BenchmarkSelection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub n_per_class: usize,
    pub train_fraction: f64,
    pub generators: GeneratorConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            n_per_class: 200,
            train_fraction: 0.7,
            generators: GeneratorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSelection {
    pub datasets: Vec<DatasetKind>,
    pub models: Vec<ModelKind>,
}

impl Default for BenchmarkSelection {
    fn default() -> Self {
        Self {
            datasets: DatasetKind::ALL.to_vec(),
            models: ModelKind::ALL.to_vec(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| e.context(format!("in {}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Check every field against the preconditions of the module it feeds.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.data.n_per_class == 0 {
            return Err(Error::Config("data.n_per_class must be at least 1".into()));
        }
        SplitSpec::new(self.data.train_fraction, 0).map_err(|e| Error::Config(e.to_string()))?;
        self.data.generators.validate()?;

        let m = &self.models;
        let fcnn = &m.fcnn;
        fcnn.layout
            .geometry(2, TERM_COUNT)
            .map_err(|e| Error::Config(format!("models.fcnn.layout: {e}")))?;
        CnnModel::desk_scale(fcnn.layout.image_side, 2, &fcnn.architecture, 0)
            .map_err(|e| Error::Config(format!("models.fcnn.architecture: {e}")))?;
        fcnn.train
            .validate()
            .map_err(|e| Error::Config(format!("models.fcnn.train: {e}")))?;
        m.fnn
            .train
            .validate()
            .map_err(|e| Error::Config(format!("models.fnn.train: {e}")))?;
        if m.fnn.hidden_units == 0 {
            return Err(Error::Config("models.fnn.hidden_units must be positive".into()));
        }
        if m.tree.min_leaf == 0 || m.forest.tree.min_leaf == 0 {
            return Err(Error::Config("min_leaf must be at least 1".into()));
        }
        if m.forest.n_trees == 0 {
            return Err(Error::Config("models.forest.n_trees must be positive".into()));
        }
        if !(m.svm.c > 0.0 && m.svm.c.is_finite()) {
            return Err(Error::Config("models.svm.c must be positive".into()));
        }
        if let crate::baselines::Kernel::Rbf { gamma } = m.svm.kernel {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(Error::Config("models.svm.kernel.gamma must be positive".into()));
            }
        }
        if self.benchmark.datasets.is_empty() || self.benchmark.models.is_empty() {
            return Err(Error::Config(
                "benchmark selection must name at least one dataset and model".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_means_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn defaults_survive_a_toml_round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn partial_override() {
        let cfg = RunConfig::from_toml("master_seed = 7\n[data.generators.two_spirals]\nnoise = 0.5\n").unwrap();
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.data.generators.two_spirals.noise, 0.5);
        assert_eq!(cfg.data.generators.two_spirals.turns, 1.5);
    }

    #[test]
    fn bad_values_are_rejected() {
        assert!(RunConfig::from_toml("schema_version = 2").is_err());
        assert!(RunConfig::from_toml("[data]\ntrain_fraction = 1.5").is_err());
        assert!(RunConfig::from_toml("[models.fcnn.layout]\nimage_side = 16").is_err());
        assert!(RunConfig::from_toml("unknown_key = 1").is_err());
    }
}
