//! Versioned JSON container for trained models of every kind.
//!
//! Floats are written with shortest round-trip formatting and parsed
//! exactly, so `load(save(m)) == m` bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::TrainedModel;

pub const FORMAT: &str = "fcnn-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub class_names: Vec<String>,
    pub feature_count: usize,
    pub model: TrainedModel,
}

impl Checkpoint {
    pub fn new(model: TrainedModel, class_names: Vec<String>, feature_count: usize) -> Self {
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            class_names,
            feature_count,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Schema(format!("checkpoint encode: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Schema(format!("checkpoint decode: {e}")))?;
        if ckpt.format != FORMAT {
            return Err(Error::Schema(format!("not a checkpoint (format `{}`)", ckpt.format)));
        }
        if ckpt.version != VERSION {
            return Err(Error::Schema(format!(
                "checkpoint version {} is not supported (expected {VERSION})",
                ckpt.version
            )));
        }
        if let TrainedModel::Fcnn(m) = &ckpt.model {
            m.cnn.validate()?;
            for p in &m.partitions {
                p.validate()?;
            }
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
