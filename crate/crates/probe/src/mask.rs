//! Ablation mask files: `{"version": 1, "model_id": ..., "entries": [{"layer", "unit"}]}`
//! with entries sorted by `(layer, unit)` and free of duplicates.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use gwsot_core::harness::write_atomic;
use serde::{Deserialize, Serialize};

use crate::error::io_err;
use crate::{ProbeError, Result, UnitId};

pub const MASK_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AblationMask {
    pub model_id: String,
    pub entries: BTreeSet<UnitId>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaskEntry {
    layer: usize,
    unit: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaskFile {
    version: u32,
    model_id: String,
    entries: Vec<MaskEntry>,
}

impl AblationMask {
    /// Builds a mask, rejecting any unit outside `n_layers × hidden_dim`.
    pub fn new(
        model_id: impl Into<String>,
        units: impl IntoIterator<Item = UnitId>,
        n_layers: usize,
        hidden_dim: usize,
    ) -> Result<Self> {
        let mask = Self {
            model_id: model_id.into(),
            entries: units.into_iter().collect(),
        };
        mask.validate(n_layers, hidden_dim)?;
        Ok(mask)
    }

    pub fn empty(model_id: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            entries: BTreeSet::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn validate(&self, n_layers: usize, hidden_dim: usize) -> Result<()> {
        match self.entries.iter().find(|&&(l, u)| l >= n_layers || u >= hidden_dim) {
            Some(&(l, u)) => Err(ProbeError::OutOfRange(format!(
                "mask entry ({l}, {u}) outside {n_layers} layers x {hidden_dim} units"
            ))),
            None => Ok(()),
        }
    }

    pub fn to_json(&self) -> String {
        let file = MaskFile {
            version: MASK_VERSION,
            model_id: self.model_id.clone(),
            entries: self.entries.iter().map(|&(layer, unit)| MaskEntry { layer, unit }).collect(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("serializable");
        text.push('\n');
        text
    }

    /// Parses a mask file; unsorted or repeated entries are normalized.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: MaskFile =
            serde_json::from_str(text).map_err(|e| ProbeError::Invalid(format!("mask file: {e}")))?;
        if file.version != MASK_VERSION {
            return Err(ProbeError::Invalid(format!("unsupported mask version {}", file.version)));
        }
        Ok(Self {
            model_id: file.model_id,
            entries: file.entries.into_iter().map(|e| (e.layer, e.unit)).collect(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes()).map_err(|e| ProbeError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text).map_err(|e| ProbeError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Loads and range-checks against a model's shape.
    pub fn load_checked(path: &Path, n_layers: usize, hidden_dim: usize) -> Result<Self> {
        let mask = Self::load(path)?;
        mask.validate(n_layers, hidden_dim)?;
        Ok(mask)
    }
}

/// Validates `units` and writes them as a mask file.
pub fn export_ablation_mask(
    units: impl IntoIterator<Item = UnitId>,
    model_id: &str,
    n_layers: usize,
    hidden_dim: usize,
    path: &Path,
) -> Result<AblationMask> {
    let mask = AblationMask::new(model_id, units, n_layers, hidden_dim)?;
    mask.save(path)?;
    Ok(mask)
}
