//! On-disk activation datasets.
//!
//! A dataset directory holds `manifest.json` and one or more `.actv` blobs.
//! Each record is `L × H` little-endian `f32` values, row-major
//! `[layer][unit]`, stored at `byte_offset` in `file`. Records in a blob
//! are packed back to back, so every record spans exactly `4·L·H` bytes up
//! to the next record or the end of the file.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Component, Path};

use gwsot_core::agents::Choice;
use gwsot_core::harness::{write_atomic, TrialRecord};
use gwsot_core::{Coord, SirType};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::io_err;
use crate::{ProbeError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATA_FILE: &str = "activations.actv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Pooling {
    /// Mean over all prompt-token positions.
    MeanInput,
    /// The position that generates the first token of the action value.
    FirstDecision,
}

impl Pooling {
    pub const ALL: [Pooling; 2] = [Pooling::MeanInput, Pooling::FirstDecision];

    /// Subdirectory a capture target stores this pooling's dataset in:
    /// `<root>/<dataset_id>/<mean_input|first_decision>/`.
    pub fn dir_name(self) -> &'static str {
        match self {
            Pooling::MeanInput => "mean_input",
            Pooling::FirstDecision => "first_decision",
        }
    }
}

/// Dataset directory for one pooling mode of a capture target.
pub fn pooled_dir(target: &Path, pooling: Pooling) -> std::path::PathBuf {
    target.join(pooling.dir_name())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordLabels {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<Coord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<Coord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<Choice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_spatial: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordEntry {
    pub record_id: String,
    pub trial_id: String,
    pub step_idx: usize,
    pub file: String,
    pub byte_offset: u64,
    pub labels: RecordLabels,
}

fn default_grid_size() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub model_id: String,
    pub n_layers: usize,
    pub hidden_dim: usize,
    pub pooling: Pooling,
    /// Absent for question-task datasets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sir: Option<SirType>,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    pub records: Vec<RecordEntry>,
}

impl DatasetManifest {
    pub fn record_len(&self) -> usize {
        self.n_layers * self.hidden_dim
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationDataset {
    pub manifest: DatasetManifest,
    /// `records × layers × units`, record-major.
    data: Vec<f32>,
}

impl ActivationDataset {
    pub fn new(manifest: DatasetManifest, data: Vec<f32>) -> Result<Self> {
        if manifest.n_layers == 0 || manifest.hidden_dim == 0 {
            return Err(ProbeError::Shape("n_layers and hidden_dim must be positive".into()));
        }
        let want = manifest.records.len() * manifest.record_len();
        if data.len() != want {
            return Err(ProbeError::Shape(format!(
                "{} values for {} records of {}x{}",
                data.len(),
                manifest.records.len(),
                manifest.n_layers,
                manifest.hidden_dim
            )));
        }
        let mut ids = HashSet::new();
        for r in &manifest.records {
            if !ids.insert(r.record_id.as_str()) {
                return Err(ProbeError::Invalid(format!("duplicate record_id {:?}", r.record_id)));
            }
        }
        Ok(Self { manifest, data })
    }

    pub fn n_records(&self) -> usize {
        self.manifest.records.len()
    }

    pub fn n_layers(&self) -> usize {
        self.manifest.n_layers
    }

    pub fn hidden_dim(&self) -> usize {
        self.manifest.hidden_dim
    }

    pub fn records(&self) -> &[RecordEntry] {
        &self.manifest.records
    }

    pub fn labels(&self, i: usize) -> &RecordLabels {
        &self.manifest.records[i].labels
    }

    /// The `L × H` tensor of record `i`.
    pub fn tensor(&self, i: usize) -> &[f32] {
        let len = self.manifest.record_len();
        &self.data[i * len..(i + 1) * len]
    }

    pub fn layer_row(&self, i: usize, layer: usize) -> &[f32] {
        let h = self.hidden_dim();
        &self.tensor(i)[layer * h..(layer + 1) * h]
    }

    pub fn check_layer(&self, layer: usize) -> Result<()> {
        if layer >= self.n_layers() {
            return Err(ProbeError::OutOfRange(format!("layer {layer} of {}", self.n_layers())));
        }
        Ok(())
    }

    /// `rows.len() × H` matrix of one layer's activations.
    pub fn layer_matrix(&self, layer: usize, rows: &[usize]) -> Result<DMatrix<f64>> {
        self.check_layer(layer)?;
        let h = self.hidden_dim();
        Ok(DMatrix::from_fn(rows.len(), h, |r, u| f64::from(self.layer_row(rows[r], layer)[u])))
    }

    /// Every record's activation at one unit.
    pub fn unit_column(&self, layer: usize, unit: usize) -> Vec<f64> {
        (0..self.n_records())
            .map(|i| f64::from(self.layer_row(i, layer)[unit]))
            .collect()
    }

    /// Keeps the records at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut manifest = self.manifest.clone();
        manifest.records = indices.iter().map(|&i| self.manifest.records[i].clone()).collect();
        let data = indices.iter().flat_map(|&i| self.tensor(i).iter().copied()).collect();
        Self { manifest, data }
    }

    /// Writes the dataset as one packed blob plus the manifest.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut manifest = self.manifest.clone();
        let bytes_per = 4 * manifest.record_len() as u64;
        for (i, r) in manifest.records.iter_mut().enumerate() {
            r.file = DATA_FILE.to_string();
            r.byte_offset = i as u64 * bytes_per;
        }
        let blob: Vec<u8> = self.data.iter().flat_map(|v| v.to_le_bytes()).collect();
        let data_path = dir.join(DATA_FILE);
        write_atomic(&data_path, &blob).map_err(|e| ProbeError::Format {
            path: data_path.clone(),
            message: e.to_string(),
        })?;
        let mut text = serde_json::to_vec_pretty(&manifest).expect("serializable");
        text.push(b'\n');
        let manifest_path = dir.join(MANIFEST_FILE);
        write_atomic(&manifest_path, &text).map_err(|e| ProbeError::Format {
            path: manifest_path,
            message: e.to_string(),
        })
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest_path = dir.join(MANIFEST_FILE);
        let bytes = fs::read(&manifest_path).map_err(io_err(&manifest_path))?;
        let manifest: DatasetManifest = serde_json::from_slice(&bytes).map_err(|e| ProbeError::Format {
            path: manifest_path.clone(),
            message: e.to_string(),
        })?;
        let record_bytes = 4 * manifest.record_len() as u64;
        if record_bytes == 0 {
            return Err(ProbeError::Format {
                path: manifest_path,
                message: "n_layers and hidden_dim must be positive".into(),
            });
        }

        let mut by_file: BTreeMap<&str, Vec<(u64, usize)>> = BTreeMap::new();
        for (i, r) in manifest.records.iter().enumerate() {
            let plain = Path::new(&r.file)
                .components()
                .all(|c| matches!(c, Component::Normal(_)));
            if !plain || r.file.is_empty() {
                return Err(ProbeError::Format {
                    path: manifest_path,
                    message: format!("record {:?} points outside the dataset: {:?}", r.record_id, r.file),
                });
            }
            by_file.entry(r.file.as_str()).or_default().push((r.byte_offset, i));
        }

        let len = manifest.record_len();
        let mut data = vec![0f32; manifest.records.len() * len];
        for (file, mut spans) in by_file {
            let path = dir.join(file);
            let blob = fs::read(&path).map_err(io_err(&path))?;
            spans.sort_unstable();
            for (k, &(offset, i)) in spans.iter().enumerate() {
                let end = spans.get(k + 1).map_or(blob.len() as u64, |s| s.0);
                if end < offset || end - offset != record_bytes {
                    return Err(ProbeError::Format {
                        path: path.clone(),
                        message: format!(
                            "record {:?} spans {} bytes, expected 4*{}*{} = {record_bytes}",
                            manifest.records[i].record_id,
                            end.saturating_sub(offset),
                            manifest.n_layers,
                            manifest.hidden_dim
                        ),
                    });
                }
                let raw = &blob[offset as usize..end as usize];
                for (dst, chunk) in data[i * len..(i + 1) * len].iter_mut().zip(raw.chunks_exact(4)) {
                    *dst = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
                }
            }
        }
        Self::new(manifest, data).map_err(|e| ProbeError::Format {
            path: dir.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Checks each record's labels against the step it names.
    pub fn check_labels(&self, trials: &[TrialRecord]) -> Result<()> {
        let by_id: HashMap<&str, &TrialRecord> = trials.iter().map(|t| (t.trial_id.as_str(), t)).collect();
        for r in self.records() {
            let trial = by_id
                .get(r.trial_id.as_str())
                .ok_or_else(|| ProbeError::Invalid(format!("{}: unknown trial {:?}", r.record_id, r.trial_id)))?;
            let step = trial.steps.get(r.step_idx).ok_or_else(|| {
                ProbeError::Invalid(format!("{}: {} has no step {}", r.record_id, r.trial_id, r.step_idx))
            })?;
            let l = &r.labels;
            let ok = l.agent.is_none_or(|a| a == step.state_before.agent)
                && l.goal.is_none_or(|g| g == step.state_before.goal)
                && l.action.is_none_or(|a| a == step.action)
                && (l.correct.is_none() || l.correct == step.correct);
            if !ok {
                return Err(ProbeError::Invalid(format!(
                    "{}: labels disagree with {} step {}",
                    r.record_id, r.trial_id, r.step_idx
                )));
            }
        }
        Ok(())
    }
}
