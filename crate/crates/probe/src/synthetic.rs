//! Planted-signal datasets with known ground truth.
//!
//! Labels come from real task states (`new_trial` placements, uniformly
//! random actions scored by `is_correct`), so every generator exercises the
//! same label paths as captured data.

use std::collections::BTreeSet;

use gwsot_core::agents::Choice;
use gwsot_core::grid::{is_correct, new_trial};
use gwsot_core::{Action, SirType};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{ActivationDataset, DatasetManifest, Pooling, RecordEntry, RecordLabels};
use crate::units::Feature;
use crate::UnitId;

/// Noise added on top of a standardized feature in planted units.
pub const PLANTED_UNIT_NOISE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_layers: usize,
    pub hidden_dim: usize,
    pub n_records: usize,
    /// Additive Gaussian noise on planted grid embeddings.
    pub sigma: f64,
    pub grid_size: usize,
    pub model_id: String,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_layers: 8,
            hidden_dim: 256,
            n_records: 300,
            sigma: 0.01,
            grid_size: 5,
            model_id: "synthetic".into(),
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn sample_labels(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Vec<RecordLabels> {
    (0..spec.n_records)
        .map(|_| {
            let s = new_trial(spec.grid_size, rng).expect("grid size >= 3");
            let action = Action::ALL[rng.random_range(0..4)];
            RecordLabels {
                agent: Some(s.agent),
                goal: Some(s.goal),
                action: Some(Choice::Move(action)),
                correct: Some(is_correct(s, action).expect("open state")),
                is_spatial: None,
            }
        })
        .collect()
}

fn manifest(spec: &SyntheticSpec, pooling: Pooling, sir: Option<SirType>, labels: Vec<RecordLabels>) -> DatasetManifest {
    let tag = sir.map_or("questions", SirType::slug);
    DatasetManifest {
        model_id: spec.model_id.clone(),
        n_layers: spec.n_layers,
        hidden_dim: spec.hidden_dim,
        pooling,
        sir,
        grid_size: spec.grid_size,
        records: labels
            .into_iter()
            .enumerate()
            .map(|(i, labels)| RecordEntry {
                record_id: format!("{tag}-{i:05}"),
                trial_id: format!("{tag}-{i:04}"),
                step_idx: 0,
                file: String::new(),
                byte_offset: 0,
                labels,
            })
            .collect(),
    }
}

fn grid_target(labels: &RecordLabels, n: usize) -> Vec<f64> {
    let mut t = vec![0.0; 2 * n * n];
    let (a, g) = (labels.agent.expect("agent"), labels.goal.expect("goal"));
    t[a.y * n + a.x] = 1.0;
    t[n * n + g.y * n + g.x] = 1.0;
    t
}

/// `rows × cols` row-major matrix of `N(0, scale²)` draws.
fn gaussian(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..rows * cols).map(|_| scale * normal(rng)).collect()
}

/// Adds `m · t` (m is `H × K` row-major) into `out`.
fn add_mat_vec(out: &mut [f64], m: &[f64], t: &[f64]) {
    let k = t.len();
    for (o, row) in out.iter_mut().zip(m.chunks_exact(k)) {
        *o += row.iter().zip(t).map(|(a, b)| a * b).sum::<f64>();
    }
}

fn finish(manifest: DatasetManifest, data: Vec<f64>) -> ActivationDataset {
    ActivationDataset::new(manifest, data.into_iter().map(|v| v as f32).collect()).expect("consistent shape")
}

/// Grid targets linearly embedded in every layer through a random
/// `H × 2N²` map, plus `N(0, σ²)` noise. MEAN_INPUT pooling.
pub fn planted_grid(spec: &SyntheticSpec, sir: SirType, seed: u64) -> ActivationDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = sample_labels(spec, &mut rng);
    let k = 2 * spec.grid_size * spec.grid_size;
    let maps: Vec<Vec<f64>> = (0..spec.n_layers)
        .map(|_| gaussian(spec.hidden_dim, k, 1.0, &mut rng))
        .collect();
    let mut data = Vec::with_capacity(spec.n_records * spec.n_layers * spec.hidden_dim);
    for l in &labels {
        let t = grid_target(l, spec.grid_size);
        for map in &maps {
            let mut x: Vec<f64> = (0..spec.hidden_dim).map(|_| spec.sigma * normal(&mut rng)).collect();
            add_mat_vec(&mut x, map, &t);
            data.extend(x);
        }
    }
    finish(manifest(spec, Pooling::MeanInput, Some(sir), labels), data)
}

/// Standard-normal activations carrying no label information.
pub fn pure_noise(spec: &SyntheticSpec, pooling: Pooling, sir: SirType, seed: u64) -> ActivationDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = sample_labels(spec, &mut rng);
    let data = gaussian(spec.n_records, spec.n_layers * spec.hidden_dim, 1.0, &mut rng);
    finish(manifest(spec, pooling, Some(sir), labels), data)
}

/// `per_layer` distinct random units in every layer.
pub fn random_units(n_layers: usize, hidden_dim: usize, per_layer: usize, rng: &mut ChaCha8Rng) -> BTreeSet<UnitId> {
    (0..n_layers)
        .flat_map(|l| {
            sample(rng, hidden_dim, per_layer)
                .into_iter()
                .map(move |u| (l, u))
                .collect::<Vec<_>>()
        })
        .collect()
}

fn feature_value(feature: Feature, labels: &RecordLabels, n: usize) -> f64 {
    let a = labels.agent.expect("agent");
    match feature {
        Feature::Cell { x, y } => f64::from(u8::from(a.x == x && a.y == y)),
        Feature::AgentX => a.x as f64,
        Feature::AgentY => a.y as f64,
        Feature::Border => f64::from(u8::from(a.x.min(a.y).min(n - 1 - a.x).min(n - 1 - a.y) == 0)),
        Feature::ActionCorrect => f64::from(u8::from(labels.correct.expect("correct"))),
    }
}

fn standardize(v: &mut [f64]) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    for x in v {
        *x = (*x - mean) / sd;
    }
}

/// Standard-normal units, except `planted` units which carry the
/// standardized feature plus `N(0, 0.5²)` noise. FIRST_DECISION pooling.
pub fn planted_units(
    spec: &SyntheticSpec,
    sir: SirType,
    feature: Feature,
    planted: &BTreeSet<UnitId>,
    seed: u64,
) -> ActivationDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = sample_labels(spec, &mut rng);
    let mut z: Vec<f64> = labels.iter().map(|l| feature_value(feature, l, spec.grid_size)).collect();
    standardize(&mut z);
    let (h, width) = (spec.hidden_dim, spec.n_layers * spec.hidden_dim);
    let mut data = gaussian(spec.n_records, width, 1.0, &mut rng);
    for (i, &zi) in z.iter().enumerate() {
        for &(l, u) in planted {
            let v = &mut data[i * width + l * h + u];
            *v = zi + PLANTED_UNIT_NOISE * *v;
        }
    }
    finish(manifest(spec, Pooling::FirstDecision, Some(sir), labels), data)
}

/// Six datasets (one per encoding) sharing `common_per_layer` planted
/// units per layer; each also plants `private_per_layer` units of its own
/// at independent positions. Returns the datasets and the shared set.
pub fn planted_common_family(
    spec: &SyntheticSpec,
    feature: Feature,
    common_per_layer: usize,
    private_per_layer: usize,
    seed: u64,
) -> (Vec<ActivationDataset>, BTreeSet<UnitId>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let common = random_units(spec.n_layers, spec.hidden_dim, common_per_layer, &mut rng);
    let datasets = SirType::ALL
        .iter()
        .map(|&sir| {
            let mut planted = common.clone();
            while planted.len() < common.len() + private_per_layer * spec.n_layers {
                let extra = random_units(spec.n_layers, spec.hidden_dim, private_per_layer, &mut rng);
                planted = common.union(&extra).copied().collect();
            }
            planted_units(spec, sir, feature, &planted, rng.random())
        })
        .collect();
    (datasets, common)
}

/// Six datasets whose planted units sit at independent random positions.
pub fn independent_family(spec: &SyntheticSpec, feature: Feature, per_layer: usize, seed: u64) -> Vec<ActivationDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SirType::ALL
        .iter()
        .map(|&sir| {
            let planted = random_units(spec.n_layers, spec.hidden_dim, per_layer, &mut rng);
            planted_units(spec, sir, feature, &planted, rng.random())
        })
        .collect()
}

/// Relative weights of the three embedding components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubspaceScales {
    pub shared: f64,
    pub class: f64,
    pub specific: f64,
}

impl Default for SubspaceScales {
    fn default() -> Self {
        Self {
            shared: 1.0,
            class: 1.0,
            specific: 1.0,
        }
    }
}

/// Six MEAN_INPUT datasets in [`SirType::ALL`] order. Each layer embeds the
/// grid target as `(S + C_class + P_sir) t + noise`, where `S` is common to
/// all encodings, `C_class` to the two encodings of a class and `P_sir` to
/// one encoding only.
pub fn shared_specific_family(spec: &SyntheticSpec, scales: SubspaceScales, seed: u64) -> Vec<ActivationDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = 2 * spec.grid_size * spec.grid_size;
    let h = spec.hidden_dim;
    let gen = |scale: f64, rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..spec.n_layers).map(|_| gaussian(h, k, scale, rng)).collect()
    };
    let shared = gen(scales.shared, &mut rng);
    let class: Vec<Vec<Vec<f64>>> = (0..3).map(|_| gen(scales.class, &mut rng)).collect();
    SirType::ALL
        .iter()
        .map(|&sir| {
            let specific = gen(scales.specific, &mut rng);
            let class_maps = &class[sir.class() as usize];
            let maps: Vec<Vec<f64>> = (0..spec.n_layers)
                .map(|l| {
                    shared[l]
                        .iter()
                        .zip(&class_maps[l])
                        .zip(&specific[l])
                        .map(|((a, b), c)| a + b + c)
                        .collect()
                })
                .collect();
            let mut local = ChaCha8Rng::seed_from_u64(rng.random());
            let labels = sample_labels(spec, &mut local);
            let mut data = Vec::with_capacity(spec.n_records * spec.n_layers * h);
            for l in &labels {
                let t = grid_target(l, spec.grid_size);
                for map in &maps {
                    let mut x: Vec<f64> = (0..h).map(|_| spec.sigma * normal(&mut local)).collect();
                    add_mat_vec(&mut x, map, &t);
                    data.extend(x);
                }
            }
            finish(manifest(spec, Pooling::MeanInput, Some(sir), labels), data)
        })
        .collect()
}

/// Question-task dataset: `n_spatial` then `n_other` records labelled by
/// `is_spatial`; `core` units shift by `bias` on spatial items, all units
/// carry standard-normal noise.
pub fn question_dataset(
    n_layers: usize,
    hidden_dim: usize,
    n_spatial: usize,
    n_other: usize,
    core: &BTreeSet<UnitId>,
    bias: f64,
    seed: u64,
) -> ActivationDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = SyntheticSpec {
        n_layers,
        hidden_dim,
        n_records: n_spatial + n_other,
        ..SyntheticSpec::default()
    };
    let labels: Vec<RecordLabels> = (0..spec.n_records)
        .map(|i| RecordLabels {
            is_spatial: Some(i < n_spatial),
            ..Default::default()
        })
        .collect();
    let width = n_layers * hidden_dim;
    let mut data = gaussian(spec.n_records, width, 1.0, &mut rng);
    for i in 0..n_spatial {
        for &(l, u) in core {
            data[i * width + l * hidden_dim + u] += bias;
        }
    }
    finish(manifest(&spec, Pooling::MeanInput, None, labels), data)
}
