//! Linear decoding of the full grid configuration from one layer.

use gwsot_stats::{min_norm_least_squares, permutation_test_r2, r2_multioutput, TestResult};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{ActivationDataset, Pooling};
use crate::{ProbeError, Result};

pub const MIN_SPLIT_RECORDS: usize = 10;

/// Record-level train/test partition shared by every layer's decoder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub seed: u64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles `0..n_records` with `seed` and cuts at `round(n · train_fraction)`.
pub fn split_dataset(n_records: usize, train_fraction: f64, seed: u64) -> Result<Split> {
    if n_records < MIN_SPLIT_RECORDS {
        return Err(ProbeError::Invalid(format!(
            "{n_records} records; at least {MIN_SPLIT_RECORDS} are needed to split"
        )));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(ProbeError::Invalid(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let n_train = ((n_records as f64 * train_fraction).round() as usize).clamp(2, n_records - 2);
    let mut order: Vec<usize> = (0..n_records).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = order.split_off(n_train);
    Ok(Split {
        seed,
        train: order,
        test,
    })
}

/// Rows of the `2·N²` target: agent one-hot then goal one-hot, row-major.
pub fn grid_targets(ds: &ActivationDataset, rows: &[usize]) -> Result<DMatrix<f64>> {
    let n = ds.manifest.grid_size;
    let cells = n * n;
    let mut y = DMatrix::zeros(rows.len(), 2 * cells);
    for (r, &i) in rows.iter().enumerate() {
        let l = ds.labels(i);
        let (Some(a), Some(g)) = (l.agent, l.goal) else {
            return Err(ProbeError::Invalid(format!(
                "record {} lacks agent/goal labels",
                ds.records()[i].record_id
            )));
        };
        if a.x >= n || a.y >= n || g.x >= n || g.y >= n || a == g {
            return Err(ProbeError::Invalid(format!("record {} has invalid cells", ds.records()[i].record_id)));
        }
        y[(r, a.y * n + a.x)] = 1.0;
        y[(r, cells + g.y * n + g.x)] = 1.0;
    }
    Ok(y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderScore {
    pub layer: usize,
    pub r2_train: f64,
    pub r2_test: f64,
}

fn require_mean_input(ds: &ActivationDataset) -> Result<()> {
    if ds.manifest.pooling != Pooling::MeanInput {
        return Err(ProbeError::Invalid("grid decoding needs a MEAN_INPUT dataset".into()));
    }
    Ok(())
}

fn fit_with_targets(ds: &ActivationDataset, layer: usize, split: &Split, y_train: &DMatrix<f64>, y_test: &DMatrix<f64>) -> Result<DecoderScore> {
    let x_train = ds.layer_matrix(layer, &split.train)?;
    let x_test = ds.layer_matrix(layer, &split.test)?;
    let decoder = min_norm_least_squares(&x_train, y_train)?;
    Ok(DecoderScore {
        layer,
        r2_train: r2_multioutput(y_train, &decoder.predict(&x_train)?)?,
        r2_test: r2_multioutput(y_test, &decoder.predict(&x_test)?)?,
    })
}

pub fn fit_grid_decoder(ds: &ActivationDataset, layer: usize, split: &Split) -> Result<DecoderScore> {
    require_mean_input(ds)?;
    ds.check_layer(layer)?;
    let y_train = grid_targets(ds, &split.train)?;
    let y_test = grid_targets(ds, &split.test)?;
    fit_with_targets(ds, layer, split, &y_train, &y_test)
}

/// [`fit_grid_decoder`] for every layer, sharing one split.
pub fn fit_all_layers(ds: &ActivationDataset, split: &Split) -> Result<Vec<DecoderScore>> {
    (0..ds.n_layers())
        .into_par_iter()
        .map(|l| fit_grid_decoder(ds, l, split))
        .collect()
}

/// Permutation test of a layer's test R²: the training targets are
/// shuffled against the activations `n_permutations` times.
pub fn decoder_permutation_test(
    ds: &ActivationDataset,
    layer: usize,
    split: &Split,
    n_permutations: usize,
    seed: u64,
) -> Result<TestResult> {
    let observed = fit_grid_decoder(ds, layer, split)?.r2_test;
    let y_train = grid_targets(ds, &split.train)?;
    let y_test = grid_targets(ds, &split.test)?;
    let null: Vec<f64> = (0..n_permutations)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut order: Vec<usize> = (0..y_train.nrows()).collect();
            order.shuffle(&mut rng);
            let shuffled = y_train.select_rows(&order);
            fit_with_targets(ds, layer, split, &shuffled, &y_test).map(|s| s.r2_test)
        })
        .collect::<Result<_>>()?;
    Ok(permutation_test_r2(observed, &null)?)
}

/// A copy with the labels permuted across records.
pub fn shuffle_labels(ds: &ActivationDataset, seed: u64) -> ActivationDataset {
    let mut out = ds.clone();
    let mut labels: Vec<_> = ds.records().iter().map(|r| r.labels.clone()).collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    for (r, l) in out.manifest.records.iter_mut().zip(labels) {
        r.labels = l;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LayerSelection {
    AllAveraged,
    LastOnly,
}

/// Transfer matrix: entry `(i, j)` is the test R² on dataset `j` of a
/// decoder trained on dataset `i`, at the same layer. Each dataset is split
/// with the same `train_fraction` and `seed`.
pub fn cross_sir_matrix(
    datasets: &[&ActivationDataset],
    selection: LayerSelection,
    train_fraction: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let first = datasets
        .first()
        .ok_or_else(|| ProbeError::Invalid("no datasets".into()))?;
    for ds in datasets {
        require_mean_input(ds)?;
        let same = ds.n_layers() == first.n_layers()
            && ds.hidden_dim() == first.hidden_dim()
            && ds.manifest.pooling == first.manifest.pooling
            && ds.manifest.grid_size == first.manifest.grid_size;
        if !same {
            return Err(ProbeError::Shape("datasets differ in layers, width, pooling or grid size".into()));
        }
    }
    let splits: Vec<Split> = datasets
        .iter()
        .map(|ds| split_dataset(ds.n_records(), train_fraction, seed))
        .collect::<Result<_>>()?;
    let layers: Vec<usize> = match selection {
        LayerSelection::AllAveraged => (0..first.n_layers()).collect(),
        LayerSelection::LastOnly => vec![first.n_layers() - 1],
    };
    let k = datasets.len();
    let per_layer: Vec<Vec<f64>> = layers
        .par_iter()
        .map(|&layer| -> Result<Vec<f64>> {
            let mut m = vec![0.0; k * k];
            let tests: Vec<(DMatrix<f64>, DMatrix<f64>)> = datasets
                .iter()
                .zip(&splits)
                .map(|(ds, s)| Ok((ds.layer_matrix(layer, &s.test)?, grid_targets(ds, &s.test)?)))
                .collect::<Result<_>>()?;
            for (i, (ds, s)) in datasets.iter().zip(&splits).enumerate() {
                let decoder = min_norm_least_squares(&ds.layer_matrix(layer, &s.train)?, &grid_targets(ds, &s.train)?)?;
                for (j, (x, y)) in tests.iter().enumerate() {
                    m[i * k + j] = r2_multioutput(y, &decoder.predict(x)?)?;
                }
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;
    let scale = 1.0 / per_layer.len() as f64;
    Ok((0..k)
        .map(|i| {
            (0..k)
                .map(|j| per_layer.iter().map(|m| m[i * k + j]).sum::<f64>() * scale)
                .collect()
        })
        .collect())
}
