//! Per-unit feature scans and the analyses built on their significance
//! masks.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use gwsot_stats::{bonferroni, pearson_slope_test, wilcoxon_signed_rank, TestResult};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::{ActivationDataset, Pooling, RecordLabels};
use crate::{ProbeError, Result, UnitId};

pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    /// Agent occupies cell `(x, y)`.
    Cell { x: usize, y: usize },
    AgentX,
    AgentY,
    /// Agent is on the outer ring of cells.
    Border,
    ActionCorrect,
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Feature::Cell { x, y } => write!(f, "CELL({x},{y})"),
            Feature::AgentX => f.write_str("AGENT_X"),
            Feature::AgentY => f.write_str("AGENT_Y"),
            Feature::Border => f.write_str("BORDER"),
            Feature::ActionCorrect => f.write_str("ACTION_CORRECT"),
        }
    }
}

impl FromStr for Feature {
    type Err = ProbeError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_uppercase().replace('-', "_");
        let parsed = match t.as_str() {
            "AGENT_X" | "X" => Some(Feature::AgentX),
            "AGENT_Y" | "Y" => Some(Feature::AgentY),
            "BORDER" => Some(Feature::Border),
            "ACTION_CORRECT" | "CORRECT" => Some(Feature::ActionCorrect),
            _ => t
                .strip_prefix("CELL(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|r| r.split_once(','))
                .and_then(|(x, y)| Some(Feature::Cell { x: x.trim().parse().ok()?, y: y.trim().parse().ok()? })),
        };
        parsed.ok_or_else(|| ProbeError::Invalid(format!("unknown feature {s:?}")))
    }
}

impl Serialize for Feature {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Feature {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

impl Feature {
    fn value(self, labels: &RecordLabels, n: usize) -> Option<f64> {
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        match self {
            Feature::ActionCorrect => labels.correct.map(flag),
            _ => {
                let a = labels.agent?;
                Some(match self {
                    Feature::Cell { x, y } => flag(a.x == x && a.y == y),
                    Feature::AgentX => a.x as f64,
                    Feature::AgentY => a.y as f64,
                    Feature::Border => flag(a.x.min(a.y).min(n - 1 - a.x).min(n - 1 - a.y) == 0),
                    _ => unreachable!(),
                })
            }
        }
    }
}

/// The feature's value on every record that carries the needed labels.
/// Steps without a valid action have no correctness label and drop out of
/// `ACTION_CORRECT`.
pub fn feature_vector(ds: &ActivationDataset, feature: Feature) -> Result<(Vec<usize>, Vec<f64>)> {
    let n = ds.manifest.grid_size;
    if let Feature::Cell { x, y } = feature {
        if x >= n || y >= n {
            return Err(ProbeError::OutOfRange(format!("{feature} on a {n}x{n} grid")));
        }
    }
    let (rows, values): (Vec<usize>, Vec<f64>) = (0..ds.n_records())
        .filter_map(|i| feature.value(ds.labels(i), n).map(|v| (i, v)))
        .unzip();
    if values.len() < 3 {
        return Err(ProbeError::UndefinedScan(format!("{feature}: only {} labelled records", values.len())));
    }
    if values.iter().all(|&v| v == values[0]) {
        return Err(ProbeError::UndefinedScan(format!("{feature} is constant over the dataset")));
    }
    Ok((rows, values))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitSignificance {
    pub layer: usize,
    pub unit: usize,
    pub feature: Feature,
    /// Slope of the feature on the unit's activation.
    pub coefficient: f64,
    pub r: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub feature: Feature,
    pub n_layers: usize,
    pub hidden_dim: usize,
    pub n_records: usize,
    /// Bonferroni family size.
    pub m: u64,
    /// Layer-major, `L × H` entries.
    pub units: Vec<UnitSignificance>,
}

impl ScanResult {
    pub fn get(&self, layer: usize, unit: usize) -> &UnitSignificance {
        &self.units[layer * self.hidden_dim + unit]
    }

    pub fn significant_set(&self) -> BTreeSet<UnitId> {
        self.units
            .iter()
            .filter(|u| u.significant)
            .map(|u| (u.layer, u.unit))
            .collect()
    }

    pub fn per_layer_counts(&self) -> Vec<usize> {
        let mut out = vec![0; self.n_layers];
        for u in self.units.iter().filter(|u| u.significant) {
            out[u.layer] += 1;
        }
        out
    }

    /// Layer-major significance mask.
    pub fn mask(&self) -> Vec<bool> {
        self.units.iter().map(|u| u.significant).collect()
    }
}

fn require_first_decision(ds: &ActivationDataset) -> Result<()> {
    if ds.manifest.pooling != Pooling::FirstDecision {
        return Err(ProbeError::Invalid("unit scans need a FIRST_DECISION dataset".into()));
    }
    Ok(())
}

/// Regresses `feature` on every unit's activation, Bonferroni-corrected
/// over all `L × H` units.
pub fn unit_feature_scan(ds: &ActivationDataset, feature: Feature) -> Result<ScanResult> {
    let m = (ds.n_layers() * ds.hidden_dim()) as u64;
    unit_feature_scan_with_m(ds, feature, m)
}

/// As [`unit_feature_scan`] with an explicit family size.
pub fn unit_feature_scan_with_m(ds: &ActivationDataset, feature: Feature, m: u64) -> Result<ScanResult> {
    require_first_decision(ds)?;
    let (rows, y) = feature_vector(ds, feature)?;
    let h = ds.hidden_dim();
    let units: Vec<UnitSignificance> = (0..ds.n_layers())
        .into_par_iter()
        .flat_map_iter(|layer| {
            let mut columns = vec![Vec::with_capacity(rows.len()); h];
            for &i in &rows {
                for (col, &v) in columns.iter_mut().zip(ds.layer_row(i, layer)) {
                    col.push(f64::from(v));
                }
            }
            let y = &y;
            columns.into_iter().enumerate().map(move |(unit, x)| {
                let (coefficient, r, p_raw) = match pearson_slope_test(&x, y) {
                    Ok(fit) => (fit.slope, fit.r, fit.test.p_value),
                    // A unit that never varies carries no information.
                    Err(_) => (0.0, 0.0, 1.0),
                };
                let p_adjusted = bonferroni(p_raw, m);
                UnitSignificance {
                    layer,
                    unit,
                    feature,
                    coefficient,
                    r,
                    p_raw,
                    p_adjusted,
                    significant: p_adjusted < ALPHA,
                }
            })
        })
        .collect();
    Ok(ScanResult {
        feature,
        n_layers: ds.n_layers(),
        hidden_dim: h,
        n_records: rows.len(),
        m,
        units,
    })
}

/// Scans every cell of the grid with one family of `N² × L × H` tests.
/// Cells the agent never (or always) occupies are skipped.
pub fn cell_scan(ds: &ActivationDataset) -> Result<Vec<ScanResult>> {
    let n = ds.manifest.grid_size;
    let m = (n * n * ds.n_layers() * ds.hidden_dim()) as u64;
    let mut out = Vec::new();
    for y in 0..n {
        for x in 0..n {
            match unit_feature_scan_with_m(ds, Feature::Cell { x, y }, m) {
                Ok(scan) => out.push(scan),
                Err(ProbeError::UndefinedScan(msg)) => log::warn!("skipping {msg}"),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

fn check_same_shape(scans: &[&ScanResult]) -> Result<(usize, usize)> {
    let first = scans.first().ok_or_else(|| ProbeError::Invalid("no scans".into()))?;
    if scans
        .iter()
        .any(|s| s.n_layers != first.n_layers || s.hidden_dim != first.hidden_dim)
    {
        return Err(ProbeError::Shape("scans cover different layer/unit grids".into()));
    }
    Ok((first.n_layers, first.hidden_dim))
}

fn check_k(k_of_n: usize, n: usize) -> Result<()> {
    if k_of_n == 0 || k_of_n > n {
        return Err(ProbeError::Invalid(format!("k_of_n = {k_of_n} with {n} scans")));
    }
    Ok(())
}

fn count_common(masks: &[Vec<bool>], k_of_n: usize) -> Vec<bool> {
    let len = masks[0].len();
    (0..len)
        .map(|i| masks.iter().filter(|m| m[i]).count() >= k_of_n)
        .collect()
}

/// Units significant in at least `k_of_n` of the scans.
pub fn common_units(scans: &[&ScanResult], k_of_n: usize) -> Result<BTreeSet<UnitId>> {
    let (_, h) = check_same_shape(scans)?;
    check_k(k_of_n, scans.len())?;
    let masks: Vec<Vec<bool>> = scans.iter().map(|s| s.mask()).collect();
    Ok(count_common(&masks, k_of_n)
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c)
        .map(|(i, _)| (i / h, i % h))
        .collect())
}

/// Permutes unit indices within each layer, independently per scan.
pub fn shuffled_masks(masks: &[Vec<bool>], n_layers: usize, hidden_dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<bool>> {
    masks
        .iter()
        .map(|mask| {
            let mut out = mask.clone();
            for layer in 0..n_layers {
                out[layer * hidden_dim..(layer + 1) * hidden_dim].shuffle(rng);
            }
            out
        })
        .collect()
}

fn per_layer(mask: &[bool], n_layers: usize, hidden_dim: usize) -> Vec<usize> {
    (0..n_layers)
        .map(|l| mask[l * hidden_dim..(l + 1) * hidden_dim].iter().filter(|&&b| b).count())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShuffleControl {
    pub k_of_n: usize,
    pub n_shuffles: usize,
    /// Common-unit count per layer on the real masks.
    pub real_counts: Vec<usize>,
    /// Mean common-unit count per layer over the shuffles.
    pub shuffled_mean: Vec<f64>,
    /// `[shuffle][layer]` counts.
    pub shuffled_counts: Vec<Vec<usize>>,
    /// Wilcoxon signed-rank test over per-layer `real − shuffled_mean`;
    /// absent when undefined (every difference zero).
    pub test: Option<TestResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ShuffleControl {
    /// Mean real−shuffled difference across layers.
    pub fn mean_excess(&self) -> f64 {
        let n = self.real_counts.len().max(1) as f64;
        self.real_counts
            .iter()
            .zip(&self.shuffled_mean)
            .map(|(&r, &s)| r as f64 - s)
            .sum::<f64>()
            / n
    }

    /// More common units than chance: a significant two-sided test whose
    /// differences lean positive. Fewer-than-chance overlap does not count.
    pub fn significant(&self) -> bool {
        self.test.as_ref().is_some_and(|t| t.p_value < ALPHA) && self.mean_excess() > 0.0
    }
}

pub fn shuffle_control(scans: &[&ScanResult], k_of_n: usize, n_shuffles: usize, seed: u64) -> Result<ShuffleControl> {
    let (l, h) = check_same_shape(scans)?;
    check_k(k_of_n, scans.len())?;
    if n_shuffles == 0 {
        return Err(ProbeError::Invalid("n_shuffles must be positive".into()));
    }
    let masks: Vec<Vec<bool>> = scans.iter().map(|s| s.mask()).collect();
    let real_counts = per_layer(&count_common(&masks, k_of_n), l, h);
    let shuffled_counts: Vec<Vec<usize>> = (0..n_shuffles)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(s as u64));
            let shuffled = shuffled_masks(&masks, l, h, &mut rng);
            per_layer(&count_common(&shuffled, k_of_n), l, h)
        })
        .collect();
    let shuffled_mean: Vec<f64> = (0..l)
        .map(|layer| shuffled_counts.iter().map(|c| c[layer] as f64).sum::<f64>() / n_shuffles as f64)
        .collect();
    let diffs: Vec<f64> = real_counts
        .iter()
        .zip(&shuffled_mean)
        .map(|(&r, &s)| r as f64 - s)
        .collect();
    let (test, note) = match wilcoxon_signed_rank(&diffs) {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(format!("test undefined: {e}"))),
    };
    Ok(ShuffleControl {
        k_of_n,
        n_shuffles,
        real_counts,
        shuffled_mean,
        shuffled_counts,
        test,
        note,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitCorrelation {
    pub layer: usize,
    pub unit: usize,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionCorrelation {
    pub core: Vec<UnitCorrelation>,
    pub control: Vec<UnitCorrelation>,
    /// Wilcoxon signed-rank of the core coefficients against zero.
    pub core_test: Option<TestResult>,
    pub control_test: Option<TestResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn correlations(ds: &ActivationDataset, units: &[UnitId], labels: &[f64]) -> Vec<UnitCorrelation> {
    units
        .par_iter()
        .filter_map(|&(layer, unit)| {
            let x = ds.unit_column(layer, unit);
            pearson_slope_test(&x, labels)
                .ok()
                .map(|fit| UnitCorrelation { layer, unit, r: fit.r })
        })
        .collect()
}

fn signed_rank(rs: &[UnitCorrelation], what: &str, notes: &mut Vec<String>) -> Option<TestResult> {
    if rs.len() < 2 {
        notes.push(format!("{what}: {} coefficient(s), test degenerate", rs.len()));
        return None;
    }
    let values: Vec<f64> = rs.iter().map(|c| c.r).collect();
    match wilcoxon_signed_rank(&values) {
        Ok(t) => Some(t),
        Err(e) => {
            notes.push(format!("{what}: {e}"));
            None
        }
    }
}

/// Correlates each core unit's activation with the spatial/non-spatial
/// label and tests the coefficients against zero. The control draws, per
/// layer, as many non-core units as the core set has there.
pub fn question_correlation(core: &BTreeSet<UnitId>, ds: &ActivationDataset, seed: u64) -> Result<QuestionCorrelation> {
    if core.is_empty() {
        return Err(ProbeError::Invalid("empty core unit set".into()));
    }
    let (l, h) = (ds.n_layers(), ds.hidden_dim());
    if let Some(&(layer, unit)) = core.iter().find(|&&(layer, unit)| layer >= l || unit >= h) {
        return Err(ProbeError::OutOfRange(format!("unit ({layer}, {unit}) outside {l}x{h}")));
    }
    let labels: Vec<f64> = (0..ds.n_records())
        .map(|i| {
            ds.labels(i)
                .is_spatial
                .map(|b| if b { 1.0 } else { 0.0 })
                .ok_or_else(|| ProbeError::Invalid(format!("record {} has no is_spatial label", ds.records()[i].record_id)))
        })
        .collect::<Result<_>>()?;
    if labels.iter().all(|&v| v == labels[0]) {
        return Err(ProbeError::UndefinedScan("is_spatial is constant".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut control_units = Vec::with_capacity(core.len());
    for layer in 0..l {
        let want = core.iter().filter(|u| u.0 == layer).count();
        if want == 0 {
            continue;
        }
        let pool: Vec<UnitId> = (0..h).map(|u| (layer, u)).filter(|u| !core.contains(u)).collect();
        if pool.len() < want {
            return Err(ProbeError::Invalid(format!(
                "layer {layer}: {want} core units leave only {} candidates for the control",
                pool.len()
            )));
        }
        let mut picked: Vec<UnitId> = pool.choose_multiple(&mut rng, want).copied().collect();
        picked.sort_unstable();
        control_units.extend(picked);
    }

    let core_units: Vec<UnitId> = core.iter().copied().collect();
    let core_r = correlations(ds, &core_units, &labels);
    let control_r = correlations(ds, &control_units, &labels);
    let mut notes = Vec::new();
    let core_test = signed_rank(&core_r, "core", &mut notes);
    let control_test = signed_rank(&control_r, "control", &mut notes);
    Ok(QuestionCorrelation {
        core: core_r,
        control: control_r,
        core_test,
        control_test,
        notes,
    })
}
