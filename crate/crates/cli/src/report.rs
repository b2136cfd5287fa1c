//! Summary JSON bundling the data series behind the behavioural and probing
//! figures. A pure function of persisted records and datasets.

use std::collections::BTreeSet;

use anyhow::Result;
use gwsot_core::harness::TrialRecord;
use gwsot_core::metrics::summarize;
use gwsot_core::SirType;
use gwsot_probe::units::{cell_scan, QuestionCorrelation, ScanResult};
use gwsot_probe::{unit_feature_scan, ActivationDataset, Feature, LayerSelection, UnitId};
use serde::Serialize;

use crate::behavior::{policy_maps, Experiment};
use crate::probing::{common_from_scans, grid_probe, LayerScore};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricPoint {
    pub model: String,
    pub model_size: Option<f64>,
    pub sir: SirType,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyPoint {
    pub dx: i64,
    pub dy: i64,
    pub visits: usize,
    pub modal_action: Option<String>,
    pub frequency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySeries {
    pub model: String,
    pub sir: SirType,
    pub cells: Vec<PolicyPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BehaviorSection {
    pub metrics: Vec<MetricPoint>,
    pub random_baseline: Vec<MetricPoint>,
    pub policy_maps: Vec<PolicySeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matrix {
    pub sirs: Vec<SirType>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountSeries {
    pub sir: SirType,
    pub feature: Feature,
    pub per_layer: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellCounts {
    pub sir: SirType,
    /// `[y][x]` totals of significant units over all layers.
    pub counts: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommonSeries {
    pub feature: Feature,
    pub k_of_n: usize,
    pub total: usize,
    pub per_layer: Vec<usize>,
    pub shuffled_mean: Vec<f64>,
    pub wilcoxon_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbingSection {
    pub decoder: Vec<LayerScore>,
    pub cross_all_layers: Matrix,
    pub cross_last_layer: Matrix,
    pub unit_counts: Vec<CountSeries>,
    pub cell_counts: Vec<CellCounts>,
    pub common: Vec<CommonSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub behavior: Option<BehaviorSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probing: Option<ProbingSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub questions: Option<QuestionCorrelation>,
}

fn metric_points(model: &str, size: Option<f64>, trials: &[TrialRecord]) -> Result<Vec<MetricPoint>> {
    let mut out = Vec::new();
    for sir in SirType::ALL {
        let subset: Vec<TrialRecord> = trials.iter().filter(|t| t.sir == sir).cloned().collect();
        if subset.is_empty() {
            continue;
        }
        for row in summarize(sir.slug(), &subset)? {
            out.push(MetricPoint {
                model: model.into(),
                model_size: size,
                sir,
                metric: row.metric,
                mean: row.mean,
                stderr: row.stderr,
                n: row.n,
            });
        }
    }
    Ok(out)
}

pub fn behavior_section(experiments: &[Experiment], baseline: &[TrialRecord]) -> Result<BehaviorSection> {
    let mut metrics = Vec::new();
    let mut maps = Vec::new();
    for e in experiments {
        metrics.extend(metric_points(&e.label, e.model_size, &e.data.trials)?);
        for (sir, map) in policy_maps(&e.data, &[])? {
            maps.push(PolicySeries {
                model: e.label.clone(),
                sir,
                cells: map
                    .cells
                    .iter()
                    .filter(|c| (c.dx, c.dy) != (0, 0))
                    .map(|c| PolicyPoint {
                        dx: c.dx,
                        dy: c.dy,
                        visits: c.visits(),
                        modal_action: c.modal_action().map(|a| a.as_str().to_string()),
                        frequency: c.frequency(),
                    })
                    .collect(),
            });
        }
    }
    Ok(BehaviorSection {
        metrics,
        random_baseline: metric_points("random", None, baseline)?,
        policy_maps: maps,
    })
}

const SINGLE_FEATURES: [Feature; 4] = [Feature::AgentX, Feature::AgentY, Feature::Border, Feature::ActionCorrect];

pub fn probing_section(
    mean_input: &[(SirType, ActivationDataset)],
    first_decision: &[(SirType, ActivationDataset)],
    train_fraction: f64,
    shuffles: usize,
    seed: u64,
) -> Result<ProbingSection> {
    let all = grid_probe(mean_input, train_fraction, seed, 0, LayerSelection::AllAveraged)?;
    let last = grid_probe(mean_input, train_fraction, seed, 0, LayerSelection::LastOnly)?;

    let mut unit_counts = Vec::new();
    let mut per_feature: Vec<Vec<ScanResult>> = vec![Vec::new(); SINGLE_FEATURES.len()];
    let mut cell_counts = Vec::new();
    for (sir, ds) in first_decision {
        for (i, &f) in SINGLE_FEATURES.iter().enumerate() {
            match unit_feature_scan(ds, f) {
                Ok(scan) => {
                    unit_counts.push(CountSeries {
                        sir: *sir,
                        feature: f,
                        per_layer: scan.per_layer_counts(),
                    });
                    per_feature[i].push(scan);
                }
                Err(e) => log::warn!("{}: {f} scan skipped: {e}", sir.slug()),
            }
        }
        let n = ds.manifest.grid_size;
        let mut counts = vec![vec![0; n]; n];
        for scan in cell_scan(ds)? {
            if let Feature::Cell { x, y } = scan.feature {
                counts[y][x] = scan.significant_set().len();
            }
        }
        cell_counts.push(CellCounts { sir: *sir, counts });
    }

    let mut common = Vec::new();
    for (i, scans) in per_feature.iter().enumerate() {
        let n = scans.len();
        if n == 0 || n != first_decision.len() {
            continue;
        }
        let ks: BTreeSet<usize> = [n, n.saturating_sub(1).max(1)].into();
        for &k in ks.iter().rev() {
            let r = common_from_scans(scans, k, shuffles, seed)?;
            let units: &BTreeSet<UnitId> = &r.units;
            common.push(CommonSeries {
                feature: SINGLE_FEATURES[i],
                k_of_n: k,
                total: units.len(),
                per_layer: r.control.real_counts.clone(),
                shuffled_mean: r.control.shuffled_mean.clone(),
                wilcoxon_p: r.control.test.as_ref().map(|t| t.p_value),
            });
        }
    }

    Ok(ProbingSection {
        decoder: all.scores,
        cross_all_layers: Matrix {
            sirs: all.sirs,
            values: all.cross,
        },
        cross_last_layer: Matrix {
            sirs: last.sirs,
            values: last.cross,
        },
        unit_counts,
        cell_counts,
        common,
    })
}
