//! Probe commands over captured activation datasets.
//!
//! A capture root holds one target per encoding, named by its slug, each
//! with a `mean_input/` and a `first_decision/` dataset.

use std::collections::BTreeSet;
use std::path::Path;

use anyhow::{bail, Context, Result};
use gwsot_core::SirType;
use gwsot_probe::dataset::pooled_dir;
use gwsot_probe::decoder::{decoder_permutation_test, fit_all_layers};
use gwsot_probe::units::{cell_scan, QuestionCorrelation, ScanResult, ShuffleControl};
use gwsot_probe::{
    common_units, cross_sir_matrix, question_correlation, shuffle_control, split_dataset, unit_feature_scan,
    ActivationDataset, DecoderScore, Feature, LayerSelection, Pooling, UnitId,
};
use log::{info, warn};
use serde::Serialize;

use crate::output::{num, opt_num, Table};

/// Loads `<root>/<slug>/<pooling>/` for each requested encoding. With no
/// explicit list, every encoding that has a dataset is used.
pub fn load_family(root: &Path, pooling: Pooling, sirs: &[SirType]) -> Result<Vec<(SirType, ActivationDataset)>> {
    let explicit = !sirs.is_empty();
    let wanted: Vec<SirType> = if explicit { sirs.to_vec() } else { SirType::ALL.to_vec() };
    let mut out = Vec::new();
    for sir in wanted {
        let dir = pooled_dir(&root.join(sir.slug()), pooling);
        if !dir.join("manifest.json").exists() {
            if explicit {
                bail!("no {} dataset at {}", pooling.dir_name(), dir.display());
            }
            continue;
        }
        let ds = ActivationDataset::load(&dir).with_context(|| format!("loading {}", dir.display()))?;
        if ds.manifest.pooling != pooling {
            bail!("{} declares pooling {:?}", dir.display(), ds.manifest.pooling);
        }
        out.push((sir, ds));
    }
    if out.is_empty() {
        bail!("no {} datasets under {}", pooling.dir_name(), root.display());
    }
    info!("loaded {} {} datasets", out.len(), pooling.dir_name());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerScore {
    pub sir: SirType,
    #[serde(flatten)]
    pub score: DecoderScore,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutation_p: Option<f64>,
}

pub struct GridProbe {
    pub scores: Vec<LayerScore>,
    pub sirs: Vec<SirType>,
    pub cross: Vec<Vec<f64>>,
    pub selection: LayerSelection,
}

pub fn grid_probe(
    family: &[(SirType, ActivationDataset)],
    train_fraction: f64,
    seed: u64,
    permutations: usize,
    selection: LayerSelection,
) -> Result<GridProbe> {
    let mut scores = Vec::new();
    for (sir, ds) in family {
        let split = split_dataset(ds.n_records(), train_fraction, seed)?;
        for score in fit_all_layers(ds, &split)? {
            let permutation_p = if permutations > 0 {
                Some(decoder_permutation_test(ds, score.layer, &split, permutations, seed)?.p_value)
            } else {
                None
            };
            scores.push(LayerScore {
                sir: *sir,
                score,
                permutation_p,
            });
        }
    }
    let refs: Vec<&ActivationDataset> = family.iter().map(|(_, d)| d).collect();
    let cross = cross_sir_matrix(&refs, selection, train_fraction, seed)?;
    Ok(GridProbe {
        scores,
        sirs: family.iter().map(|(s, _)| *s).collect(),
        cross,
        selection,
    })
}

pub fn layer_table(scores: &[LayerScore]) -> Table {
    let mut t = Table::new(&["sir", "layer", "r2_train", "r2_test", "permutation_p"]);
    for s in scores {
        t.push(vec![
            s.sir.slug().into(),
            s.score.layer.to_string(),
            num(s.score.r2_train),
            num(s.score.r2_test),
            opt_num(s.permutation_p),
        ]);
    }
    t
}

/// Rows are training encodings, columns evaluation encodings.
pub fn matrix_table(sirs: &[SirType], m: &[Vec<f64>]) -> Table {
    let mut header = vec!["train_sir"];
    header.extend(sirs.iter().map(|s| s.slug()));
    let mut t = Table::new(&header);
    for (sir, row) in sirs.iter().zip(m) {
        let mut r = vec![sir.slug().to_string()];
        r.extend(row.iter().map(|&v| num(v)));
        t.push(r);
    }
    t
}

/// Feature selector on the command line: a single feature, or `CELLS` for
/// the all-cells family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureArg {
    One(Feature),
    Cells,
}

impl std::str::FromStr for FeatureArg {
    type Err = gwsot_probe::ProbeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("cells") {
            Ok(FeatureArg::Cells)
        } else {
            s.parse().map(FeatureArg::One)
        }
    }
}

pub const DEFAULT_FEATURES: [FeatureArg; 5] = [
    FeatureArg::One(Feature::AgentX),
    FeatureArg::One(Feature::AgentY),
    FeatureArg::One(Feature::Border),
    FeatureArg::One(Feature::ActionCorrect),
    FeatureArg::Cells,
];

pub fn scans_for(ds: &ActivationDataset, feature: FeatureArg) -> Result<Vec<ScanResult>> {
    Ok(match feature {
        FeatureArg::One(f) => vec![unit_feature_scan(ds, f)?],
        FeatureArg::Cells => cell_scan(ds)?,
    })
}

pub const UNIT_HEADER: [&str; 9] = ["sir", "feature", "layer", "unit", "coefficient", "r", "p_raw", "p_adjusted", "significant"];

pub fn unit_table(sir: SirType, scans: &[ScanResult]) -> Table {
    let mut t = Table::new(&UNIT_HEADER);
    for scan in scans {
        for u in &scan.units {
            t.push(vec![
                sir.slug().into(),
                u.feature.to_string(),
                u.layer.to_string(),
                u.unit.to_string(),
                num(u.coefficient),
                num(u.r),
                num(u.p_raw),
                num(u.p_adjusted),
                u.significant.to_string(),
            ]);
        }
    }
    t
}

pub fn count_rows(t: &mut Table, sir: SirType, scans: &[ScanResult]) {
    for scan in scans {
        for (layer, c) in scan.per_layer_counts().into_iter().enumerate() {
            t.push(vec![sir.slug().into(), scan.feature.to_string(), layer.to_string(), c.to_string()]);
        }
    }
}

pub fn feature_file_name(feature: FeatureArg) -> String {
    match feature {
        FeatureArg::Cells => "cells".into(),
        FeatureArg::One(Feature::Cell { x, y }) => format!("cell_{x}_{y}"),
        FeatureArg::One(f) => f.to_string().to_ascii_lowercase(),
    }
}

/// Units significant for `feature` in at least `k_of_n` encodings, plus the
/// per-layer shuffle control.
pub struct CommonResult {
    pub units: BTreeSet<UnitId>,
    pub control: ShuffleControl,
}

pub fn common(family: &[(SirType, ActivationDataset)], feature: Feature, k_of_n: usize, shuffles: usize, seed: u64) -> Result<CommonResult> {
    let scans: Vec<ScanResult> = family
        .iter()
        .map(|(_, ds)| unit_feature_scan(ds, feature))
        .collect::<gwsot_probe::Result<_>>()?;
    common_from_scans(&scans, k_of_n, shuffles, seed)
}

pub fn common_from_scans(scans: &[ScanResult], k_of_n: usize, shuffles: usize, seed: u64) -> Result<CommonResult> {
    let refs: Vec<&ScanResult> = scans.iter().collect();
    let units = common_units(&refs, k_of_n)?;
    let control = shuffle_control(&refs, k_of_n, shuffles, seed)?;
    if let Some(note) = &control.note {
        warn!("shuffle control: {note}");
    }
    Ok(CommonResult { units, control })
}

pub fn units_table(units: &BTreeSet<UnitId>) -> Table {
    let mut t = Table::new(&["layer", "unit"]);
    for &(l, u) in units {
        t.push(vec![l.to_string(), u.to_string()]);
    }
    t
}

pub fn common_counts_table(c: &ShuffleControl) -> Table {
    let mut t = Table::new(&["layer", "real", "shuffled_mean"]);
    for (layer, (r, s)) in c.real_counts.iter().zip(&c.shuffled_mean).enumerate() {
        t.push(vec![layer.to_string(), r.to_string(), num(*s)]);
    }
    t
}

pub fn question_tables(q: &QuestionCorrelation) -> Table {
    let mut t = Table::new(&["set", "layer", "unit", "r"]);
    for (set, rows) in [("core", &q.core), ("control", &q.control)] {
        for c in rows {
            t.push(vec![set.into(), c.layer.to_string(), c.unit.to_string(), num(c.r)]);
        }
    }
    t
}

pub fn question_corr(core: &BTreeSet<UnitId>, ds: &ActivationDataset, seed: u64) -> Result<QuestionCorrelation> {
    if ds.manifest.pooling != Pooling::MeanInput {
        bail!("question correlation needs a MEAN_INPUT dataset");
    }
    Ok(question_correlation(core, ds, seed)?)
}
