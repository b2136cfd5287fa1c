//! Behavioural analyses: metric tables, GLMs, baseline t-tests and policy maps.

use std::path::Path;

use anyhow::{bail, Context, Result};
use gwsot_core::agents::{ScriptedAgent, ScriptedPolicy};
use gwsot_core::grid::TrialOutcome;
use gwsot_core::harness::{load_experiment, run_trial, AgentSpec, ExperimentConfig, LoadedExperiment, TrialRecord};
use gwsot_core::metrics::{efficiency, final_distance_ratio, policy_map, summarize, PolicyMap};
use gwsot_core::{Action, SirClass, SirType};
use gwsot_stats::{logistic_irls, ols_fit, welch_t_test, DesignMatrix, FitResult, TestResult};
use serde::Serialize;

use crate::output::{num, opt_num, Table};

/// One loaded experiment directory, typically one model.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub label: String,
    /// Billions of parameters, when known.
    pub model_size: Option<f64>,
    pub data: LoadedExperiment,
}

pub fn agent_label(config: &ExperimentConfig) -> String {
    match &config.agent {
        AgentSpec::Endpoint { endpoint, .. } => endpoint.model_id.clone(),
        AgentSpec::Scripted { policy } => match policy {
            ScriptedPolicy::Random => "scripted:random".into(),
            ScriptedPolicy::Optimal => "scripted:optimal".into(),
            ScriptedPolicy::EpsilonOptimal(e) => format!("scripted:epsilon_optimal({e})"),
        },
    }
}

pub fn load(dir: &Path, model_size: Option<f64>) -> Result<Experiment> {
    let data = load_experiment(dir).with_context(|| format!("loading experiment {}", dir.display()))?;
    Ok(Experiment {
        label: agent_label(&data.manifest.config),
        model_size,
        data,
    })
}

/// RANDOM-policy trials for every SIR, run in memory.
pub fn random_baseline(grid_size: usize, trials_per_sir: usize, seed: u64) -> Result<Vec<TrialRecord>> {
    let mut config = ExperimentConfig::scripted(ScriptedPolicy::Random, trials_per_sir, seed);
    config.grid_size = grid_size;
    config.validate()?;
    let agent = ScriptedAgent(ScriptedPolicy::Random);
    config
        .plan()
        .iter()
        .map(|spec| run_trial(spec, &agent).map_err(Into::into))
        .collect()
}

fn present_sirs(trials: &[TrialRecord]) -> Vec<SirType> {
    SirType::ALL.into_iter().filter(|s| trials.iter().any(|t| t.sir == *s)).collect()
}

fn present_classes(trials: &[TrialRecord]) -> Vec<SirClass> {
    SirClass::ALL
        .into_iter()
        .filter(|c| trials.iter().any(|t| t.sir.class() == *c))
        .collect()
}

fn metric_rows(table: &mut Table, model: &str, size: Option<f64>, trials: &[TrialRecord]) -> Result<()> {
    let mut emit = |class: &str, sir: &str, subset: Vec<TrialRecord>| -> Result<()> {
        if subset.is_empty() {
            return Ok(());
        }
        for row in summarize(sir, &subset)? {
            table.push(vec![
                model.to_string(),
                opt_num(size),
                class.to_string(),
                sir.to_string(),
                row.metric,
                num(row.mean),
                num(row.stderr),
                row.n.to_string(),
            ]);
        }
        Ok(())
    };
    for sir in present_sirs(trials) {
        emit(sir.class().as_str(), sir.slug(), trials.iter().filter(|t| t.sir == sir).cloned().collect())?;
    }
    for class in present_classes(trials) {
        emit(class.as_str(), "", trials.iter().filter(|t| t.sir.class() == class).cloned().collect())?;
    }
    emit("", "", trials.to_vec())
}

pub const METRIC_HEADER: [&str; 8] = ["model", "model_size", "sir_class", "sir", "metric", "mean", "stderr", "n"];

/// Per-SIR, per-class and overall metric rows for every experiment, then
/// the baseline (if any) under the model name `random`.
pub fn metrics_table(experiments: &[Experiment], baseline: Option<&[TrialRecord]>) -> Result<Table> {
    let mut table = Table::new(&METRIC_HEADER);
    for e in experiments {
        metric_rows(&mut table, &e.label, e.model_size, &e.data.trials)?;
    }
    if let Some(b) = baseline {
        metric_rows(&mut table, "random", None, b)?;
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Fitted {
    Fit(FitResult),
    Failed { error: String },
}

impl Fitted {
    fn from(r: gwsot_stats::Result<FitResult>) -> Self {
        match r {
            Ok(f) => Fitted::Fit(f),
            Err(e) => Fitted::Failed { error: e.to_string() },
        }
    }

    pub fn fit(&self) -> Option<&FitResult> {
        match self {
            Fitted::Fit(f) => Some(f),
            Fitted::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlmReport {
    /// Reference level for the representation dummies.
    pub reference_class: Option<String>,
    pub model_size_included: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Binomial: success ~ representation + model_size.
    pub success: Fitted,
    /// Linear: success ~ model_size.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_by_size: Option<Fitted>,
    /// Gaussian over successful trials: efficiency ~ representation + model_size.
    pub efficiency: Fitted,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub efficiency_by_size: Option<Fitted>,
    /// Gaussian over failed trials.
    pub final_distance_ratio: Fitted,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_distance_ratio_by_size: Option<Fitted>,
}

struct Obs {
    class: SirClass,
    size: f64,
    success: bool,
    efficiency: Option<f64>,
    ratio: Option<f64>,
}

fn design(rows: &[&Obs], classes: &[SirClass], with_class: bool, with_size: bool) -> gwsot_stats::Result<DesignMatrix> {
    let sizes: Vec<f64> = rows.iter().map(|o| o.size).collect();
    let covariates: Vec<(&str, &[f64])> = if with_size { vec![("model_size", &sizes)] } else { vec![] };
    if with_class {
        let names: Vec<&str> = classes.iter().map(|c| c.as_str()).collect();
        let level_of: Vec<usize> = rows
            .iter()
            .map(|o| classes.iter().position(|c| *c == o.class).expect("present"))
            .collect();
        DesignMatrix::dummy_coded(&names, &level_of, &covariates)
    } else {
        DesignMatrix::dummy_coded(&["all"], &vec![0; rows.len()], &covariates)
    }
}

/// Pooled GLMs across experiments. The size covariate enters only when at
/// least two distinct model sizes are present.
pub fn glm_report(experiments: &[Experiment]) -> GlmReport {
    let mut notes = Vec::new();
    let mut obs = Vec::new();
    for e in experiments {
        let size = e.model_size.unwrap_or(f64::NAN);
        for t in &e.data.trials {
            obs.push(Obs {
                class: t.sir.class(),
                size,
                success: t.outcome == TrialOutcome::Success,
                efficiency: efficiency(t).ok(),
                ratio: final_distance_ratio(t).ok(),
            });
        }
    }
    let mut sizes: Vec<f64> = experiments.iter().filter_map(|e| e.model_size).collect();
    sizes.sort_by(f64::total_cmp);
    sizes.dedup();
    let with_size = sizes.len() >= 2 && experiments.iter().all(|e| e.model_size.is_some());
    if !with_size {
        notes.push("model_size omitted: fewer than two distinct known sizes".into());
    }
    let classes: Vec<SirClass> = SirClass::ALL.into_iter().filter(|c| obs.iter().any(|o| o.class == *c)).collect();

    let all: Vec<&Obs> = obs.iter().collect();
    let wins: Vec<&Obs> = obs.iter().filter(|o| o.efficiency.is_some()).collect();
    let fails: Vec<&Obs> = obs.iter().filter(|o| o.ratio.is_some()).collect();
    let flag = |o: &&Obs| if o.success { 1.0 } else { 0.0 };
    let eff = |o: &&Obs| o.efficiency.expect("filtered");
    let ratio = |o: &&Obs| o.ratio.expect("filtered");

    let fit_full = |rows: &[&Obs], y: Vec<f64>, binomial: bool| {
        Fitted::from(design(rows, &classes, true, with_size).and_then(|x| {
            if binomial {
                logistic_irls(&x, &y)
            } else {
                ols_fit(&x, &y)
            }
        }))
    };
    let fit_size = |rows: &[&Obs], y: Vec<f64>| {
        with_size.then(|| Fitted::from(design(rows, &classes, false, true).and_then(|x| ols_fit(&x, &y))))
    };

    GlmReport {
        reference_class: classes.first().map(|c| c.as_str().to_string()),
        model_size_included: with_size,
        notes,
        success: fit_full(&all, all.iter().map(flag).collect(), true),
        success_by_size: fit_size(&all, all.iter().map(flag).collect()),
        efficiency: fit_full(&wins, wins.iter().map(eff).collect(), false),
        efficiency_by_size: fit_size(&wins, wins.iter().map(eff).collect()),
        final_distance_ratio: fit_full(&fails, fails.iter().map(ratio).collect(), false),
        final_distance_ratio_by_size: fit_size(&fails, fails.iter().map(ratio).collect()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineComparison {
    pub model: String,
    pub sir_class: String,
    pub n_model: usize,
    pub n_baseline: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<TestResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Welch t-test of failed-trial final distance ratios, model vs baseline,
/// per representation class.
pub fn baseline_tests(experiments: &[Experiment], baseline: &[TrialRecord]) -> Vec<BaselineComparison> {
    let ratios = |trials: &mut dyn Iterator<Item = &TrialRecord>| -> Vec<f64> {
        trials.filter_map(|t| final_distance_ratio(t).ok()).collect()
    };
    let mut out = Vec::new();
    for e in experiments {
        for class in present_classes(&e.data.trials) {
            let a = ratios(&mut e.data.trials.iter().filter(|t| t.sir.class() == class));
            let b = ratios(&mut baseline.iter().filter(|t| t.sir.class() == class));
            let (test, error) = match welch_t_test(&a, &b) {
                Ok(t) => (Some(t), None),
                Err(err) => (None, Some(err.to_string())),
            };
            out.push(BaselineComparison {
                model: e.label.clone(),
                sir_class: class.as_str().into(),
                n_model: a.len(),
                n_baseline: b.len(),
                test,
                error,
            });
        }
    }
    out
}

pub const POLICY_HEADER: [&str; 10] = ["sir", "dx", "dy", "visits", "up", "down", "left", "right", "modal_action", "modal_frequency"];

pub fn policy_maps(data: &LoadedExperiment, sirs: &[SirType]) -> Result<Vec<(SirType, PolicyMap)>> {
    let n = data.manifest.config.grid_size;
    let wanted: Vec<SirType> = if sirs.is_empty() { present_sirs(&data.trials) } else { sirs.to_vec() };
    if wanted.is_empty() {
        bail!("experiment has no completed trials");
    }
    Ok(wanted
        .into_iter()
        .map(|sir| (sir, policy_map(n, data.trials.iter().filter(|t| t.sir == sir))))
        .collect())
}

pub fn policy_table(maps: &[(SirType, PolicyMap)]) -> Table {
    let mut table = Table::new(&POLICY_HEADER);
    for (sir, map) in maps {
        for c in &map.cells {
            if c.dx == 0 && c.dy == 0 {
                continue;
            }
            let mut row = vec![sir.slug().to_string(), c.dx.to_string(), c.dy.to_string(), c.visits().to_string()];
            row.extend(Action::ALL.iter().map(|a| c.counts[a.index()].to_string()));
            row.push(c.modal_action().map_or("", Action::as_str).to_string());
            row.push(opt_num(c.frequency()));
            table.push(row);
        }
    }
    table
}
