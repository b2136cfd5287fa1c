//! `gwsot` command-line front end: runs experiments, then turns trial
//! records and captured activations into CSV/JSON (and optional SVG)
//! artifacts.

pub mod behavior;
pub mod output;
pub mod probing;
pub mod report;
pub mod svg;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use gwsot_core::agents::{ChatClient, EndpointConfig};
use gwsot_core::harness::{
    load_questions, questions_to_jsonl, run_experiment, run_question_set, AgentSpec, ExperimentConfig,
};
use gwsot_core::questions::question_corpus;
use gwsot_core::SirType;
use gwsot_probe::mask::export_ablation_mask;
use gwsot_probe::{AblationMask, ActivationDataset, LayerSelection, Pooling, UnitId};
use log::{info, warn};

use crate::output::{write_bytes, write_json, Table};
use crate::probing::FeatureArg;

#[derive(Debug, Parser)]
#[command(name = "gwsot", version, about = "Grid-world spatial orientation experiments and probing analyses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run (or resume) an experiment from a JSON config.
    Run(RunArgs),
    /// Ask the spatial/non-spatial question set, or emit the built-in corpus.
    Questions(QuestionsArgs),
    /// Metric CSV, GLMs and random-baseline t-tests over experiments.
    AnalyzeBehavior(BehaviorArgs),
    /// Policy map CSV for one experiment.
    PolicyMap(PolicyArgs),
    /// Per-layer grid decoders and the cross-encoding transfer matrix.
    ProbeGrid(ProbeGridArgs),
    /// Per-unit feature scans.
    ProbeUnits(ProbeUnitsArgs),
    /// Units shared across encodings, with the shuffle control.
    CommonUnits(CommonArgs),
    /// Correlate core units with the spatial/non-spatial question label.
    QuestionCorr(QuestionCorrArgs),
    /// Write an ablation mask file.
    MakeMask(MaskArgs),
    /// Summary JSON of every figure's data series.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Experiment directory; an existing one is resumed.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the endpoint base URL.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Restricts the encodings (repeatable).
    #[arg(long)]
    pub sir: Vec<SirType>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct QuestionsArgs {
    /// Output JSONL file.
    #[arg(long)]
    pub out: PathBuf,
    /// Write the built-in 400-item corpus to `--out` and exit.
    #[arg(long)]
    pub emit_corpus: bool,
    /// Endpoint config JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Questions JSONL; defaults to the built-in corpus.
    #[arg(long)]
    pub questions: Option<PathBuf>,
    /// Capture dataset id to tag requests with.
    #[arg(long)]
    pub capture: Option<String>,
    #[arg(long)]
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BehaviorArgs {
    /// Experiment directories (repeatable), one per model.
    #[arg(long = "exp", required = true)]
    pub experiments: Vec<PathBuf>,
    /// Model sizes in billions, in `--exp` order.
    #[arg(long = "size")]
    pub sizes: Vec<f64>,
    /// Experiment directory of RANDOM-policy trials; simulated if absent.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub baseline_trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct PolicyArgs {
    #[arg(long = "exp")]
    pub experiment: PathBuf,
    #[arg(long)]
    pub sir: Vec<SirType>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct ProbeGridArgs {
    /// Capture root holding `<sir>/mean_input/` datasets.
    #[arg(long)]
    pub datasets: PathBuf,
    #[arg(long)]
    pub sir: Vec<SirType>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.9)]
    pub train_fraction: f64,
    /// Label permutations per layer; 0 skips the test.
    #[arg(long, default_value_t = 100)]
    pub permutations: usize,
    /// Transfer matrix from the final layer only instead of the layer average.
    #[arg(long)]
    pub last_layer: bool,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct ProbeUnitsArgs {
    /// Capture root holding `<sir>/first_decision/` datasets.
    #[arg(long)]
    pub datasets: PathBuf,
    #[arg(long)]
    pub sir: Vec<SirType>,
    /// AGENT_X, AGENT_Y, BORDER, ACTION_CORRECT, CELL(x,y) or CELLS.
    #[arg(long)]
    pub feature: Vec<FeatureArg>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub datasets: PathBuf,
    #[arg(long)]
    pub sir: Vec<SirType>,
    #[arg(long)]
    pub feature: gwsot_probe::Feature,
    /// Minimum number of encodings a unit must be significant in; defaults
    /// to all of them.
    #[arg(long)]
    pub k_of_n: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub shuffles: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct QuestionCorrArgs {
    /// Core units: a mask file or a `layer,unit` CSV.
    #[arg(long)]
    pub core: PathBuf,
    /// MEAN_INPUT dataset of question prompts.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    /// `layer,unit` CSV; omitted for an empty mask.
    #[arg(long)]
    pub units: Option<PathBuf>,
    #[arg(long)]
    pub model_id: String,
    #[arg(long)]
    pub layers: usize,
    #[arg(long)]
    pub hidden: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long = "exp")]
    pub experiments: Vec<PathBuf>,
    #[arg(long = "size")]
    pub sizes: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub baseline_trials: usize,
    /// Capture root with both pooling modes per encoding.
    #[arg(long)]
    pub datasets: Option<PathBuf>,
    #[arg(long)]
    pub sir: Vec<SirType>,
    /// Question dataset plus `--core` adds the question correlation.
    #[arg(long)]
    pub question_dataset: Option<PathBuf>,
    #[arg(long)]
    pub core: Option<PathBuf>,
    #[arg(long, default_value_t = 0.9)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 1000)]
    pub shuffles: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output JSON file.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Questions(a) => cmd_questions(a),
        Command::AnalyzeBehavior(a) => cmd_behavior(a),
        Command::PolicyMap(a) => cmd_policy(a),
        Command::ProbeGrid(a) => cmd_probe_grid(a),
        Command::ProbeUnits(a) => cmd_probe_units(a),
        Command::CommonUnits(a) => cmd_common(a),
        Command::QuestionCorr(a) => cmd_question_corr(a),
        Command::MakeMask(a) => cmd_make_mask(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}

/// Applies command-line overrides to a loaded config.
pub fn apply_overrides(config: &mut ExperimentConfig, a: &RunArgs) -> Result<()> {
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if let Some(n) = a.trials {
        config.trials_per_condition = n;
    }
    if !a.sir.is_empty() {
        config.sir_types = a.sir.clone();
    }
    if let Some(w) = a.workers {
        config.workers = w;
    }
    if let Some(mask) = &a.mask {
        config.ablation_mask = Some(mask.clone());
    }
    if let Some(url) = &a.endpoint {
        match &mut config.agent {
            AgentSpec::Endpoint { endpoint, .. } => endpoint.base_url = url.clone(),
            AgentSpec::Scripted { .. } => bail!("--endpoint given but the config uses a scripted agent"),
        }
    }
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let mut config: ExperimentConfig = read_json(&a.config)?;
    apply_overrides(&mut config, &a)?;
    if let Some(path) = &config.ablation_mask {
        AblationMask::load(path)?;
    }
    let summary = run_experiment(&config, &a.out)?;
    println!(
        "{}: {} completed, {} unusable, {} already complete, {} quarantined",
        a.out.display(),
        summary.completed,
        summary.unusable,
        summary.skipped,
        summary.quarantined.len()
    );
    Ok(())
}

fn endpoint_config(a: &QuestionsArgs) -> Result<EndpointConfig> {
    let mut cfg = match &a.config {
        Some(path) => read_json::<EndpointConfig>(path)?,
        None => {
            let (Some(url), Some(model)) = (&a.endpoint, &a.model) else {
                bail!("questions needs --config or both --endpoint and --model");
            };
            EndpointConfig::new(url.clone(), model.clone())
        }
    };
    if let Some(url) = &a.endpoint {
        cfg.base_url = url.clone();
    }
    if let Some(model) = &a.model {
        cfg.model_id = model.clone();
    }
    Ok(cfg.with_env_key())
}

fn cmd_questions(a: QuestionsArgs) -> Result<()> {
    if a.emit_corpus {
        let corpus = question_corpus();
        write_bytes(&a.out, questions_to_jsonl(&corpus).as_bytes())?;
        println!("{} questions written to {}", corpus.len(), a.out.display());
        return Ok(());
    }
    let items = match &a.questions {
        Some(path) => load_questions(path)?,
        None => question_corpus(),
    };
    let client = Arc::new(ChatClient::new(endpoint_config(&a)?)?);
    let mask = match &a.mask {
        Some(path) => {
            let mask = AblationMask::load(path)?;
            client.post_mask(&serde_json::from_str(&mask.to_json())?)?;
            Some(mask)
        }
        None => None,
    };
    let records = run_question_set(&items, client.as_ref(), a.capture.as_deref());
    if let Some(mask) = mask {
        let clear = AblationMask::empty(mask.model_id);
        if let Err(e) = client.post_mask(&serde_json::from_str(&clear.to_json())?) {
            warn!("failed to clear ablation mask: {e}");
        }
    }
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    write_bytes(&a.out, questions_to_jsonl(&records).as_bytes())?;
    println!("{} answered, {failed} failed, written to {}", records.len() - failed, a.out.display());
    Ok(())
}

fn load_experiments(dirs: &[PathBuf], sizes: &[f64]) -> Result<Vec<behavior::Experiment>> {
    ensure!(
        sizes.is_empty() || sizes.len() == dirs.len(),
        "{} --size values for {} --exp directories",
        sizes.len(),
        dirs.len()
    );
    dirs.iter()
        .enumerate()
        .map(|(i, d)| behavior::load(d, sizes.get(i).copied()))
        .collect()
}

fn cmd_behavior(a: BehaviorArgs) -> Result<()> {
    let experiments = load_experiments(&a.experiments, &a.sizes)?;
    let baseline = match &a.baseline {
        Some(dir) => behavior::load(dir, None)?.data.trials,
        None => {
            let n = experiments[0].data.manifest.config.grid_size;
            behavior::random_baseline(n, a.baseline_trials, a.seed)?
        }
    };
    let metrics = behavior::metrics_table(&experiments, Some(&baseline))?;
    let glm = behavior::glm_report(&experiments);
    let welch = behavior::baseline_tests(&experiments, &baseline);
    let mut svgs = Vec::new();
    if a.svg {
        for metric in ["success_rate", "efficiency", "final_distance_ratio"] {
            svgs.push((format!("{metric}.svg"), metric_chart(&metrics, metric)));
        }
    }
    fs::create_dir_all(&a.out)?;
    metrics.write(&a.out.join("metrics.csv"))?;
    write_json(&a.out.join("glm.json"), &glm)?;
    write_json(&a.out.join("baseline_tests.json"), &welch)?;
    for (name, body) in svgs {
        write_bytes(&a.out.join(name), body.as_bytes())?;
    }
    println!("behaviour analysis written to {}", a.out.display());
    Ok(())
}

/// One line per encoding over model size (or experiment order when sizes
/// are unknown).
fn metric_chart(metrics: &Table, metric: &str) -> String {
    let mut by_sir: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    let mut models: Vec<String> = Vec::new();
    for row in &metrics.rows {
        if row[4] != metric || row[3].is_empty() || row[0] == "random" {
            continue;
        }
        if !models.contains(&row[0]) {
            models.push(row[0].clone());
        }
        let x = row[1].parse().unwrap_or(models.iter().position(|m| *m == row[0]).unwrap_or(0) as f64);
        let y: f64 = row[5].parse().unwrap_or(f64::NAN);
        match by_sir.iter_mut().find(|(s, _)| *s == row[3]) {
            Some((_, pts)) => pts.push((x, y)),
            None => by_sir.push((row[3].clone(), vec![(x, y)])),
        }
    }
    let series: Vec<svg::Series> = by_sir
        .iter()
        .map(|(s, pts)| {
            let mut points = pts.clone();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            svg::Series { label: s, points }
        })
        .collect();
    svg::line_chart(metric, "model size", metric, &series)
}

fn cmd_policy(a: PolicyArgs) -> Result<()> {
    let exp = behavior::load(&a.experiment, None)?;
    let maps = behavior::policy_maps(&exp.data, &a.sir)?;
    let table = behavior::policy_table(&maps);
    fs::create_dir_all(&a.out)?;
    table.write(&a.out.join("policy_map.csv"))?;
    if a.svg {
        for (sir, map) in &maps {
            let r = map.radius();
            let labels: Vec<String> = (-r..=r).map(|d| d.to_string()).collect();
            let values: Vec<Vec<f64>> = (-r..=r)
                .map(|dy| {
                    (-r..=r)
                        .map(|dx| map.cell(dx, dy).and_then(|c| c.frequency()).unwrap_or(f64::NAN))
                        .collect()
                })
                .collect();
            let title = format!("{} modal-action frequency (rows dy, columns dx)", sir.slug());
            write_bytes(
                &a.out.join(format!("policy_{}.svg", sir.slug())),
                svg::heatmap(&title, &labels, &labels, &values).as_bytes(),
            )?;
        }
    }
    println!("policy maps written to {}", a.out.display());
    Ok(())
}

fn cmd_probe_grid(a: ProbeGridArgs) -> Result<()> {
    let family = probing::load_family(&a.datasets, Pooling::MeanInput, &a.sir)?;
    let selection = if a.last_layer { LayerSelection::LastOnly } else { LayerSelection::AllAveraged };
    let result = probing::grid_probe(&family, a.train_fraction, a.seed, a.permutations, selection)?;
    let matrix_name = if a.last_layer { "cross_sir_last_layer" } else { "cross_sir_all_layers" };
    let matrix = probing::matrix_table(&result.sirs, &result.cross);
    fs::create_dir_all(&a.out)?;
    probing::layer_table(&result.scores).write(&a.out.join("layer_r2.csv"))?;
    matrix.write(&a.out.join(format!("{matrix_name}.csv")))?;
    if a.svg {
        let labels: Vec<String> = result.sirs.iter().map(|s| s.slug().to_string()).collect();
        let heat = svg::heatmap("cross-encoding test R2 (rows: trained on)", &labels, &labels, &result.cross);
        write_bytes(&a.out.join(format!("{matrix_name}.svg")), heat.as_bytes())?;
        let series: Vec<(String, Vec<(f64, f64)>)> = result
            .sirs
            .iter()
            .map(|sir| {
                let pts = result
                    .scores
                    .iter()
                    .filter(|s| s.sir == *sir)
                    .map(|s| (s.score.layer as f64, s.score.r2_test))
                    .collect();
                (sir.slug().to_string(), pts)
            })
            .collect();
        let series: Vec<svg::Series> = series.iter().map(|(l, p)| svg::Series { label: l, points: p.clone() }).collect();
        write_bytes(
            &a.out.join("layer_r2.svg"),
            svg::line_chart("grid decoder test R2", "layer", "R2", &series).as_bytes(),
        )?;
    }
    println!("grid probes written to {}", a.out.display());
    Ok(())
}

fn cmd_probe_units(a: ProbeUnitsArgs) -> Result<()> {
    let family = probing::load_family(&a.datasets, Pooling::FirstDecision, &a.sir)?;
    let features = if a.feature.is_empty() { probing::DEFAULT_FEATURES.to_vec() } else { a.feature.clone() };
    let mut counts = Table::new(&["sir", "feature", "layer", "significant"]);
    let mut files = Vec::new();
    let mut cells: Vec<(SirType, Vec<Vec<f64>>)> = Vec::new();
    for (sir, ds) in &family {
        for &f in &features {
            let scans = match probing::scans_for(ds, f) {
                Ok(s) => s,
                Err(e) => {
                    warn!("{}: skipping {}: {e}", sir.slug(), probing::feature_file_name(f));
                    continue;
                }
            };
            probing::count_rows(&mut counts, *sir, &scans);
            if f == FeatureArg::Cells {
                let n = ds.manifest.grid_size;
                let mut grid = vec![vec![0.0; n]; n];
                for s in &scans {
                    if let gwsot_probe::Feature::Cell { x, y } = s.feature {
                        grid[y][x] = s.significant_set().len() as f64;
                    }
                }
                cells.push((*sir, grid));
            }
            files.push((
                format!("units_{}_{}.csv", sir.slug(), probing::feature_file_name(f)),
                probing::unit_table(*sir, &scans),
            ));
        }
    }
    fs::create_dir_all(&a.out)?;
    for (name, t) in &files {
        t.write(&a.out.join(name))?;
    }
    counts.write(&a.out.join("counts.csv"))?;
    if a.svg {
        for (sir, grid) in &cells {
            let labels: Vec<String> = (0..grid.len()).map(|i| i.to_string()).collect();
            let heat = svg::heatmap(&format!("{} significant units per agent cell", sir.slug()), &labels, &labels, grid);
            write_bytes(&a.out.join(format!("cells_{}.svg", sir.slug())), heat.as_bytes())?;
        }
    }
    println!("{} unit tables written to {}", files.len(), a.out.display());
    Ok(())
}

fn cmd_common(a: CommonArgs) -> Result<()> {
    let family = probing::load_family(&a.datasets, Pooling::FirstDecision, &a.sir)?;
    let k = a.k_of_n.unwrap_or(family.len());
    let result = probing::common(&family, a.feature, k, a.shuffles, a.seed)?;
    let counts = probing::common_counts_table(&result.control);
    fs::create_dir_all(&a.out)?;
    probing::units_table(&result.units).write(&a.out.join("common_units.csv"))?;
    counts.write(&a.out.join("common_counts.csv"))?;
    write_json(&a.out.join("shuffle_control.json"), &result.control)?;
    if a.svg {
        let real: Vec<(f64, f64)> = result.control.real_counts.iter().enumerate().map(|(l, &c)| (l as f64, c as f64)).collect();
        let shuffled: Vec<(f64, f64)> = result.control.shuffled_mean.iter().enumerate().map(|(l, &c)| (l as f64, c)).collect();
        let chart = svg::line_chart(
            &format!("{} units common to {k} encodings", a.feature),
            "layer",
            "units",
            &[svg::Series { label: "real", points: real }, svg::Series { label: "shuffled", points: shuffled }],
        );
        write_bytes(&a.out.join("common_counts.svg"), chart.as_bytes())?;
    }
    println!(
        "{} common units (k = {k} of {}); shuffle-control p = {}",
        result.units.len(),
        family.len(),
        result.control.test.as_ref().map_or("undefined".into(), |t| t.p_value.to_string())
    );
    Ok(())
}

/// Reads core units from a mask file (`.json`) or a `layer,unit` CSV.
pub fn read_core(path: &Path) -> Result<BTreeSet<UnitId>> {
    if path.extension().is_some_and(|e| e == "json") {
        Ok(AblationMask::load(path)?.entries)
    } else {
        Ok(output::read_units(path)?.into_iter().collect())
    }
}

fn cmd_question_corr(a: QuestionCorrArgs) -> Result<()> {
    let core = read_core(&a.core)?;
    let ds = ActivationDataset::load(&a.dataset)?;
    let q = probing::question_corr(&core, &ds, a.seed)?;
    fs::create_dir_all(&a.out)?;
    probing::question_tables(&q).write(&a.out.join("question_coefficients.csv"))?;
    write_json(&a.out.join("question_corr.json"), &q)?;
    for note in &q.notes {
        warn!("{note}");
    }
    println!(
        "core p = {}, control p = {}",
        q.core_test.as_ref().map_or("undefined".into(), |t| t.p_value.to_string()),
        q.control_test.as_ref().map_or("undefined".into(), |t| t.p_value.to_string())
    );
    Ok(())
}

fn cmd_make_mask(a: MaskArgs) -> Result<()> {
    let units = match &a.units {
        Some(p) => read_core(p)?,
        None => BTreeSet::new(),
    };
    let mask = export_ablation_mask(units, &a.model_id, a.layers, a.hidden, &a.out)?;
    println!("{} entries written to {}", mask.len(), a.out.display());
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    ensure!(
        !a.experiments.is_empty() || a.datasets.is_some() || a.question_dataset.is_some(),
        "report needs --exp, --datasets or --question-dataset"
    );
    let behavior = if a.experiments.is_empty() {
        None
    } else {
        let experiments = load_experiments(&a.experiments, &a.sizes)?;
        let n = experiments[0].data.manifest.config.grid_size;
        let baseline = behavior::random_baseline(n, a.baseline_trials, a.seed)?;
        Some(report::behavior_section(&experiments, &baseline)?)
    };
    let probing = match &a.datasets {
        Some(root) => {
            let mean = probing::load_family(root, Pooling::MeanInput, &a.sir)?;
            let first = probing::load_family(root, Pooling::FirstDecision, &a.sir)?;
            Some(report::probing_section(&mean, &first, a.train_fraction, a.shuffles, a.seed)?)
        }
        None => None,
    };
    let questions = match (&a.question_dataset, &a.core) {
        (Some(ds), Some(core)) => Some(probing::question_corr(&read_core(core)?, &ActivationDataset::load(ds)?, a.seed)?),
        (None, None) => None,
        _ => bail!("--question-dataset and --core go together"),
    };
    write_json(&a.out, &report::Report { behavior, probing, questions })?;
    info!("report written to {}", a.out.display());
    println!("report written to {}", a.out.display());
    Ok(())
}

