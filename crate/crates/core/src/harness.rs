//! Trial and experiment orchestration, persistence and the question task.
//!
//! An experiment directory looks like:
//!
//! ```text
//! <out>/manifest.json            config echo + trial index
//! <out>/trials/<trial_id>.json   one TrialRecord per completed trial
//! <out>/quarantine/              corrupt record files moved aside on resume
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::agents::{
    build_conversation, Agent, AgentError, CaptureTag, ChatBackend, ChatClient, ChatMessage, Choice,
    DecisionContext, EndpointConfig, LlmAgent, Role, ScriptedAgent, ScriptedPolicy,
};
use crate::grid::{apply_action, is_correct, max_steps, new_trial, GridError, GridState, TrialOutcome};
use crate::sir::{encode, SirError, SirType};

const SYSTEM_PROMPT_5X5: &str = include_str!("../assets/system_prompt.txt");
pub const QUESTION_SYSTEM_PROMPT: &str = include_str!("../assets/question_system_prompt.txt");

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Sir(#[from] SirError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("invalid experiment config: {0}")]
    Config(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Navigation system prompt for an `n × n` grid.
pub fn system_prompt(n: usize) -> String {
    SYSTEM_PROMPT_5X5.replace("a 5x5 grid world", &format!("a {n}x{n} grid world"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub state_before: GridState,
    pub state_text: String,
    pub raw_response: String,
    pub action: Choice,
    pub correct: Option<bool>,
    pub state_after: GridState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: String,
    pub sir: SirType,
    pub seed: u64,
    pub grid_size: usize,
    pub steps: Vec<StepRecord>,
    pub outcome: TrialOutcome,
    pub initial_distance: usize,
    pub final_distance: usize,
}

impl TrialRecord {
    pub fn initial_state(&self) -> Option<GridState> {
        self.steps.first().map(|s| s.state_before)
    }

    /// Raw replies in step order, enough to replay the trial.
    pub fn replies(&self) -> Vec<String> {
        self.steps.iter().map(|s| s.raw_response.clone()).collect()
    }

    pub fn steps_taken(&self) -> usize {
        self.steps.len()
    }

    /// Checks every structural invariant of a persisted record.
    pub fn validate(&self) -> Result<(), String> {
        let budget = max_steps(self.grid_size);
        if self.steps.is_empty() {
            return Err("trial has no steps".into());
        }
        if self.steps.len() > budget {
            return Err(format!("{} steps exceed the budget of {budget}", self.steps.len()));
        }
        let mut expected_before = self.steps[0].state_before;
        for (i, step) in self.steps.iter().enumerate() {
            if step.state_before != expected_before {
                return Err(format!("step {i} does not continue from the previous state"));
            }
            if step.state_before.size != self.grid_size {
                return Err(format!("step {i} has grid size {}", step.state_before.size));
            }
            if step.state_before.at_goal() {
                return Err(format!("step {i} starts on the goal"));
            }
            let (after, correct) = match step.action.action() {
                Some(a) => (apply_action(step.state_before, a).0, Some(is_correct(step.state_before, a).map_err(|e| e.to_string())?)),
                None => (step.state_before, None),
            };
            if step.state_after != after {
                return Err(format!("step {i} state_after disagrees with its action"));
            }
            if step.correct != correct {
                return Err(format!("step {i} correctness flag is wrong"));
            }
            match encode(&step.state_before, self.sir) {
                Ok(text) if text == step.state_text => {}
                _ => return Err(format!("step {i} state_text is not the {} encoding", self.sir)),
            }
            expected_before = step.state_after;
        }
        let last = self.steps.last().expect("non-empty").state_after;
        let success = last.at_goal();
        if success != (self.outcome == TrialOutcome::Success) {
            return Err("outcome disagrees with the final state".into());
        }
        if !success && self.steps.len() != budget {
            return Err("failed trial stopped before the step budget".into());
        }
        if self.initial_distance != self.steps[0].state_before.distance() {
            return Err("initial_distance is wrong".into());
        }
        if self.final_distance != last.distance() {
            return Err("final_distance is wrong".into());
        }
        Ok(())
    }
}

/// Everything needed to run one trial.
#[derive(Debug, Clone)]
pub struct TrialSpec {
    pub grid_size: usize,
    pub sir: SirType,
    pub trial_id: String,
    pub seed: u64,
    pub system_prompt: String,
    /// Activation dataset to tag requests with, if any.
    pub capture_dataset: Option<String>,
}

/// Runs one trial. The trial RNG first places agent and goal, then feeds
/// any randomness the agent needs.
pub fn run_trial(spec: &TrialSpec, agent: &dyn Agent) -> Result<TrialRecord, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let start = new_trial(spec.grid_size, &mut rng)?;
    let mut state = start;
    let mut history: Vec<(String, String)> = Vec::new();
    let mut steps = Vec::new();
    for step_idx in 0..max_steps(spec.grid_size) {
        if state.at_goal() {
            break;
        }
        let text = encode(&state, spec.sir)?;
        let messages = build_conversation(&spec.system_prompt, &history, &text);
        let tag = spec.capture_dataset.as_ref().map(|d| CaptureTag {
            dataset_id: d.clone(),
            trial_id: spec.trial_id.clone(),
            step_idx,
        });
        let ctx = DecisionContext {
            state: &state,
            messages: &messages,
            capture: tag.as_ref(),
        };
        let decision = agent.decide(&ctx, &mut rng)?;
        let (after, correct) = match decision.action.action() {
            Some(a) => (apply_action(state, a).0, Some(is_correct(state, a)?)),
            None => (state, None),
        };
        history.push((text.clone(), decision.raw_response.clone()));
        steps.push(StepRecord {
            state_before: state,
            state_text: text,
            raw_response: decision.raw_response,
            action: decision.action,
            correct,
            state_after: after,
        });
        state = after;
    }
    Ok(TrialRecord {
        trial_id: spec.trial_id.clone(),
        sir: spec.sir,
        seed: spec.seed,
        grid_size: spec.grid_size,
        steps,
        outcome: if state.at_goal() {
            TrialOutcome::Success
        } else {
            TrialOutcome::MaxStepsExceeded
        },
        initial_distance: start.distance(),
        final_distance: state.distance(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentSpec {
    Scripted {
        policy: ScriptedPolicy,
    },
    Endpoint {
        endpoint: EndpointConfig,
        #[serde(default)]
        lenient: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureTarget {
    pub dataset_id: String,
}

fn default_grid_size() -> usize {
    5
}

fn default_sirs() -> Vec<SirType> {
    SirType::ALL.to_vec()
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    #[serde(default = "default_sirs")]
    pub sir_types: Vec<SirType>,
    pub agent: AgentSpec,
    pub trials_per_condition: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capture: Option<CaptureTarget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ablation_mask: Option<PathBuf>,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Overrides the built-in navigation prompt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_prompt: Option<String>,
}

impl ExperimentConfig {
    pub fn scripted(policy: ScriptedPolicy, trials_per_condition: usize, seed: u64) -> Self {
        Self {
            grid_size: 5,
            sir_types: default_sirs(),
            agent: AgentSpec::Scripted { policy },
            trials_per_condition,
            seed,
            capture: None,
            ablation_mask: None,
            workers: 1,
            system_prompt: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.grid_size < 3 {
            return bad("grid_size must be at least 3");
        }
        if self.trials_per_condition == 0 {
            return bad("trials_per_condition must be at least 1");
        }
        if self.sir_types.is_empty() {
            return bad("sir_types is empty");
        }
        let mut seen = self.sir_types.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.sir_types.len() {
            return bad("sir_types contains duplicates");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        match &self.agent {
            AgentSpec::Scripted {
                policy: ScriptedPolicy::EpsilonOptimal(e),
            } if !(0.0..=1.0).contains(e) => bad("epsilon must lie in [0, 1]"),
            AgentSpec::Scripted { .. } if self.ablation_mask.is_some() || self.capture.is_some() => {
                bad("capture and ablation_mask need an endpoint agent")
            }
            AgentSpec::Endpoint { endpoint, .. } => endpoint.validate().map_err(HarnessError::from),
            _ => Ok(()),
        }
    }

    pub fn prompt(&self) -> String {
        self.system_prompt.clone().unwrap_or_else(|| system_prompt(self.grid_size))
    }

    /// Every planned trial in deterministic order (SIR-major).
    pub fn plan(&self) -> Vec<TrialSpec> {
        let prompt = self.prompt();
        let mut out = Vec::with_capacity(self.sir_types.len() * self.trials_per_condition);
        for &sir in &self.sir_types {
            for i in 0..self.trials_per_condition {
                out.push(TrialSpec {
                    grid_size: self.grid_size,
                    sir,
                    trial_id: trial_id(sir, i),
                    seed: trial_seed(self.seed, sir, i),
                    system_prompt: prompt.clone(),
                    capture_dataset: self
                        .capture
                        .as_ref()
                        .map(|c| format!("{}/{}", c.dataset_id, sir.slug())),
                });
            }
        }
        out
    }

    fn resume_key(&self) -> Self {
        Self {
            workers: 1,
            ..self.clone()
        }
    }
}

pub fn trial_id(sir: SirType, index: usize) -> String {
    format!("{}-{index:04}", sir.slug())
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed derived from the master seed, the SIR and the trial index.
pub fn trial_seed(master: u64, sir: SirType, index: usize) -> u64 {
    let lane = splitmix64(master ^ splitmix64(sir.index() as u64 + 1));
    splitmix64(lane.wrapping_add(index as u64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TrialStatus {
    Completed,
    Unusable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialEntry {
    pub trial_id: String,
    pub sir: SirType,
    pub seed: u64,
    pub status: TrialStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub completed: usize,
    pub unusable: usize,
    /// Trials found complete on disk and not rerun.
    pub skipped: usize,
    pub quarantined: Vec<PathBuf>,
}

pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join("manifest.json")
}

pub fn record_path(dir: &Path, trial_id: &str) -> PathBuf {
    dir.join("trials").join(format!("{trial_id}.json"))
}

/// Writes through a temporary sibling and renames into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(parent).map_err(io_err(parent))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = parent.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    drop(f);
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, HarnessError> {
    let path = manifest_path(dir);
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    serde_json::from_slice(&bytes).map_err(|e| HarnessError::Corrupt {
        path,
        message: e.to_string(),
    })
}

pub fn read_record(path: &Path) -> Result<TrialRecord, HarnessError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let record: TrialRecord = serde_json::from_slice(&bytes).map_err(|e| HarnessError::Corrupt {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    record.validate().map_err(|message| HarnessError::Corrupt {
        path: path.to_path_buf(),
        message,
    })?;
    Ok(record)
}

fn quarantine(dir: &Path, path: &Path) -> Result<PathBuf, HarnessError> {
    let qdir = dir.join("quarantine");
    fs::create_dir_all(&qdir).map_err(io_err(&qdir))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("record");
    let mut target = qdir.join(name);
    let mut n = 1;
    while target.exists() {
        target = qdir.join(format!("{name}.{n}"));
        n += 1;
    }
    fs::rename(path, &target).map_err(io_err(path))?;
    Ok(target)
}

/// Builds the agent described by the config.
pub fn build_agent(config: &ExperimentConfig) -> Result<(Box<dyn Agent>, Option<Arc<ChatClient>>), HarnessError> {
    match &config.agent {
        AgentSpec::Scripted { policy } => Ok((Box::new(ScriptedAgent(*policy)), None)),
        AgentSpec::Endpoint { endpoint, lenient } => {
            let client = Arc::new(ChatClient::new(endpoint.clone().with_env_key())?);
            let agent = LlmAgent::new(client.clone()).lenient(*lenient);
            Ok((Box::new(agent), Some(client)))
        }
    }
}

/// Runs (or resumes) the experiment described by `config` into `dir`.
pub fn run_experiment(config: &ExperimentConfig, dir: &Path) -> Result<RunSummary, HarnessError> {
    config.validate()?;
    let (agent, client) = build_agent(config)?;
    let mask = match (&config.ablation_mask, &client) {
        (Some(path), Some(client)) => {
            let bytes = fs::read(path).map_err(io_err(path))?;
            let mask: Value = serde_json::from_slice(&bytes).map_err(|e| HarnessError::Corrupt {
                path: path.clone(),
                message: e.to_string(),
            })?;
            client.post_mask(&mask)?;
            info!("ablation mask {} applied", path.display());
            Some(mask)
        }
        _ => None,
    };
    let result = run_experiment_with(config, dir, agent.as_ref());
    if let (Some(mask), Some(client)) = (mask, &client) {
        let clear = json!({"version": 1, "model_id": mask["model_id"], "entries": []});
        if let Err(e) = client.post_mask(&clear) {
            warn!("failed to clear ablation mask: {e}");
        }
    }
    result
}

/// As [`run_experiment`] with a caller-supplied agent.
pub fn run_experiment_with(config: &ExperimentConfig, dir: &Path, agent: &dyn Agent) -> Result<RunSummary, HarnessError> {
    config.validate()?;
    fs::create_dir_all(dir.join("trials")).map_err(io_err(dir))?;
    let plan = config.plan();

    let mut entries: BTreeMap<String, TrialEntry> = BTreeMap::new();
    if manifest_path(dir).exists() {
        let old = read_manifest(dir)?;
        if old.config.resume_key() != config.resume_key() {
            return Err(HarnessError::Config(format!(
                "{} holds a different experiment; refusing to resume",
                dir.display()
            )));
        }
        for e in old.trials {
            entries.insert(e.trial_id.clone(), e);
        }
    }

    let mut summary = RunSummary::default();
    let mut todo = Vec::new();
    for spec in &plan {
        let path = record_path(dir, &spec.trial_id);
        if path.exists() {
            match read_record(&path) {
                Ok(r) if r.seed == spec.seed && r.sir == spec.sir => {
                    summary.skipped += 1;
                    entries.insert(spec.trial_id.clone(), entry(spec, TrialStatus::Completed, None));
                    continue;
                }
                Ok(_) => warn!("{}: seed or SIR mismatch, quarantining", path.display()),
                Err(e) => warn!("{e}; quarantining"),
            }
            summary.quarantined.push(quarantine(dir, &path)?);
        }
        todo.push(spec);
    }

    let state = Mutex::new((entries, summary));
    let write_manifest = |entries: &BTreeMap<String, TrialEntry>| {
        let ordered: Vec<TrialEntry> = plan
            .iter()
            .filter_map(|s| entries.get(&s.trial_id).cloned())
            .collect();
        write_json(
            &manifest_path(dir),
            &Manifest {
                config: config.clone(),
                trials: ordered,
            },
        )
    };
    write_manifest(&state.lock().expect("lock").0)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    pool.install(|| {
        todo.par_iter().try_for_each(|spec| -> Result<(), HarnessError> {
            let outcome = run_trial(spec, agent);
            let e = match outcome {
                Ok(record) => {
                    write_json(&record_path(dir, &spec.trial_id), &record)?;
                    entry(spec, TrialStatus::Completed, None)
                }
                Err(HarnessError::Agent(err)) => {
                    warn!("{} unusable: {err}", spec.trial_id);
                    entry(spec, TrialStatus::Unusable, Some(err.to_string()))
                }
                Err(other) => return Err(other),
            };
            let mut guard = state.lock().expect("lock");
            match e.status {
                TrialStatus::Completed => guard.1.completed += 1,
                TrialStatus::Unusable => guard.1.unusable += 1,
            }
            guard.0.insert(spec.trial_id.clone(), e);
            write_manifest(&guard.0)
        })
    })?;
    let (_, summary) = state.into_inner().expect("lock");
    info!(
        "{}: {} completed, {} unusable, {} skipped",
        dir.display(),
        summary.completed,
        summary.unusable,
        summary.skipped
    );
    Ok(summary)
}

fn entry(spec: &TrialSpec, status: TrialStatus, error: Option<String>) -> TrialEntry {
    TrialEntry {
        trial_id: spec.trial_id.clone(),
        sir: spec.sir,
        seed: spec.seed,
        status,
        error,
    }
}

#[derive(Debug, Clone)]
pub struct LoadedExperiment {
    pub manifest: Manifest,
    /// Completed trials in manifest order.
    pub trials: Vec<TrialRecord>,
}

impl LoadedExperiment {
    pub fn by_sir(&self, sir: SirType) -> Vec<&TrialRecord> {
        self.trials.iter().filter(|t| t.sir == sir).collect()
    }
}

/// Loads every completed record listed in the manifest. A missing or
/// invalid record is an error.
pub fn load_experiment(dir: &Path) -> Result<LoadedExperiment, HarnessError> {
    let manifest = read_manifest(dir)?;
    let trials = manifest
        .trials
        .iter()
        .filter(|e| e.status == TrialStatus::Completed)
        .map(|e| read_record(&record_path(dir, &e.trial_id)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LoadedExperiment { manifest, trials })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionItem {
    pub question_id: String,
    pub is_spatial: bool,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub question_id: String,
    pub is_spatial: bool,
    pub prompt: String,
    pub response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Reads a JSON-lines questions file; blank lines are ignored.
pub fn load_questions(path: &Path) -> Result<Vec<QuestionItem>, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_questions(&text).map_err(|message| HarnessError::Corrupt {
        path: path.to_path_buf(),
        message,
    })
}

pub fn parse_questions(text: &str) -> Result<Vec<QuestionItem>, String> {
    let mut out: Vec<QuestionItem> = Vec::new();
    let mut ids = std::collections::HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item: QuestionItem =
            serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?;
        if !ids.insert(item.question_id.clone()) {
            return Err(format!("line {}: duplicate question_id {:?}", i + 1, item.question_id));
        }
        out.push(item);
    }
    Ok(out)
}

pub fn questions_to_jsonl<T: Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|q| serde_json::to_string(q).expect("serializable") + "\n")
        .collect()
}

/// Asks every question with the question-task system prompt. Per-question
/// failures are recorded and the run continues.
pub fn run_question_set(
    items: &[QuestionItem],
    backend: &dyn ChatBackend,
    capture_dataset: Option<&str>,
) -> Vec<QuestionRecord> {
    items
        .iter()
        .map(|q| {
            let messages = [
                ChatMessage::new(Role::System, QUESTION_SYSTEM_PROMPT),
                ChatMessage::new(Role::User, q.prompt.clone()),
            ];
            let tag = capture_dataset.map(|d| CaptureTag {
                dataset_id: d.to_string(),
                trial_id: q.question_id.clone(),
                step_idx: 0,
            });
            let (response, error) = match backend.complete(&messages, tag.as_ref()) {
                Ok(r) => (r, None),
                Err(e) => {
                    warn!("question {}: {e}", q.question_id);
                    (String::new(), Some(e.to_string()))
                }
            };
            QuestionRecord {
                question_id: q.question_id.clone(),
                is_spatial: q.is_spatial,
                prompt: q.prompt.clone(),
                response,
                error,
            }
        })
        .collect()
}
