mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use gwsot_core::agents::{
    Agent, AgentDecision, AgentError, CaptureTag, ChatBackend, ChatMessage, DecisionContext, EndpointConfig,
    ReplayAgent, Role, ScriptedAgent, ScriptedPolicy,
};
use gwsot_core::harness::{
    load_experiment, read_manifest, record_path, run_experiment, run_experiment_with, run_question_set, run_trial,
    AgentSpec, CaptureTarget, ExperimentConfig, QuestionItem, TrialStatus, QUESTION_SYSTEM_PROMPT,
};
use gwsot_core::questions::question_corpus;
use gwsot_core::{GridState, SirType, TrialOutcome};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

struct FixedReply(&'static str);

impl Agent for FixedReply {
    fn decide(&self, _: &DecisionContext<'_>, _: &mut ChaCha8Rng) -> Result<AgentDecision, AgentError> {
        Ok(gwsot_core::agents::parse_action(self.0))
    }
}

/// Fails every trial whose goal sits in the leftmost column.
struct FlakyAgent;

impl Agent for FlakyAgent {
    fn decide(&self, ctx: &DecisionContext<'_>, rng: &mut ChaCha8Rng) -> Result<AgentDecision, AgentError> {
        if ctx.state.goal.x == 0 {
            return Err(AgentError::Transport { attempts: 3, message: "HTTP 500".into() });
        }
        ScriptedAgent(ScriptedPolicy::Optimal).decide(ctx, rng)
    }
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for sub in ["", "trials"] {
        for e in fs::read_dir(dir.join(sub)).unwrap() {
            let p = e.unwrap().path();
            if p.is_file() {
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn single_spec(seed: u64) -> gwsot_core::harness::TrialSpec {
    let mut c = ExperimentConfig::scripted(ScriptedPolicy::Optimal, 1, seed);
    c.sir_types = vec![SirType::JsonCoords];
    c.plan().remove(0)
}

#[test]
fn always_left_from_the_left_exhausts_budget() {
    let spec = (0..)
        .map(single_spec)
        .find(|spec| {
            let rec = run_trial(spec, &FixedReply("{\"action\": \"UP\"}")).unwrap();
            let s = rec.initial_state().unwrap();
            s.agent.x < s.goal.x
        })
        .unwrap();
    let rec = run_trial(&spec, &FixedReply("{\"action\":\"LEFT\"}")).unwrap();
    assert_eq!(rec.outcome, TrialOutcome::MaxStepsExceeded);
    assert_eq!(rec.steps.len(), 10);
    assert!(rec.steps.iter().all(|s| s.correct == Some(false)));
    rec.validate().unwrap();
}

#[test]
fn gibberish_never_moves() {
    for seed in 0..20 {
        let rec = run_trial(&single_spec(seed), &FixedReply("I am not sure.")).unwrap();
        assert_eq!(rec.steps.len(), 10);
        assert_eq!(rec.final_distance, rec.initial_distance);
        assert!(rec.steps.iter().all(|s| s.correct.is_none() && s.state_after == s.state_before));
        rec.validate().unwrap();
    }
}

#[test]
fn history_grows_with_each_step() {
    struct Recorder(Mutex<Vec<Vec<ChatMessage>>>);
    impl Agent for Recorder {
        fn decide(&self, ctx: &DecisionContext<'_>, _: &mut ChaCha8Rng) -> Result<AgentDecision, AgentError> {
            self.0.lock().unwrap().push(ctx.messages.to_vec());
            Ok(gwsot_core::agents::parse_action("nope"))
        }
    }
    let agent = Recorder(Mutex::new(Vec::new()));
    let spec = single_spec(4);
    let rec = run_trial(&spec, &agent).unwrap();
    let seen = agent.0.into_inner().unwrap();
    assert_eq!(seen.len(), 10);
    for (k, msgs) in seen.iter().enumerate() {
        assert_eq!(msgs.len(), 2 * k + 2);
        assert_eq!(msgs[0].content, spec.system_prompt);
        assert_eq!(msgs.last().unwrap().role, Role::User);
        assert_eq!(msgs.last().unwrap().content, rec.steps[k].state_text);
        if k > 0 {
            assert_eq!(msgs[2 * k].content, "nope");
        }
    }
}

#[test]
fn replaying_raw_replies_reproduces_records() {
    let mut config = ExperimentConfig::scripted(ScriptedPolicy::EpsilonOptimal(0.5), 20, 77);
    config.sir_types = vec![SirType::ChessNotation, SirType::RowDescription];
    let agent = ScriptedAgent(ScriptedPolicy::EpsilonOptimal(0.5));
    for spec in config.plan() {
        let original = run_trial(&spec, &agent).unwrap();
        let replayed = run_trial(&spec, &ReplayAgent::new(original.replies())).unwrap();
        assert_eq!(replayed, original);
    }
}

#[test]
fn six_encodings_times_hundred_trials() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::scripted(ScriptedPolicy::Optimal, 100, 1);
    config.workers = 4;
    let summary = run_experiment(&config, dir.path()).unwrap();
    assert_eq!(summary.completed, 600);
    let loaded = load_experiment(dir.path()).unwrap();
    assert_eq!(loaded.trials.len(), 600);
    for sir in SirType::ALL {
        assert_eq!(loaded.by_sir(sir).len(), 100);
    }
    assert_eq!(loaded.manifest.trials.len(), 600);
    assert_eq!(loaded.manifest.trials[0].trial_id, "json_coords-0000");
}

#[test]
fn reruns_are_byte_identical() {
    let mut config = ExperimentConfig::scripted(ScriptedPolicy::Random, 15, 9);
    config.workers = 3;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&config, a.path()).unwrap();
    config.workers = 1;
    run_experiment(&config, b.path()).unwrap();
    let (da, db) = (dir_bytes(a.path()), dir_bytes(b.path()));
    assert_eq!(da.len(), 91);
    // Manifests differ only in the worker count.
    for (k, v) in &da {
        if k != "manifest.json" {
            assert_eq!(v, &db[k], "{k}");
        }
    }
    let ma = read_manifest(a.path()).unwrap();
    let mb = read_manifest(b.path()).unwrap();
    assert_eq!(ma.trials, mb.trials);
}

#[test]
fn resume_skips_done_and_quarantines_corrupt() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig::scripted(ScriptedPolicy::Random, 5, 21);
    run_experiment(&config, dir.path()).unwrap();
    let before = dir_bytes(dir.path());

    fs::write(record_path(dir.path(), "word_grid-0002"), b"{\"trial_id\": ").unwrap();
    fs::remove_file(record_path(dir.path(), "chess_notation-0004")).unwrap();
    // A syntactically valid record with a broken invariant is corrupt too.
    let p = record_path(dir.path(), "json_coords-0001");
    let mut v: Value = serde_json::from_slice(&fs::read(&p).unwrap()).unwrap();
    v["final_distance"] = Value::from(99);
    fs::write(&p, serde_json::to_vec(&v).unwrap()).unwrap();

    let summary = run_experiment(&config, dir.path()).unwrap();
    assert_eq!(summary.skipped, 27);
    assert_eq!(summary.completed, 3);
    assert_eq!(summary.quarantined.len(), 2);
    assert!(summary.quarantined.iter().all(|p| p.starts_with(dir.path().join("quarantine"))));
    assert_eq!(dir_bytes(dir.path()), before);

    let again = run_experiment(&config, dir.path()).unwrap();
    assert_eq!((again.skipped, again.completed), (30, 0));
}

#[test]
fn resume_refuses_a_different_experiment() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&ExperimentConfig::scripted(ScriptedPolicy::Random, 2, 1), dir.path()).unwrap();
    let err = run_experiment(&ExperimentConfig::scripted(ScriptedPolicy::Random, 2, 2), dir.path()).unwrap_err();
    assert!(err.to_string().contains("refusing"), "{err}");
}

#[test]
fn unusable_trials_are_listed_without_records() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig::scripted(ScriptedPolicy::Optimal, 40, 5);
    let summary = run_experiment_with(&config, dir.path(), &FlakyAgent).unwrap();
    assert!(summary.unusable > 0);
    assert_eq!(summary.completed + summary.unusable, 240);
    let manifest = read_manifest(dir.path()).unwrap();
    assert_eq!(manifest.trials.len(), 240);
    for e in &manifest.trials {
        let exists = record_path(dir.path(), &e.trial_id).exists();
        match e.status {
            TrialStatus::Completed => assert!(exists && e.error.is_none()),
            TrialStatus::Unusable => assert!(!exists && e.error.as_deref().unwrap().contains("HTTP 500")),
        }
    }
    let loaded = load_experiment(dir.path()).unwrap();
    for sir in SirType::ALL {
        let unusable = manifest.trials.iter().filter(|e| e.sir == sir && e.status == TrialStatus::Unusable).count();
        assert_eq!(loaded.by_sir(sir).len(), 40 - unusable);
    }

    // A healthy rerun fills the gaps.
    let summary2 = run_experiment(&config, dir.path()).unwrap();
    assert_eq!(summary2.completed, summary.unusable);
    assert_eq!(load_experiment(dir.path()).unwrap().trials.len(), 240);
}

#[test]
fn endpoint_run_forwards_capture_and_mask() {
    let server = common::serve(vec![common::completion("{\"action\": \"UP\"}")]);
    let dir = tempfile::tempdir().unwrap();
    let mask_path = dir.path().join("mask.json");
    fs::write(&mask_path, r#"{"version": 1, "model_id": "stub-model", "entries": [{"layer": 2, "unit": 5}]}"#).unwrap();
    let mut endpoint = EndpointConfig::new(&server.base_url, "stub-model");
    endpoint.retry_backoff_ms = 1;
    let config = ExperimentConfig {
        grid_size: 5,
        sir_types: vec![SirType::WordGrid],
        agent: AgentSpec::Endpoint { endpoint, lenient: false },
        trials_per_condition: 2,
        seed: 3,
        capture: Some(CaptureTarget { dataset_id: "probe".into() }),
        ablation_mask: Some(mask_path),
        workers: 1,
        system_prompt: None,
    };
    let out = dir.path().join("run");
    let summary = run_experiment(&config, &out).unwrap();
    assert_eq!(summary.completed, 2);

    let seen = server.seen.lock().unwrap();
    assert_eq!(seen.first().unwrap().path, "/mask");
    assert_eq!(seen.last().unwrap().path, "/mask");
    let cleared: Value = serde_json::from_str(&seen.last().unwrap().body).unwrap();
    assert_eq!(cleared["entries"], serde_json::json!([]));
    assert_eq!(cleared["model_id"], "stub-model");

    let loaded = load_experiment(&out).unwrap();
    let chats: Vec<Value> = seen[1..seen.len() - 1]
        .iter()
        .map(|s| serde_json::from_str(&s.body).unwrap())
        .collect();
    let total_steps: usize = loaded.trials.iter().map(|t| t.steps.len()).sum();
    assert_eq!(chats.len(), total_steps);
    let mut k = 0;
    for t in &loaded.trials {
        for (i, step) in t.steps.iter().enumerate() {
            let c = &chats[k]["capture"];
            assert_eq!(c["dataset_id"], "probe/word_grid");
            assert_eq!(c["trial_id"], t.trial_id.as_str());
            assert_eq!(c["step_idx"], i);
            let msgs = chats[k]["messages"].as_array().unwrap();
            assert_eq!(msgs.last().unwrap()["content"], step.state_text.as_str());
            k += 1;
        }
    }
}

struct StubBackend;

impl ChatBackend for StubBackend {
    fn complete(&self, messages: &[ChatMessage], capture: Option<&CaptureTag>) -> Result<String, AgentError> {
        assert_eq!(messages.len(), 2);
        assert_eq!(messages[0].content, QUESTION_SYSTEM_PROMPT);
        let tag = capture.unwrap();
        assert_eq!(tag.step_idx, 0);
        if tag.trial_id.ends_with("013") {
            return Err(AgentError::Transport { attempts: 1, message: "timeout".into() });
        }
        Ok(format!("answer to {}", tag.trial_id))
    }
}

#[test]
fn question_set_records_every_item() {
    let items = question_corpus();
    let records = run_question_set(&items, &StubBackend, Some("questions"));
    assert_eq!(records.len(), 400);
    assert_eq!(records.iter().filter(|r| r.is_spatial).count(), 200);
    let failed: Vec<_> = records.iter().filter(|r| r.error.is_some()).collect();
    assert_eq!(failed.len(), 2);
    assert!(failed.iter().all(|r| r.response.is_empty()));
    assert_eq!(records[0].response, format!("answer to {}", items[0].question_id));
    assert!(run_question_set(&[] as &[QuestionItem], &StubBackend, None).is_empty());
}

#[test]
fn shipped_corpus_matches_generator() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/questions.jsonl");
    let expected = gwsot_core::harness::questions_to_jsonl(&question_corpus());
    if std::env::var_os("GWSOT_REGENERATE_CORPUS").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, &expected).unwrap();
    }
    let shipped = fs::read_to_string(&path).unwrap();
    assert_eq!(shipped, expected);
    assert_eq!(gwsot_core::harness::load_questions(&path).unwrap().len(), 400);
}

#[test]
fn terminal_state_is_never_recorded() {
    let config = ExperimentConfig::scripted(ScriptedPolicy::Optimal, 50, 8);
    let agent = ScriptedAgent(ScriptedPolicy::Optimal);
    for spec in config.plan() {
        let rec = run_trial(&spec, &agent).unwrap();
        assert!(rec.steps.iter().all(|s: &gwsot_core::harness::StepRecord| !s.state_before.at_goal()));
        let last: GridState = rec.steps.last().unwrap().state_after;
        assert!(last.at_goal());
    }
}
