//! Decision makers: a chat-completion client, scripted baselines and a
//! transcript replayer.

use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use log::{debug, warn};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};
use thiserror::Error;

use crate::grid::{is_correct, Action, GridState};

pub const API_KEY_ENV: &str = "GWSOT_API_KEY";

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("request failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed endpoint response: {0}")]
    Protocol(String),
    #[error("invalid endpoint configuration: {0}")]
    Config(String),
    #[error("replay exhausted: {0}")]
    Replay(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
        }
    }
}

/// A parsed move, or `INVALID` when the reply did not follow the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Choice {
    Move(Action),
    Invalid,
}

impl Choice {
    pub fn action(self) -> Option<Action> {
        match self {
            Choice::Move(a) => Some(a),
            Choice::Invalid => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Choice::Move(a) => a.as_str(),
            Choice::Invalid => "INVALID",
        }
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Choice {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Choice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "INVALID" {
            return Ok(Choice::Invalid);
        }
        Action::from_keyword(&s)
            .map(Choice::Move)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown action {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentDecision {
    pub action: Choice,
    pub raw_response: String,
}

/// `[system] + [user state, assistant reply]* + [user current]`.
pub fn build_conversation(
    system_prompt: &str,
    history: &[(String, String)],
    current_state_text: &str,
) -> Vec<ChatMessage> {
    let mut out = Vec::with_capacity(2 * history.len() + 2);
    out.push(ChatMessage::new(Role::System, system_prompt));
    for (state, reply) in history {
        out.push(ChatMessage::new(Role::User, state.clone()));
        out.push(ChatMessage::new(Role::Assistant, reply.clone()));
    }
    out.push(ChatMessage::new(Role::User, current_state_text));
    out
}

/// Strict action grammar: the whole reply (after trimming, and optionally
/// inside one fenced code block) must be a JSON object whose only key is
/// `"action"` with an upper-case move as its value.
pub fn parse_action(raw: &str) -> AgentDecision {
    parse_action_with(raw, false)
}

/// As [`parse_action`]; `lenient` additionally accepts the first embedded
/// `{...}` object satisfying the grammar when the reply carries extra text.
pub fn parse_action_with(raw: &str, lenient: bool) -> AgentDecision {
    let mut action = strict_action(raw);
    if action.is_none() && lenient {
        action = embedded_action(raw);
    }
    AgentDecision {
        action: action.map_or(Choice::Invalid, Choice::Move),
        raw_response: raw.to_string(),
    }
}

fn strict_action(raw: &str) -> Option<Action> {
    let body = raw.trim();
    let body = strip_fence(body).unwrap_or(body);
    object_action(body)
}

fn strip_fence(s: &str) -> Option<&str> {
    let inner = s.strip_prefix("```")?.strip_suffix("```")?;
    let newline = inner.find('\n')?;
    let tag = inner[..newline].trim();
    if !(tag.is_empty() || tag.eq_ignore_ascii_case("json")) {
        return None;
    }
    Some(inner[newline + 1..].trim())
}

fn object_action(s: &str) -> Option<Action> {
    let value: Value = serde_json::from_str(s).ok()?;
    let obj = value.as_object()?;
    if obj.len() != 1 {
        return None;
    }
    Action::from_keyword(obj.get("action")?.as_str()?)
}

fn embedded_action(raw: &str) -> Option<Action> {
    raw.match_indices('{').find_map(|(start, _)| {
        raw[start..]
            .match_indices('}')
            .find_map(|(end, _)| object_action(&raw[start..start + end + 1]))
    })
}

/// Canonical reply text for a move, as emitted by scripted policies.
pub fn canonical_reply(action: Action) -> String {
    format!("{{\"action\": \"{action}\"}}")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScriptedPolicy {
    Random,
    Optimal,
    EpsilonOptimal(f64),
}

/// The first correct move in `UP, DOWN, LEFT, RIGHT` order.
pub fn optimal_action(state: &GridState) -> Action {
    Action::ALL
        .into_iter()
        .find(|&a| is_correct(*state, a).unwrap_or(false))
        .expect("an open state always has a correct move")
}

pub fn scripted_decide<R: Rng + ?Sized>(
    policy: ScriptedPolicy,
    state: &GridState,
    rng: &mut R,
) -> AgentDecision {
    let action = match policy {
        ScriptedPolicy::Random => Action::ALL[rng.random_range(0..4)],
        ScriptedPolicy::Optimal => optimal_action(state),
        ScriptedPolicy::EpsilonOptimal(eps) => {
            if eps > 0.0 && rng.random::<f64>() < eps {
                Action::ALL[rng.random_range(0..4)]
            } else {
                optimal_action(state)
            }
        }
    };
    AgentDecision {
        action: Choice::Move(action),
        raw_response: canonical_reply(action),
    }
}

/// Identifies one captured decision for the activation recorder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureTag {
    pub dataset_id: String,
    pub trial_id: String,
    pub step_idx: usize,
}

pub struct DecisionContext<'a> {
    pub state: &'a GridState,
    pub messages: &'a [ChatMessage],
    pub capture: Option<&'a CaptureTag>,
}

pub trait Agent: Send + Sync {
    fn decide(&self, ctx: &DecisionContext<'_>, rng: &mut ChaCha8Rng) -> Result<AgentDecision, AgentError>;
}

pub struct ScriptedAgent(pub ScriptedPolicy);

impl Agent for ScriptedAgent {
    fn decide(&self, ctx: &DecisionContext<'_>, rng: &mut ChaCha8Rng) -> Result<AgentDecision, AgentError> {
        Ok(scripted_decide(self.0, ctx.state, rng))
    }
}

/// Anything that turns a conversation into one reply string.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, messages: &[ChatMessage], capture: Option<&CaptureTag>) -> Result<String, AgentError>;
}

pub struct LlmAgent {
    backend: Arc<dyn ChatBackend>,
    lenient: bool,
}

impl LlmAgent {
    pub fn new(backend: Arc<dyn ChatBackend>) -> Self {
        Self {
            backend,
            lenient: false,
        }
    }

    pub fn lenient(mut self, on: bool) -> Self {
        self.lenient = on;
        self
    }
}

impl Agent for LlmAgent {
    fn decide(&self, ctx: &DecisionContext<'_>, _rng: &mut ChaCha8Rng) -> Result<AgentDecision, AgentError> {
        let raw = self.backend.complete(ctx.messages, ctx.capture)?;
        Ok(parse_action_with(&raw, self.lenient))
    }
}

/// Replays recorded replies in order; step `k` is answered with reply `k`.
pub struct ReplayAgent {
    replies: Vec<String>,
    lenient: bool,
}

impl ReplayAgent {
    pub fn new(replies: Vec<String>) -> Self {
        Self {
            replies,
            lenient: false,
        }
    }

    pub fn lenient(mut self, on: bool) -> Self {
        self.lenient = on;
        self
    }
}

impl Agent for ReplayAgent {
    fn decide(&self, ctx: &DecisionContext<'_>, _rng: &mut ChaCha8Rng) -> Result<AgentDecision, AgentError> {
        let step = ctx.messages.len().saturating_sub(2) / 2;
        let raw = self
            .replies
            .get(step)
            .ok_or_else(|| AgentError::Replay(format!("no recorded reply for step {step}")))?;
        Ok(parse_action_with(raw, self.lenient))
    }
}

fn default_max_tokens() -> u32 {
    32
}

fn default_timeout() -> f64 {
    60.0
}

fn default_retries() -> u32 {
    2
}

fn default_backoff() -> u64 {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model_id: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_output_tokens: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    /// Extra attempts after the first on transport errors, 5xx and 429.
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_backoff")]
    pub retry_backoff_ms: u64,
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model_id: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model_id: model_id.into(),
            temperature: 0.0,
            max_output_tokens: default_max_tokens(),
            timeout_secs: default_timeout(),
            retries: default_retries(),
            retry_backoff_ms: default_backoff(),
            api_key: None,
        }
    }

    /// Fills `api_key` from the environment.
    pub fn with_env_key(mut self) -> Self {
        self.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        self
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if self.base_url.trim().is_empty() {
            return Err(AgentError::Config("base_url is empty".into()));
        }
        if !(self.timeout_secs > 0.0) {
            return Err(AgentError::Config("timeout must be positive".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(AgentError::Config("temperature must be non-negative".into()));
        }
        if self.max_output_tokens == 0 {
            return Err(AgentError::Config("max_output_tokens must be positive".into()));
        }
        Ok(())
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base_url.trim_end_matches('/'))
    }
}

/// Blocking chat-completion client. Shareable across threads.
pub struct ChatClient {
    cfg: EndpointConfig,
    http: ureq::Agent,
}

enum Attempt {
    Done(Value),
    Retry(String),
    Fatal(AgentError),
}

impl ChatClient {
    pub fn new(cfg: EndpointConfig) -> Result<Self, AgentError> {
        cfg.validate()?;
        let http = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(cfg.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self { cfg, http })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.cfg
    }

    pub fn request_body(&self, messages: &[ChatMessage], capture: Option<&CaptureTag>) -> Value {
        let mut body = json!({
            "model": self.cfg.model_id,
            "messages": messages,
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_output_tokens,
        });
        if let Some(tag) = capture {
            body["capture"] = json!(tag);
        }
        body
    }

    /// Sends the active ablation mask (an empty entry list clears it).
    pub fn post_mask(&self, mask: &Value) -> Result<Value, AgentError> {
        self.with_retries(&self.cfg.url("/mask"), mask)
    }

    fn attempt(&self, url: &str, body: &Value) -> Attempt {
        let mut req = self.http.post(url);
        if let Some(key) = &self.cfg.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = match req.send_json(body) {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Attempt::Retry(format!("HTTP {status}"));
        }
        if status >= 400 {
            let text = resp.body_mut().read_to_string().unwrap_or_default();
            return Attempt::Fatal(AgentError::Protocol(format!("HTTP {status}: {text}")));
        }
        match resp.body_mut().read_json::<Value>() {
            Ok(v) => Attempt::Done(v),
            Err(e) => Attempt::Fatal(AgentError::Protocol(format!("response is not JSON: {e}"))),
        }
    }

    fn with_retries(&self, url: &str, body: &Value) -> Result<Value, AgentError> {
        let attempts = self.cfg.retries + 1;
        let mut last = String::new();
        for n in 1..=attempts {
            match self.attempt(url, body) {
                Attempt::Done(v) => return Ok(v),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(msg) => {
                    warn!("{url}: attempt {n}/{attempts} failed: {msg}");
                    last = msg;
                    if n < attempts {
                        let wait = self.cfg.retry_backoff_ms.saturating_mul(1 << (n - 1).min(6));
                        std::thread::sleep(Duration::from_millis(wait));
                    }
                }
            }
        }
        Err(AgentError::Transport {
            attempts,
            message: last,
        })
    }
}

impl ChatBackend for ChatClient {
    fn complete(&self, messages: &[ChatMessage], capture: Option<&CaptureTag>) -> Result<String, AgentError> {
        let body = self.request_body(messages, capture);
        let reply = self.with_retries(&self.cfg.url("/v1/chat/completions"), &body)?;
        let content = reply
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| AgentError::Protocol("missing choices[0].message.content".into()))?;
        debug!("reply: {content:?}");
        Ok(content.to_string())
    }
}
