//! Deterministic chat backend that replays canned responses.
//!
//! Each call consumes the first unconsumed step whose optional `role` and
//! `contains` filters match the request. A script without filters is a plain
//! FIFO queue; filters let concurrent validator calls pick their responses by
//! atom text regardless of scheduling order.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Deserializer, Serialize};

use super::{ChatBackend, ChatRequest, EmbeddingBackend, GatewayError, Gateway, RetryPolicy, StubEmbedding};
use crate::domain::AgentRole;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Reply {
    Content { content: String },
    Transport { transport_error: String },
    Status {
        status: u16,
        #[serde(default)]
        body: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScriptStep {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub role: Option<AgentRole>,
    /// Substring the request (system prompt + user message) must contain.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contains: Option<String>,
    #[serde(flatten)]
    pub reply: Reply,
}

impl ScriptStep {
    pub fn content(text: impl Into<String>) -> Self {
        Self::from_reply(Reply::Content { content: text.into() })
    }

    pub fn transport_error(message: impl Into<String>) -> Self {
        Self::from_reply(Reply::Transport {
            transport_error: message.into(),
        })
    }

    pub fn status(status: u16, body: impl Into<String>) -> Self {
        Self::from_reply(Reply::Status {
            status,
            body: body.into(),
        })
    }

    fn from_reply(reply: Reply) -> Self {
        Self {
            role: None,
            contains: None,
            reply,
        }
    }

    pub fn for_role(mut self, role: AgentRole) -> Self {
        self.role = Some(role);
        self
    }

    pub fn when_contains(mut self, needle: impl Into<String>) -> Self {
        self.contains = Some(needle.into());
        self
    }

    fn matches(&self, request: &ChatRequest) -> bool {
        self.role.is_none_or(|r| r == request.role)
            && self.contains.as_deref().is_none_or(|needle| {
                request.user_message.contains(needle) || request.system_prompt.contains(needle)
            })
    }
}

impl<'de> Deserialize<'de> for ScriptStep {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Full {
            #[serde(default)]
            role: Option<AgentRole>,
            #[serde(default)]
            contains: Option<String>,
            #[serde(flatten)]
            reply: Reply,
        }

        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Bare(String),
            Full(Full),
        }

        Ok(match Repr::deserialize(deserializer)? {
            Repr::Bare(content) => ScriptStep::content(content),
            Repr::Full(f) => ScriptStep {
                role: f.role,
                contains: f.contains,
                reply: f.reply,
            },
        })
    }
}

#[derive(Default)]
struct State {
    consumed: Vec<bool>,
    log: Vec<ChatRequest>,
}

pub struct ScriptedBackend {
    steps: Vec<ScriptStep>,
    state: Mutex<State>,
}

impl ScriptedBackend {
    pub fn new(steps: Vec<ScriptStep>) -> Result<Self, GatewayError> {
        if steps.is_empty() {
            return Err(GatewayError::InvalidRequest("script must not be empty".into()));
        }
        let consumed = vec![false; steps.len()];
        Ok(Self {
            steps,
            state: Mutex::new(State {
                consumed,
                log: Vec::new(),
            }),
        })
    }

    /// Plain FIFO script of successful completions.
    pub fn from_contents<I, S>(contents: I) -> Result<Self, GatewayError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(contents.into_iter().map(ScriptStep::content).collect())
    }

    /// Every request received so far, in arrival order.
    pub fn requests(&self) -> Vec<ChatRequest> {
        self.state.lock().expect("script state poisoned").log.clone()
    }

    pub fn remaining(&self) -> usize {
        self.state
            .lock()
            .expect("script state poisoned")
            .consumed
            .iter()
            .filter(|c| !**c)
            .count()
    }
}

impl ChatBackend for ScriptedBackend {
    fn send(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let mut state = self.state.lock().expect("script state poisoned");
        state.log.push(request.clone());
        let next = self
            .steps
            .iter()
            .enumerate()
            .find(|(i, step)| !state.consumed[*i] && step.matches(request))
            .map(|(i, _)| i)
            .ok_or(GatewayError::ScriptExhausted)?;
        state.consumed[next] = true;
        match &self.steps[next].reply {
            Reply::Content { content } => Ok(content.clone()),
            Reply::Transport { transport_error } => Err(GatewayError::Transport(transport_error.clone())),
            Reply::Status { status, body } => Err(GatewayError::Backend {
                status: *status,
                body: body.clone(),
            }),
        }
    }
}

/// On-disk replay fixture: a default script, optional per-record scripts
/// keyed by batch record id, and the stub embedder to pair them with.
/// A bare JSON array is accepted as a fixture with only a default script.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ScriptFixture {
    pub embedding: StubEmbedding,
    pub script: Vec<ScriptStep>,
    pub records: BTreeMap<String, Vec<ScriptStep>>,
}

impl<'de> Deserialize<'de> for ScriptFixture {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Full {
            #[serde(default)]
            embedding: StubEmbedding,
            #[serde(default)]
            script: Vec<ScriptStep>,
            #[serde(default)]
            records: BTreeMap<String, Vec<ScriptStep>>,
        }

        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Bare(Vec<ScriptStep>),
            Full(Full),
        }

        Ok(match Repr::deserialize(deserializer)? {
            Repr::Bare(script) => ScriptFixture {
                script,
                ..Default::default()
            },
            Repr::Full(f) => ScriptFixture {
                embedding: f.embedding,
                script: f.script,
                records: f.records,
            },
        })
    }
}

impl ScriptFixture {
    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Config(format!("cannot read script {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| GatewayError::Config(format!("invalid script {}: {e}", path.display())))
    }

    pub fn steps_for(&self, record_id: Option<&str>) -> &[ScriptStep] {
        record_id
            .and_then(|id| self.records.get(id))
            .map_or(&self.script, |s| s)
    }

    /// A fresh gateway replaying the script for `record_id` (or the default
    /// script), paired with the fixture's stub embedder.
    pub fn gateway(&self, record_id: Option<&str>, retry: RetryPolicy) -> Result<(Gateway, Arc<ScriptedBackend>), GatewayError> {
        let backend = Arc::new(ScriptedBackend::new(self.steps_for(record_id).to_vec())?);
        let embedder: Arc<dyn EmbeddingBackend> = self.embedding.backend();
        Ok((Gateway::new(backend.clone(), embedder, retry), backend))
    }
}
