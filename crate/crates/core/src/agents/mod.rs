//! The six pipeline agents. Each renders its template, submits it through
//! the [`Gateway`] and parses the reply into a domain type.
//!
//! Every call gets three attempts at producing parsable output. When they
//! run out the router falls back to the non-difficult tag, the validator to
//! MS, and the policy generator and atomizer fail.

mod atomizer;
mod policy;
mod rewrite;
mod router;
pub mod taxonomy;
pub mod template;
mod validator;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{AgentRole, DomainError};
use crate::gateway::{ChatRequest, Gateway, GatewayError};

pub use atomizer::{atomize, atomizer_user_message, parse_atomizer_output, Atomization};
pub use policy::{parse_policy, synthesize_policy};
pub use rewrite::{clean_completion, refine_prompt, revise, Issue, VerificationIssues};
pub use router::{parse_routing, route_scenario};
pub use taxonomy::{taxonomy_entry, TaxonomyEntry, TAXONOMY};
pub use validator::{parse_judgment, validate_entailment, validator_user_message, MAX_VALIDATOR_REASON_WORDS};

/// Attempts per agent call, first try included.
pub const ATTEMPTS_PER_CALL: u32 = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("policy output violated the schema after {attempts} attempts: {detail}")]
    PolicySchema { attempts: u32, detail: String },
    #[error("atomizer output violated the schema after {attempts} attempts: {detail}")]
    AtomSchema { attempts: u32, detail: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// A parsed agent result together with every raw response it consumed.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentOutput<T> {
    pub value: T,
    pub responses: Vec<String>,
}

/// Resolved request parameters for one agent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentSettings {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

/// Per-agent overrides as they appear in configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentOverride {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

/// Defaults: deterministic decoding for the classifiers and extractors,
/// 0.7 for the writing agents.
pub fn default_temperature(role: AgentRole) -> f64 {
    match role {
        AgentRole::Router | AgentRole::Atomizer | AgentRole::Validator => 0.0,
        AgentRole::PolicyGenerator | AgentRole::Refiner | AgentRole::Reviser => 0.7,
    }
}

pub fn default_max_tokens(role: AgentRole) -> u32 {
    match role {
        AgentRole::Router | AgentRole::Validator => 256,
        AgentRole::Atomizer => 512,
        AgentRole::PolicyGenerator | AgentRole::Refiner | AgentRole::Reviser => 1024,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentProfiles(pub BTreeMap<AgentRole, AgentOverride>);

impl AgentProfiles {
    pub fn settings(&self, role: AgentRole, default_model: &str) -> AgentSettings {
        let o = self.0.get(&role).cloned().unwrap_or_default();
        AgentSettings {
            model: o.model.unwrap_or_else(|| default_model.to_string()),
            temperature: o.temperature.unwrap_or_else(|| default_temperature(role)),
            max_tokens: o.max_tokens.unwrap_or_else(|| default_max_tokens(role)),
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        for (role, o) in &self.0 {
            if let Some(t) = o.temperature {
                if !(0.0..=2.0).contains(&t) {
                    return Err(AgentError::Precondition(format!("{role} temperature {t} outside [0, 2]")));
                }
            }
            if o.max_tokens == Some(0) {
                return Err(AgentError::Precondition(format!("{role} max_tokens must be at least 1")));
            }
        }
        Ok(())
    }
}

/// The gateway plus per-agent request settings; shared read-only by all
/// agent calls of a pipeline.
#[derive(Clone)]
pub struct AgentBackend {
    gateway: Gateway,
    default_model: String,
    profiles: AgentProfiles,
}

impl AgentBackend {
    pub fn new(gateway: Gateway, default_model: impl Into<String>) -> Self {
        Self {
            gateway,
            default_model: default_model.into(),
            profiles: AgentProfiles::default(),
        }
    }

    pub fn with_profiles(mut self, profiles: AgentProfiles) -> Self {
        self.profiles = profiles;
        self
    }

    pub fn gateway(&self) -> &Gateway {
        &self.gateway
    }

    pub fn settings(&self, role: AgentRole) -> AgentSettings {
        self.profiles.settings(role, &self.default_model)
    }

    pub fn request(&self, role: AgentRole, system_prompt: String, user_message: String) -> ChatRequest {
        let s = self.settings(role);
        ChatRequest {
            role,
            model_id: s.model,
            system_prompt,
            user_message,
            temperature: s.temperature,
            max_tokens: s.max_tokens,
        }
    }

    pub(crate) fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        self.gateway.chat(request).map(|r| r.content)
    }
}

/// Runs up to [`ATTEMPTS_PER_CALL`] completions until `parse` accepts one.
/// Blank completions count as parse failures; other gateway errors abort.
/// Returns the parsed value (or the last parse error) and all responses.
pub(crate) fn with_parse_retries<T, E>(
    backend: &AgentBackend,
    request: &ChatRequest,
    mut parse: impl FnMut(&str) -> Result<T, E>,
    on_blank: impl Fn() -> E,
) -> Result<(Result<T, E>, Vec<String>), GatewayError> {
    let mut responses = Vec::new();
    let mut last = None;
    for attempt in 1..=ATTEMPTS_PER_CALL {
        let outcome = match backend.complete(request) {
            Ok(content) => {
                let parsed = parse(&content);
                responses.push(content);
                parsed
            }
            Err(GatewayError::EmptyCompletion) => {
                responses.push(String::new());
                Err(on_blank())
            }
            Err(e) => return Err(e),
        };
        match outcome {
            Ok(value) => return Ok((Ok(value), responses)),
            Err(e) => {
                log::debug!("{} attempt {attempt} unparsable", request.role);
                last = Some(e);
            }
        }
    }
    Ok((Err(last.expect("at least one attempt")), responses))
}
