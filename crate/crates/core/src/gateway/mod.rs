//! Uniform access to chat-completion and embedding endpoints.
//!
//! [`Gateway`] wraps a [`ChatBackend`] and an [`EmbeddingBackend`] with the
//! retry policy and output validation shared by every agent. Backends only
//! perform single attempts; retries with exponential backoff live here.

mod http;
mod json;
mod scripted;
mod stub;

use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::AgentRole;

pub use http::{HttpChatBackend, HttpEmbeddingBackend};
pub use json::{extract_json_object, JsonExtractError};
pub use scripted::{Reply, ScriptFixture, ScriptStep, ScriptedBackend};
pub use stub::{CharFrequencyEmbedder, ConstantEmbedder, FnEmbedder, StubEmbedding};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend returned status {status}: {body}")]
    Backend { status: u16, body: String },
    #[error("backend returned an empty completion")]
    EmptyCompletion,
    #[error("malformed backend response: {0}")]
    MalformedResponse(String),
    #[error("embedding dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("invalid backend configuration: {0}")]
    Config(String),
    #[error("scripted backend exhausted")]
    ScriptExhausted,
}

impl GatewayError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, GatewayError::Transport(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub role: AgentRole,
    pub model_id: String,
    pub system_prompt: String,
    pub user_message: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(GatewayError::InvalidRequest(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(GatewayError::InvalidRequest("max_tokens must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatResponse {
    /// Verbatim completion text.
    pub content: String,
    pub backend_latency: Duration,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, GatewayError> {
        if values.is_empty() {
            return Err(GatewayError::MalformedResponse("empty embedding".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GatewayError::MalformedResponse("non-finite embedding value".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }
}

impl TryFrom<Vec<f64>> for EmbeddingVector {
    type Error = GatewayError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<EmbeddingVector> for Vec<f64> {
    fn from(v: EmbeddingVector) -> Self {
        v.0
    }
}

/// Single-attempt chat transport.
pub trait ChatBackend: Send + Sync {
    fn send(&self, request: &ChatRequest) -> Result<String, GatewayError>;
}

/// Single-attempt embedding transport returning one vector per text.
pub trait EmbeddingBackend: Send + Sync {
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, GatewayError>;
}

pub const DEFAULT_API_KEY_ENV: &str = "REFINER_API_KEY";

#[derive(Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub chat_endpoint_url: String,
    pub embedding_endpoint_url: String,
    /// Never serialized; usually resolved from `api_key_env`.
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub api_key_env: String,
    pub chat_model: String,
    pub embedding_model: String,
    pub retry_limit: u32,
    pub backoff_base_ms: u64,
    pub timeout_ms: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            chat_endpoint_url: "http://localhost:8000/v1/chat/completions".into(),
            embedding_endpoint_url: "http://localhost:8000/v1/embeddings".into(),
            api_key: None,
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            chat_model: "deepseek-v3.2".into(),
            embedding_model: "BAAI/bge-m3".into(),
            retry_limit: 3,
            backoff_base_ms: 500,
            timeout_ms: 60_000,
        }
    }
}

impl std::fmt::Debug for BackendConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BackendConfig")
            .field("chat_endpoint_url", &self.chat_endpoint_url)
            .field("embedding_endpoint_url", &self.embedding_endpoint_url)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("api_key_env", &self.api_key_env)
            .field("chat_model", &self.chat_model)
            .field("embedding_model", &self.embedding_model)
            .field("retry_limit", &self.retry_limit)
            .field("backoff_base_ms", &self.backoff_base_ms)
            .field("timeout_ms", &self.timeout_ms)
            .finish()
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        for (name, url) in [
            ("chat_endpoint_url", &self.chat_endpoint_url),
            ("embedding_endpoint_url", &self.embedding_endpoint_url),
        ] {
            let parsed = reqwest::Url::parse(url).map_err(|e| GatewayError::Config(format!("{name}: {e}")))?;
            if !matches!(parsed.scheme(), "http" | "https") {
                return Err(GatewayError::Config(format!("{name}: unsupported scheme {}", parsed.scheme())));
            }
        }
        if self.timeout_ms == 0 {
            return Err(GatewayError::Config("timeout_ms must be positive".into()));
        }
        Ok(())
    }

    /// Explicit key if set, otherwise the environment variable named by
    /// `api_key_env`.
    pub fn resolve_api_key(&self) -> Option<String> {
        self.api_key
            .clone()
            .or_else(|| std::env::var(&self.api_key_env).ok())
            .filter(|k| !k.is_empty())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            retry_limit: self.retry_limit,
            base_delay: Duration::from_millis(self.backoff_base_ms),
        }
    }
}

/// Transport retries: `retry_limit` extra attempts, waiting
/// `base_delay * 2^k` before retry `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub retry_limit: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            retry_limit: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn immediate(retry_limit: u32) -> Self {
        Self {
            retry_limit,
            base_delay: Duration::ZERO,
        }
    }

    pub fn delay_before_retry(&self, retry: u32) -> Duration {
        self.base_delay.saturating_mul(1u32 << retry.min(16))
    }

    fn run<T>(&self, mut op: impl FnMut() -> Result<T, GatewayError>) -> Result<(T, u32), GatewayError> {
        let mut attempt = 0;
        loop {
            attempt += 1;
            match op() {
                Ok(value) => return Ok((value, attempt)),
                Err(err) if err.is_retryable() && attempt <= self.retry_limit => {
                    let delay = self.delay_before_retry(attempt - 1);
                    log::warn!("attempt {attempt} failed ({err}); retrying in {delay:?}");
                    thread::sleep(delay);
                }
                Err(err) => return Err(err),
            }
        }
    }
}

/// Shared handle over the chat and embedding backends. Cheap to clone and
/// safe to use from several threads.
#[derive(Clone)]
pub struct Gateway {
    chat: Arc<dyn ChatBackend>,
    embedder: Arc<dyn EmbeddingBackend>,
    retry: RetryPolicy,
}

impl Gateway {
    pub fn new(chat: Arc<dyn ChatBackend>, embedder: Arc<dyn EmbeddingBackend>, retry: RetryPolicy) -> Self {
        Self { chat, embedder, retry }
    }

    /// HTTP backends built from `config`.
    pub fn from_config(config: &BackendConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        Ok(Self::new(
            Arc::new(HttpChatBackend::new(config)?),
            Arc::new(HttpEmbeddingBackend::new(config)?),
            config.retry_policy(),
        ))
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        self.retry
    }

    /// Sends `request`, retrying transport failures. The content is returned
    /// verbatim; an all-whitespace completion is an error.
    pub fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.validate()?;
        let started = Instant::now();
        let (content, attempts) = self.retry.run(|| self.chat.send(request))?;
        if content.trim().is_empty() {
            return Err(GatewayError::EmptyCompletion);
        }
        Ok(ChatResponse {
            content,
            backend_latency: started.elapsed(),
            attempts,
        })
    }

    /// Embeds `texts` in one batched call; output order follows input order
    /// and every vector has the same dimension.
    pub fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, GatewayError> {
        if texts.is_empty() {
            return Err(GatewayError::InvalidRequest("no texts to embed".into()));
        }
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(GatewayError::InvalidRequest("cannot embed an empty text".into()));
        }
        let (raw, _) = self.retry.run(|| self.embedder.embed_batch(texts))?;
        if raw.len() != texts.len() {
            return Err(GatewayError::MalformedResponse(format!(
                "expected {} embeddings, got {}",
                texts.len(),
                raw.len()
            )));
        }
        let vectors = raw.into_iter().map(EmbeddingVector::new).collect::<Result<Vec<_>, _>>()?;
        let expected = vectors[0].dimension();
        if let Some(bad) = vectors.iter().find(|v| v.dimension() != expected) {
            return Err(GatewayError::DimensionMismatch {
                expected,
                found: bad.dimension(),
            });
        }
        Ok(vectors)
    }
}
