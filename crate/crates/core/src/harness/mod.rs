//! Run-level plumbing shared by the command-line tool: configuration,
//! backend selection, batch processing and result statistics.

mod batch;
mod stats;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AgentBackend, AgentProfiles};
use crate::domain::UserPrompt;
use crate::gateway::{BackendConfig, Gateway, GatewayError, RetryPolicy, ScriptFixture};
use crate::orchestrator::{run_pipeline, PipelineConfig, PipelineError, PipelineFailure};

pub use batch::{parse_record, run_batch, BatchRecord, BatchResult, ResultStatus, SCHEMA_VERSION};
pub use stats::{LengthBucket, RoundBucket, RoundStats, ShareCount, StatsReport, LENGTH_BUCKET_WIDTH};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read {path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("no results")]
    NoResults,
    #[error("line {line}: {message}")]
    Results { line: usize, message: String },
}

pub(crate) fn read_file(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|cause| HarnessError::Io {
        path: path.to_path_buf(),
        cause,
    })
}

/// The configuration document: backend, pipeline and per-agent overrides.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub backend: BackendConfig,
    pub pipeline: PipelineConfig,
    pub agents: AgentProfiles,
}

impl AppConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let config: AppConfig = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_json(&read_file(path)?).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.pipeline.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.agents.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }
}

/// Where agent calls go: live HTTP endpoints or a replay fixture.
pub enum BackendSource {
    Http(Gateway),
    /// Every run gets a fresh replay of its own script, so results do not
    /// depend on scheduling.
    Scripted(ScriptFixture),
}

impl BackendSource {
    /// `scripted:<path>` loads a fixture; anything else is a base URL
    /// serving `/chat/completions` and `/embeddings`.
    pub fn from_flag(flag: &str, backend: &mut BackendConfig) -> Result<Self, HarnessError> {
        match flag.strip_prefix("scripted:") {
            Some(path) => Ok(BackendSource::Scripted(ScriptFixture::load(Path::new(path))?)),
            None => {
                let base = flag.trim_end_matches('/');
                backend.chat_endpoint_url = format!("{base}/chat/completions");
                backend.embedding_endpoint_url = format!("{base}/embeddings");
                Self::http(backend)
            }
        }
    }

    pub fn http(backend: &BackendConfig) -> Result<Self, HarnessError> {
        backend.validate()?;
        Ok(BackendSource::Http(Gateway::from_config(backend)?))
    }

    pub fn agent_backend(&self, record_id: Option<&str>, config: &AppConfig) -> Result<AgentBackend, GatewayError> {
        let gateway = match self {
            BackendSource::Http(gateway) => gateway.clone(),
            BackendSource::Scripted(fixture) => {
                fixture.gateway(record_id, RetryPolicy::immediate(config.backend.retry_limit))?.0
            }
        };
        Ok(AgentBackend::new(gateway, config.backend.chat_model.clone()).with_profiles(config.agents.clone()))
    }
}

/// Runs one prompt end to end.
pub fn refine_one(
    prompt: &UserPrompt,
    record_id: Option<&str>,
    source: &BackendSource,
    config: &AppConfig,
) -> Result<crate::domain::RefinementTrace, PipelineFailure> {
    let backend = source.agent_backend(record_id, config).map_err(|e| PipelineFailure {
        error: PipelineError::Config(e.to_string()),
        partial: Default::default(),
    })?;
    run_pipeline(prompt, &config.pipeline, &backend)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_document() {
        let config = AppConfig::from_json(
            r#"{
                "backend": {"chat_model": "m1", "retry_limit": 1},
                "pipeline": {"max_rounds": 3, "chunker": {"min_words_per_chunk": 6}},
                "agents": {"validator": {"temperature": 0.1}}
            }"#,
        )
        .unwrap();
        assert_eq!(config.backend.chat_model, "m1");
        assert_eq!(config.pipeline.max_rounds, 3);
        assert_eq!(config.pipeline.chunker.min_words_per_chunk, 6);
        assert_eq!(config.pipeline.validator_parallelism, 4);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(AppConfig::from_json("{"), Err(HarnessError::Config(_))));
        assert!(matches!(AppConfig::from_json(r#"{"pipelines": {}}"#), Err(HarnessError::Config(_))));
        assert!(matches!(
            AppConfig::from_json(r#"{"pipeline": {"max_rounds": 0}}"#),
            Err(HarnessError::Config(_))
        ));
        assert!(matches!(
            AppConfig::load(Path::new("/nonexistent/config.json")),
            Err(HarnessError::Io { .. })
        ));
    }

    #[test]
    fn base_url_flag_sets_both_endpoints() {
        let mut backend = BackendConfig::default();
        let source = BackendSource::from_flag("http://127.0.0.1:9/v1/", &mut backend).unwrap();
        assert!(matches!(source, BackendSource::Http(_)));
        assert_eq!(backend.chat_endpoint_url, "http://127.0.0.1:9/v1/chat/completions");
        assert_eq!(backend.embedding_endpoint_url, "http://127.0.0.1:9/v1/embeddings");
        assert!(BackendSource::from_flag("ftp://x", &mut backend).is_err());
        assert!(BackendSource::from_flag("scripted:/nonexistent.json", &mut backend).is_err());
    }
}
