//! Deterministic semantic-verification machinery: chunking, atom-chunk
//! matching, rate computation and the strict acceptance decision.

mod chunker;
mod metrics;
mod similarity;

use thiserror::Error;

use crate::gateway::GatewayError;

pub use chunker::{chunk, ChunkerConfig};
pub use metrics::{check_acceptance, compute_metrics, metrics_from_labels};
pub use similarity::{cosine_similarity, match_atoms, select_evidence, Matching};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerificationError {
    #[error("{0} must not be empty")]
    EmptyInput(&'static str),
    #[error("vector dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,
    #[error("embedding count does not match input count")]
    EmbeddingCount,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("{0}")]
    Internal(String),
}
