//! Validated domain types shared by every stage of the refinement pipeline.
//!
//! Everything here is immutable after construction and serializes to a
//! canonical JSON form whose field names follow the agent output schemas
//! (`label`/`reason`, `intent`/`principles`/`rules`, and the five atom fields).

mod atoms;
mod judgment;
mod prompt;
mod tag;
mod trace;

pub use atoms::{flatten_atoms, Atom, AtomCategory, AtomDictionary, DroppedAtom, DropReason};
pub use judgment::{
    Chunk, EntailmentJudgment, EntailmentLabel, EvidencePair, SimilarityMatrix,
    VerificationMetrics, VerificationReport,
};
pub use prompt::{word_count, Policy, RefinedPrompt, RoutingDecision, UserPrompt};
pub use tag::{canonicalize_tag, ScenarioTag};
pub use trace::{AgentExchange, AgentRole, RefinementTrace, RoundRecord, RoundSummary, TraceSummary};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("unknown scenario tag: {0:?}")]
    UnknownTag(String),
    #[error("{0} must not be empty")]
    Empty(&'static str),
    #[error("invalid refinement round {0}: rounds start at 1")]
    InvalidRound(u32),
    #[error("invalid metric counts: {entailed} entailed + {contradicted} contradicted > {total} atoms")]
    InvalidCounts {
        entailed: usize,
        contradicted: usize,
        total: usize,
    },
    #[error("{0}")]
    Invariant(String),
}
