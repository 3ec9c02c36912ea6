//! Scenario-aware, self-correcting multi-agent prompt refinement for
//! text-to-video generation.
//!
//! The pipeline routes a user prompt to a scenario tag, synthesizes a
//! rewriting policy, rewrites the prompt, verifies the rewrite atom by atom
//! against the original, and revises it until every atom is entailed.

pub mod domain;
pub mod gateway;
pub mod verification;
pub mod agents;
pub mod orchestrator;
pub mod harness;
