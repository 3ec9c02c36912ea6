use std::fmt;

use serde::{Deserialize, Serialize};

use super::{
    AtomDictionary, DomainError, DroppedAtom, Policy, RefinedPrompt, RoutingDecision, ScenarioTag, UserPrompt,
    VerificationReport,
};

/// The six agents of the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    Router,
    PolicyGenerator,
    Refiner,
    Atomizer,
    Validator,
    Reviser,
}

impl AgentRole {
    pub const ALL: [AgentRole; 6] = [
        AgentRole::Router,
        AgentRole::PolicyGenerator,
        AgentRole::Refiner,
        AgentRole::Atomizer,
        AgentRole::Validator,
        AgentRole::Reviser,
    ];

    pub fn key(self) -> &'static str {
        match self {
            AgentRole::Router => "router",
            AgentRole::PolicyGenerator => "policy_generator",
            AgentRole::Refiner => "refiner",
            AgentRole::Atomizer => "atomizer",
            AgentRole::Validator => "validator",
            AgentRole::Reviser => "reviser",
        }
    }
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// A raw model response as received, tagged with the agent and the
/// verification round it belongs to (if any).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentExchange {
    pub role: AgentRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round: Option<u32>,
    pub raw_response: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub prompt: RefinedPrompt,
    pub report: VerificationReport,
}

/// Complete record of one pipeline execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementTrace {
    pub user_prompt: UserPrompt,
    pub routing: RoutingDecision,
    pub policy: Policy,
    pub atoms: AtomDictionary,
    #[serde(default)]
    pub dropped_atoms: Vec<DroppedAtom>,
    #[serde(default)]
    pub atomizer_retried: bool,
    pub rounds: Vec<RoundRecord>,
    #[serde(rename = "final")]
    pub final_prompt: RefinedPrompt,
    pub accepted: bool,
    pub rounds_used: usize,
    #[serde(default)]
    pub exchanges: Vec<AgentExchange>,
}

impl RefinementTrace {
    /// Checks the structural invariants tying rounds, final prompt and
    /// acceptance together.
    pub fn validate(&self) -> Result<(), DomainError> {
        let fail = |msg: &str| Err(DomainError::Invariant(msg.to_string()));
        let Some(last) = self.rounds.last() else {
            return fail("trace has no rounds");
        };
        if self.rounds_used != self.rounds.len() {
            return fail("rounds_used differs from the number of rounds");
        }
        if self.final_prompt != last.prompt {
            return fail("final prompt differs from the last round's prompt");
        }
        if self.accepted != last.report.accepted {
            return fail("trace acceptance differs from the last report");
        }
        for (k, round) in self.rounds.iter().enumerate() {
            if round.prompt.round() as usize != k + 1 {
                return fail("round numbers are not 1, 2, 3, ...");
            }
        }
        self.atoms.validate_against(&self.user_prompt)
    }

    pub fn tag(&self) -> ScenarioTag {
        self.routing.tag
    }

    pub fn coverage_sequence(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.report.metrics.coverage()).collect()
    }

    pub fn summary(&self) -> TraceSummary {
        TraceSummary {
            tag: self.routing.tag,
            rounds_used: self.rounds_used,
            rounds: self
                .rounds
                .iter()
                .map(|r| RoundSummary {
                    round: r.prompt.round(),
                    coverage: r.report.metrics.coverage(),
                    contradiction: r.report.metrics.contradiction(),
                })
                .collect(),
            accepted: self.accepted,
            final_prompt: self.final_prompt.text().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSummary {
    pub round: u32,
    pub coverage: f64,
    pub contradiction: f64,
}

/// Compact trace form: tag, per-round rates, outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub tag: ScenarioTag,
    pub rounds_used: usize,
    pub rounds: Vec<RoundSummary>,
    pub accepted: bool,
    #[serde(rename = "final")]
    pub final_prompt: String,
}
