use serde::{Deserialize, Serialize};

use super::{DomainError, ScenarioTag};

/// Whitespace-delimited token count; punctuation stays attached to its word.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Collapses whitespace and keeps at most `limit` words.
/// Returns the normalized text and whether anything was cut.
pub(crate) fn truncate_words(text: &str, limit: usize) -> (String, bool) {
    let words: Vec<&str> = text.split_whitespace().collect();
    let truncated = words.len() > limit;
    (words[..words.len().min(limit)].join(" "), truncated)
}

/// The raw user input to be refined.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct UserPrompt(String);

impl UserPrompt {
    pub fn new(text: impl Into<String>) -> Result<Self, DomainError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(DomainError::Empty("user prompt"));
        }
        Ok(Self(text))
    }

    pub fn text(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for UserPrompt {
    type Error = DomainError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<UserPrompt> for String {
    fn from(value: UserPrompt) -> Self {
        value.0
    }
}

impl std::fmt::Display for UserPrompt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub const MAX_ROUTING_REASON_WORDS: usize = 20;

/// Output of the scenario router.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingDecision {
    pub tag: ScenarioTag,
    pub reason: String,
    pub raw_response: String,
    /// The model's reason exceeded the word limit and was cut.
    #[serde(default)]
    pub reason_truncated: bool,
    /// Parsing failed on every attempt and the non-difficult fallback applied.
    #[serde(default)]
    pub fallback: bool,
}

impl RoutingDecision {
    pub fn new(tag: ScenarioTag, reason: &str, raw_response: impl Into<String>) -> Self {
        let (reason, reason_truncated) = truncate_words(reason, MAX_ROUTING_REASON_WORDS);
        Self {
            tag,
            reason,
            raw_response: raw_response.into(),
            reason_truncated,
            fallback: false,
        }
    }

    pub fn fallback(raw_response: impl Into<String>) -> Self {
        Self {
            tag: ScenarioTag::NonDifficult,
            reason: "fallback: router output could not be parsed".to_string(),
            raw_response: raw_response.into(),
            reason_truncated: false,
            fallback: true,
        }
    }
}

/// Scenario-conditioned rewriting guidance produced by the policy generator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PolicyFields")]
pub struct Policy {
    intent: String,
    principles: String,
    rules: String,
}

#[derive(Deserialize)]
struct PolicyFields {
    intent: String,
    principles: String,
    rules: String,
}

impl TryFrom<PolicyFields> for Policy {
    type Error = DomainError;

    fn try_from(f: PolicyFields) -> Result<Self, Self::Error> {
        Policy::new(f.intent, f.principles, f.rules)
    }
}

impl Policy {
    pub fn new(
        intent: impl Into<String>,
        principles: impl Into<String>,
        rules: impl Into<String>,
    ) -> Result<Self, DomainError> {
        let (intent, principles, rules) = (intent.into(), principles.into(), rules.into());
        for (name, value) in [("intent", &intent), ("principles", &principles), ("rules", &rules)] {
            if value.trim().is_empty() {
                return Err(DomainError::Empty(name));
            }
        }
        Ok(Self {
            intent,
            principles,
            rules,
        })
    }

    pub fn intent(&self) -> &str {
        &self.intent
    }

    pub fn principles(&self) -> &str {
        &self.principles
    }

    pub fn rules(&self) -> &str {
        &self.rules
    }
}

/// A rewritten prompt; `round` is 1 for the initial refinement and grows by
/// one with every revision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RefinedFields")]
pub struct RefinedPrompt {
    text: String,
    round: u32,
}

#[derive(Deserialize)]
struct RefinedFields {
    text: String,
    round: u32,
}

impl TryFrom<RefinedFields> for RefinedPrompt {
    type Error = DomainError;

    fn try_from(f: RefinedFields) -> Result<Self, Self::Error> {
        RefinedPrompt::new(f.text, f.round)
    }
}

impl RefinedPrompt {
    pub fn new(text: impl Into<String>, round: u32) -> Result<Self, DomainError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(DomainError::Empty("refined prompt"));
        }
        if round == 0 {
            return Err(DomainError::InvalidRound(round));
        }
        Ok(Self { text, round })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn round(&self) -> u32 {
        self.round
    }
}
