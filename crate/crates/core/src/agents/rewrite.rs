//! Refiner and content reviser: the two agents that write prompt text.

use serde::{Deserialize, Serialize};

use super::template::{REFINER, REVISER};
use super::{AgentBackend, AgentError, AgentOutput};
use crate::domain::{AgentRole, Atom, EntailmentJudgment, EntailmentLabel, Policy, RefinedPrompt, UserPrompt};
use crate::gateway::GatewayError;

/// Strips surrounding whitespace, a Markdown code fence and one layer of
/// matching quotes.
pub fn clean_completion(raw: &str) -> String {
    let mut text = raw.trim();
    if text.starts_with("```") {
        text = text.split_once('\n').map_or("", |(_, rest)| rest);
        text = text.trim_end();
        text = text.strip_suffix("```").unwrap_or(text).trim();
    }
    for (open, close) in [('"', '"'), ('\'', '\''), ('\u{201c}', '\u{201d}')] {
        if text.len() >= 2 && text.starts_with(open) && text.ends_with(close) {
            text = text[open.len_utf8()..text.len() - close.len_utf8()].trim();
            break;
        }
    }
    text.to_string()
}

fn complete_text(backend: &AgentBackend, role: AgentRole, message: String) -> Result<(String, String), AgentError> {
    let request = backend.request(role, String::new(), message);
    let raw = backend.complete(&request)?;
    let text = clean_completion(&raw);
    if text.is_empty() {
        return Err(GatewayError::EmptyCompletion.into());
    }
    Ok((text, raw))
}

/// Rewrites the user prompt under the policy; the result is round 1.
pub fn refine_prompt(
    prompt: &UserPrompt,
    policy: &Policy,
    backend: &AgentBackend,
) -> Result<AgentOutput<RefinedPrompt>, AgentError> {
    let message = REFINER.render(&[
        ("user_input", prompt.text()),
        ("intent", policy.intent()),
        ("principles", policy.principles()),
        ("rules", policy.rules()),
    ]);
    let (text, raw) = complete_text(backend, AgentRole::Refiner, message)?;
    Ok(AgentOutput {
        value: RefinedPrompt::new(text, 1)?,
        responses: vec![raw],
    })
}

/// One failed atom with the validator's reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub atom: Atom,
    pub reason: String,
}

/// Atoms judged missing or contradicted in one verification round.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationIssues {
    pub missing: Vec<Issue>,
    pub contradicted: Vec<Issue>,
}

#[derive(Serialize)]
struct PayloadItem<'a> {
    atom: &'a str,
    category: &'a str,
    label: &'static str,
    reason: &'a str,
}

impl VerificationIssues {
    pub fn from_judgments(judgments: &[EntailmentJudgment]) -> Self {
        let mut issues = Self::default();
        for j in judgments {
            let issue = Issue {
                atom: j.pair.atom.clone(),
                reason: j.reason.clone(),
            };
            match j.label {
                EntailmentLabel::MS => issues.missing.push(issue),
                EntailmentLabel::CT => issues.contradicted.push(issue),
                EntailmentLabel::ET => {}
            }
        }
        issues
    }

    pub fn is_empty(&self) -> bool {
        self.missing.is_empty() && self.contradicted.is_empty()
    }

    /// Pretty JSON list of the failed atoms in atom order.
    pub fn payload(&self) -> String {
        let mut items: Vec<(usize, PayloadItem<'_>)> = Vec::new();
        for (list, label) in [(&self.missing, EntailmentLabel::MS), (&self.contradicted, EntailmentLabel::CT)] {
            items.extend(list.iter().map(|i| {
                (
                    i.atom.index,
                    PayloadItem {
                        atom: &i.atom.text,
                        category: i.atom.category.key(),
                        label: label.code(),
                        reason: &i.reason,
                    },
                )
            }));
        }
        items.sort_by_key(|(index, _)| *index);
        let items: Vec<_> = items.into_iter().map(|(_, item)| item).collect();
        serde_json::to_string_pretty(&items).expect("payload serializes")
    }
}

/// Repairs the refined prompt against the listed issues; the result is the
/// next round.
pub fn revise(
    prompt: &UserPrompt,
    refined: &RefinedPrompt,
    issues: &VerificationIssues,
    backend: &AgentBackend,
) -> Result<AgentOutput<RefinedPrompt>, AgentError> {
    if issues.is_empty() {
        return Err(AgentError::Precondition("revision needs at least one MS or CT atom".into()));
    }
    let payload = issues.payload();
    let message = REVISER.render(&[
        ("original_prompt", prompt.text()),
        ("refined_prompt", refined.text()),
        ("payload", &payload),
    ]);
    let (text, raw) = complete_text(backend, AgentRole::Reviser, message)?;
    Ok(AgentOutput {
        value: RefinedPrompt::new(text, refined.round() + 1)?,
        responses: vec![raw],
    })
}
