use serde_json::Value;

use super::template::VALIDATOR;
use super::{with_parse_retries, AgentBackend, AgentError, AgentOutput};
use crate::domain::{AgentRole, EntailmentJudgment, EntailmentLabel, EvidencePair, RefinedPrompt};
use crate::gateway::extract_json_object;

pub const MAX_VALIDATOR_REASON_WORDS: usize = 25;

/// `Atom: …` leads so that a scripted backend can route replies by atom.
pub fn validator_user_message(pair: &EvidencePair, refined: Option<&RefinedPrompt>) -> String {
    let mut message = format!(
        "Atom: {}\nCategory: {}\n\nEvidence:\n{}",
        pair.atom.text, pair.atom.category, pair.chunk.text
    );
    if let Some(refined) = refined {
        message.push_str("\n\nRefined prompt:\n");
        message.push_str(refined.text());
    }
    message
}

/// Reads `{"label": "ET|MS|CT", "reason": …}`; the reason is cut to 25 words.
pub fn parse_judgment(raw: &str) -> Result<(EntailmentLabel, String), String> {
    let value = extract_json_object(raw).map_err(|e| e.to_string())?;
    let label = value
        .get("label")
        .and_then(Value::as_str)
        .ok_or_else(|| "missing string field \"label\"".to_string())?;
    let label = EntailmentLabel::parse(label).ok_or_else(|| format!("unknown label {label:?}"))?;
    let reason = value.get("reason").and_then(Value::as_str).unwrap_or("");
    let reason: Vec<&str> = reason.split_whitespace().take(MAX_VALIDATOR_REASON_WORDS).collect();
    Ok((label, reason.join(" ")))
}

/// Judges one atom against its evidence chunk. Three unparsable replies
/// yield MS with the `degraded` flag set.
pub fn validate_entailment(
    pair: &EvidencePair,
    refined: Option<&RefinedPrompt>,
    backend: &AgentBackend,
) -> Result<AgentOutput<EntailmentJudgment>, AgentError> {
    let request = backend.request(
        AgentRole::Validator,
        VALIDATOR.body().to_string(),
        validator_user_message(pair, refined),
    );
    let (parsed, responses) = with_parse_retries(backend, &request, parse_judgment, || "empty".to_string())?;
    let (label, reason, degraded) = match parsed {
        Ok((label, reason)) => (label, reason, false),
        Err(detail) => {
            log::warn!("validator degraded to MS for atom {:?}: {detail}", pair.atom.text);
            (EntailmentLabel::MS, format!("no valid judgment: {detail}"), true)
        }
    };
    Ok(AgentOutput {
        value: EntailmentJudgment {
            pair: pair.clone(),
            label,
            reason,
            degraded,
        },
        responses,
    })
}
