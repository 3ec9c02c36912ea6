use serde_json::Value;

use super::template::POLICY;
use super::{with_parse_retries, AgentBackend, AgentError, AgentOutput, TaxonomyEntry, ATTEMPTS_PER_CALL};
use crate::domain::{AgentRole, Policy, RoutingDecision, UserPrompt};
use crate::gateway::extract_json_object;

/// Strings pass through; lists of strings are joined one per line.
fn text_field(policy: &Value, key: &str) -> Result<String, String> {
    match policy.get(key) {
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
        Some(Value::Array(items)) if !items.is_empty() => items
            .iter()
            .map(|item| item.as_str().map(str::to_string))
            .collect::<Option<Vec<_>>>()
            .map(|lines| lines.join("\n"))
            .ok_or_else(|| format!("\"{key}\" list must contain only strings")),
        Some(_) => Err(format!("\"{key}\" must be a non-empty string")),
        None => Err(format!("missing \"{key}\"")),
    }
}

/// Reads `{"policy": {"intent", "principles", "rules"}}`. Extra keys at
/// either level are ignored.
pub fn parse_policy(raw: &str) -> Result<Policy, String> {
    let value = extract_json_object(raw).map_err(|e| e.to_string())?;
    let policy = value
        .get("policy")
        .filter(|p| p.is_object())
        .ok_or_else(|| "missing object \"policy\"".to_string())?;
    Policy::new(
        text_field(policy, "intent")?,
        text_field(policy, "principles")?,
        text_field(policy, "rules")?,
    )
    .map_err(|e| e.to_string())
}

pub fn synthesize_policy(
    prompt: &UserPrompt,
    decision: &RoutingDecision,
    taxonomy: &TaxonomyEntry,
    backend: &AgentBackend,
) -> Result<AgentOutput<Policy>, AgentError> {
    if taxonomy.tag != decision.tag {
        return Err(AgentError::Precondition(format!(
            "taxonomy entry {} does not match routed tag {}",
            taxonomy.tag, decision.tag
        )));
    }
    let request = backend.request(
        AgentRole::PolicyGenerator,
        String::new(),
        POLICY.render(&[
            ("p_user", prompt.text()),
            ("y_hat", decision.tag.label()),
            ("y_def", taxonomy.definition),
        ]),
    );
    let (parsed, responses) = with_parse_retries(backend, &request, parse_policy, || "empty completion".to_string())?;
    match parsed {
        Ok(value) => Ok(AgentOutput { value, responses }),
        Err(detail) => Err(AgentError::PolicySchema {
            attempts: ATTEMPTS_PER_CALL,
            detail,
        }),
    }
}
