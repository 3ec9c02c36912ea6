use serde_json::Value;

use super::template::ROUTER;
use super::{with_parse_retries, AgentBackend, AgentError, AgentOutput};
use crate::domain::{canonicalize_tag, AgentRole, RoutingDecision, UserPrompt};
use crate::gateway::extract_json_object;

/// Reads `{"label", "reason"}`; a bare tag label is accepted as well.
pub fn parse_routing(raw: &str) -> Result<RoutingDecision, String> {
    match extract_json_object(raw) {
        Ok(value) => {
            let label = value
                .get("label")
                .and_then(Value::as_str)
                .ok_or_else(|| "missing string field \"label\"".to_string())?;
            let tag = canonicalize_tag(label).map_err(|e| e.to_string())?;
            let reason = value.get("reason").and_then(Value::as_str).unwrap_or("");
            Ok(RoutingDecision::new(tag, reason, raw))
        }
        Err(e) => match canonicalize_tag(raw.trim().trim_end_matches('.')) {
            Ok(tag) => Ok(RoutingDecision::new(tag, "", raw)),
            Err(_) => Err(e.to_string()),
        },
    }
}

/// Classifies the prompt into one scenario tag. Never fails on bad output:
/// after three unparsable replies the non-difficult fallback is returned.
pub fn route_scenario(prompt: &UserPrompt, backend: &AgentBackend) -> Result<AgentOutput<RoutingDecision>, AgentError> {
    let request = backend.request(
        AgentRole::Router,
        String::new(),
        ROUTER.render(&[("P_in", prompt.text())]),
    );
    let (parsed, responses) = with_parse_retries(backend, &request, parse_routing, || "empty".to_string())?;
    let value = parsed.unwrap_or_else(|reason| {
        log::warn!("router fell back to non-difficult: {reason}");
        RoutingDecision::fallback(responses.last().cloned().unwrap_or_default())
    });
    Ok(AgentOutput { value, responses })
}
