use serde::Serialize;
use serde_json::Value;

use super::template::ATOMIZER;
use super::{AgentBackend, AgentError, AgentOutput, ATTEMPTS_PER_CALL};
use crate::domain::{AgentRole, AtomCategory, AtomDictionary, DroppedAtom, UserPrompt};
use crate::gateway::{extract_json_object, GatewayError};

/// Result of atomization after verbatim enforcement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Atomization {
    pub dictionary: AtomDictionary,
    pub dropped: Vec<DroppedAtom>,
    /// Number of atoms the model returned before filtering.
    pub returned: usize,
    /// The call was repeated because filtering dropped most atoms.
    pub retried: bool,
}

impl Atomization {
    fn mostly_dropped(&self) -> bool {
        self.dropped.len() * 2 > self.returned
    }
}

pub fn atomizer_user_message(prompt: &UserPrompt) -> String {
    format!("User input:\n{}\n\nOutput:", prompt.text())
}

/// Parses the five-field JSON and keeps only verbatim atoms. Missing fields
/// count as empty; unknown keys are ignored.
pub fn parse_atomizer_output(prompt: &UserPrompt, raw: &str) -> Result<Atomization, String> {
    let value = extract_json_object(raw).map_err(|e| e.to_string())?;
    let mut candidates = Vec::new();
    for category in AtomCategory::ALL {
        match value.get(category.key()) {
            None | Some(Value::Null) => {}
            Some(Value::Array(items)) => {
                for item in items {
                    let text = item
                        .as_str()
                        .ok_or_else(|| format!("\"{category}\" must contain only strings"))?;
                    candidates.push((category, text.to_string()));
                }
            }
            Some(_) => return Err(format!("\"{category}\" must be a list")),
        }
    }
    let returned = candidates.len();
    let (dictionary, dropped) = AtomDictionary::from_candidates(prompt, candidates);
    for d in &dropped {
        log::info!("dropped atom {:?} ({}): {:?}", d.text, d.category, d.reason);
    }
    Ok(Atomization {
        dictionary,
        dropped,
        returned,
        retried: false,
    })
}

/// Extracts the atom dictionary of the user prompt. When filtering drops
/// more than half of the returned atoms the call is repeated once and the
/// repeat's result is used.
pub fn atomize(prompt: &UserPrompt, backend: &AgentBackend) -> Result<AgentOutput<Atomization>, AgentError> {
    let request = backend.request(
        AgentRole::Atomizer,
        ATOMIZER.body().to_string(),
        atomizer_user_message(prompt),
    );
    let mut responses = Vec::new();
    let mut first: Option<Atomization> = None;
    let mut detail = String::new();
    for _ in 0..ATTEMPTS_PER_CALL {
        let parsed = match backend.complete(&request) {
            Ok(raw) => {
                let parsed = parse_atomizer_output(prompt, &raw);
                responses.push(raw);
                parsed
            }
            Err(GatewayError::EmptyCompletion) => {
                responses.push(String::new());
                Err("empty completion".to_string())
            }
            Err(e) => return Err(e.into()),
        };
        match parsed {
            Ok(mut result) => match first {
                None if result.mostly_dropped() => {
                    log::warn!("atomizer: {} of {} atoms dropped, retrying", result.dropped.len(), result.returned);
                    first = Some(result);
                }
                Some(_) => {
                    result.retried = true;
                    return Ok(AgentOutput { value: result, responses });
                }
                None => return Ok(AgentOutput { value: result, responses }),
            },
            Err(e) => detail = e,
        }
    }
    match first {
        // the repeat never produced valid output; keep the filtered original
        Some(mut result) => {
            result.retried = true;
            Ok(AgentOutput { value: result, responses })
        }
        None => Err(AgentError::AtomSchema {
            attempts: ATTEMPTS_PER_CALL,
            detail,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::testing::replies;
    use crate::domain::DropReason;

    const CHESS: &str = "A cat plays chess with a dog while a parrot referees in a steampunk library.";
    const CHESS_JSON: &str = r#"{
  "characters": ["cat", "dog", "parrot"],
  "objects": ["chess"],
  "actions": ["plays", "referees"],
  "locations": ["library"],
  "scenery": ["steampunk"]
}"#;

    fn prompt(s: &str) -> UserPrompt {
        UserPrompt::new(s).unwrap()
    }

    #[test]
    fn worked_example() {
        let (b, chat) = replies(&[CHESS_JSON]);
        let out = atomize(&prompt(CHESS), &b).unwrap();
        let atoms = out.value.dictionary.flatten();
        let texts: Vec<_> = atoms.iter().map(|a| a.text.as_str()).collect();
        assert_eq!(texts, ["cat", "dog", "parrot", "chess", "plays", "referees", "library", "steampunk"]);
        assert!(!out.value.retried);
        let req = &chat.requests()[0];
        assert_eq!(req.system_prompt, ATOMIZER.body());
        assert_eq!(req.user_message, format!("User input:\n{CHESS}\n\nOutput:"));
    }

    #[test]
    fn non_substring_atom_is_dropped() {
        let raw = CHESS_JSON.replace("\"cat\"", "\"feline\"");
        let a = parse_atomizer_output(&prompt(CHESS), &raw).unwrap();
        assert_eq!(a.dictionary.len(), 7);
        assert_eq!(a.dropped[0].text, "feline");
        assert_eq!(a.dropped[0].reason, DropReason::NotVerbatim);
    }

    #[test]
    fn casing_is_enforced() {
        let a = parse_atomizer_output(&prompt(CHESS), r#"{"characters": ["Cat", "cat"]}"#).unwrap();
        assert_eq!(a.dictionary.len(), 1);
        assert_eq!(a.returned, 2);
    }

    #[test]
    fn multi_word_location() {
        let raw = r#"{"characters": ["Hope"], "objects": [], "actions": ["drifting"], "locations": ["somewhere far away"], "scenery": []}"#;
        let a = parse_atomizer_output(&prompt("Hope drifting somewhere far away."), raw).unwrap();
        assert_eq!(a.dictionary.len(), 3);
        assert_eq!(a.dictionary.field(AtomCategory::Locations), ["somewhere far away"]);
    }

    #[test]
    fn majority_drop_retries_once() {
        let bad = r#"{"characters": ["feline", "hound", "cat"]}"#;
        let (b, chat) = replies(&[bad, CHESS_JSON]);
        let out = atomize(&prompt(CHESS), &b).unwrap();
        assert!(out.value.retried);
        assert_eq!(out.value.dictionary.len(), 8);
        assert_eq!(chat.requests().len(), 2);

        // the repeat is used even if it is also poor
        let (b, chat) = replies(&[bad, bad, CHESS_JSON]);
        let out = atomize(&prompt(CHESS), &b).unwrap();
        assert_eq!(out.value.dictionary.len(), 1);
        assert_eq!(chat.remaining(), 1);
    }

    #[test]
    fn half_dropped_does_not_retry() {
        let (b, chat) = replies(&[r#"{"characters": ["feline", "cat"]}"#]);
        let out = atomize(&prompt(CHESS), &b).unwrap();
        assert!(!out.value.retried);
        assert_eq!(chat.requests().len(), 1);
    }

    #[test]
    fn schema_errors_exhaust() {
        let (b, _) = replies(&["none", r#"{"characters": "cat"}"#, r#"{"actions": [1]}"#]);
        let err = atomize(&prompt(CHESS), &b).unwrap_err();
        assert!(matches!(err, AgentError::AtomSchema { attempts: 3, .. }), "{err}");
    }

    #[test]
    fn empty_lists_give_an_empty_dictionary() {
        let (b, _) = replies(&["{}"]);
        let out = atomize(&prompt(CHESS), &b).unwrap();
        assert!(out.value.dictionary.is_empty());
    }
}
