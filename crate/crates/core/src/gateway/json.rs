//! Recovery of a JSON object from free-form model output.

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JsonExtractError {
    #[error("no JSON object found in model output")]
    NoJsonFound,
    #[error("malformed JSON object: {0}")]
    MalformedJson(String),
}

/// Returns the first balanced top-level `{...}` block of `raw`, parsed.
///
/// Code-fence lines (```` ``` ```` / ```` ```json ````) are removed first. The
/// brace scan is string-aware, so braces inside JSON strings do not count.
pub fn extract_json_object(raw: &str) -> Result<Value, JsonExtractError> {
    let cleaned = strip_code_fences(raw);
    let start = cleaned.find('{').ok_or(JsonExtractError::NoJsonFound)?;
    let end = balanced_end(&cleaned[start..])
        .ok_or_else(|| JsonExtractError::MalformedJson("unbalanced braces".into()))?;
    let block = &cleaned[start..start + end];
    let value: Value =
        serde_json::from_str(block).map_err(|e| JsonExtractError::MalformedJson(e.to_string()))?;
    Ok(value)
}

fn strip_code_fences(raw: &str) -> String {
    raw.lines()
        .map(|line| {
            let trimmed = line.trim_start();
            match trimmed.strip_prefix("```") {
                // a fence may open inline: "```json {..."
                Some(rest) => rest.trim_start_matches(|c: char| c.is_ascii_alphanumeric()),
                None => line,
            }
        })
        .map(|line| line.trim_end().strip_suffix("```").unwrap_or(line))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Byte length of the balanced block starting at `text[0] == '{'`.
fn balanced_end(text: &str) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in text.char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    #[test]
    fn clean_object() {
        let v = extract_json_object(r#"{"label":"ET","reason":"ok"}"#).unwrap();
        assert_eq!(v.as_object().unwrap().len(), 2);
    }

    #[test]
    fn fenced_object_with_prose() {
        let v = extract_json_object("Sure! ```json\n{\"a\":1}\n```").unwrap();
        assert_eq!(v, json!({"a": 1}));
        let v = extract_json_object("```json\n{\"a\": {\"b\": \"}\"}}\n```\nHope this helps {").unwrap();
        assert_eq!(v, json!({"a": {"b": "}"}}));
    }

    #[test]
    fn absent_and_broken() {
        assert_eq!(extract_json_object("no braces here"), Err(JsonExtractError::NoJsonFound));
        assert!(matches!(extract_json_object("{\"a\": 1"), Err(JsonExtractError::MalformedJson(_))));
        assert!(matches!(extract_json_object("{a: 1}"), Err(JsonExtractError::MalformedJson(_))));
    }

    #[test]
    fn first_block_wins() {
        let v = extract_json_object(r#"first {"x": "\"{"} then {"y": 2}"#).unwrap();
        assert_eq!(v, json!({"x": "\"{"}));
    }

    fn arb_json() -> impl Strategy<Value = Value> {
        let leaf = prop_oneof![
            Just(Value::Null),
            any::<bool>().prop_map(Value::Bool),
            any::<i64>().prop_map(|n| json!(n)),
            "[ -~{}\"\\\\\u{e9}\u{4e2d}]{0,12}".prop_map(Value::String),
        ];
        leaf.prop_recursive(3, 24, 4, |inner| {
            prop_oneof![
                proptest::collection::vec(inner.clone(), 0..4).prop_map(Value::Array),
                proptest::collection::btree_map("[a-z{}\"]{0,5}", inner, 0..4)
                    .prop_map(|m| Value::Object(m.into_iter().collect())),
            ]
        })
    }

    proptest! {
        #[test]
        fn serialized_objects_round_trip(
            fields in proptest::collection::btree_map("[a-z{} ]{0,6}", arb_json(), 0..5),
            pretty in any::<bool>(),
        ) {
            let object = Value::Object(fields.into_iter().collect());
            let text = if pretty {
                serde_json::to_string_pretty(&object).unwrap()
            } else {
                serde_json::to_string(&object).unwrap()
            };
            prop_assert_eq!(extract_json_object(&text).unwrap(), object.clone());
            let wrapped = format!("Here you go:\n```json\n{text}\n```\nThanks!");
            prop_assert_eq!(extract_json_object(&wrapped).unwrap(), object);
        }
    }
}
