//! Line-delimited JSON batch processing.
//!
//! Input lines are `{"id": …, "prompt": …}` records; output lines are
//! [`BatchResult`]s in input order, one per input line, with failures
//! reported in place.

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use serde::{Deserialize, Serialize};

use super::{refine_one, AppConfig, BackendSource};
use crate::domain::{RefinementTrace, ScenarioTag, UserPrompt};
use crate::orchestrator::PipelineFailure;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub id: String,
    pub prompt: String,
}

/// Parses one input line into a record and its validated prompt.
pub fn parse_record(line: &str) -> Result<(BatchRecord, UserPrompt), String> {
    let record: BatchRecord = serde_json::from_str(line).map_err(|e| format!("malformed record: {e}"))?;
    if let Some(v) = record.schema_version {
        if v != SCHEMA_VERSION {
            return Err(format!("unsupported schema_version {v}"));
        }
    }
    if record.id.trim().is_empty() {
        return Err("record id must not be empty".into());
    }
    let prompt = UserPrompt::new(record.prompt.clone()).map_err(|e| e.to_string())?;
    Ok((record, prompt))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResultStatus {
    Accepted,
    /// The round budget ran out without acceptance.
    Exhausted,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub schema_version: u32,
    /// 1-based input line.
    pub line: usize,
    /// Record id, or `line-N` when the line could not be parsed.
    pub id: String,
    pub status: ResultStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refined: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<ScenarioTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds_used: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contradiction: Option<f64>,
    pub accepted: bool,
    #[serde(default)]
    pub routing_fallback: bool,
    #[serde(default)]
    pub validator_degraded: bool,
    #[serde(default)]
    pub atomizer_retried: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl BatchResult {
    fn error(line: usize, id: String, original: Option<String>, message: String) -> Self {
        BatchResult {
            schema_version: SCHEMA_VERSION,
            line,
            id,
            status: ResultStatus::Error,
            original,
            refined: None,
            tag: None,
            rounds_used: None,
            coverage: None,
            contradiction: None,
            accepted: false,
            routing_fallback: false,
            validator_degraded: false,
            atomizer_retried: false,
            error: Some(message),
        }
    }

    pub fn from_trace(line: usize, id: String, trace: &RefinementTrace) -> Self {
        let last = &trace.rounds.last().expect("traces have rounds").report;
        BatchResult {
            schema_version: SCHEMA_VERSION,
            line,
            id,
            status: if trace.accepted {
                ResultStatus::Accepted
            } else {
                ResultStatus::Exhausted
            },
            original: Some(trace.user_prompt.text().to_string()),
            refined: Some(trace.final_prompt.text().to_string()),
            tag: Some(trace.tag()),
            rounds_used: Some(trace.rounds_used),
            coverage: Some(last.metrics.coverage()),
            contradiction: Some(last.metrics.contradiction()),
            accepted: trace.accepted,
            routing_fallback: trace.routing.fallback,
            validator_degraded: trace.rounds.iter().any(|r| r.report.has_degraded_judgment()),
            atomizer_retried: trace.atomizer_retried,
            error: None,
        }
    }

    pub fn from_failure(line: usize, id: String, original: &UserPrompt, failure: &PipelineFailure) -> Self {
        let mut result = Self::error(line, id, Some(original.text().to_string()), failure.error.to_string());
        if let Some(routing) = &failure.partial.routing {
            result.tag = Some(routing.tag);
            result.routing_fallback = routing.fallback;
        }
        result
    }
}

fn process_line(line_no: usize, line: &str, duplicate: bool, source: &BackendSource, config: &AppConfig) -> BatchResult {
    let fallback_id = format!("line-{line_no}");
    if line.trim().is_empty() {
        return BatchResult::error(line_no, fallback_id, None, "blank line".into());
    }
    let (record, prompt) = match parse_record(line) {
        Ok(parsed) => parsed,
        Err(message) => return BatchResult::error(line_no, fallback_id, None, message),
    };
    if duplicate {
        return BatchResult::error(line_no, record.id, Some(record.prompt), "duplicate record id".into());
    }
    match refine_one(&prompt, Some(&record.id), source, config) {
        Ok(trace) => BatchResult::from_trace(line_no, record.id, &trace),
        Err(failure) => {
            log::warn!("record {} failed: {}", record.id, failure.error);
            BatchResult::from_failure(line_no, record.id, &prompt, &failure)
        }
    }
}

/// Flags every line whose id already appeared on an earlier line.
fn duplicate_flags(lines: &[&str]) -> Vec<bool> {
    let mut seen = HashSet::new();
    lines
        .iter()
        .map(|line| match serde_json::from_str::<BatchRecord>(line) {
            Ok(record) => !seen.insert(record.id),
            Err(_) => false,
        })
        .collect()
}

/// Processes every line of `input` with up to `workers` concurrent
/// pipelines. Returns exactly one result per line, in input order.
pub fn run_batch(input: &str, source: &BackendSource, config: &AppConfig, workers: usize) -> Vec<BatchResult> {
    let lines: Vec<&str> = input.lines().collect();
    let duplicates = duplicate_flags(&lines);
    let workers = workers.clamp(1, lines.len().max(1));
    let next = AtomicUsize::new(0);
    let done = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<BatchResult>>> = Mutex::new(vec![None; lines.len()]);
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(line) = lines.get(i) else { break };
                let result = process_line(i + 1, line, duplicates[i], source, config);
                slots.lock().expect("result slots")[i] = Some(result);
                let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
                log::info!("{finished}/{} records done", lines.len());
            });
        }
    });
    slots
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|slot| slot.expect("every line processed"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_parsing() {
        let (r, p) = parse_record(r#"{"id": "a", "prompt": "A kite."}"#).unwrap();
        assert_eq!((r.id.as_str(), p.text()), ("a", "A kite."));
        assert!(parse_record(r#"{"id": "a", "prompt": "  "}"#).is_err());
        assert!(parse_record(r#"{"id": "", "prompt": "x"}"#).is_err());
        assert!(parse_record(r#"{"id": "a"}"#).is_err());
        assert!(parse_record(r#"{"id": "a", "prompt": "x", "schema_version": 2}"#).is_err());
        assert!(parse_record(r#"{"id": "a", "prompt": "x", "schema_version": 1}"#).is_ok());
        assert!(parse_record("not json").is_err());
    }

    #[test]
    fn duplicates_after_first() {
        let lines = [r#"{"id":"a","prompt":"x"}"#, "junk", r#"{"id":"a","prompt":"y"}"#];
        assert_eq!(duplicate_flags(&lines), [false, false, true]);
    }

    #[test]
    fn error_records_round_trip() {
        let r = BatchResult::error(3, "line-3".into(), None, "blank line".into());
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(
            json,
            r#"{"schema_version":1,"line":3,"id":"line-3","status":"error","accepted":false,"routing_fallback":false,"validator_degraded":false,"atomizer_retried":false,"error":"blank line"}"#
        );
        assert_eq!(serde_json::from_str::<BatchResult>(&json).unwrap(), r);
    }
}
