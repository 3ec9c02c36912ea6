//! Summary statistics over batch results: rounds used, acceptance, scenario
//! tags and prompt lengths.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::Serialize;

use super::{BatchResult, HarnessError};
use crate::domain::word_count;

pub const LENGTH_BUCKET_WIDTH: usize = 5;

/// Percentage rounded to two decimals.
fn percent(proportion: f64) -> f64 {
    (proportion * 10_000.0).round() / 100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundBucket {
    pub rounds_used: usize,
    pub count: usize,
    pub proportion: f64,
    pub percent: f64,
}

/// Histogram of rounds used over completed runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundStats {
    pub total: usize,
    pub buckets: Vec<RoundBucket>,
}

impl RoundStats {
    pub fn from_rounds<I: IntoIterator<Item = usize>>(rounds: I) -> Result<Self, HarnessError> {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for r in rounds {
            *counts.entry(r).or_default() += 1;
        }
        let total: usize = counts.values().sum();
        if total == 0 {
            return Err(HarnessError::NoResults);
        }
        let buckets = counts
            .into_iter()
            .map(|(rounds_used, count)| {
                let proportion = count as f64 / total as f64;
                RoundBucket {
                    rounds_used,
                    count,
                    proportion,
                    percent: percent(proportion),
                }
            })
            .collect();
        Ok(Self { total, buckets })
    }

    pub fn get(&self, rounds_used: usize) -> Option<&RoundBucket> {
        self.buckets.iter().find(|b| b.rounds_used == rounds_used)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShareCount {
    pub count: usize,
    pub proportion: f64,
    pub percent: f64,
}

/// Word-length bucket `[low, high]`, both inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LengthBucket {
    pub low: usize,
    pub high: usize,
    pub count: usize,
}

/// Contiguous buckets from the shortest to the longest prompt.
fn length_histogram<'a>(texts: impl Iterator<Item = &'a str>) -> Vec<LengthBucket> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for text in texts {
        *counts.entry(word_count(text) / LENGTH_BUCKET_WIDTH).or_default() += 1;
    }
    let (Some(&first), Some(&last)) = (counts.keys().next(), counts.keys().next_back()) else {
        return Vec::new();
    };
    (first..=last)
        .map(|b| LengthBucket {
            low: b * LENGTH_BUCKET_WIDTH,
            high: b * LENGTH_BUCKET_WIDTH + LENGTH_BUCKET_WIDTH - 1,
            count: counts.get(&b).copied().unwrap_or(0),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    /// All result lines, errors included.
    pub results: usize,
    pub errors: usize,
    pub rounds: RoundStats,
    pub accepted: usize,
    pub acceptance_rate: f64,
    pub tags: BTreeMap<String, ShareCount>,
    pub original_lengths: Vec<LengthBucket>,
    pub refined_lengths: Vec<LengthBucket>,
}

impl StatsReport {
    /// Fails with [`HarnessError::NoResults`] when no run completed.
    pub fn from_results(results: &[BatchResult]) -> Result<Self, HarnessError> {
        let completed: Vec<&BatchResult> = results.iter().filter(|r| r.rounds_used.is_some()).collect();
        let rounds = RoundStats::from_rounds(completed.iter().filter_map(|r| r.rounds_used))?;
        let n = completed.len();
        let accepted = completed.iter().filter(|r| r.accepted).count();

        let mut tag_counts: BTreeMap<String, usize> = BTreeMap::new();
        for tag in completed.iter().filter_map(|r| r.tag) {
            *tag_counts.entry(tag.label().to_string()).or_default() += 1;
        }
        let tags = tag_counts
            .into_iter()
            .map(|(tag, count)| {
                let proportion = count as f64 / n as f64;
                (
                    tag,
                    ShareCount {
                        count,
                        proportion,
                        percent: percent(proportion),
                    },
                )
            })
            .collect();

        Ok(Self {
            results: results.len(),
            errors: results.len() - n,
            rounds,
            accepted,
            acceptance_rate: accepted as f64 / n as f64,
            tags,
            original_lengths: length_histogram(completed.iter().filter_map(|r| r.original.as_deref())),
            refined_lengths: length_histogram(completed.iter().filter_map(|r| r.refined.as_deref())),
        })
    }

    /// Parses result lines (blank lines skipped) and summarizes them.
    pub fn from_jsonl(text: &str) -> Result<Self, HarnessError> {
        let mut results = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let result = serde_json::from_str(line).map_err(|e| HarnessError::Results {
                line: i + 1,
                message: e.to_string(),
            })?;
            results.push(result);
        }
        Self::from_results(&results)
    }
}

fn write_lengths(out: &mut String, title: &str, buckets: &[LengthBucket]) {
    let _ = writeln!(out, "{title}");
    for b in buckets {
        let _ = writeln!(out, "  {:>3}-{:<3}  {:>6}", b.low, b.high, b.count);
    }
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let _ = writeln!(out, "results: {} ({} completed, {} errors)", self.results, self.rounds.total, self.errors);
        let _ = writeln!(
            out,
            "acceptance rate: {:.2}% ({}/{})",
            percent(self.acceptance_rate),
            self.accepted,
            self.rounds.total
        );
        let _ = writeln!(out, "rounds used:");
        for b in &self.rounds.buckets {
            let _ = writeln!(out, "  {:>3}  {:>6}  {:>6.2}%", b.rounds_used, b.count, b.percent);
        }
        let _ = writeln!(out, "scenario tags:");
        let width = self.tags.keys().map(String::len).max().unwrap_or(0);
        for (tag, share) in &self.tags {
            let _ = writeln!(out, "  {tag:<width$}  {:>6}  {:>6.2}%", share.count, share.percent);
        }
        write_lengths(&mut out, "original prompt length (words):", &self.original_lengths);
        write_lengths(&mut out, "refined prompt length (words):", &self.refined_lengths);
        f.write_str(out.trim_end())
    }
}
