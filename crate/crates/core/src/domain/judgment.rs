use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Atom, DomainError};

/// A non-overlapping, sentence-level evidence unit of the refined prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub text: String,
    pub index: usize,
}

/// Cosine similarities between every atom (rows) and every chunk (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SimilarityMatrix {
    rows: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, DomainError> {
        let width = rows.first().map_or(0, Vec::len);
        for row in &rows {
            if row.len() != width {
                return Err(DomainError::Invariant("similarity matrix rows differ in length".into()));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite() || v.abs() > 1.0) {
                return Err(DomainError::Invariant(format!("similarity {v} outside [-1, 1]")));
            }
        }
        Ok(Self { rows })
    }

    pub fn n_atoms(&self) -> usize {
        self.rows.len()
    }

    pub fn n_chunks(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn get(&self, atom: usize, chunk: usize) -> f64 {
        self.rows[atom][chunk]
    }

    pub fn row(&self, atom: usize) -> &[f64] {
        &self.rows[atom]
    }

    /// Column with the largest similarity in `atom`'s row; the first
    /// (smallest-index) column wins ties.
    pub fn argmax(&self, atom: usize) -> Option<usize> {
        let row = &self.rows[atom];
        let mut best: Option<usize> = None;
        for (j, &v) in row.iter().enumerate() {
            if best.is_none_or(|b| v > row[b]) {
                best = Some(j);
            }
        }
        best
    }
}

impl TryFrom<Vec<Vec<f64>>> for SimilarityMatrix {
    type Error = DomainError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        Self::new(rows)
    }
}

impl From<SimilarityMatrix> for Vec<Vec<f64>> {
    fn from(m: SimilarityMatrix) -> Self {
        m.rows
    }
}

/// An atom paired with its best-matching chunk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidencePair {
    pub atom: Atom,
    pub chunk: Chunk,
    pub similarity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EntailmentLabel {
    /// The evidence supports the atom.
    ET,
    /// The evidence gives little or no support.
    MS,
    /// The evidence states something incompatible with the atom.
    CT,
}

impl EntailmentLabel {
    pub const ALL: [EntailmentLabel; 3] = [EntailmentLabel::ET, EntailmentLabel::MS, EntailmentLabel::CT];

    pub fn code(self) -> &'static str {
        match self {
            EntailmentLabel::ET => "ET",
            EntailmentLabel::MS => "MS",
            EntailmentLabel::CT => "CT",
        }
    }

    /// Parses an exact label code, ignoring surrounding whitespace.
    pub fn parse(raw: &str) -> Option<Self> {
        match raw.trim() {
            "ET" => Some(EntailmentLabel::ET),
            "MS" => Some(EntailmentLabel::MS),
            "CT" => Some(EntailmentLabel::CT),
            _ => None,
        }
    }
}

impl fmt::Display for EntailmentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntailmentJudgment {
    pub pair: EvidencePair,
    pub label: EntailmentLabel,
    pub reason: String,
    /// No parsable label was obtained; `label` is the MS default.
    #[serde(default)]
    pub degraded: bool,
}

/// Coverage and contradiction rates over one round's judgments.
///
/// Built from integer counts so that strict acceptance never depends on
/// floating-point equality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MetricFields")]
pub struct VerificationMetrics {
    coverage: f64,
    contradiction: f64,
    n_atoms: usize,
    entailed: usize,
    contradicted: usize,
    degenerate: bool,
}

#[derive(Deserialize)]
struct MetricFields {
    n_atoms: usize,
    entailed: usize,
    contradicted: usize,
}

impl TryFrom<MetricFields> for VerificationMetrics {
    type Error = DomainError;

    fn try_from(f: MetricFields) -> Result<Self, Self::Error> {
        VerificationMetrics::from_counts(f.entailed, f.contradicted, f.n_atoms)
    }
}

impl VerificationMetrics {
    /// With `n_atoms == 0` the metrics are degenerate: coverage 1,
    /// contradiction 0, and the `degenerate` flag set.
    pub fn from_counts(entailed: usize, contradicted: usize, n_atoms: usize) -> Result<Self, DomainError> {
        if entailed + contradicted > n_atoms {
            return Err(DomainError::InvalidCounts {
                entailed,
                contradicted,
                total: n_atoms,
            });
        }
        if n_atoms == 0 {
            return Ok(Self {
                coverage: 1.0,
                contradiction: 0.0,
                n_atoms,
                entailed,
                contradicted,
                degenerate: true,
            });
        }
        Ok(Self {
            coverage: entailed as f64 / n_atoms as f64,
            contradiction: contradicted as f64 / n_atoms as f64,
            n_atoms,
            entailed,
            contradicted,
            degenerate: false,
        })
    }

    pub fn coverage(&self) -> f64 {
        self.coverage
    }

    pub fn contradiction(&self) -> f64 {
        self.contradiction
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn entailed(&self) -> usize {
        self.entailed
    }

    pub fn contradicted(&self) -> usize {
        self.contradicted
    }

    pub fn missing(&self) -> usize {
        self.n_atoms - self.entailed - self.contradicted
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Every atom entailed and none contradicted, decided on counts.
    pub fn meets_strict_criterion(&self) -> bool {
        self.degenerate || (self.entailed == self.n_atoms && self.contradicted == 0)
    }
}

/// Result of one verification round over a refined prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub chunks: Vec<Chunk>,
    pub judgments: Vec<EntailmentJudgment>,
    pub metrics: VerificationMetrics,
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity: Option<SimilarityMatrix>,
}

impl VerificationReport {
    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.judgments.iter().map(|j| &j.pair.atom)
    }

    pub fn labels(&self) -> Vec<EntailmentLabel> {
        self.judgments.iter().map(|j| j.label).collect()
    }

    pub fn has_degraded_judgment(&self) -> bool {
        self.judgments.iter().any(|j| j.degraded)
    }
}
