//! Deterministic local embedders for tests and offline replay.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{EmbeddingBackend, GatewayError};

/// Maps every text to the same vector.
pub struct ConstantEmbedder(Vec<f64>);

impl ConstantEmbedder {
    pub fn new(vector: Vec<f64>) -> Self {
        Self(vector)
    }
}

impl EmbeddingBackend for ConstantEmbedder {
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, GatewayError> {
        Ok(texts.iter().map(|_| self.0.clone()).collect())
    }
}

/// Case-folded counts of `a`-`z` and `0`-`9`, followed by a constant bias
/// component so no text maps to the zero vector.
pub struct CharFrequencyEmbedder;

impl CharFrequencyEmbedder {
    pub const DIMENSION: usize = 37;

    pub fn vector(text: &str) -> Vec<f64> {
        let mut v = vec![0.0; Self::DIMENSION];
        for c in text.chars().flat_map(char::to_lowercase) {
            match c {
                'a'..='z' => v[c as usize - 'a' as usize] += 1.0,
                '0'..='9' => v[26 + c as usize - '0' as usize] += 1.0,
                _ => {}
            }
        }
        v[Self::DIMENSION - 1] = 1.0;
        v
    }
}

impl EmbeddingBackend for CharFrequencyEmbedder {
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, GatewayError> {
        Ok(texts.iter().map(|t| Self::vector(t)).collect())
    }
}

/// Embeds each text with an arbitrary function.
pub struct FnEmbedder<F>(F);

impl<F> FnEmbedder<F>
where
    F: Fn(&str) -> Vec<f64> + Send + Sync,
{
    pub fn new(f: F) -> Self {
        Self(f)
    }
}

impl<F> EmbeddingBackend for FnEmbedder<F>
where
    F: Fn(&str) -> Vec<f64> + Send + Sync,
{
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, GatewayError> {
        Ok(texts.iter().map(|t| (self.0)(t)).collect())
    }
}

/// Stub embedder selectable from a script fixture.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StubEmbedding {
    #[default]
    CharFrequency,
    Constant(Vec<f64>),
}

impl StubEmbedding {
    pub fn backend(&self) -> Arc<dyn EmbeddingBackend> {
        match self {
            StubEmbedding::CharFrequency => Arc::new(CharFrequencyEmbedder),
            StubEmbedding::Constant(v) => Arc::new(ConstantEmbedder::new(v.clone())),
        }
    }
}
