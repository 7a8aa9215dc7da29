//! Embedding contract: fixed 1024-dimensional unit-norm float32 vectors,
//! a provider abstraction with batching, a deterministic mock provider
//! for tests and offline runs, and the abstract-length enrichment gates.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Fixed embedding dimensionality; providers with any other dim are rejected.
pub const EMBEDDING_DIM: usize = 1024;

/// Norm tolerance for stored vectors.
pub const NORM_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("vector has {got} elements, expected {EMBEDDING_DIM}")]
    WrongLength { got: usize },
    #[error("vector contains a non-finite value at position {at}")]
    NonFinite { at: usize },
    #[error("expected an array of numbers")]
    NotAnArray,
    #[error("text at index {index} is empty")]
    EmptyText { index: usize },
    #[error("provider `{name}` declares dim {dim}, expected {EMBEDDING_DIM}")]
    WrongProviderDim { name: String, dim: usize },
    #[error("provider `{name}` returned {got} vectors for {expected} texts")]
    CountMismatch { name: String, got: usize, expected: usize },
    #[error("provider failure for text at index {index}: {detail}")]
    Provider { index: usize, detail: String },
}

/// A 1024-element, finite, 32-bit float vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self, EmbedError> {
        if values.len() != EMBEDDING_DIM {
            return Err(EmbedError::WrongLength { got: values.len() });
        }
        if let Some(at) = values.iter().position(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite { at });
        }
        Ok(EmbeddingVector(values))
    }

    /// Parse from a JSON array, validating length and finiteness.
    pub fn from_json(value: &Value) -> Result<Self, EmbedError> {
        let arr = value.as_array().ok_or(EmbedError::NotAnArray)?;
        let mut values = Vec::with_capacity(arr.len());
        for v in arr {
            let f = v.as_f64().ok_or(EmbedError::NotAnArray)?;
            values.push(f as f32);
        }
        EmbeddingVector::new(values)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn l2_norm(&self) -> f64 {
        self.0.iter().map(|v| (*v as f64) * (*v as f64)).sum::<f64>().sqrt()
    }

    /// Rescale to unit L2 norm. Zero vectors are left unchanged.
    pub fn normalized(mut self) -> Self {
        let norm = self.l2_norm();
        if norm > 0.0 {
            for v in &mut self.0 {
                *v = (*v as f64 / norm) as f32;
            }
        }
        self
    }

    /// Cosine similarity in f64. Bit-identical vectors score exactly 1.0.
    pub fn cosine(&self, other: &Self) -> f64 {
        if self.0 == other.0 {
            return 1.0;
        }
        let mut dot = 0.0f64;
        let mut na = 0.0f64;
        let mut nb = 0.0f64;
        for (a, b) in self.0.iter().zip(&other.0) {
            let (a, b) = (*a as f64, *b as f64);
            dot += a * b;
            na += a * a;
            nb += b * b;
        }
        if na == 0.0 || nb == 0.0 {
            return 0.0;
        }
        dot / (na.sqrt() * nb.sqrt())
    }
}

impl Serialize for EmbeddingVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for EmbeddingVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let values = Vec::<f32>::deserialize(deserializer)?;
        EmbeddingVector::new(values).map_err(D::Error::custom)
    }
}

/// Text role presented to the provider; the role prefix (e.g. "passage:")
/// is the provider's concern and never stored in record text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Passage,
    Query,
}

impl Role {
    pub fn prefix(self) -> &'static str {
        match self {
            Role::Passage => "passage: ",
            Role::Query => "query: ",
        }
    }
}

pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize {
        EMBEDDING_DIM
    }

    /// Largest batch the provider accepts per call; the module never
    /// exceeds it.
    fn max_batch(&self) -> usize {
        64
    }

    fn embed_batch(&self, role: Role, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError>;
}

fn check_provider(provider: &dyn EmbeddingProvider) -> Result<(), EmbedError> {
    if provider.dim() != EMBEDDING_DIM {
        return Err(EmbedError::WrongProviderDim {
            name: provider.name().to_string(),
            dim: provider.dim(),
        });
    }
    Ok(())
}

fn embed_with_role(
    provider: &dyn EmbeddingProvider,
    role: Role,
    texts: &[&str],
) -> Result<Vec<EmbeddingVector>, EmbedError> {
    check_provider(provider)?;
    if let Some(index) = texts.iter().position(|t| t.trim().is_empty()) {
        return Err(EmbedError::EmptyText { index });
    }
    let batch = provider.max_batch().max(1);
    let mut out = Vec::with_capacity(texts.len());
    for (chunk_no, chunk) in texts.chunks(batch).enumerate() {
        let vectors = provider.embed_batch(role, chunk).map_err(|e| match e {
            EmbedError::Provider { index, detail } => EmbedError::Provider {
                index: chunk_no * batch + index,
                detail,
            },
            other => other,
        })?;
        if vectors.len() != chunk.len() {
            return Err(EmbedError::CountMismatch {
                name: provider.name().to_string(),
                got: vectors.len(),
                expected: chunk.len(),
            });
        }
        // Enforce unit norm here even if the provider claims to normalize.
        out.extend(vectors.into_iter().map(EmbeddingVector::normalized));
    }
    Ok(out)
}

/// Embed passage texts, one unit-norm vector per text.
pub fn embed_passages(
    provider: &dyn EmbeddingProvider,
    texts: &[&str],
) -> Result<Vec<EmbeddingVector>, EmbedError> {
    embed_with_role(provider, Role::Passage, texts)
}

/// Embed a single query text.
pub fn embed_query(
    provider: &dyn EmbeddingProvider,
    text: &str,
) -> Result<EmbeddingVector, EmbedError> {
    let mut vectors = embed_with_role(provider, Role::Query, &[text])?;
    Ok(vectors.remove(0))
}

/// Deterministic test embedder: a seeded hash of the whitespace-normalized
/// text expands to 1024 pseudo-random values, then L2-normalizes. The role
/// is ignored so a query embeds identically to an equal passage, which the
/// retrieval tests rely on.
pub fn mock_embed(text: &str, _role: Role) -> EmbeddingVector {
    let normalized: Vec<&str> = text.split_whitespace().collect();
    let mut hasher = Sha256::new();
    hasher.update(b"mock-embed-v1");
    for token in &normalized {
        hasher.update([0u8]);
        hasher.update(token.as_bytes());
    }
    let seed: [u8; 32] = hasher.finalize().into();
    let mut rng = ChaCha20Rng::from_seed(seed);
    let mut values = Vec::with_capacity(EMBEDDING_DIM);
    for _ in 0..EMBEDDING_DIM {
        let v: f64 = StandardNormal.sample(&mut rng);
        values.push(v as f32);
    }
    EmbeddingVector(values).normalized()
}

/// The deterministic mock provider (unrestricted batch size).
#[derive(Debug, Clone, Copy, Default)]
pub struct MockEmbedder;

impl EmbeddingProvider for MockEmbedder {
    fn name(&self) -> &str {
        "mock"
    }

    fn max_batch(&self) -> usize {
        usize::MAX
    }

    fn embed_batch(&self, role: Role, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        Ok(texts.iter().map(|t| mock_embed(t, role)).collect())
    }
}

/// Enrichment eligibility of an abstract, by Unicode scalar count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnrichmentGate {
    /// Empty abstract: no enrichment at all.
    IneligibleEmpty,
    /// Under 100 characters: flagged as too short, no enrichment.
    FlaggedShort,
    /// Under 1,000 characters: no abstract embedding, subfield, or summary.
    IneligibleEnrichment,
    /// Eligible for all abstract-dependent enrichment.
    Eligible,
}

impl EnrichmentGate {
    pub fn eligible(self) -> bool {
        self == EnrichmentGate::Eligible
    }
}

/// Length thresholds for abstract-dependent enrichment.
pub const ABSTRACT_SHORT_CHARS: usize = 100;
pub const ABSTRACT_ENRICHMENT_CHARS: usize = 1000;

pub fn abstract_enrichment_gate(abstract_text: &str) -> EnrichmentGate {
    let chars = abstract_text.chars().count();
    if chars == 0 {
        EnrichmentGate::IneligibleEmpty
    } else if chars < ABSTRACT_SHORT_CHARS {
        EnrichmentGate::FlaggedShort
    } else if chars < ABSTRACT_ENRICHMENT_CHARS {
        EnrichmentGate::IneligibleEnrichment
    } else {
        EnrichmentGate::Eligible
    }
}

/// Adapter for an external model server: posts batched texts as JSON and
/// expects 1024-float arrays back.
pub struct ExternalEmbedder {
    endpoint: String,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct ExternalRequest<'a> {
    role: &'a str,
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct ExternalResponse {
    embeddings: Vec<Vec<f32>>,
}

impl ExternalEmbedder {
    pub fn new(endpoint: impl Into<String>) -> Self {
        ExternalEmbedder { endpoint: endpoint.into(), agent: ureq::Agent::new_with_defaults() }
    }
}

impl EmbeddingProvider for ExternalEmbedder {
    fn name(&self) -> &str {
        "external"
    }

    fn embed_batch(&self, role: Role, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let role = match role {
            Role::Passage => "passage",
            Role::Query => "query",
        };
        let body = ExternalRequest { role, texts };
        let mut response = self
            .agent
            .post(&self.endpoint)
            .send_json(&body)
            .map_err(|e| EmbedError::Provider { index: 0, detail: e.to_string() })?;
        let parsed: ExternalResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| EmbedError::Provider { index: 0, detail: e.to_string() })?;
        parsed.embeddings.into_iter().map(EmbeddingVector::new).collect()
    }
}
