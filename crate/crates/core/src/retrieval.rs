//! Exact flat-index retrieval over unit-norm vectors, MMR reranking,
//! filtered recommendation over abstract embeddings, and grounded-context
//! assembly for question answering.
//!
//! The index is an exhaustive scan by design: at desk scale exactness is
//! cheap and lets every search be checked against a brute-force oracle.
//! The interface leaves room for approximate backends later.

use std::collections::HashMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::embedding::{embed_query, EmbeddingProvider, EmbeddingVector, EMBEDDING_DIM};
use crate::exec;
use crate::record::{CorpusRecord, ParagraphKey};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("vector for `{id}` has {got} elements, expected {expected}")]
    DimensionMismatch { id: String, got: usize, expected: usize },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("vector for `{id}` is not unit-norm (|v| = {norm:.6})")]
    NormViolation { id: String, norm: f64 },
    #[error("query has {got} elements, expected {expected}")]
    QueryDimension { got: usize, expected: usize },
    #[error("unknown corpus id {0}")]
    UnknownCorpusId(u64),
    #[error("embedding failure: {0}")]
    Embed(#[from] crate::embedding::EmbedError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed index file: {0}")]
    BadIndexFile(String),
}

/// Scan metric. Under unit-norm rows the two rankings coincide; scores
/// are reported as cosine similarity either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    InnerProduct,
    L2,
}

/// One search result: an id and its cosine similarity to the query.
/// Hits sort by score descending with ties broken by id ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchHit {
    pub id: String,
    pub score: f64,
}

/// Immutable flat index: an id table plus a row-major unit-norm matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dim: usize,
    metric: Metric,
    ids: Vec<String>,
    matrix: Vec<f32>,
    by_id: HashMap<String, usize>,
}

const INDEX_MAGIC: &[u8; 8] = b"LFIDX001";
const ROW_NORM_TOLERANCE: f64 = 1e-3;

impl VectorIndex {
    /// Build an index from `(id, vector)` pairs. Rejects duplicate ids and
    /// rows that are not unit-norm within 1e-3.
    pub fn build(
        items: impl IntoIterator<Item = (String, EmbeddingVector)>,
        metric: Metric,
    ) -> Result<Self, RetrievalError> {
        let mut ids = Vec::new();
        let mut matrix = Vec::new();
        let mut by_id = HashMap::new();
        for (id, vector) in items {
            if by_id.contains_key(&id) {
                return Err(RetrievalError::DuplicateId(id));
            }
            let norm = vector.l2_norm();
            if (norm - 1.0).abs() > ROW_NORM_TOLERANCE {
                return Err(RetrievalError::NormViolation { id, norm });
            }
            by_id.insert(id.clone(), ids.len());
            ids.push(id);
            matrix.extend_from_slice(vector.as_slice());
        }
        Ok(VectorIndex { dim: EMBEDDING_DIM, metric, ids, matrix, by_id })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.matrix[i * self.dim..(i + 1) * self.dim]
    }

    /// The stored vector for an id.
    pub fn vector(&self, id: &str) -> Option<&[f32]> {
        self.by_id.get(id).map(|&i| self.row(i))
    }

    /// Exact top-k by the index metric; `k` is clamped to the index size.
    pub fn search(&self, query: &[f32], k: usize) -> Result<Vec<SearchHit>, RetrievalError> {
        if query.len() != self.dim {
            return Err(RetrievalError::QueryDimension { got: query.len(), expected: self.dim });
        }
        let scores = exec::map_range(self.len(), |i| dot(self.row(i), query));
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .expect("scores are finite")
                .then_with(|| self.ids[a].cmp(&self.ids[b]))
        });
        Ok(order
            .into_iter()
            .take(k.min(self.len()))
            .map(|i| SearchHit { id: self.ids[i].clone(), score: scores[i] })
            .collect())
    }

    /// Persist as header (dim, metric, count) + id table + row-major
    /// little-endian f32 matrix.
    pub fn save(&self, path: &Path) -> Result<(), RetrievalError> {
        let mut out = Vec::with_capacity(16 + self.matrix.len() * 4);
        out.extend_from_slice(INDEX_MAGIC);
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.push(match self.metric {
            Metric::InnerProduct => 0,
            Metric::L2 => 1,
        });
        out.extend_from_slice(&(self.ids.len() as u64).to_le_bytes());
        for id in &self.ids {
            out.extend_from_slice(&(id.len() as u32).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
        }
        for v in &self.matrix {
            out.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, RetrievalError> {
        let mut file = std::io::BufReader::new(fs::File::open(path)?);
        let mut magic = [0u8; 8];
        file.read_exact(&mut magic)?;
        if &magic != INDEX_MAGIC {
            return Err(RetrievalError::BadIndexFile("bad magic".into()));
        }
        let mut u32buf = [0u8; 4];
        file.read_exact(&mut u32buf)?;
        let dim = u32::from_le_bytes(u32buf) as usize;
        if dim != EMBEDDING_DIM {
            return Err(RetrievalError::BadIndexFile(format!("dim {dim}")));
        }
        let mut mbuf = [0u8; 1];
        file.read_exact(&mut mbuf)?;
        let metric = match mbuf[0] {
            0 => Metric::InnerProduct,
            1 => Metric::L2,
            other => return Err(RetrievalError::BadIndexFile(format!("metric byte {other}"))),
        };
        let mut u64buf = [0u8; 8];
        file.read_exact(&mut u64buf)?;
        let count = u64::from_le_bytes(u64buf) as usize;

        let mut ids = Vec::with_capacity(count);
        let mut by_id = HashMap::with_capacity(count);
        for i in 0..count {
            file.read_exact(&mut u32buf)?;
            let len = u32::from_le_bytes(u32buf) as usize;
            let mut name = vec![0u8; len];
            file.read_exact(&mut name)?;
            let id = String::from_utf8(name)
                .map_err(|_| RetrievalError::BadIndexFile("non-utf8 id".into()))?;
            if by_id.insert(id.clone(), i).is_some() {
                return Err(RetrievalError::DuplicateId(id));
            }
            ids.push(id);
        }
        let mut matrix = vec![0f32; count * dim];
        let mut fbuf = [0u8; 4];
        for v in matrix.iter_mut() {
            file.read_exact(&mut fbuf)?;
            *v = f32::from_le_bytes(fbuf);
        }
        Ok(VectorIndex { dim, metric, ids, matrix, by_id })
    }
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum()
}

/// Greedy maximal-marginal-relevance reranking: repeatedly pick the
/// candidate maximizing `lambda * sim(query, d) - (1 - lambda) * max
/// sim(d, selected)`. The first pick is the top-relevance hit and ties
/// keep the original rank order.
pub fn mmr_rerank(
    hits: &[SearchHit],
    index: &VectorIndex,
    lambda: f64,
    m: usize,
) -> Vec<SearchHit> {
    let m = m.min(hits.len());
    if m == 0 {
        return Vec::new();
    }
    let vectors: Vec<&[f32]> = hits
        .iter()
        .map(|h| index.vector(&h.id).expect("hits come from this index"))
        .collect();

    let mut selected: Vec<usize> = vec![0];
    let mut remaining: Vec<usize> = (1..hits.len()).collect();
    while selected.len() < m && !remaining.is_empty() {
        let mut best_pos = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (pos, &cand) in remaining.iter().enumerate() {
            let max_sim = selected
                .iter()
                .map(|&s| dot(vectors[cand], vectors[s]))
                .fold(f64::NEG_INFINITY, f64::max);
            let score = lambda * hits[cand].score - (1.0 - lambda) * max_sim;
            if score > best_score {
                best_score = score;
                best_pos = pos;
            }
        }
        selected.push(remaining.remove(best_pos));
    }
    selected.into_iter().map(|i| hits[i].clone()).collect()
}

/// Metadata projection carried with recommendation results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub corpus_id: u64,
    pub title: Option<String>,
    pub authors: Vec<String>,
    pub venue: Option<String>,
    pub year: Option<i64>,
    pub doi: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tldr: Option<String>,
    pub open_access: bool,
    #[serde(skip_serializing_if = "HashMap::is_empty")]
    pub subfields: HashMap<String, f64>,
}

/// One recommendation: similarity score plus the metadata projection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub id: String,
    pub score: f64,
    pub entry: CatalogEntry,
}

/// Filters applied to recommendation candidates before any reranking.
#[derive(Debug, Clone, Default)]
pub struct RecommendFilter {
    pub year_range: Option<(i64, i64)>,
    pub subfield_min: Option<(String, f64)>,
    pub open_access_only: bool,
}

impl RecommendFilter {
    fn accepts(&self, entry: &CatalogEntry) -> bool {
        if let Some((lo, hi)) = self.year_range {
            match entry.year {
                Some(y) if y >= lo && y <= hi => {}
                _ => return false,
            }
        }
        if let Some((label, min)) = &self.subfield_min {
            match entry.subfields.get(label) {
                Some(score) if *score >= *min => {}
                _ => return false,
            }
        }
        if self.open_access_only && !entry.open_access {
            return false;
        }
        true
    }
}

/// Abstract-level search surface: a flat index over abstract embeddings
/// plus per-record metadata projections. Records lacking a valid abstract
/// embedding are excluded at load.
pub struct AbstractCatalog {
    index: VectorIndex,
    entries: HashMap<String, CatalogEntry>,
}

/// How many candidates to over-fetch before filtering: `4 * k`, clamped
/// to the index size (+1 covers self-exclusion in paper-as-query mode).
const OVERFETCH_FACTOR: usize = 4;

/// Recommendation query: a known paper or free text.
#[derive(Debug, Clone)]
pub enum RecommendQuery {
    CorpusId(u64),
    Text(String),
}

impl AbstractCatalog {
    pub fn build(records: &[CorpusRecord]) -> Result<Self, RetrievalError> {
        let mut items = Vec::new();
        let mut entries = HashMap::new();
        for record in records {
            let Some(embedding) = &record.abstract_embedding else {
                continue;
            };
            let id = record.corpus_id.to_string();
            let subfields = match &record.predicted_subfield {
                Some(serde_json::Value::Object(map)) => map
                    .iter()
                    .filter_map(|(k, v)| v.as_f64().map(|s| (k.clone(), s)))
                    .collect(),
                _ => HashMap::new(),
            };
            entries.insert(
                id.clone(),
                CatalogEntry {
                    corpus_id: record.corpus_id,
                    title: record.metadata.title.clone(),
                    authors: record.metadata.author_names(),
                    venue: record.metadata.venue.clone(),
                    year: record.metadata.year,
                    doi: record.metadata.doi().map(str::to_string),
                    tldr: record.tldr.clone(),
                    open_access: record.metadata.isopenaccess.unwrap_or(false),
                    subfields,
                },
            );
            items.push((id, embedding.clone()));
        }
        Ok(AbstractCatalog { index: VectorIndex::build(items, Metric::InnerProduct)?, entries })
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn index(&self) -> &VectorIndex {
        &self.index
    }

    /// Retrieve papers similar to a known paper or to free text, applying
    /// filters before optional MMR diversification. In paper-as-query
    /// mode the query paper itself is excluded.
    pub fn recommend(
        &self,
        query: &RecommendQuery,
        filter: &RecommendFilter,
        k: usize,
        mmr_lambda: Option<f64>,
        provider: &dyn EmbeddingProvider,
    ) -> Result<Vec<Recommendation>, RetrievalError> {
        let (query_vec, exclude_id) = match query {
            RecommendQuery::CorpusId(id) => {
                let key = id.to_string();
                let vector = self
                    .index
                    .vector(&key)
                    .ok_or(RetrievalError::UnknownCorpusId(*id))?
                    .to_vec();
                (vector, Some(key))
            }
            RecommendQuery::Text(text) => {
                let v = embed_query(provider, text)?;
                (v.as_slice().to_vec(), None)
            }
        };

        let overfetch = (OVERFETCH_FACTOR * k + 1).min(self.index.len());
        let hits = self.index.search(&query_vec, overfetch)?;
        let filtered: Vec<SearchHit> = hits
            .into_iter()
            .filter(|h| Some(&h.id) != exclude_id.as_ref())
            .filter(|h| self.entries.get(&h.id).is_some_and(|e| filter.accepts(e)))
            .collect();

        let picked = match mmr_lambda {
            Some(lambda) => mmr_rerank(&filtered, &self.index, lambda, k),
            None => filtered.into_iter().take(k).collect(),
        };
        Ok(picked
            .into_iter()
            .map(|hit| {
                let entry = self.entries[&hit.id].clone();
                Recommendation { id: hit.id, score: hit.score, entry }
            })
            .collect())
    }
}

/// One retrieved paragraph ready for context assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextItem {
    pub key: ParagraphKey,
    pub text: String,
    pub title: Option<String>,
    pub authors: Vec<String>,
    pub year: Option<i64>,
    pub doi: Option<String>,
}

impl ContextItem {
    /// Build from a paragraph-level hit and its source record.
    pub fn from_record(key: ParagraphKey, record: &CorpusRecord) -> Option<Self> {
        let text = record.paragraphs.get(&key)?.clone();
        Some(ContextItem {
            key,
            text,
            title: record.metadata.title.clone(),
            authors: record.metadata.author_names(),
            year: record.metadata.year,
            doi: record.metadata.doi().map(str::to_string),
        })
    }
}

/// One deduplicated document reference with the paragraph keys it
/// contributed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reference {
    pub corpus_id: u64,
    pub title: Option<String>,
    pub authors: Vec<String>,
    pub year: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub doi: Option<String>,
    pub keys: Vec<String>,
}

/// Assembled grounding context: labeled paragraphs, a deduplicated
/// reference list, and the full prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledContext {
    pub context_block: String,
    pub references: Vec<Reference>,
    pub prompt: String,
}

/// Label each retrieved paragraph with its key, deduplicate references
/// per document, and produce a prompt instructing the model to cite
/// using paragraph IDs in parentheses.
pub fn assemble_context(items: &[ContextItem], question: &str) -> AssembledContext {
    let mut block_lines = Vec::with_capacity(items.len());
    let mut references: Vec<Reference> = Vec::new();
    for item in items {
        block_lines.push(format!("[{}] {}", item.key, item.text));
        match references.iter_mut().find(|r| r.corpus_id == item.key.corpus_id) {
            Some(reference) => reference.keys.push(item.key.to_string()),
            None => references.push(Reference {
                corpus_id: item.key.corpus_id,
                title: item.title.clone(),
                authors: item.authors.clone(),
                year: item.year,
                doi: item.doi.clone(),
                keys: vec![item.key.to_string()],
            }),
        }
    }
    let context_block = block_lines.join("\n");
    let prompt = format!(
        "Answer the question in a coherent paragraph, citing supporting statements \
         using paragraph IDs in parentheses.\n\nQuestion: {question}\n\nContext:\n{context_block}\n"
    );
    AssembledContext { context_block, references, prompt }
}

/// Answer synthesis boundary. Production deployments plug an LLM client
/// in here; the template echo below keeps tests hermetic.
pub trait AnswerSynthesizer: Send + Sync {
    fn answer(&self, prompt: &str) -> String;
}

/// Echoes the prompt structure without external generation.
#[derive(Debug, Clone, Copy, Default)]
pub struct TemplateEcho;

impl AnswerSynthesizer for TemplateEcho {
    fn answer(&self, prompt: &str) -> String {
        format!("[no-model answer]\n{prompt}")
    }
}
