//! Canonical record schema: one JSON object per paper, holding metadata,
//! reconstructed text, paragraph chunks keyed `{corpus_id}P{index}`,
//! aligned embeddings, optional enrichment fields, and raw license
//! evidence from the three metadata sources.
//!
//! Parsing is strict: it is the gate into the processing pipeline, and a
//! record that parses satisfies every structural invariant (key pattern,
//! paragraph/embedding alignment, contiguous indices, 1024-float vectors).
//! Diagnostic validation of arbitrary records happens in [`crate::validate`],
//! which deliberately works on raw JSON instead.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::embedding::EmbeddingVector;

/// Top-level keys, in wire order. Everything else is a schema violation.
pub const TOP_LEVEL_KEYS: [&str; 13] = [
    "schema_version",
    "corpus_id",
    "metadata",
    "abstract",
    "fulltext",
    "paragraphs",
    "embeddings",
    "abstract_embedding",
    "predicted_subfield",
    "tldr",
    "unpaywall_license",
    "crossref_license",
    "openalex_license",
];

/// Keys that must be present (the license slots may be null but not absent).
pub const REQUIRED_KEYS: [&str; 10] = [
    "schema_version",
    "corpus_id",
    "metadata",
    "abstract",
    "fulltext",
    "paragraphs",
    "embeddings",
    "unpaywall_license",
    "crossref_license",
    "openalex_license",
];

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("record is not a JSON object")]
    NotAnObject,
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("unknown top-level key `{0}`")]
    UnknownTopLevelKey(String),
    #[error("type mismatch for `{field}`: {detail}")]
    TypeMismatch { field: String, detail: String },
    #[error("key `{0}` violates the `{{corpus_id}}P{{index}}` pattern")]
    PatternViolation(String),
    #[error("duplicate paragraph key `{0}`")]
    DuplicateKey(String),
    #[error("paragraphs must contain at least one entry")]
    EmptyParagraphs,
    #[error("paragraph and embedding key sets differ")]
    KeyMismatch,
    #[error("paragraph key `{key}` does not belong to corpus_id {corpus_id}")]
    ForeignKey { key: String, corpus_id: u64 },
    #[error("paragraph indices are not contiguous from 0")]
    NonContiguousIndices,
    #[error("embedding for `{field}`: {detail}")]
    BadVector { field: String, detail: String },
}

/// Identifier of one paragraph chunk, rendered as `{corpus_id}P{index}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParagraphKey {
    pub corpus_id: u64,
    pub index: u32,
}

impl ParagraphKey {
    pub fn new(corpus_id: u64, index: u32) -> Self {
        ParagraphKey { corpus_id, index }
    }
}

impl fmt::Display for ParagraphKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}P{}", self.corpus_id, self.index)
    }
}

#[derive(Debug, Error)]
#[error("`{0}` does not match the `{{corpus_id}}P{{index}}` pattern")]
pub struct ParagraphKeyError(String);

impl FromStr for ParagraphKey {
    type Err = ParagraphKeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParagraphKeyError(s.to_string());
        let (id_part, idx_part) = s.split_once('P').ok_or_else(bad)?;
        if id_part.is_empty()
            || idx_part.is_empty()
            || !id_part.bytes().all(|b| b.is_ascii_digit())
            || !idx_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(bad());
        }
        let corpus_id = id_part.parse().map_err(|_| bad())?;
        let index = idx_part.parse().map_err(|_| bad())?;
        Ok(ParagraphKey { corpus_id, index })
    }
}

impl Serialize for ParagraphKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ParagraphKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Bibliographic metadata. Typed fields cover the upstream schema; any
/// other keys round-trip through `extra` untouched (metadata is provenance).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub authors: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub venue: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub publicationvenueid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub publicationdate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpusid: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub externalids: Option<Map<String, Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isopenaccess: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s2fieldsofstudy: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub publicationtypes: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub referencecount: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub citationcount: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub influentialcitationcount: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub journal: Option<Value>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl Metadata {
    /// Author display names, skipping malformed entries.
    pub fn author_names(&self) -> Vec<String> {
        self.authors
            .as_deref()
            .unwrap_or_default()
            .iter()
            .filter_map(|a| a.get("name").and_then(Value::as_str).map(str::to_string))
            .collect()
    }

    /// The DOI external identifier, if present and a string.
    pub fn doi(&self) -> Option<&str> {
        self.externalids.as_ref()?.get("DOI")?.as_str()
    }

    /// Field-of-study category names.
    pub fn field_categories(&self) -> Vec<&str> {
        match &self.s2fieldsofstudy {
            Some(Value::Array(items)) => items
                .iter()
                .filter_map(|f| f.get("category").and_then(Value::as_str))
                .collect(),
            _ => Vec::new(),
        }
    }
}

/// One corpus record. License slots hold the raw upstream evidence object
/// (or `None` for an explicit null); they always serialize, unlike the
/// enrichment fields which are omitted when absent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusRecord {
    pub schema_version: String,
    pub corpus_id: u64,
    pub metadata: Metadata,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub fulltext: String,
    pub paragraphs: BTreeMap<ParagraphKey, String>,
    pub embeddings: BTreeMap<ParagraphKey, EmbeddingVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abstract_embedding: Option<EmbeddingVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_subfield: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tldr: Option<String>,
    pub unpaywall_license: Option<Value>,
    pub crossref_license: Option<Value>,
    pub openalex_license: Option<Value>,
}

/// Render a paragraph key for a corpus id and chunk index.
pub fn render_paragraph_key(corpus_id: u64, index: u32) -> ParagraphKey {
    ParagraphKey::new(corpus_id, index)
}

/// Parse one UTF-8 record document, enforcing every structural invariant.
pub fn parse_record(bytes: &[u8]) -> Result<CorpusRecord, RecordError> {
    let value: Value =
        serde_json::from_slice(bytes).map_err(|e| RecordError::Malformed(e.to_string()))?;
    record_from_value(&value)
}

/// Serialize a record as pretty-printed UTF-8 JSON. Float values keep
/// enough digits to round-trip 32-bit embeddings exactly, and paragraph
/// maps serialize in numeric index order, so serialize∘parse∘serialize
/// is a fixpoint.
pub fn serialize_record(record: &CorpusRecord) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(record).expect("record serialization cannot fail");
    bytes.push(b'\n');
    bytes
}

/// Compact single-line form for `.jsonl` streams.
pub fn serialize_record_compact(record: &CorpusRecord) -> Vec<u8> {
    serde_json::to_vec(record).expect("record serialization cannot fail")
}

impl CorpusRecord {
    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("record serialization cannot fail")
    }

    /// Paragraph texts in index order.
    pub fn paragraph_texts(&self) -> impl Iterator<Item = (&ParagraphKey, &str)> {
        self.paragraphs.iter().map(|(k, v)| (k, v.as_str()))
    }
}

fn require<'v>(obj: &'v Map<String, Value>, key: &'static str) -> Result<&'v Value, RecordError> {
    obj.get(key).ok_or(RecordError::MissingKey(key))
}

fn require_str(obj: &Map<String, Value>, key: &'static str) -> Result<String, RecordError> {
    require(obj, key)?
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| RecordError::TypeMismatch {
            field: key.to_string(),
            detail: "expected a string".into(),
        })
}

/// Build a record from a parsed JSON value.
pub fn record_from_value(value: &Value) -> Result<CorpusRecord, RecordError> {
    let obj = value.as_object().ok_or(RecordError::NotAnObject)?;

    if let Some(unknown) = obj.keys().find(|k| !TOP_LEVEL_KEYS.contains(&k.as_str())) {
        return Err(RecordError::UnknownTopLevelKey(unknown.clone()));
    }
    for key in REQUIRED_KEYS {
        if !obj.contains_key(key) {
            return Err(RecordError::MissingKey(key));
        }
    }

    let schema_version = require_str(obj, "schema_version")?;
    let corpus_id = require(obj, "corpus_id")?
        .as_u64()
        .ok_or_else(|| RecordError::TypeMismatch {
            field: "corpus_id".into(),
            detail: "expected a non-negative integer".into(),
        })?;
    let metadata: Metadata = serde_json::from_value(require(obj, "metadata")?.clone())
        .map_err(|e| RecordError::TypeMismatch { field: "metadata".into(), detail: e.to_string() })?;
    let abstract_text = require_str(obj, "abstract")?;
    let fulltext = require_str(obj, "fulltext")?;

    let paragraphs = parse_keyed_map(require(obj, "paragraphs")?, corpus_id, "paragraphs", |v, key| {
        v.as_str().map(str::to_string).ok_or_else(|| RecordError::TypeMismatch {
            field: format!("paragraphs.{key}"),
            detail: "expected a string".into(),
        })
    })?;
    let embeddings = parse_keyed_map(require(obj, "embeddings")?, corpus_id, "embeddings", |v, key| {
        EmbeddingVector::from_json(v).map_err(|e| RecordError::BadVector {
            field: format!("embeddings.{key}"),
            detail: e.to_string(),
        })
    })?;

    if paragraphs.is_empty() {
        return Err(RecordError::EmptyParagraphs);
    }
    if paragraphs.len() != embeddings.len()
        || !paragraphs.keys().eq(embeddings.keys())
    {
        return Err(RecordError::KeyMismatch);
    }
    for (expect, key) in paragraphs.keys().enumerate() {
        if key.index as usize != expect {
            return Err(RecordError::NonContiguousIndices);
        }
    }

    let abstract_embedding = match obj.get("abstract_embedding") {
        None | Some(Value::Null) => None,
        Some(v) => Some(EmbeddingVector::from_json(v).map_err(|e| RecordError::BadVector {
            field: "abstract_embedding".into(),
            detail: e.to_string(),
        })?),
    };
    let predicted_subfield = match obj.get("predicted_subfield") {
        None | Some(Value::Null) => None,
        Some(v) => Some(v.clone()),
    };
    let tldr = match obj.get("tldr") {
        None | Some(Value::Null) => None,
        Some(v) => Some(v.as_str().map(str::to_string).ok_or_else(|| {
            RecordError::TypeMismatch { field: "tldr".into(), detail: "expected a string".into() }
        })?),
    };

    let license_slot = |key: &'static str| -> Option<Value> {
        match obj.get(key) {
            None | Some(Value::Null) => None,
            Some(v) => Some(v.clone()),
        }
    };

    Ok(CorpusRecord {
        schema_version,
        corpus_id,
        metadata,
        abstract_text,
        fulltext,
        paragraphs,
        embeddings,
        abstract_embedding,
        predicted_subfield,
        tldr,
        unpaywall_license: license_slot("unpaywall_license"),
        crossref_license: license_slot("crossref_license"),
        openalex_license: license_slot("openalex_license"),
    })
}

fn parse_keyed_map<T>(
    value: &Value,
    corpus_id: u64,
    field: &'static str,
    parse_value: impl Fn(&Value, &str) -> Result<T, RecordError>,
) -> Result<BTreeMap<ParagraphKey, T>, RecordError> {
    let obj = value.as_object().ok_or_else(|| RecordError::TypeMismatch {
        field: field.to_string(),
        detail: "expected an object keyed by paragraph id".into(),
    })?;
    let mut out = BTreeMap::new();
    for (raw_key, v) in obj {
        let key: ParagraphKey = raw_key
            .parse()
            .map_err(|_| RecordError::PatternViolation(raw_key.clone()))?;
        if key.corpus_id != corpus_id {
            return Err(RecordError::ForeignKey { key: raw_key.clone(), corpus_id });
        }
        if out.insert(key, parse_value(v, raw_key)?).is_some() {
            return Err(RecordError::DuplicateKey(raw_key.clone()));
        }
    }
    Ok(out)
}
