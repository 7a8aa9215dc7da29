//! Corpus construction, screening, and validation for scientific
//! full-text records, plus retrieval and trend analysis over the result.
//!
//! The crate covers the full desk-scale workflow:
//!
//! - **ingest**: stream compressed line-delimited dumps, filter by field
//!   of study, and join papers/abstracts/full text by corpus id
//! - **structure**: turn raw text plus character-offset annotations into
//!   normalized Markdown sections
//! - **chunk**: token-aware recursive splitting into overlap-linked
//!   paragraph chunks
//! - **embedding**: the fixed 1024-dim unit-norm vector contract with
//!   pluggable providers (a deterministic mock ships in-tree)
//! - **license**: license evidence normalization and the two-source
//!   agreement rule
//! - **validate**: nine record validators emitting pass/warn/fail reports
//! - **retrieval**: exact flat-index search, MMR reranking, filtered
//!   recommendation, and grounded-context assembly
//! - **trend**: rule-based mention flagging and yearly share series with
//!   3-year smoothing
//!
//! Per-record operations are pure; batch helpers in [`exec`] run them in
//! parallel under the default `parallel` feature and sequentially without
//! it.

pub mod chars;
pub mod chunk;
pub mod embedding;
pub mod exec;
pub mod ingest;
pub mod lang;
pub mod license;
pub mod record;
pub mod report;
pub mod retrieval;
pub mod rouge;
pub mod structure;
pub mod synth;
pub mod tokenize;
pub mod trend;
pub mod validate;

pub use embedding::{EmbeddingProvider, EmbeddingVector, MockEmbedder, EMBEDDING_DIM};
pub use record::{parse_record, serialize_record, CorpusRecord, Metadata, ParagraphKey};
pub use report::{Status, ValidationReport};
