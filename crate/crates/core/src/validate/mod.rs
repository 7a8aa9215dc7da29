//! The nine record validators. Each one inspects a raw JSON record value
//! (so broken records can still be diagnosed), emits the standard report
//! envelope, and never mutates its input. [`run_all`] executes the full
//! battery and aggregates the worst status.

pub mod chunks;
pub mod consistency;
pub mod embeddings;
pub mod license;
pub mod metadata;
pub mod schema;
pub mod subfield;
pub mod summary;
pub mod text;

use std::sync::Arc;

use serde_json::Value;

use crate::chunk::{TokenizerProvider, WhitespaceTokenizer};
use crate::embedding::{EmbeddingProvider, MockEmbedder};
use crate::lang::{LanguageDetector, StopwordDetector};
use crate::license::CanonicalLicense;
use crate::report::{aggregate_status, Status, ValidationReport};
pub use summary::{MockSemanticScorer, SemanticScorer};

/// Validator names in execution order.
pub const VALIDATOR_NAMES: [&str; 9] = [
    "schema_validation",
    "metadata_validation",
    "license_validation",
    "text_validation",
    "chunk_validation",
    "embedding_validation",
    "predicted_subfield_validation",
    "summary_validation",
    "consistency_validation",
];

/// Thresholds for text-quality checks; defaults are the production values.
#[derive(Debug, Clone)]
pub struct TextThresholds {
    pub abstract_min_chars: usize,
    pub fulltext_min_chars: usize,
    pub abstract_min_sentences: usize,
    pub fulltext_min_sentences: usize,
    pub abstract_ws_ratio: f64,
    pub fulltext_ws_ratio: f64,
    pub abstract_ascii_ratio: f64,
    pub fulltext_ascii_ratio: f64,
    pub expected_language: String,
    pub lang_conf: f64,
    pub rouge1_min: f64,
    pub emb_norm_tol: f64,
    /// Full-text prefix length (Unicode scalars) used for abstract
    /// alignment and language identification.
    pub alignment_chars: usize,
}

impl Default for TextThresholds {
    fn default() -> Self {
        TextThresholds {
            abstract_min_chars: 100,
            fulltext_min_chars: 1000,
            abstract_min_sentences: 2,
            fulltext_min_sentences: 50,
            abstract_ws_ratio: 0.75,
            fulltext_ws_ratio: 0.83,
            abstract_ascii_ratio: 0.7,
            fulltext_ascii_ratio: 0.75,
            expected_language: "en".to_string(),
            lang_conf: 0.9,
            rouge1_min: 0.5,
            emb_norm_tol: 1e-3,
            alignment_chars: 2000,
        }
    }
}

/// The controlled subfield vocabulary: 17 subject labels plus `Others`,
/// each with a fixed index.
#[derive(Debug, Clone)]
pub struct SubfieldVocabulary {
    labels: Vec<String>,
}

impl Default for SubfieldVocabulary {
    fn default() -> Self {
        SubfieldVocabulary {
            labels: [
                "Catalysis",
                "Organic Chemistry",
                "Polymer Chemistry",
                "Inorganic Chemistry",
                "Materials Science",
                "Analytical Chemistry",
                "Physical Chemistry",
                "Biochemistry",
                "Environmental Chemistry",
                "Energy Chemistry",
                "Medicinal Chemistry",
                "Chemical Engineering",
                "Supramolecular Chemistry",
                "Radiochemistry & Nuclear Chemistry",
                "Forensic & Legal Chemistry",
                "Food Chemistry",
                "Chemical Education",
                "Others",
            ]
            .into_iter()
            .map(str::to_string)
            .collect(),
        }
    }
}

impl SubfieldVocabulary {
    pub fn new(labels: impl IntoIterator<Item = impl Into<String>>) -> Self {
        SubfieldVocabulary { labels: labels.into_iter().map(Into::into).collect() }
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Everything the validator battery needs: thresholds plus providers.
/// Providers are shared handles so one config can fan out across threads.
#[derive(Clone)]
pub struct ValidationConfig {
    pub text: TextThresholds,
    pub chunk_min_tokens: usize,
    pub chunk_max_tokens: usize,
    /// Paragraphs re-encoded per record by the embedding validator.
    pub embedding_sample_k: usize,
    pub embedding_cos_delta: f64,
    pub embedding_norm_tol: f64,
    pub rouge_lsum_min: f64,
    pub bert_f1_min: f64,
    pub vocabulary: SubfieldVocabulary,
    pub allowed_licenses: Vec<CanonicalLicense>,
    pub embedder: Arc<dyn EmbeddingProvider>,
    pub tokenizer: Arc<dyn TokenizerProvider>,
    pub detector: Arc<dyn LanguageDetector>,
    pub scorer: Arc<dyn SemanticScorer>,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            text: TextThresholds::default(),
            chunk_min_tokens: 100,
            chunk_max_tokens: 300,
            embedding_sample_k: 8,
            embedding_cos_delta: 0.01,
            embedding_norm_tol: 0.05,
            rouge_lsum_min: 10.0,
            bert_f1_min: 30.0,
            vocabulary: SubfieldVocabulary::default(),
            allowed_licenses: crate::license::DEFAULT_ALLOWED.to_vec(),
            embedder: Arc::new(MockEmbedder),
            tokenizer: Arc::new(WhitespaceTokenizer),
            detector: Arc::new(StopwordDetector),
            scorer: Arc::new(MockSemanticScorer::default()),
        }
    }
}

impl std::fmt::Debug for ValidationConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ValidationConfig")
            .field("embedder", &self.embedder.name())
            .field("tokenizer", &self.tokenizer.name())
            .finish_non_exhaustive()
    }
}

/// Output of the full battery over one record.
#[derive(Debug, Clone)]
pub struct ValidationRun {
    pub reports: Vec<ValidationReport>,
    pub aggregate: Status,
}

impl ValidationRun {
    pub fn report(&self, validator: &str) -> Option<&ValidationReport> {
        self.reports.iter().find(|r| r.validator == validator)
    }
}

/// Run all nine validators independently over one raw record value.
/// `filename_id` is the corpus id implied by the record's file name,
/// fed to the consistency validator.
pub fn run_all(value: &Value, filename_id: Option<u64>, config: &ValidationConfig) -> ValidationRun {
    let reports = vec![
        schema::validate_schema(value),
        metadata::validate_metadata(value),
        license::validate_license(value, &config.allowed_licenses),
        text::validate_text(value, &config.text, config.detector.as_ref()),
        chunks::validate_chunks(
            value,
            config.tokenizer.as_ref(),
            config.chunk_min_tokens,
            config.chunk_max_tokens,
        ),
        embeddings::validate_embeddings(
            value,
            config.embedder.as_ref(),
            config.embedding_sample_k,
            config.embedding_cos_delta,
            config.embedding_norm_tol,
        ),
        subfield::validate_subfields(value, &config.vocabulary),
        summary::validate_summary(
            value,
            config.scorer.as_ref(),
            config.rouge_lsum_min,
            config.bert_f1_min,
        ),
        consistency::validate_consistency(value, filename_id),
    ];
    let aggregate = aggregate_status(&reports);
    ValidationRun { reports, aggregate }
}

/// Run the battery over a batch of records, in parallel when enabled.
pub fn run_all_batch(
    records: &[(Option<u64>, Value)],
    config: &ValidationConfig,
) -> Vec<ValidationRun> {
    crate::exec::map_batch(records, |(filename_id, value)| run_all(value, *filename_id, config))
}

/// A flag-name pattern in the per-validator registry.
#[derive(Debug, Clone, Copy)]
pub enum FlagPattern {
    Exact(&'static str),
    Prefix(&'static str),
}

impl FlagPattern {
    pub fn matches(&self, name: &str) -> bool {
        match self {
            FlagPattern::Exact(expected) => name == *expected,
            FlagPattern::Prefix(prefix) => name.starts_with(prefix),
        }
    }
}

/// Every flag name a validator may emit, as published rule-table names.
/// The registry test asserts emitted flags stay within this set.
pub fn registered_flags(validator: &str) -> &'static [FlagPattern] {
    use FlagPattern::{Exact, Prefix};
    match validator {
        "schema_validation" => &[
            Prefix("missing_"),
            Prefix("additional_property_"),
            Prefix("type_mismatch_"),
            Prefix("too_short_"),
            Prefix("too_long_"),
            Prefix("pattern_violation_"),
            Prefix("invalid_format_"),
            Prefix("value_below_minimum_"),
            Prefix("value_above_maximum_"),
        ],
        "metadata_validation" => &[
            Prefix("missing:"),
            Prefix("type:"),
            Prefix("empty:"),
            Exact("title_short"),
            Exact("authors_malformed"),
            Exact("year_vs_date"),
            Exact("date_in_future"),
            Exact("date_bad_format"),
            Exact("year_out_of_range"),
            Exact("fos_no_chemistry"),
            Exact("externalids_empty"),
            Exact("pubtypes_bad_item"),
            Exact("oa_missing_licenses"),
        ],
        "license_validation" => &[
            Prefix("missing_license_"),
            Exact("unknown_license"),
            Exact("license_conflict"),
        ],
        "text_validation" => &[
            Exact("abstract_too_short"),
            Exact("fulltext_too_short"),
            Exact("abstract_has_corrupted_chars"),
            Exact("fulltext_has_corrupted_chars"),
            Exact("abstract_low_whitespace_ratio"),
            Exact("fulltext_low_whitespace_ratio"),
            Exact("abstract_low_ascii_ratio"),
            Exact("fulltext_low_ascii_ratio"),
            Exact("abstract_low_sentence_count"),
            Exact("fulltext_low_sentence_count"),
            Exact("fulltext_missing_heading_markers"),
            Exact("language_mismatch_or_low_confidence"),
            Exact("low_rouge1_overlap"),
            Exact("abstract_embedding_norm_off"),
            Exact("abstract_embedding_missing_or_invalid"),
        ],
        "chunk_validation" => &[
            Exact("empty_chunks"),
            Exact("chunks_too_short"),
            Exact("chunks_too_long"),
            Exact("missing_embeddings"),
            Exact("invalid_embedding_vectors"),
        ],
        "embedding_validation" => &[
            Exact("invalid_structure"),
            Exact("missing_embedding"),
            Exact("extra_embedding"),
            Exact("invalid_shape_embedding"),
            Exact("nonfinite_values_embedding"),
            Exact("unnormalized_embedding"),
            Exact("cosine_mismatch"),
        ],
        "predicted_subfield_validation" => &[
            Exact("missing_predicted_subfield"),
            Exact("not_a_dict"),
            Exact("contains_invalid_labels"),
            Exact("contains_invalid_scores"),
            Exact("empty_predictions"),
        ],
        "summary_validation" => &[
            Exact("empty_abstract"),
            Exact("empty_tldr"),
            Exact("low_rouge_lsum"),
            Exact("low_bertscore_f1"),
            Exact("low_summary_quality"),
            Prefix("missing_score_"),
        ],
        "consistency_validation" => &[
            Exact("missing_metadata_id"),
            Exact("corpusid_mismatch"),
            Exact("doi_mismatch"),
            Exact("missing_embeddings"),
            Exact("orphan_embeddings"),
            Exact("doi_missing_sources"),
        ],
        _ => &[],
    }
}
