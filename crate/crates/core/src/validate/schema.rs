//! Schema and structural validation: required keys, no additional
//! top-level properties, field typing, fixed-length embedding arrays,
//! paragraph-key patterns, format constraints, metadata ranges, author
//! structure, and the controlled subfield vocabulary. Includes the
//! enrichment-completeness requirement: `tldr`, `abstract_embedding`,
//! and `predicted_subfield` must be present to pass.

use serde_json::{json, Map, Value};

use crate::embedding::EMBEDDING_DIM;
use crate::record::ParagraphKey;
use crate::report::{Status, ValidationReport};

const REQUIRED_TOP_LEVEL: [&str; 13] = [
    "schema_version",
    "corpus_id",
    "metadata",
    "abstract",
    "fulltext",
    "paragraphs",
    "embeddings",
    "tldr",
    "abstract_embedding",
    "predicted_subfield",
    "unpaywall_license",
    "crossref_license",
    "openalex_license",
];

const REQUIRED_METADATA: [&str; 4] = ["title", "authors", "venue", "year"];

const KNOWN_METADATA: [&str; 19] = [
    "_id",
    "corpusid",
    "externalids",
    "url",
    "title",
    "authors",
    "venue",
    "publicationvenueid",
    "year",
    "referencecount",
    "citationcount",
    "influentialcitationcount",
    "isopenaccess",
    "s2fieldsofstudy",
    "publicationtypes",
    "publicationdate",
    "journal",
    "abstract",
    "tldr",
];

struct Collector {
    errors: Vec<Value>,
    flags: Map<String, Value>,
}

impl Collector {
    fn new() -> Self {
        Collector { errors: Vec::new(), flags: Map::new() }
    }

    fn raise(&mut self, flag: String, field: &str, rule: &str, message: String) {
        self.errors.push(json!({
            "message": message,
            "field": field,
            "schema_path": format!("properties/{}/{rule}", field.replace('.', "/properties/")),
            "validator": rule,
        }));
        self.flags.insert(flag, Value::Bool(true));
    }

    fn missing(&mut self, field: &str) {
        let flat = field.replace('.', "_");
        self.raise(
            format!("missing_{flat}"),
            field,
            "required",
            format!("`{field}` is a required property"),
        );
    }

    fn type_mismatch(&mut self, field: &str, expected: &str, got: &Value) {
        let flat = field.replace('.', "_");
        self.raise(
            format!("type_mismatch_{flat}"),
            field,
            "type",
            format!("{} is not of type {expected}", type_name(got)),
        );
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(n) if n.is_i64() || n.is_u64() => "integer",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn looks_like_uri(s: &str) -> bool {
    // scheme://rest with a plausible scheme
    match s.split_once("://") {
        Some((scheme, rest)) => {
            !scheme.is_empty()
                && !rest.is_empty()
                && scheme.chars().all(|c| c.is_ascii_alphanumeric() || "+.-".contains(c))
        }
        None => false,
    }
}

fn is_iso_date(s: &str) -> bool {
    chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok()
}

fn check_vector(c: &mut Collector, field: &str, value: &Value) {
    let Some(arr) = value.as_array() else {
        c.type_mismatch(field, "array", value);
        return;
    };
    let flat = field.replace('.', "_");
    if arr.len() < EMBEDDING_DIM {
        c.raise(
            format!("too_short_{flat}"),
            field,
            "minItems",
            format!("{} is too short", short_repr(value)),
        );
    } else if arr.len() > EMBEDDING_DIM {
        c.raise(
            format!("too_long_{flat}"),
            field,
            "maxItems",
            format!("array of {} items is too long", arr.len()),
        );
    }
    if arr.iter().any(|v| !v.is_number()) {
        c.type_mismatch(field, "number[]", value);
    }
}

fn short_repr(value: &Value) -> String {
    let s = value.to_string();
    if s.chars().count() > 40 {
        format!("{}…", s.chars().take(40).collect::<String>())
    } else {
        s
    }
}

fn check_keyed_map(c: &mut Collector, field: &str, value: &Value, vectors: bool) {
    let Some(obj) = value.as_object() else {
        c.type_mismatch(field, "object", value);
        return;
    };
    for (key, entry) in obj {
        if key.parse::<ParagraphKey>().is_err() {
            c.raise(
                format!("pattern_violation_{field}"),
                field,
                "propertyNames",
                format!("`{key}` does not match the required key pattern"),
            );
        }
        if vectors {
            if !entry.is_array() {
                c.type_mismatch(field, "array", entry);
            } else {
                let len = entry.as_array().map(Vec::len).unwrap_or(0);
                if len != EMBEDDING_DIM {
                    let (flag, rule, msg) = if len < EMBEDDING_DIM {
                        ("too_short", "minItems", "is too short")
                    } else {
                        ("too_long", "maxItems", "is too long")
                    };
                    c.raise(
                        format!("{flag}_{field}"),
                        field,
                        rule,
                        format!("vector at `{key}` {msg}"),
                    );
                }
            }
        } else if !entry.is_string() {
            c.type_mismatch(field, "string", entry);
        }
    }
}

fn check_metadata(c: &mut Collector, metadata: &Value) {
    let Some(obj) = metadata.as_object() else {
        c.type_mismatch("metadata", "object", metadata);
        return;
    };

    for field in REQUIRED_METADATA {
        if !obj.contains_key(field) {
            c.missing(&format!("metadata.{field}"));
        }
    }

    if let Some(title) = obj.get("title") {
        if !title.is_string() {
            c.type_mismatch("metadata.title", "string", title);
        }
    }
    if let Some(venue) = obj.get("venue") {
        if !venue.is_string() && !venue.is_null() {
            c.type_mismatch("metadata.venue", "string|null", venue);
        }
    }
    if let Some(year) = obj.get("year") {
        match year.as_i64() {
            Some(y) if y < 1800 => c.raise(
                "value_below_minimum_metadata_year".into(),
                "metadata.year",
                "minimum",
                format!("{y} is less than the minimum of 1800"),
            ),
            Some(y) if y > 2100 => c.raise(
                "value_above_maximum_metadata_year".into(),
                "metadata.year",
                "maximum",
                format!("{y} is greater than the maximum of 2100"),
            ),
            Some(_) => {}
            None => c.type_mismatch("metadata.year", "integer", year),
        }
    }
    for field in ["referencecount", "citationcount", "influentialcitationcount"] {
        if let Some(count) = obj.get(field) {
            match count.as_i64() {
                Some(v) if v < 0 => c.raise(
                    format!("value_below_minimum_metadata_{field}"),
                    &format!("metadata.{field}"),
                    "minimum",
                    format!("{v} is less than the minimum of 0"),
                ),
                Some(_) => {}
                None if count.is_null() => {}
                None => c.type_mismatch(&format!("metadata.{field}"), "integer", count),
            }
        }
    }
    if let Some(url) = obj.get("url") {
        if let Some(s) = url.as_str() {
            if !looks_like_uri(s) {
                c.raise(
                    "invalid_format_metadata_url".into(),
                    "metadata.url",
                    "format",
                    format!("`{s}` is not a valid URI"),
                );
            }
        } else if !url.is_null() {
            c.type_mismatch("metadata.url", "string", url);
        }
    }
    if let Some(date) = obj.get("publicationdate") {
        if let Some(s) = date.as_str() {
            if !is_iso_date(s) {
                c.raise(
                    "invalid_format_metadata_publicationdate".into(),
                    "metadata.publicationdate",
                    "format",
                    format!("`{s}` is not an ISO 8601 date"),
                );
            }
        } else if !date.is_null() {
            c.type_mismatch("metadata.publicationdate", "string|null", date);
        }
    }
    if let Some(authors) = obj.get("authors") {
        match authors.as_array() {
            Some(entries) => {
                for author in entries {
                    let Some(author_obj) = author.as_object() else {
                        c.type_mismatch("metadata.authors", "object", author);
                        continue;
                    };
                    if !author_obj.get("name").is_some_and(Value::is_string) {
                        c.raise(
                            "missing_name".into(),
                            "metadata.authors.name",
                            "required",
                            "author entry lacks a `name` string".into(),
                        );
                    }
                    for key in author_obj.keys() {
                        if key != "name" && key != "authorId" {
                            c.raise(
                                format!("additional_property_{key}"),
                                "metadata.authors",
                                "additionalProperties",
                                format!("author field `{key}` is not allowed"),
                            );
                        }
                    }
                }
            }
            None => c.type_mismatch("metadata.authors", "array", authors),
        }
    }
    // Unknown metadata keys are tolerated (metadata is provenance), but
    // only when they do not collide with the author-level namespace.
    let _ = KNOWN_METADATA;
}

fn check_subfields(c: &mut Collector, value: &Value, vocabulary: &super::SubfieldVocabulary) {
    let Some(obj) = value.as_object() else {
        if !value.is_null() {
            c.type_mismatch("predicted_subfield", "object", value);
        }
        return;
    };
    for (label, score) in obj {
        if !vocabulary.contains(label) {
            c.raise(
                format!("additional_property_{}", label.replace(' ', "_")),
                "predicted_subfield",
                "additionalProperties",
                format!("`{label}` is not in the controlled vocabulary"),
            );
        }
        match score.as_f64() {
            Some(v) if v < 0.0 => c.raise(
                "value_below_minimum_predicted_subfield".into(),
                "predicted_subfield",
                "minimum",
                format!("score {v} is less than the minimum of 0.0"),
            ),
            Some(v) if v > 1.0 => c.raise(
                "value_above_maximum_predicted_subfield".into(),
                "predicted_subfield",
                "maximum",
                format!("score {v} is greater than the maximum of 1.0"),
            ),
            Some(_) => {}
            None => c.type_mismatch("predicted_subfield", "number", score),
        }
    }
}

/// Validate a raw record value against the full structural schema.
pub fn validate_schema(value: &Value) -> ValidationReport {
    let vocabulary = super::SubfieldVocabulary::default();
    let mut c = Collector::new();

    let Some(obj) = value.as_object() else {
        let mut report =
            ValidationReport::new("schema_validation", Status::Fail, "Record is not a JSON object.");
        report.flag("type_mismatch_record", true);
        report.metric("validation_errors", json!([]));
        return report;
    };

    for field in REQUIRED_TOP_LEVEL {
        if !obj.contains_key(field) {
            c.missing(field);
        }
    }
    for key in obj.keys() {
        if !REQUIRED_TOP_LEVEL.contains(&key.as_str()) {
            c.raise(
                format!("additional_property_{key}"),
                key,
                "additionalProperties",
                format!("additional property `{key}` is not allowed"),
            );
        }
    }

    if let Some(v) = obj.get("schema_version") {
        if !v.is_string() {
            c.type_mismatch("schema_version", "string", v);
        }
    }
    if let Some(v) = obj.get("corpus_id") {
        if v.as_u64().is_none() {
            c.type_mismatch("corpus_id", "non-negative integer", v);
        }
    }
    for field in ["abstract", "fulltext", "tldr"] {
        if let Some(v) = obj.get(field) {
            if !v.is_string() {
                c.type_mismatch(field, "string", v);
            }
        }
    }
    if let Some(v) = obj.get("metadata") {
        check_metadata(&mut c, v);
    }
    if let Some(v) = obj.get("paragraphs") {
        check_keyed_map(&mut c, "paragraphs", v, false);
    }
    if let Some(v) = obj.get("embeddings") {
        check_keyed_map(&mut c, "embeddings", v, true);
    }
    if let Some(v) = obj.get("abstract_embedding") {
        check_vector(&mut c, "abstract_embedding", v);
    }
    if let Some(v) = obj.get("predicted_subfield") {
        check_subfields(&mut c, v, &vocabulary);
    }
    for field in ["unpaywall_license", "crossref_license", "openalex_license"] {
        if let Some(v) = obj.get(field) {
            if !v.is_object() && !v.is_null() {
                c.type_mismatch(field, "object|null", v);
            }
        }
    }

    let error_count = c.errors.len();
    let (status, summary) = if error_count == 0 {
        (Status::Pass, "Document conforms to the JSON schema.".to_string())
    } else {
        (Status::Fail, format!("{error_count} schema validation error(s) found."))
    };
    let mut report = ValidationReport::new("schema_validation", status, summary);
    report.flags = c.flags;
    report.metric("validation_errors", Value::Array(c.errors));
    report
}
