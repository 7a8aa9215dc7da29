//! Chunk-level validation: per-paragraph token lengths against dataset
//! limits, Unicode integrity, and paragraph-embedding pairing. Embedding
//! errors fail the record; token-length violations only warn.

use serde_json::{json, Map, Value};

use crate::chars::{char_classes, problem_char_examples};
use crate::chunk::TokenizerProvider;
use crate::embedding::EMBEDDING_DIM;
use crate::report::{Status, ValidationReport};

const PROBLEM_EXAMPLE_LIMIT: usize = 5;

/// Linear-interpolation quantile over a sorted slice.
fn quantile(sorted: &[usize], q: f64) -> f64 {
    match sorted.len() {
        0 => 0.0,
        1 => sorted[0] as f64,
        n => {
            let pos = q * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            let frac = pos - lo as f64;
            sorted[lo] as f64 + frac * (sorted[hi] as f64 - sorted[lo] as f64)
        }
    }
}

fn valid_vector(v: &Value) -> bool {
    match v.as_array() {
        Some(arr) => {
            arr.len() == EMBEDDING_DIM
                && arr.iter().all(|x| x.as_f64().is_some_and(f64::is_finite))
        }
        None => false,
    }
}

/// Validate paragraph chunks and their embeddings on a raw record value.
pub fn validate_chunks(
    value: &Value,
    provider: &dyn TokenizerProvider,
    min_tokens: usize,
    max_tokens: usize,
) -> ValidationReport {
    let paragraphs = value.get("paragraphs").and_then(Value::as_object);
    let embeddings = value.get("embeddings").and_then(Value::as_object);

    let (Some(paragraphs), Some(embeddings)) = (paragraphs, embeddings) else {
        let mut report = ValidationReport::new(
            "chunk_validation",
            Status::Fail,
            "paragraphs and embeddings must be objects keyed by paragraph id.",
        );
        report.flag("empty_chunks", true);
        return report;
    };

    let mut too_long = 0usize;
    let mut too_short = 0usize;
    let mut empty_chunks = 0usize;
    let mut missing_embeddings = 0usize;
    let mut invalid_vectors = 0usize;
    let mut lengths: Vec<usize> = Vec::with_capacity(paragraphs.len());
    let mut per_paragraph = Map::new();

    for (key, text) in paragraphs {
        let Some(text) = text.as_str().filter(|t| !t.trim().is_empty()) else {
            empty_chunks += 1;
            per_paragraph.insert(
                key.clone(),
                json!({"token_length": 0, "char_counts": json!(char_classes("")), "problem_characters": []}),
            );
            continue;
        };
        let token_length = provider.count(text);
        lengths.push(token_length);
        if token_length > max_tokens {
            too_long += 1;
        } else if token_length < min_tokens {
            too_short += 1;
        }
        let mut classes = char_classes(text);
        // The per-paragraph report folds whitespace into the valid count;
        // only problem classes are broken out.
        classes.valid += classes.whitespace;
        classes.whitespace = 0;
        per_paragraph.insert(
            key.clone(),
            json!({
                "token_length": token_length,
                "char_counts": {
                    "valid": classes.valid,
                    "corrupted": classes.corrupted,
                    "control": classes.control,
                    "formatting": classes.formatting,
                    "unassigned": classes.unassigned,
                },
                "problem_characters": problem_char_examples(text, PROBLEM_EXAMPLE_LIMIT),
            }),
        );

        match embeddings.get(key) {
            None => missing_embeddings += 1,
            Some(vector) => {
                if !valid_vector(vector) {
                    invalid_vectors += 1;
                }
            }
        }
    }

    lengths.sort_unstable();
    let distribution = if lengths.is_empty() {
        json!({"Q1": 0.0, "Q2": 0.0, "Q3": 0.0, "min": 0, "max": 0, "mean": 0.0})
    } else {
        json!({
            "Q1": quantile(&lengths, 0.25),
            "Q2": quantile(&lengths, 0.5),
            "Q3": quantile(&lengths, 0.75),
            "min": lengths[0],
            "max": lengths[lengths.len() - 1],
            "mean": lengths.iter().sum::<usize>() as f64 / lengths.len() as f64,
        })
    };

    let embedding_errors = missing_embeddings + invalid_vectors;
    let status = if embedding_errors > 0 {
        Status::Fail
    } else if too_long + too_short + empty_chunks > 0 {
        Status::Warn
    } else {
        Status::Pass
    };
    let summary = format!("{too_long} chunk(s) over max tokens; {too_short} under min tokens.");

    let mut report = ValidationReport::new("chunk_validation", status, summary);
    report.flag("chunks_too_long", too_long > 0);
    report.flag("chunks_too_short", too_short > 0);
    report.flag("empty_chunks", empty_chunks > 0);
    report.flag("missing_embeddings", missing_embeddings > 0);
    report.flag("invalid_embedding_vectors", invalid_vectors > 0);

    report.metric("paragraph_count", paragraphs.len());
    report.metric("token_length_distribution", distribution);
    report.metric("chunks_too_long", too_long);
    report.metric("chunks_too_short", too_short);
    report.metric("empty_chunks", empty_chunks);
    report.metric("missing_embeddings", missing_embeddings);
    report.metric("invalid_embedding_vectors", invalid_vectors);
    report.metric("max_token_limit", max_tokens);
    report.metric("min_token_limit", min_tokens);
    report.metric("paragraphs", Value::Object(per_paragraph));
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chunk::WhitespaceTokenizer;
    use crate::embedding::{mock_embed, Role};

    /// `n` paragraphs with the given token lengths, all mock-embedded.
    fn record(lengths: &[usize]) -> Value {
        let mut paragraphs = Map::new();
        let mut embeddings = Map::new();
        for (i, len) in lengths.iter().enumerate() {
            let key = format!("9991603P{i}");
            let text: String =
                (0..*len).map(|t| format!("tok{t}")).collect::<Vec<_>>().join(" ");
            embeddings.insert(
                key.clone(),
                serde_json::to_value(mock_embed(&text, Role::Passage)).unwrap(),
            );
            paragraphs.insert(key, json!(text));
        }
        json!({"paragraphs": paragraphs, "embeddings": embeddings})
    }

    #[test]
    fn all_within_limits_passes() {
        let report = validate_chunks(&record(&[150, 200, 120]), &WhitespaceTokenizer, 100, 300);
        assert_eq!(report.status, Status::Pass);
        assert_eq!(report.summary, "0 chunk(s) over max tokens; 0 under min tokens.");
    }

    #[test]
    fn one_short_final_chunk_warns_with_reference_summary() {
        let mut lengths = vec![201, 232];
        lengths.extend(std::iter::repeat_n(160, 33));
        lengths.push(56);
        assert_eq!(lengths.len(), 36);
        let report = validate_chunks(&record(&lengths), &WhitespaceTokenizer, 100, 300);
        assert_eq!(report.status, Status::Warn);
        assert_eq!(report.summary, "0 chunk(s) over max tokens; 1 under min tokens.");
        assert_eq!(report.metrics["paragraph_count"], 36);
        assert_eq!(report.metrics["chunks_too_short"], 1);
        assert_eq!(report.metrics["chunks_too_long"], 0);
        assert_eq!(report.metrics["min_token_limit"], 100);
        assert_eq!(report.metrics["max_token_limit"], 300);
        assert_eq!(report.metrics["token_length_distribution"]["min"], 56);
        let para = &report.metrics["paragraphs"]["9991603P35"];
        assert_eq!(para["token_length"], 56);
        assert_eq!(para["char_counts"]["corrupted"], 0);
    }

    #[test]
    fn wrong_length_vector_fails() {
        let mut value = record(&[150, 150]);
        value["embeddings"]["9991603P0"] = json!(vec![0.5; 1023]);
        let report = validate_chunks(&value, &WhitespaceTokenizer, 100, 300);
        assert_eq!(report.status, Status::Fail);
        assert_eq!(report.metrics["invalid_embedding_vectors"], 1);
        assert!(report.is_flag_set("invalid_embedding_vectors"));
    }

    #[test]
    fn missing_embedding_fails() {
        let mut value = record(&[150, 150]);
        value["embeddings"].as_object_mut().unwrap().remove("9991603P1");
        let report = validate_chunks(&value, &WhitespaceTokenizer, 100, 300);
        assert_eq!(report.status, Status::Fail);
        assert_eq!(report.metrics["missing_embeddings"], 1);
    }

    #[test]
    fn over_long_chunk_warns() {
        let report = validate_chunks(&record(&[301, 150]), &WhitespaceTokenizer, 100, 300);
        assert_eq!(report.status, Status::Warn);
        assert_eq!(report.metrics["chunks_too_long"], 1);
        assert!(report.summary.starts_with("1 chunk(s) over max tokens"));
    }

    #[test]
    fn empty_paragraph_counted() {
        let mut value = record(&[150]);
        value["paragraphs"]
            .as_object_mut()
            .unwrap()
            .insert("9991603P1".into(), json!(""));
        value["embeddings"].as_object_mut().unwrap().insert(
            "9991603P1".into(),
            serde_json::to_value(mock_embed("x", Role::Passage)).unwrap(),
        );
        let report = validate_chunks(&value, &WhitespaceTokenizer, 100, 300);
        assert_eq!(report.metrics["empty_chunks"], 1);
        assert_eq!(report.status, Status::Warn);
    }

    #[test]
    fn quartiles_use_linear_interpolation() {
        let mut sorted: Vec<usize> = (1..=36).collect();
        sorted.sort_unstable();
        // positions 8.75, 17.5, 26.25 for n=36
        assert!((quantile(&sorted, 0.25) - 9.75).abs() < 1e-9);
        assert!((quantile(&sorted, 0.5) - 18.5).abs() < 1e-9);
        assert!((quantile(&sorted, 0.75) - 27.25).abs() < 1e-9);
    }
}
