//! Text-quality validation over the abstract and full text: length and
//! sentence thresholds, Unicode integrity, whitespace and ASCII density,
//! heading-marker detection, language identification, abstract/full-text
//! alignment via ROUGE-1 recall, and the abstract-embedding norm check.

use serde_json::{json, Value};

use crate::chars::{ascii_letter_ratio, char_classes, non_whitespace_ratio, problem_char_examples};
use crate::embedding::EMBEDDING_DIM;
use crate::lang::LanguageDetector;
use crate::report::{Status, ValidationReport};
use crate::rouge::rouge_n;
use crate::tokenize::sentence_mark_count;

use super::TextThresholds;

const PROBLEM_EXAMPLE_LIMIT: usize = 5;

fn char_prefix(text: &str, chars: usize) -> &str {
    match text.char_indices().nth(chars) {
        Some((idx, _)) => &text[..idx],
        None => text,
    }
}

/// Count Markdown (`#`..`###`) or numbered (`1.`, `2.1`) heading lines.
fn heading_marker_count(text: &str) -> usize {
    let numbered = regex::Regex::new(r"^\d+(\.\d+)*\s+\S").expect("static regex");
    text.lines()
        .filter(|line| {
            let t = line.trim_start();
            let hashes = t.bytes().take_while(|b| *b == b'#').count();
            (1..=3).contains(&hashes) && t.as_bytes().get(hashes) == Some(&b' ')
                || numbered.is_match(t)
        })
        .count()
}

/// Validate abstract and full-text quality on a raw record value.
pub fn validate_text(
    value: &Value,
    thresholds: &TextThresholds,
    detector: &dyn LanguageDetector,
) -> ValidationReport {
    let abstract_text = value.get("abstract").and_then(Value::as_str).unwrap_or("");
    let fulltext = value.get("fulltext").and_then(Value::as_str).unwrap_or("");
    let head = char_prefix(fulltext, thresholds.alignment_chars);

    let abstract_chars = abstract_text.chars().count();
    let fulltext_chars = fulltext.chars().count();
    let abstract_classes = char_classes(abstract_text);
    let fulltext_classes = char_classes(fulltext);
    let abstract_ws = non_whitespace_ratio(abstract_text);
    let fulltext_ws = non_whitespace_ratio(fulltext);
    let abstract_ascii = ascii_letter_ratio(abstract_text);
    let fulltext_ascii = ascii_letter_ratio(fulltext);
    let abstract_sentences = sentence_mark_count(abstract_text);
    let fulltext_sentences = sentence_mark_count(fulltext);
    let heading_markers = heading_marker_count(fulltext);
    let language = detector.detect(head);
    let rouge1_recall = rouge_n(head, abstract_text, 1).recall;

    let (embedding_norm, embedding_invalid) = match value.get("abstract_embedding") {
        None | Some(Value::Null) => (None, true),
        Some(Value::Array(arr)) => {
            let numeric: Option<Vec<f64>> = arr.iter().map(Value::as_f64).collect();
            match numeric {
                Some(values)
                    if values.len() == EMBEDDING_DIM
                        && values.iter().all(|v| v.is_finite()) =>
                {
                    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
                    (Some(norm), false)
                }
                _ => (None, true),
            }
        }
        Some(_) => (None, true),
    };
    let norm_off = embedding_norm
        .is_some_and(|norm| (norm - 1.0).abs() > thresholds.emb_norm_tol);

    let mut report = ValidationReport::new("text_validation", Status::Pass, String::new());
    report.flag("abstract_too_short", abstract_chars < thresholds.abstract_min_chars);
    report.flag("fulltext_too_short", fulltext_chars < thresholds.fulltext_min_chars);
    report.flag("abstract_has_corrupted_chars", abstract_classes.corrupted > 0);
    report.flag("fulltext_has_corrupted_chars", fulltext_classes.corrupted > 0);
    report.flag("abstract_low_whitespace_ratio", abstract_ws < thresholds.abstract_ws_ratio);
    report.flag("fulltext_low_whitespace_ratio", fulltext_ws < thresholds.fulltext_ws_ratio);
    report.flag("abstract_low_ascii_ratio", abstract_ascii < thresholds.abstract_ascii_ratio);
    report.flag("fulltext_low_ascii_ratio", fulltext_ascii < thresholds.fulltext_ascii_ratio);
    report.flag(
        "abstract_low_sentence_count",
        abstract_sentences < thresholds.abstract_min_sentences,
    );
    report.flag(
        "fulltext_low_sentence_count",
        fulltext_sentences < thresholds.fulltext_min_sentences,
    );
    report.flag("fulltext_missing_heading_markers", heading_markers == 0);
    report.flag(
        "language_mismatch_or_low_confidence",
        language.language != thresholds.expected_language
            || language.confidence < thresholds.lang_conf,
    );
    report.flag("low_rouge1_overlap", rouge1_recall < thresholds.rouge1_min);
    report.flag("abstract_embedding_norm_off", norm_off);
    report.flag("abstract_embedding_missing_or_invalid", embedding_invalid);

    report.metric("abstract_chars", abstract_chars);
    report.metric("fulltext_chars", fulltext_chars);
    report.metric("abstract_bad_chars", json!(abstract_classes));
    report.metric("fulltext_bad_chars", json!(fulltext_classes));
    report.metric("abstract_ws_ratio", abstract_ws);
    report.metric("fulltext_ws_ratio", fulltext_ws);
    report.metric("abstract_ascii_ratio", abstract_ascii);
    report.metric("fulltext_ascii_ratio", fulltext_ascii);
    report.metric("abstract_sentence_count", abstract_sentences);
    report.metric("fulltext_sentence_count", fulltext_sentences);
    report.metric("fulltext_heading_markers", heading_markers);
    report.metric("language", language.language.clone());
    report.metric("language_score", language.confidence);
    report.metric("rouge1_recall", rouge1_recall);
    report.metric("abstract_embedding_norm", json!(embedding_norm));
    report.metric(
        "abstract_problem_chars",
        json!(problem_char_examples(abstract_text, PROBLEM_EXAMPLE_LIMIT)),
    );
    report.metric(
        "fulltext_problem_chars",
        json!(problem_char_examples(fulltext, PROBLEM_EXAMPLE_LIMIT)),
    );

    // Critical flags force fail; anything else is a warning.
    let critical = report.is_flag_set("abstract_embedding_missing_or_invalid")
        || report.is_flag_set("fulltext_too_short");
    let raised = report.set_flags().len();
    report.status = if critical {
        Status::Fail
    } else if raised > 0 {
        Status::Warn
    } else {
        Status::Pass
    };
    report.summary = if raised == 0 {
        "Text within quality thresholds.".to_string()
    } else {
        format!("{raised} text quality check(s) flagged.")
    };
    report
}
