//! Predicted-subfield validation: the field must be a map from controlled
//! vocabulary labels to scores in [0, 1]. A missing or non-map field
//! fails; invalid labels or scores only warn.

use serde_json::{json, Value};

use crate::report::{Status, ValidationReport};

use super::SubfieldVocabulary;

/// Validate the `predicted_subfield` field on a raw record value.
pub fn validate_subfields(value: &Value, vocabulary: &SubfieldVocabulary) -> ValidationReport {
    let field = value.get("predicted_subfield");

    let mut missing = false;
    let mut not_a_dict = false;
    let mut empty = false;
    let mut invalid_labels: Vec<String> = Vec::new();
    let mut invalid_scores: Vec<Value> = Vec::new();
    let mut label_count = 0usize;

    match field {
        None | Some(Value::Null) => missing = true,
        Some(Value::Object(map)) => {
            label_count = map.len();
            if map.is_empty() {
                empty = true;
            }
            for (label, score) in map {
                if !vocabulary.contains(label) {
                    invalid_labels.push(label.clone());
                }
                let ok = score.as_f64().is_some_and(|s| (0.0..=1.0).contains(&s));
                if !ok {
                    invalid_scores.push(json!({ label: score }));
                }
            }
        }
        Some(_) => not_a_dict = true,
    }

    let status = if missing || not_a_dict {
        Status::Fail
    } else if !invalid_labels.is_empty() || !invalid_scores.is_empty() || empty {
        Status::Warn
    } else {
        Status::Pass
    };

    let summary = match status {
        Status::Pass => format!("{label_count} subfield prediction(s) within the vocabulary."),
        Status::Warn => format!(
            "{} invalid label(s), {} invalid score(s).",
            invalid_labels.len(),
            invalid_scores.len()
        ),
        Status::Fail => "predicted_subfield is missing or not a map.".to_string(),
    };

    let mut report = ValidationReport::new("predicted_subfield_validation", status, summary);
    report.flag("missing_predicted_subfield", missing);
    report.flag("not_a_dict", not_a_dict);
    report.flag("contains_invalid_labels", !invalid_labels.is_empty());
    report.flag("contains_invalid_scores", !invalid_scores.is_empty());
    report.flag("empty_predictions", empty);
    report.metric("label_count", label_count);
    report.metric("invalid_labels", json!(invalid_labels));
    report.metric("invalid_scores", json!(invalid_scores));
    report
}
