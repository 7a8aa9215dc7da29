//! Identifier and consistency validation: internal corpus-id agreement
//! (file name, top level, metadata), DOI agreement across metadata
//! sources after normalization, and paragraph-embedding id alignment.

use serde_json::{json, Value};

use crate::license::normalize_doi;
use crate::report::{Status, ValidationReport};

const REPORT_ID_LIMIT: usize = 5;

fn doi_from_slot(value: &Value, slot: &str) -> Option<String> {
    let raw = value.get(slot)?.get("doi")?.as_str()?;
    normalize_doi(raw).ok()
}

/// Validate identifier consistency on a raw record value. `filename_id`
/// is the corpus id implied by the record's file name, when known.
pub fn validate_consistency(value: &Value, filename_id: Option<u64>) -> ValidationReport {
    let corpus_id = value.get("corpus_id").and_then(Value::as_u64);
    let metadata_id = value
        .get("metadata")
        .and_then(|m| m.get("corpusid"))
        .and_then(Value::as_u64);

    let present: Vec<u64> =
        [filename_id, corpus_id, metadata_id].into_iter().flatten().collect();
    let corpusid_mismatch = present.windows(2).any(|w| w[0] != w[1]);
    let missing_metadata_id = metadata_id.is_none() && !present.is_empty();

    // DOI agreement across metadata, unpaywall, and openalex.
    let metadata_doi = value
        .get("metadata")
        .and_then(|m| m.get("externalids"))
        .and_then(|ids| ids.get("DOI"))
        .and_then(Value::as_str)
        .and_then(|raw| normalize_doi(raw).ok());
    let unpaywall_doi = doi_from_slot(value, "unpaywall_license");
    let openalex_doi = doi_from_slot(value, "openalex_license");

    let mut doi_set: Vec<String> = Vec::new();
    for doi in [&metadata_doi, &unpaywall_doi, &openalex_doi].into_iter().flatten() {
        if !doi_set.contains(doi) {
            doi_set.push(doi.clone());
        }
    }
    doi_set.sort();
    let doi_mismatch = doi_set.len() >= 2;
    let doi_missing_sources =
        metadata_doi.is_none() && unpaywall_doi.is_none() && openalex_doi.is_none();

    // Paragraph/embedding id alignment, up to five reported per side.
    let empty = serde_json::Map::new();
    let paragraphs = value.get("paragraphs").and_then(Value::as_object).unwrap_or(&empty);
    let embeddings = value.get("embeddings").and_then(Value::as_object).unwrap_or(&empty);
    let missing_para_ids: Vec<&String> = paragraphs
        .keys()
        .filter(|k| !embeddings.contains_key(*k))
        .take(REPORT_ID_LIMIT)
        .collect();
    let extra_embed_ids: Vec<&String> = embeddings
        .keys()
        .filter(|k| !paragraphs.contains_key(*k))
        .take(REPORT_ID_LIMIT)
        .collect();
    let missing_embeddings = !missing_para_ids.is_empty();
    let orphan_embeddings = !extra_embed_ids.is_empty();

    let status = if corpusid_mismatch {
        Status::Fail
    } else if missing_metadata_id
        || doi_mismatch
        || doi_missing_sources
        || missing_embeddings
        || orphan_embeddings
    {
        Status::Warn
    } else {
        Status::Pass
    };
    let summary = match status {
        Status::Pass => "Identifiers are consistent.".to_string(),
        Status::Warn => "Identifier checks produced warnings.".to_string(),
        Status::Fail => "Corpus identifiers disagree.".to_string(),
    };

    let mut report = ValidationReport::new("consistency_validation", status, summary);
    report.flag("missing_metadata_id", missing_metadata_id);
    report.flag("corpusid_mismatch", corpusid_mismatch);
    report.flag("doi_mismatch", doi_mismatch);
    report.flag("missing_embeddings", missing_embeddings);
    report.flag("orphan_embeddings", orphan_embeddings);
    report.flag("doi_missing_sources", doi_missing_sources);

    report.metric(
        "corpus_ids",
        json!({
            "filename_id": filename_id,
            "corpus_id": corpus_id,
            "metadata_id": metadata_id,
        }),
    );
    report.metric("doi_set", json!(doi_set));
    report.metric("para_count", paragraphs.len());
    report.metric("embed_count", embeddings.len());
    report.metric("missing_para_ids", json!(missing_para_ids));
    report.metric("extra_embed_ids", json!(extra_embed_ids));
    report.metric(
        "doi_sources_present",
        json!({
            "metadata_doi": metadata_doi.is_some(),
            "unpaywall_doi": unpaywall_doi.is_some(),
            "openalex_doi": openalex_doi.is_some(),
        }),
    );
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(paras: usize, embeds: usize) -> Value {
        let mut paragraphs = serde_json::Map::new();
        let mut embeddings = serde_json::Map::new();
        for i in 0..paras {
            paragraphs.insert(format!("1P{i}"), json!("text"));
        }
        for i in 0..embeds {
            embeddings.insert(format!("1P{i}"), json!([0.1]));
        }
        json!({
            "corpus_id": 101010,
            "metadata": {"corpusid": 101010, "externalids": {"DOI": "10.1000/example"}},
            "unpaywall_license": {"doi": "10.1000/example"},
            "openalex_license": {"doi": "https://doi.org/10.1000/EXAMPLE"},
            "paragraphs": paragraphs,
            "embeddings": embeddings,
        })
    }

    #[test]
    fn consistent_record_passes() {
        let report = validate_consistency(&base(8, 8), Some(101010));
        assert_eq!(report.status, Status::Pass, "flags: {:?}", report.set_flags());
        assert_eq!(report.metrics["doi_set"], json!(["10.1000/example"]));
        assert_eq!(
            report.metrics["doi_sources_present"],
            json!({"metadata_doi": true, "unpaywall_doi": true, "openalex_doi": true})
        );
    }

    #[test]
    fn filename_disagreement_fails() {
        let mut value = base(10, 10);
        value["metadata"]["corpusid"] = json!(789012);
        let report = validate_consistency(&value, Some(123456));
        value["corpus_id"] = json!(123456);
        let report2 = validate_consistency(&value, Some(123456));
        assert_eq!(report.status, Status::Fail);
        assert_eq!(report2.status, Status::Fail);
        assert!(report2.is_flag_set("corpusid_mismatch"));
        assert_eq!(report2.metrics["corpus_ids"]["metadata_id"], 789012);
        assert_eq!(report2.metrics["corpus_ids"]["filename_id"], 123456);
    }

    #[test]
    fn doi_mismatch_plus_missing_embeddings_warns() {
        let mut value = base(5, 3);
        value["openalex_license"]["doi"] = json!("10.1000/other");
        let report = validate_consistency(&value, Some(101010));
        assert_eq!(report.status, Status::Warn);
        assert!(report.is_flag_set("doi_mismatch"));
        assert!(report.is_flag_set("missing_embeddings"));
        assert_eq!(report.metrics["doi_set"], json!(["10.1000/example", "10.1000/other"]));
        assert_eq!(report.metrics["missing_para_ids"], json!(["1P3", "1P4"]));
        assert_eq!(report.metrics["para_count"], 5);
        assert_eq!(report.metrics["embed_count"], 3);
    }

    #[test]
    fn all_dois_absent_warns() {
        let mut value = base(2, 2);
        value["metadata"]["externalids"] = json!({});
        value["unpaywall_license"] = Value::Null;
        value["openalex_license"] = Value::Null;
        let report = validate_consistency(&value, Some(101010));
        assert!(report.is_flag_set("doi_missing_sources"));
        assert_eq!(report.metrics["doi_set"], json!([]));
    }

    #[test]
    fn missing_metadata_id_warns() {
        let mut value = base(2, 2);
        value["metadata"].as_object_mut().unwrap().remove("corpusid");
        let report = validate_consistency(&value, Some(101010));
        assert_eq!(report.status, Status::Warn);
        assert!(report.is_flag_set("missing_metadata_id"));
        assert_eq!(report.metrics["corpus_ids"]["metadata_id"], Value::Null);
    }

    #[test]
    fn orphan_embeddings_capped_at_five() {
        let mut value = base(1, 1);
        for i in 10..20 {
            value["embeddings"]
                .as_object_mut()
                .unwrap()
                .insert(format!("1P{i}"), json!([0.5]));
        }
        let report = validate_consistency(&value, Some(101010));
        assert!(report.is_flag_set("orphan_embeddings"));
        assert_eq!(report.metrics["extra_embed_ids"].as_array().unwrap().len(), 5);
    }
}
