//! Embedding validation: paragraph-embedding alignment, per-vector shape,
//! finiteness and norm constraints, and determinism spot checks that
//! re-encode a sampled subset of paragraphs and compare cosine similarity
//! against the stored vectors.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};

use crate::embedding::{EmbeddingProvider, EmbeddingVector, Role, EMBEDDING_DIM};
use crate::report::{Status, ValidationReport};

enum VectorIssue {
    Shape,
    NonFinite,
    Norm,
}

fn vector_issue(v: &Value, norm_tol: f64) -> Result<EmbeddingVector, VectorIssue> {
    let arr = v.as_array().ok_or(VectorIssue::Shape)?;
    if arr.len() != EMBEDDING_DIM {
        return Err(VectorIssue::Shape);
    }
    let mut values = Vec::with_capacity(EMBEDDING_DIM);
    for item in arr {
        let f = item.as_f64().ok_or(VectorIssue::Shape)?;
        if !f.is_finite() {
            return Err(VectorIssue::NonFinite);
        }
        values.push(f as f32);
    }
    let vector = EmbeddingVector::new(values).map_err(|_| VectorIssue::NonFinite)?;
    if (vector.l2_norm() - 1.0).abs() > norm_tol {
        return Err(VectorIssue::Norm);
    }
    Ok(vector)
}

/// Validate embedding alignment, structure, and reproducibility on a raw
/// record value. `sample_k` paragraphs are re-encoded with `provider`
/// (sampled deterministically from the record's corpus id); the record
/// passes only when every sampled cosine stays within `cos_delta` of 1.
pub fn validate_embeddings(
    value: &Value,
    provider: &dyn EmbeddingProvider,
    sample_k: usize,
    cos_delta: f64,
    norm_tol: f64,
) -> ValidationReport {
    let paragraphs = value.get("paragraphs").and_then(Value::as_object);
    let embeddings = value.get("embeddings").and_then(Value::as_object);

    let (Some(paragraphs), Some(embeddings)) = (paragraphs, embeddings) else {
        let mut report = ValidationReport::new(
            "embedding_validation",
            Status::Fail,
            "Embedding validation complete",
        );
        report.flag("invalid_structure", true);
        report.metric("paragraphs", 0);
        report.metric("embeddings", 0);
        return report;
    };

    let mut missing: Vec<String> = Vec::new();
    let mut extra: Vec<String> = Vec::new();
    let mut bad: Vec<String> = Vec::new();
    let mut shape_issue = false;
    let mut finite_issue = false;
    let mut norm_issue = false;
    let mut valid: Vec<(String, String, EmbeddingVector)> = Vec::new();

    for (key, text) in paragraphs {
        match embeddings.get(key) {
            None => missing.push(key.clone()),
            Some(v) => match vector_issue(v, norm_tol) {
                Ok(vector) => {
                    if let Some(text) = text.as_str() {
                        valid.push((key.clone(), text.to_string(), vector));
                    }
                }
                Err(issue) => {
                    match issue {
                        VectorIssue::Shape => shape_issue = true,
                        VectorIssue::NonFinite => finite_issue = true,
                        VectorIssue::Norm => norm_issue = true,
                    }
                    bad.push(key.clone());
                }
            },
        }
    }
    for key in embeddings.keys() {
        if !paragraphs.contains_key(key) {
            extra.push(key.clone());
        }
    }

    // Deterministic sample: seeded by the record's corpus id so repeated
    // runs check the same paragraphs.
    let corpus_id = value.get("corpus_id").and_then(Value::as_u64).unwrap_or(0);
    let mut rng = ChaCha20Rng::seed_from_u64(corpus_id ^ 0x5eed_caf_u64.wrapping_mul(7));
    let mut sample: Vec<usize> = (0..valid.len()).collect();
    sample.shuffle(&mut rng);
    sample.truncate(sample_k.min(valid.len()));
    sample.sort_unstable();

    let mut cosines: Vec<f64> = Vec::with_capacity(sample.len());
    let mut mismatch = false;
    for &i in &sample {
        let (_, text, stored) = &valid[i];
        match provider.embed_batch(Role::Passage, &[text.as_str()]) {
            Ok(revs) if revs.len() == 1 => {
                let cos = stored.cosine(&revs[0].clone().normalized());
                if 1.0 - cos > cos_delta {
                    mismatch = true;
                }
                cosines.push(cos);
            }
            _ => mismatch = true,
        }
    }

    let determinism_passed = !mismatch;
    let (mean_cos, min_cos, max_delta) = if cosines.is_empty() {
        (Value::Null, Value::Null, Value::Null)
    } else {
        let mean = cosines.iter().sum::<f64>() / cosines.len() as f64;
        let min = cosines.iter().copied().fold(f64::INFINITY, f64::min);
        (json!(mean), json!(min), json!(1.0 - min))
    };

    let alignment_clean = missing.is_empty() && extra.is_empty() && bad.is_empty();
    let status = if alignment_clean && determinism_passed {
        Status::Pass
    } else {
        Status::Fail
    };

    let mut report =
        ValidationReport::new("embedding_validation", status, "Embedding validation complete");
    report.flag("missing_embedding", !missing.is_empty());
    report.flag("extra_embedding", !extra.is_empty());
    report.flag("invalid_shape_embedding", shape_issue);
    report.flag("nonfinite_values_embedding", finite_issue);
    report.flag("unnormalized_embedding", norm_issue);
    report.flag("cosine_mismatch", mismatch);

    report.metric("paragraphs", paragraphs.len());
    report.metric("embeddings", embeddings.len());
    report.metric("alignment", json!({"missing": missing, "extra": extra, "bad": bad}));
    report.metric(
        "determinism",
        json!({
            "mean_cos": mean_cos,
            "min_cos": min_cos,
            "max_delta": max_delta,
            "threshold": cos_delta,
            "passed": determinism_passed,
        }),
    );
    report
}
