//! Summary quality validation: lexical overlap (ROUGE-1/2/L/Lsum) and
//! semantic similarity between a record's abstract and its `tldr`, all on
//! a [0, 100] scale. Empty inputs score zero across the board.

use serde_json::{json, Value};

use crate::embedding::{mock_embed, Role};
use crate::report::{Status, ValidationReport};
use crate::rouge::{rouge_l, rouge_lsum, rouge_n};

/// Semantic similarity provider; scores are (precision, recall, f1) on
/// [0, 100]. `None` marks the scorer unavailable.
pub trait SemanticScorer: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, candidate: &str, reference: &str) -> Option<(f64, f64, f64)>;
}

/// Offline stand-in with the greedy-matching shape of transformer-based
/// semantic metrics: every token embeds through the deterministic mock
/// embedder, precision/recall average each side's best cosine match, and
/// scores map onto [0, 100]. Numbers are not comparable to real
/// model-based scores; only the report schema and threshold mechanics
/// carry over.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockSemanticScorer;

const SCORER_TOKEN_CAP: usize = 256;

impl SemanticScorer for MockSemanticScorer {
    fn name(&self) -> &str {
        "mock-greedy-cosine"
    }

    fn score(&self, candidate: &str, reference: &str) -> Option<(f64, f64, f64)> {
        let mut cand = crate::tokenize::word_tokens(candidate);
        let mut refr = crate::tokenize::word_tokens(reference);
        cand.truncate(SCORER_TOKEN_CAP);
        refr.truncate(SCORER_TOKEN_CAP);
        if cand.is_empty() || refr.is_empty() {
            return Some((0.0, 0.0, 0.0));
        }

        let mut pair_cache: std::collections::HashMap<(String, String), f64> =
            std::collections::HashMap::new();
        let mut sim = |a: &str, b: &str| -> f64 {
            if a == b {
                return 1.0;
            }
            let key = if a < b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
            *pair_cache.entry(key).or_insert_with(|| {
                mock_embed(a, Role::Passage).cosine(&mock_embed(b, Role::Passage)).max(0.0)
            })
        };

        let best = |from: &[String], to: &[String], sim: &mut dyn FnMut(&str, &str) -> f64| -> f64 {
            let to_set: std::collections::HashSet<&str> =
                to.iter().map(String::as_str).collect();
            let total: f64 = from
                .iter()
                .map(|tok| {
                    if to_set.contains(tok.as_str()) {
                        1.0
                    } else {
                        to.iter().map(|other| sim(tok, other)).fold(0.0, f64::max)
                    }
                })
                .sum();
            total / from.len() as f64
        };

        let precision = best(&cand, &refr, &mut sim);
        let recall = best(&refr, &cand, &mut sim);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Some((precision * 100.0, recall * 100.0, f1 * 100.0))
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Validate summary quality on a raw record value.
pub fn validate_summary(
    value: &Value,
    scorer: &dyn SemanticScorer,
    rouge_lsum_min: f64,
    bert_f1_min: f64,
) -> ValidationReport {
    let abstract_text = value.get("abstract").and_then(Value::as_str).unwrap_or("");
    let tldr = value.get("tldr").and_then(Value::as_str).unwrap_or("");
    let empty_abstract = abstract_text.trim().is_empty();
    let empty_tldr = tldr.trim().is_empty();

    let mut scores = serde_json::Map::new();
    let mut missing_semantic = false;
    let (r1, r2, rl, rlsum, sem) = if empty_abstract || empty_tldr {
        (0.0, 0.0, 0.0, 0.0, Some((0.0, 0.0, 0.0)))
    } else {
        let r1 = rouge_n(tldr, abstract_text, 1).f1 * 100.0;
        let r2 = rouge_n(tldr, abstract_text, 2).f1 * 100.0;
        let rl = rouge_l(tldr, abstract_text).f1 * 100.0;
        let rlsum = rouge_lsum(tldr, abstract_text).f1 * 100.0;
        (r1, r2, rl, rlsum, scorer.score(tldr, abstract_text))
    };

    scores.insert("ROUGE-1".into(), json!(round2(r1)));
    scores.insert("ROUGE-2".into(), json!(round2(r2)));
    scores.insert("ROUGE-L".into(), json!(round2(rl)));
    scores.insert("ROUGE-Lsum".into(), json!(round2(rlsum)));
    let bert_f1 = match sem {
        Some((p, r, f)) => {
            scores.insert("BERTScore_Precision".into(), json!(round2(p)));
            scores.insert("BERTScore_Recall".into(), json!(round2(r)));
            scores.insert("BERTScore_F1".into(), json!(round2(f)));
            Some(f)
        }
        None => {
            missing_semantic = true;
            None
        }
    };

    let low_rouge_lsum = rlsum < rouge_lsum_min;
    let low_bert = bert_f1.is_some_and(|f| f < bert_f1_min);
    let summary_score = bert_f1.map(|f| round2((rlsum + f) / 2.0));

    let any_flag =
        empty_abstract || empty_tldr || low_rouge_lsum || low_bert || missing_semantic;
    let status = if any_flag { Status::Warn } else { Status::Pass };
    let text = match status {
        Status::Pass => "Summary scores within thresholds.".to_string(),
        _ => "Summary quality checks flagged.".to_string(),
    };

    let mut report = ValidationReport::new("summary_validation", status, text);
    report.flag("empty_abstract", empty_abstract);
    report.flag("empty_tldr", empty_tldr);
    report.flag("low_rouge_lsum", low_rouge_lsum);
    report.flag("low_bertscore_f1", low_bert);
    if missing_semantic {
        for metric in ["bertscore_precision", "bertscore_recall", "bertscore_f1"] {
            report.flag(format!("missing_score_{metric}"), true);
        }
    }
    report.metric("scores", Value::Object(scores));
    report.metric("summary_score", json!(summary_score));
    report.metric("scorer", scorer.name());
    report
}
