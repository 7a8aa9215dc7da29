//! ROUGE overlap metrics (unigram/bigram, LCS, and summary-level LCS)
//! over lowercased, punctuation-stripped word tokens. Scores are in
//! [0, 1]; report-level scaling to [0, 100] happens at the call site.

use std::collections::HashMap;

use crate::tokenize::{split_sentences, word_tokens};

/// Precision / recall / F1 triple for one ROUGE variant.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    fn from_counts(overlap: usize, candidate_total: usize, reference_total: usize) -> Self {
        let precision = if candidate_total > 0 {
            overlap as f64 / candidate_total as f64
        } else {
            0.0
        };
        let recall = if reference_total > 0 {
            overlap as f64 / reference_total as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        RougeScore { precision, recall, f1 }
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// ROUGE-N with clipped n-gram overlap counts. Empty candidate or
/// reference yields all zeros.
pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> RougeScore {
    assert!(n >= 1, "rouge_n requires n >= 1");
    let cand = word_tokens(candidate);
    let refr = word_tokens(reference);
    let cand_grams = ngram_counts(&cand, n);
    let ref_grams = ngram_counts(&refr, n);
    let overlap: usize = ref_grams
        .iter()
        .map(|(gram, &rc)| rc.min(cand_grams.get(gram).copied().unwrap_or(0)))
        .sum();
    let cand_total = cand.len().saturating_sub(n - 1);
    let ref_total = refr.len().saturating_sub(n - 1);
    RougeScore::from_counts(overlap, cand_total, ref_total)
}

fn lcs_table(a: &[String], b: &[String]) -> Vec<Vec<usize>> {
    let mut dp = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            dp[i][j] = if a[i - 1] == b[j - 1] {
                dp[i - 1][j - 1] + 1
            } else {
                dp[i - 1][j].max(dp[i][j - 1])
            };
        }
    }
    dp
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    lcs_table(a, b)[a.len()][b.len()]
}

/// Indices into `a` participating in one canonical LCS of `a` and `b`.
fn lcs_indices(a: &[String], b: &[String]) -> Vec<usize> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let dp = lcs_table(a, b);
    let mut out = Vec::new();
    let (mut i, mut j) = (a.len(), b.len());
    while i > 0 && j > 0 {
        if a[i - 1] == b[j - 1] && dp[i][j] == dp[i - 1][j - 1] + 1 {
            out.push(i - 1);
            i -= 1;
            j -= 1;
        } else if dp[i - 1][j] >= dp[i][j - 1] {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    out.reverse();
    out
}

/// ROUGE-L: longest-common-subsequence overlap over whole texts.
pub fn rouge_l(candidate: &str, reference: &str) -> RougeScore {
    let cand = word_tokens(candidate);
    let refr = word_tokens(reference);
    let lcs = lcs_len(&cand, &refr);
    RougeScore::from_counts(lcs, cand.len(), refr.len())
}

/// ROUGE-Lsum: both texts are split into sentences, and each reference
/// sentence scores the union of its LCS matches across all candidate
/// sentences, with token counts clipped so repeated words cannot be
/// credited more often than they occur.
pub fn rouge_lsum(candidate: &str, reference: &str) -> RougeScore {
    let cand_sents: Vec<Vec<String>> = split_sentences(candidate)
        .into_iter()
        .map(word_tokens)
        .collect();
    let ref_sents: Vec<Vec<String>> = split_sentences(reference)
        .into_iter()
        .map(word_tokens)
        .collect();

    let cand_total: usize = cand_sents.iter().map(Vec::len).sum();
    let ref_total: usize = ref_sents.iter().map(Vec::len).sum();
    if cand_total == 0 || ref_total == 0 {
        return RougeScore::default();
    }

    let mut cand_budget: HashMap<&String, usize> = HashMap::new();
    for sent in &cand_sents {
        for tok in sent {
            *cand_budget.entry(tok).or_insert(0) += 1;
        }
    }

    let mut hits = 0usize;
    for ref_sent in &ref_sents {
        let mut matched = vec![false; ref_sent.len()];
        for cand_sent in &cand_sents {
            for idx in lcs_indices(ref_sent, cand_sent) {
                matched[idx] = true;
            }
        }
        for (idx, hit) in matched.iter().enumerate() {
            if *hit {
                let budget = cand_budget.entry(&ref_sent[idx]).or_insert(0);
                if *budget > 0 {
                    *budget -= 1;
                    hits += 1;
                }
            }
        }
    }
    RougeScore::from_counts(hits, cand_total, ref_total)
}
