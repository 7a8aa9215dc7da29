//! Acceptance suite. Each test implements one release criterion at its
//! stated tolerance and prints a PASS line (visible with `--nocapture`).
//! Criterion 8 (end-to-end pipeline determinism) lives in the CLI crate's
//! acceptance suite, next to the binary it exercises.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use serde_json::{json, Value};

use litforge_core::chunk::{chunk_document, ChunkParams, TokenizerProvider, WhitespaceTokenizer};
use litforge_core::embedding::{
    abstract_enrichment_gate, mock_embed, EnrichmentGate, EmbeddingVector, Role, EMBEDDING_DIM,
};
use litforge_core::exec;
use litforge_core::license::{
    resolve_license, screen_record, CanonicalLicense, LicenseInputs, Screening, Source,
    DEFAULT_ALLOWED,
};
use litforge_core::record::ParagraphKey;
use litforge_core::report::Status;
use litforge_core::retrieval::{mmr_rerank, Metric, SearchHit, VectorIndex};
use litforge_core::rouge::{rouge_l, rouge_n};
use litforge_core::synth::{synth_docs, synth_records, SynthConfig};
use litforge_core::trend::{aggregate, flag_document, resolve_year, smooth_3yr, CompiledRule};
use litforge_core::validate::{self, ValidationConfig};

fn pass(criterion: &str) {
    println!("ACCEPTANCE {criterion}: PASS");
}

// ---------------------------------------------------------------------
// Criterion 1: license truth table + reference report byte-identity
// ---------------------------------------------------------------------

/// Independent agreement oracle: enumerate the pairs of sources, look for
/// informative agreement and informative disagreement explicitly.
fn license_oracle(inputs: LicenseInputs) -> (String, bool, bool) {
    let slots = [
        (Source::Crossref, inputs.crossref),
        (Source::Unpaywall, inputs.unpaywall),
        (Source::Openalex, inputs.openalex),
    ];
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let conflict = pairs.iter().any(|&(a, b)| {
        slots[a].1.informative() && slots[b].1.informative() && slots[a].1 != slots[b].1
    });
    let pair_agrees = pairs.iter().any(|&(a, b)| {
        slots[a].1.informative() && slots[b].1.informative() && slots[a].1 == slots[b].1
    });
    let agreement = pair_agrees && !conflict;

    let resolved = if conflict {
        let mut ids: Vec<&str> = Vec::new();
        for (_, lic) in slots.iter().filter(|(_, l)| l.informative()) {
            if !ids.contains(&lic.id()) {
                ids.push(lic.id());
            }
        }
        format!("conflict:{}", ids.join("_vs_"))
    } else {
        let informative: Vec<CanonicalLicense> =
            slots.iter().map(|(_, l)| *l).filter(|l| l.informative()).collect();
        match informative.first() {
            Some(first) => first.id().to_string(),
            None => "missing".to_string(),
        }
    };
    (resolved, conflict, agreement)
}

#[test]
fn criterion_1_license_truth_table() {
    let started = Instant::now();
    let mut cases = 0;
    for a in CanonicalLicense::ALL {
        for b in CanonicalLicense::ALL {
            for c in CanonicalLicense::ALL {
                let inputs = LicenseInputs { crossref: a, unpaywall: b, openalex: c };
                let resolved = resolve_license(inputs);
                let (oracle_resolved, oracle_conflict, oracle_agreement) = license_oracle(inputs);
                assert_eq!(resolved.resolved, oracle_resolved, "inputs {a:?} {b:?} {c:?}");
                assert_eq!(resolved.conflict, oracle_conflict);
                assert_eq!(resolved.agreement, oracle_agreement);
                // Retention implies conflict-free agreement on an allowed id.
                if screen_record(&resolved, &DEFAULT_ALLOWED) == Screening::Retain {
                    assert!(!resolved.conflict && resolved.agreement);
                    assert!(DEFAULT_ALLOWED.iter().any(|l| l.id() == resolved.resolved));
                }
                cases += 1;
            }
        }
    }
    assert_eq!(cases, 1728);

    // The two reference report shapes, byte-identical metrics objects.
    let passing = json!({
        "crossref_license": {"license": "http://creativecommons.org/licenses/by/4.0/"},
        "unpaywall_license": {"best_oa_location": {"license": "cc-by"}},
        "openalex_license": null,
    });
    let report = validate::license::validate_license(&passing, &DEFAULT_ALLOWED);
    assert_eq!(report.status, Status::Pass);
    assert_eq!(
        serde_json::to_string(&report.metrics).unwrap(),
        r#"{"resolved_license":"cc-by","license_source":"crossref+unpaywall","license_conflict":false,"input_licenses":{"crossref":"cc-by","unpaywall":"cc-by","openalex":"missing"}}"#
    );

    let failing = json!({
        "crossref_license": null,
        "unpaywall_license": {"best_oa_location": {"license": "closed"}},
        "openalex_license": {"license": "cc-by-nc"},
    });
    let report = validate::license::validate_license(&failing, &DEFAULT_ALLOWED);
    assert_eq!(report.status, Status::Fail);
    assert_eq!(
        serde_json::to_string(&report.metrics).unwrap(),
        r#"{"resolved_license":"conflict:closed_vs_cc-by-nc","license_source":"unpaywall+openalex","license_conflict":true,"input_licenses":{"crossref":"missing","unpaywall":"closed","openalex":"cc-by-nc"}}"#
    );

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "truth table took {elapsed:?}");
    pass("1 license-truth-table");
}

// ---------------------------------------------------------------------
// Criterion 2: chunker properties on a 100-document synthetic corpus
// ---------------------------------------------------------------------

fn normalize_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[test]
fn criterion_2_chunker_properties() {
    let started = Instant::now();
    let params = ChunkParams::default();
    let docs = synth_docs(&SynthConfig { seed: 2024, docs: 100, ..SynthConfig::default() });
    let mut doc_means: Vec<f64> = Vec::with_capacity(docs.len());

    for doc in &docs {
        let chunks = chunk_document(&doc.doc, &WhitespaceTokenizer, params).unwrap();
        assert!(!chunks.is_empty());

        for (i, chunk) in chunks.iter().enumerate() {
            assert!(chunk.token_count <= params.max_tokens, "chunk over max");
            if i + 1 < chunks.len() {
                assert!(
                    chunk.token_count >= params.min_tokens,
                    "non-final chunk under min: {} tokens in doc {}",
                    chunk.token_count,
                    doc.corpus_id
                );
            }
            assert_eq!(chunk.token_count, WhitespaceTokenizer.count(&chunk.text));
        }

        // Overlap check: where a split occurred, the first `overlap`
        // tokens of chunk i+1 equal the last `overlap` tokens of chunk i.
        for i in 1..chunks.len() {
            let overlap = chunks[i].overlap_tokens;
            if overlap == 0 {
                continue;
            }
            assert_eq!(overlap, params.overlap);
            let prev: Vec<&str> = chunks[i - 1].text.split_whitespace().collect();
            let cur: Vec<&str> = chunks[i].text.split_whitespace().collect();
            assert_eq!(
                &cur[..overlap],
                &prev[prev.len() - overlap..],
                "overlap mismatch in doc {}",
                doc.corpus_id
            );
        }

        // Character-coverage oracle: chunks minus declared overlaps
        // reproduce the source paragraphs modulo whitespace.
        let mut reassembled = Vec::new();
        for chunk in &chunks {
            let words: Vec<&str> = chunk.text.split_whitespace().collect();
            reassembled.extend_from_slice(&words[chunk.overlap_tokens..]);
        }
        let source: Vec<String> = docs_paragraphs(doc);
        assert_eq!(
            reassembled.join(" "),
            normalize_ws(&source.join(" ")),
            "coverage failed for doc {}",
            doc.corpus_id
        );

        let mean =
            chunks.iter().map(|c| c.token_count).sum::<usize>() as f64 / chunks.len() as f64;
        doc_means.push(mean);
    }

    doc_means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = doc_means[doc_means.len() / 2];
    assert!(
        (150.0..=185.0).contains(&median),
        "median of mean chunk lengths {median:.1} outside [150, 185]"
    );

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "chunker suite took {elapsed:?}");
    pass("2 chunker-properties");
}

fn docs_paragraphs(doc: &litforge_core::synth::SynthDoc) -> Vec<String> {
    doc.doc
        .sections
        .iter()
        .flat_map(|s| s.paragraphs.iter().cloned())
        .collect()
}

// ---------------------------------------------------------------------
// Criterion 3: exhaustive ROUGE oracle equivalence
// ---------------------------------------------------------------------

/// Brute-force n-gram overlap: nested scans, no hashing.
fn oracle_rouge_n(cand: &[u8], refr: &[u8], n: usize) -> (f64, f64, f64) {
    let grams = |t: &[u8]| -> Vec<Vec<u8>> {
        if t.len() < n {
            Vec::new()
        } else {
            t.windows(n).map(|w| w.to_vec()).collect()
        }
    };
    let cand_grams = grams(cand);
    let ref_grams = grams(refr);
    let mut overlap = 0usize;
    let mut used = vec![false; cand_grams.len()];
    for rg in &ref_grams {
        for (i, cg) in cand_grams.iter().enumerate() {
            if !used[i] && cg == rg {
                used[i] = true;
                overlap += 1;
                break;
            }
        }
    }
    fraction(overlap, cand_grams.len(), ref_grams.len())
}

fn fraction(overlap: usize, cand_total: usize, ref_total: usize) -> (f64, f64, f64) {
    let p = if cand_total > 0 { overlap as f64 / cand_total as f64 } else { 0.0 };
    let r = if ref_total > 0 { overlap as f64 / ref_total as f64 } else { 0.0 };
    let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (p, r, f)
}

/// Recursive memoized LCS, a different route than the iterative table.
fn oracle_lcs(a: &[u8], b: &[u8], i: usize, j: usize, memo: &mut [Vec<i32>]) -> usize {
    if i == 0 || j == 0 {
        return 0;
    }
    if memo[i][j] >= 0 {
        return memo[i][j] as usize;
    }
    let value = if a[i - 1] == b[j - 1] {
        oracle_lcs(a, b, i - 1, j - 1, memo) + 1
    } else {
        oracle_lcs(a, b, i - 1, j, memo).max(oracle_lcs(a, b, i, j - 1, memo))
    };
    memo[i][j] = value as i32;
    value
}

fn oracle_rouge_l(cand: &[u8], refr: &[u8]) -> (f64, f64, f64) {
    let mut memo = vec![vec![-1i32; refr.len() + 1]; cand.len() + 1];
    let lcs = oracle_lcs(cand, refr, cand.len(), refr.len(), &mut memo);
    fraction(lcs, cand.len(), refr.len())
}

#[test]
fn criterion_3_rouge_oracle_equivalence() {
    const ALPHABET: [&str; 4] = ["alpha", "bravo", "carbon", "delta"];
    const MAX_TOKENS: usize = 6;

    // All token sequences of length 0..=6 over the 4-symbol alphabet.
    let mut sequences: Vec<Vec<u8>> = vec![Vec::new()];
    let mut frontier: Vec<Vec<u8>> = vec![Vec::new()];
    for _ in 0..MAX_TOKENS {
        let mut next = Vec::new();
        for seq in &frontier {
            for sym in 0..ALPHABET.len() as u8 {
                let mut extended = seq.clone();
                extended.push(sym);
                next.push(extended);
            }
        }
        sequences.extend(next.iter().cloned());
        frontier = next;
    }
    assert_eq!(sequences.len(), 5461);
    let texts: Vec<String> = sequences
        .iter()
        .map(|seq| seq.iter().map(|&s| ALPHABET[s as usize]).collect::<Vec<_>>().join(" "))
        .collect();

    let eq = |a: f64, b: f64| (a - b).abs() < 1e-12;
    let checked: usize = exec::map_range(sequences.len(), |ci| {
        let cand_text = &texts[ci];
        let cand_seq = &sequences[ci];
        let mut count = 0usize;
        for (ri, ref_text) in texts.iter().enumerate() {
            let ref_seq = &sequences[ri];
            for n in [1usize, 2] {
                let mine = rouge_n(cand_text, ref_text, n);
                let (p, r, f) = oracle_rouge_n(cand_seq, ref_seq, n);
                assert!(
                    eq(mine.precision, p) && eq(mine.recall, r) && eq(mine.f1, f),
                    "ROUGE-{n} mismatch for {cand_text:?} vs {ref_text:?}: \
                     got ({}, {}, {}), oracle ({p}, {r}, {f})",
                    mine.precision,
                    mine.recall,
                    mine.f1
                );
            }
            let mine = rouge_l(cand_text, ref_text);
            let (p, r, f) = oracle_rouge_l(cand_seq, ref_seq);
            assert!(
                eq(mine.precision, p) && eq(mine.recall, r) && eq(mine.f1, f),
                "ROUGE-L mismatch for {cand_text:?} vs {ref_text:?}"
            );
            count += 1;
        }
        count
    })
    .into_iter()
    .sum();
    assert_eq!(checked, 5461 * 5461);

    // Hand-derived case on the [0, 100] scale.
    let recall = rouge_n("a b d e", "a b c", 1).recall * 100.0;
    assert!((recall - 66.67).abs() <= 0.01, "recall {recall}");
    let report = validate::summary::validate_summary(
        &json!({"abstract": "a b c", "tldr": "a b d"}),
        &validate::MockSemanticScorer,
        10.0,
        30.0,
    );
    let f1 = report.metrics["scores"]["ROUGE-1"].as_f64().unwrap();
    assert!((f1 - 66.67).abs() <= 0.01, "scaled score {f1}");
    pass("3 rouge-oracle-equivalence");
}

// ---------------------------------------------------------------------
// Criterion 4: validator golden fixtures
// ---------------------------------------------------------------------

fn assert_flags(report: &litforge_core::ValidationReport, expected: &[&str]) {
    let mut got = report.set_flags();
    got.sort_unstable();
    let mut want = expected.to_vec();
    want.sort_unstable();
    assert_eq!(got, want, "{} flag set", report.validator);
}

#[test]
fn criterion_4_validator_fixtures() {
    let config = ValidationConfig::default();
    let golden = synth_records(404, 1).remove(0);
    let golden_value = golden.to_value();

    // Metadata: warning record with exactly ["empty:venue"], plus the
    // passing shape with zero counts.
    let mut venue_warn = golden_value.clone();
    venue_warn["metadata"]["venue"] = json!("");
    let report = validate::metadata::validate_metadata(&venue_warn);
    assert_eq!(report.status, Status::Warn);
    assert_eq!(report.metrics["warnings"], json!(["empty:venue"]));
    assert_eq!(report.metrics["error_count"], 0);
    assert_eq!(report.metrics["warning_count"], 1);
    let report = validate::metadata::validate_metadata(&golden_value);
    assert_eq!(report.status, Status::Pass);
    assert_eq!(report.metrics["warning_count"], 0);

    // Schema: empty abstract embedding fails with exactly the one flag;
    // the golden record passes with an empty error list.
    let mut empty_vec = golden_value.clone();
    empty_vec["abstract_embedding"] = json!([]);
    let report = validate::schema::validate_schema(&empty_vec);
    assert_eq!(report.status, Status::Fail);
    assert_flags(&report, &["too_short_abstract_embedding"]);
    assert_eq!(report.summary, "1 schema validation error(s) found.");
    let report = validate::schema::validate_schema(&golden_value);
    assert_eq!(report.status, Status::Pass);
    assert_eq!(report.summary, "Document conforms to the JSON schema.");

    // License: covered byte-exactly in criterion 1; assert statuses here.
    let report = validate::license::validate_license(&golden_value, &DEFAULT_ALLOWED);
    assert_eq!(report.status, Status::Pass);

    // Text: the alignment fixture lands on warn with only
    // low_rouge1_overlap at recall 93/206 ≈ 0.4515.
    let fixture = alignment_fixture();
    let report =
        validate::text::validate_text(&fixture, &config.text, config.detector.as_ref());
    assert_eq!(report.status, Status::Warn, "flags: {:?}", report.set_flags());
    assert_flags(&report, &["low_rouge1_overlap"]);
    let recall = report.metrics["rouge1_recall"].as_f64().unwrap();
    assert!((recall - 0.4515).abs() <= 0.0005, "rouge1_recall {recall}");

    // Chunk: 36 paragraphs with one 56-token final chunk warns with the
    // reference summary line.
    let chunk_fixture = chunk_fixture_36();
    let report = validate::chunks::validate_chunks(
        &chunk_fixture,
        config.tokenizer.as_ref(),
        config.chunk_min_tokens,
        config.chunk_max_tokens,
    );
    assert_eq!(report.status, Status::Warn);
    assert_eq!(report.summary, "0 chunk(s) over max tokens; 1 under min tokens.");
    assert_eq!(report.metrics["paragraph_count"], 36);
    assert_flags(&report, &["chunks_too_short"]);

    // Embedding: mock-built record passes (6/6 aligned, deterministic);
    // a perturbed stored vector fails.
    let six = embedding_fixture_six();
    let report = validate::embeddings::validate_embeddings(
        &six,
        config.embedder.as_ref(),
        6,
        config.embedding_cos_delta,
        config.embedding_norm_tol,
    );
    assert_eq!(report.status, Status::Pass);
    assert_eq!(report.metrics["paragraphs"], 6);
    assert_eq!(report.metrics["embeddings"], 6);
    assert_eq!(report.metrics["determinism"]["passed"], true);

    let mut perturbed = six.clone();
    let key = perturbed["embeddings"].as_object().unwrap().keys().next().unwrap().clone();
    let mut vector: Vec<f64> = perturbed["embeddings"][&key]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    vector[0] += 0.3;
    let norm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
    let renormalized: Vec<f64> = vector.into_iter().map(|v| v / norm).collect();
    perturbed["embeddings"][&key] = json!(renormalized);
    let report = validate::embeddings::validate_embeddings(
        &perturbed,
        config.embedder.as_ref(),
        6,
        config.embedding_cos_delta,
        config.embedding_norm_tol,
    );
    assert_eq!(report.status, Status::Fail);
    assert_eq!(report.metrics["determinism"]["passed"], false);

    // Subfield: failing (missing), warning (bad label + score), passing.
    let report = validate::subfield::validate_subfields(&json!({}), &config.vocabulary);
    assert_eq!(report.status, Status::Fail);
    assert_flags(&report, &["missing_predicted_subfield"]);
    let report = validate::subfield::validate_subfields(
        &json!({"predicted_subfield": {"Quantum Wizardry": 0.5, "Catalysis": 1.2}}),
        &config.vocabulary,
    );
    assert_eq!(report.status, Status::Warn);
    assert_flags(&report, &["contains_invalid_labels", "contains_invalid_scores"]);
    assert_eq!(report.metrics["invalid_labels"], json!(["Quantum Wizardry"]));
    assert_eq!(report.metrics["invalid_scores"], json!([{"Catalysis": 1.2}]));
    let report = validate::subfield::validate_subfields(
        &json!({"predicted_subfield": {"Biochemistry": 0.997, "Medicinal Chemistry": 0.759}}),
        &config.vocabulary,
    );
    assert_eq!(report.status, Status::Pass);

    // Summary: identical text scores 100 with no flags; empty summary
    // zeroes out with its flag.
    let report = validate::summary::validate_summary(
        &json!({"abstract": "The catalyst improves yield. It is stable.",
                "tldr": "The catalyst improves yield. It is stable."}),
        config.scorer.as_ref(),
        config.rouge_lsum_min,
        config.bert_f1_min,
    );
    assert_eq!(report.status, Status::Pass);
    assert_eq!(report.metrics["scores"]["ROUGE-Lsum"], 100.0);
    let report = validate::summary::validate_summary(
        &json!({"abstract": "Some abstract.", "tldr": ""}),
        config.scorer.as_ref(),
        config.rouge_lsum_min,
        config.bert_f1_min,
    );
    assert_eq!(report.status, Status::Warn);
    assert!(report.is_flag_set("empty_tldr"));
    assert_eq!(report.metrics["scores"]["ROUGE-Lsum"], 0.0);

    // Consistency: failing id mismatch, warning doi/embedding issues,
    // passing record.
    let mut mismatch = golden_value.clone();
    mismatch["metadata"]["corpusid"] = json!(789012);
    let report = validate::consistency::validate_consistency(&mismatch, Some(golden.corpus_id));
    assert_eq!(report.status, Status::Fail);
    assert_flags(&report, &["corpusid_mismatch"]);
    assert_eq!(report.metrics["corpus_ids"]["metadata_id"], 789012);

    let mut warned = golden_value.clone();
    warned["openalex_license"] = json!({"license": "cc-by", "doi": "10.1000/other"});
    warned["unpaywall_license"]
        .as_object_mut()
        .unwrap()
        .insert("doi".into(), json!("10.1000/example"));
    warned["metadata"]["externalids"]["DOI"] = json!("10.1000/example");
    let keys: Vec<String> =
        warned["embeddings"].as_object().unwrap().keys().rev().take(2).cloned().collect();
    for key in &keys {
        warned["embeddings"].as_object_mut().unwrap().remove(key);
    }
    let report = validate::consistency::validate_consistency(&warned, Some(golden.corpus_id));
    assert_eq!(report.status, Status::Warn);
    assert!(report.is_flag_set("doi_mismatch"));
    assert!(report.is_flag_set("missing_embeddings"));
    assert_eq!(report.metrics["doi_set"], json!(["10.1000/example", "10.1000/other"]));

    let report = validate::consistency::validate_consistency(&golden_value, Some(golden.corpus_id));
    assert_eq!(report.status, Status::Pass, "flags: {:?}", report.set_flags());

    // The aggregate over the golden record is a clean pass.
    let run = validate::run_all(&golden_value, Some(golden.corpus_id), &config);
    assert_eq!(run.aggregate, Status::Pass);
    pass("4 validator-fixtures");
}

/// An abstract of 206 unique synthetic tokens whose full text shares
/// exactly 93 of them within the first 2,000 characters: ROUGE-1 recall
/// 93/206 ≈ 0.45146, with every other text check healthy.
fn alignment_fixture() -> Value {
    let token = |i: usize| {
        let a = (b'a' + (i / 26 / 26) as u8 % 26) as char;
        let b = (b'a' + (i / 26) as u8 % 26) as char;
        let c = (b'a' + (i % 26) as u8) as char;
        format!("zq{a}{b}{c}xw")
    };
    let with_sentences = |tokens: &[String]| -> String {
        tokens
            .iter()
            .enumerate()
            .map(|(i, t)| if i % 10 == 9 { format!("{t}.") } else { t.clone() })
            .collect::<Vec<_>>()
            .join(" ")
            + "."
    };

    let abstract_tokens: Vec<String> = (0..206).map(token).collect();
    let abstract_text = with_sentences(&abstract_tokens);
    let shared = with_sentences(&abstract_tokens[..93]);

    let filler = "The results of this study were obtained using the methods that have been \
                  validated and are consistent with these observations. "
        .repeat(60);
    let fulltext = format!("# Alignment fixture study\n## Introduction\n{shared}\n## Methods\n{filler}");

    json!({
        "abstract": abstract_text,
        "fulltext": fulltext,
        "abstract_embedding": serde_json::to_value(mock_embed(&abstract_text, Role::Passage)).unwrap(),
    })
}

/// 36 paragraphs; the last one has 56 tokens, the rest are in range.
fn chunk_fixture_36() -> Value {
    let mut lengths = vec![201usize, 232];
    lengths.extend(std::iter::repeat_n(160usize, 33));
    lengths.push(56);
    let mut paragraphs = serde_json::Map::new();
    let mut embeddings = serde_json::Map::new();
    for (i, len) in lengths.iter().enumerate() {
        let key = format!("9991603P{i}");
        let text: String = (0..*len).map(|t| format!("tok{t}")).collect::<Vec<_>>().join(" ");
        embeddings
            .insert(key.clone(), serde_json::to_value(mock_embed(&text, Role::Passage)).unwrap());
        paragraphs.insert(key, json!(text));
    }
    json!({"corpus_id": 9991603, "paragraphs": paragraphs, "embeddings": embeddings})
}

fn embedding_fixture_six() -> Value {
    let mut paragraphs = serde_json::Map::new();
    let mut embeddings = serde_json::Map::new();
    for i in 0..6 {
        let key = format!("7P{i}");
        let text = format!("paragraph number {i} about catalytic surfaces and spectra");
        embeddings
            .insert(key.clone(), serde_json::to_value(mock_embed(&text, Role::Passage)).unwrap());
        paragraphs.insert(key, json!(text));
    }
    json!({"corpus_id": 7, "paragraphs": paragraphs, "embeddings": embeddings})
}

// ---------------------------------------------------------------------
// Criterion 5: embedding reproducibility at scale
// ---------------------------------------------------------------------

#[test]
fn criterion_5_embedding_reproducibility() {
    let config = ValidationConfig::default();
    let mut paragraphs = serde_json::Map::new();
    let mut embeddings = serde_json::Map::new();
    for i in 0..1000u32 {
        let key = ParagraphKey::new(424242, i).to_string();
        let text = format!("reproducibility paragraph {i} with deterministic content");
        embeddings
            .insert(key.clone(), serde_json::to_value(mock_embed(&text, Role::Passage)).unwrap());
        paragraphs.insert(key, json!(text));
    }
    let value = json!({"corpus_id": 424242, "paragraphs": paragraphs, "embeddings": embeddings});

    let report = validate::embeddings::validate_embeddings(
        &value,
        config.embedder.as_ref(),
        1000,
        config.embedding_cos_delta,
        config.embedding_norm_tol,
    );
    assert_eq!(report.status, Status::Pass);
    assert_eq!(report.metrics["determinism"]["mean_cos"], 1.0, "mean cosine exactly 1.0");
    assert_eq!(report.metrics["determinism"]["max_delta"], 0.0, "max drift exactly 0");

    // A deliberately perturbed vector is caught.
    let mut perturbed = value.clone();
    let mut vector: Vec<f64> = perturbed["embeddings"]["424242P500"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    vector[7] += 0.25;
    let norm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
    let renormalized: Vec<f64> = vector.into_iter().map(|v| v / norm).collect();
    perturbed["embeddings"]["424242P500"] = json!(renormalized);
    let report = validate::embeddings::validate_embeddings(
        &perturbed,
        config.embedder.as_ref(),
        1000,
        config.embedding_cos_delta,
        config.embedding_norm_tol,
    );
    assert_eq!(report.status, Status::Fail);
    assert_eq!(report.metrics["determinism"]["passed"], false);
    pass("5 embedding-reproducibility");
}

// ---------------------------------------------------------------------
// Criterion 6: retrieval exactness and MMR behavior
// ---------------------------------------------------------------------

#[test]
fn criterion_6_retrieval_exactness() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(606);

    for trial in 0..50 {
        let size = rng.random_range(5..=120);
        let items: Vec<(String, EmbeddingVector)> = (0..size)
            .map(|i| {
                (format!("{i}P0"), mock_embed(&format!("trial {trial} item {i}"), Role::Passage))
            })
            .collect();
        let index = VectorIndex::build(items.clone(), Metric::InnerProduct).unwrap();
        let query = mock_embed(&format!("query text {trial}"), Role::Query);
        let k = rng.random_range(1..=20);

        // Full-scan argsort oracle, written independently.
        let mut scored: Vec<(String, f64)> = items
            .iter()
            .map(|(id, v)| {
                let dot: f64 = v
                    .as_slice()
                    .iter()
                    .zip(query.as_slice())
                    .map(|(a, b)| *a as f64 * *b as f64)
                    .sum();
                (id.clone(), dot)
            })
            .collect();
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        scored.truncate(k.min(size));

        let hits = index.search(query.as_slice(), k).unwrap();
        assert_eq!(hits.len(), scored.len());
        for (hit, (id, score)) in hits.iter().zip(&scored) {
            assert_eq!(&hit.id, id, "trial {trial}");
            assert!((hit.score - score).abs() < 1e-12);
        }
    }

    // MMR at lambda = 1 returns the relevance prefix.
    let items: Vec<(String, EmbeddingVector)> = (0..12)
        .map(|i| (format!("{i}P0"), mock_embed(&format!("mmr item {i}"), Role::Passage)))
        .collect();
    let index = VectorIndex::build(items, Metric::InnerProduct).unwrap();
    let query = mock_embed("mmr item 3", Role::Query);
    let hits = index.search(query.as_slice(), 10).unwrap();
    let prefix = mmr_rerank(&hits, &index, 1.0, 6);
    assert_eq!(
        prefix.iter().map(|h| &h.id).collect::<Vec<_>>(),
        hits[..6].iter().map(|h| &h.id).collect::<Vec<_>>()
    );

    // MMR at lambda = 0.5 on a 6-item set with one duplicated document:
    // matches the greedy brute-force oracle and ranks the duplicate last.
    let planted = |weight: f32, axis: usize| -> EmbeddingVector {
        let mut values = vec![0.0f32; EMBEDDING_DIM];
        values[0] = weight;
        values[axis] = (1.0 - weight * weight).sqrt();
        EmbeddingVector::new(values).unwrap().normalized()
    };
    let relevances = [0.95f32, 0.8, 0.65, 0.5, 0.35];
    let mut items: Vec<(String, EmbeddingVector)> = relevances
        .iter()
        .enumerate()
        .map(|(i, &w)| (format!("d{i}"), planted(w, i + 1)))
        .collect();
    items.push(("dup".to_string(), planted(0.95, 1)));
    let index = VectorIndex::build(items.clone(), Metric::InnerProduct).unwrap();
    let mut query = vec![0.0f32; EMBEDDING_DIM];
    query[0] = 1.0;
    let hits = index.search(&query, 6).unwrap();
    let reranked = mmr_rerank(&hits, &index, 0.5, 6);

    // Independent greedy oracle over the same six items.
    let vec_of = |id: &str| -> &EmbeddingVector { &items.iter().find(|(i, _)| i == id).unwrap().1 };
    let sim = |a: &EmbeddingVector, b: &EmbeddingVector| -> f64 { a.cosine(b) };
    let mut remaining: Vec<&SearchHit> = hits.iter().collect();
    let mut oracle_order: Vec<String> = vec![remaining.remove(0).id.clone()];
    while !remaining.is_empty() {
        let mut best = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        for (pos, hit) in remaining.iter().enumerate() {
            let max_sim = oracle_order
                .iter()
                .map(|sel| sim(vec_of(&hit.id), vec_of(sel)))
                .fold(f64::NEG_INFINITY, f64::max);
            let score = 0.5 * hit.score - 0.5 * max_sim;
            if score > best_score {
                best_score = score;
                best = pos;
            }
        }
        oracle_order.push(remaining.remove(best).id.clone());
    }
    let got: Vec<&str> = reranked.iter().map(|h| h.id.as_str()).collect();
    let want: Vec<&str> = oracle_order.iter().map(String::as_str).collect();
    assert_eq!(got, want, "greedy oracle disagreement");
    assert_eq!(got.last(), Some(&"dup"));
    pass("6 retrieval-exactness");
}

// ---------------------------------------------------------------------
// Criterion 7: trend pipeline on a planted 200-document corpus
// ---------------------------------------------------------------------

#[test]
fn criterion_7_trend_pipeline() {
    let config = SynthConfig { seed: 777, docs: 200, plant_mentions: true, ..SynthConfig::default() };
    let docs = synth_docs(&config);
    let records: Vec<_> = docs.iter().map(litforge_core::synth::record_from_doc).collect();
    let rules: Vec<CompiledRule> = litforge_core::trend::builtin_rules()
        .into_iter()
        .map(|r| CompiledRule::new(r).unwrap())
        .collect();

    let mut planted_total = 0usize;
    for rule in &rules {
        let mut flags: Vec<(i32, bool)> = Vec::new();
        for (doc, record) in docs.iter().zip(&records) {
            let year = resolve_year(record).expect("synthetic records carry a year");
            let flagged = flag_document(record, rule);
            let planted = doc.planted.contains(&rule.rule.name.as_str());
            assert_eq!(
                flagged, planted,
                "doc {} rule {}: flag disagrees with planting",
                doc.corpus_id, rule.rule.name
            );
            planted_total += planted as usize;
            flags.push((year, flagged));
        }

        // Group-by oracle: independent nested counting.
        let mut doc_counts: HashMap<i32, u64> = HashMap::new();
        let mut flag_counts: HashMap<i32, u64> = HashMap::new();
        for (year, flagged) in &flags {
            *doc_counts.entry(*year).or_default() += 1;
            if *flagged {
                *flag_counts.entry(*year).or_default() += 1;
            }
        }

        let series = aggregate(flags.clone());
        assert_eq!(series.len(), doc_counts.len());
        for (year, stat) in &series {
            let docs = doc_counts[year];
            let flagged = flag_counts.get(year).copied().unwrap_or(0);
            assert_eq!(stat.doc_count, docs);
            assert_eq!(stat.flag_count, flagged);
            assert_eq!(stat.share, flagged as f64 / docs as f64, "share exact");
            assert!((0.0..=1.0).contains(&stat.share));
        }

        // Smoothing bounds: min(series) <= smoothed <= max(series).
        let smoothed = smooth_3yr(&series);
        let (lo, hi) = series
            .values()
            .fold((f64::MAX, f64::MIN), |(lo, hi), s| (lo.min(s.share), hi.max(s.share)));
        for (year, value) in &smoothed {
            assert!(
                *value >= lo - 1e-12 && *value <= hi + 1e-12,
                "smoothed {value} at {year} outside [{lo}, {hi}]"
            );
        }
    }
    assert!(planted_total > 50, "expected a substantial planted signal, got {planted_total}");

    // Constant-series fixpoint.
    let mut constant = BTreeMap::new();
    for year in 2015..2025 {
        constant.insert(
            year,
            litforge_core::trend::YearStat { doc_count: 10, flag_count: 4, share: 0.4 },
        );
    }
    for (_, value) in smooth_3yr(&constant) {
        assert!((value - 0.4).abs() < 1e-12);
    }
    pass("7 trend-pipeline");
}

// ---------------------------------------------------------------------
// Criterion 9: abstract enrichment gate boundaries
// ---------------------------------------------------------------------

#[test]
fn criterion_9_enrichment_gates() {
    assert_eq!(abstract_enrichment_gate(&"x".repeat(99)), EnrichmentGate::FlaggedShort);
    assert_eq!(
        abstract_enrichment_gate(&"x".repeat(100)),
        EnrichmentGate::IneligibleEnrichment,
        "100 chars: not flagged short, still enrichment-ineligible"
    );
    assert_eq!(abstract_enrichment_gate(&"x".repeat(999)), EnrichmentGate::IneligibleEnrichment);
    assert_eq!(abstract_enrichment_gate(&"x".repeat(1000)), EnrichmentGate::Eligible);
    assert_eq!(abstract_enrichment_gate(""), EnrichmentGate::IneligibleEmpty);
    pass("9 enrichment-gates");
}
