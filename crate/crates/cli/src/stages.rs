//! Pipeline stages. Each stage reads the previous stage's directory,
//! transforms records one file at a time (`{corpus_id}.json`), and writes
//! its own directory plus a stats report. Per-record work is pure and
//! runs through the core batch helpers; outputs are file-per-record, so
//! parallel execution stays byte-deterministic.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use serde_json::{json, Map, Value};

use litforge_core::chunk::{assign_keys, chunk_markdown, load_tokenizer, ChunkParams};
use litforge_core::embedding::{
    abstract_enrichment_gate, embed_passages, EmbeddingProvider, EnrichmentGate, ExternalEmbedder,
    MockEmbedder, Role,
};
use litforge_core::exec;
use litforge_core::ingest::{filter_chemistry, join_by_corpus_id, stream_file};
use litforge_core::license::{
    fetch_license_evidence, normalize_doi, resolve_from_slots, screen_record, CassetteClient,
    EvidenceClient, LiveClient, Screening, Source, DEFAULT_ALLOWED, DEFAULT_RATE_PER_SOURCE,
};
use litforge_core::record::{parse_record, serialize_record, CorpusRecord, Metadata};
use litforge_core::report::Status;
use litforge_core::retrieval::{Metric, VectorIndex};
use litforge_core::structure::{
    build_markdown, merge_linewraps, normalize_headers, parse_annotations, prune_sections,
    SectionWhitelist,
};
use litforge_core::synth::{mock_subfields, mock_tldr};
use litforge_core::validate::{run_all, ValidationConfig, VALIDATOR_NAMES};

use crate::config::PipelineConfig;
use crate::manifest::RunManifest;

#[derive(Debug, Clone, Copy, Default)]
pub struct StageOutcome {
    pub input_count: u64,
    pub output_count: u64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ValidationTotals {
    pub pass: u64,
    pub warn: u64,
    pub fail: u64,
}

pub fn stage_dir(cfg: &PipelineConfig, name: &str) -> PathBuf {
    cfg.out.join(name)
}

fn reports_dir(cfg: &PipelineConfig) -> PathBuf {
    cfg.out.join("reports")
}

/// Sorted `{corpus_id}.json` files under `dir`.
pub fn record_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("json"))
        .collect();
    files.sort();
    Ok(files)
}

/// Corpus id implied by a record file name.
pub fn filename_id(path: &Path) -> Option<u64> {
    path.file_stem()?.to_str()?.parse().ok()
}

pub fn read_json(path: &Path) -> anyhow::Result<Value> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_json(path: &Path, value: &Value) -> anyhow::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_stats(cfg: &PipelineConfig, name: &str, stats: Value) -> anyhow::Result<()> {
    let dir = reports_dir(cfg);
    fs::create_dir_all(&dir)?;
    write_json(&dir.join(format!("{name}_stats.json")), &stats)
}

pub fn make_embedder(spec: &str) -> anyhow::Result<Arc<dyn EmbeddingProvider>> {
    if spec == "mock" {
        Ok(Arc::new(MockEmbedder))
    } else if let Some(endpoint) = spec.strip_prefix("external:") {
        Ok(Arc::new(ExternalEmbedder::new(endpoint)))
    } else {
        bail!("unknown embedder `{spec}` (expected `mock` or `external:<endpoint>`)")
    }
}

// ---------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------

/// Stream the three dumps, keep chemistry papers, join attachments by
/// corpus id, and write one joined file per retained paper.
pub fn run_ingest(cfg: &PipelineConfig) -> anyhow::Result<StageOutcome> {
    let out_dir = stage_dir(cfg, "ingested");
    fs::create_dir_all(&out_dir)?;

    let mut papers_read = 0u64;
    let mut chemistry = 0u64;
    let papers = stream_file(&cfg.papers)?.filter(|item| match item {
        Ok(entry) => {
            papers_read += 1;
            let keep = filter_chemistry(entry);
            chemistry += keep as u64;
            keep
        }
        Err(_) => true, // pass through so join counts the line error
    });
    let abstracts = stream_file(&cfg.abstracts)?;
    let fulltexts = stream_file(&cfg.fulltext)?;
    let (joined, stats) = join_by_corpus_id(papers, abstracts, fulltexts, cfg.require_fulltext);

    for record in &joined {
        let value = json!({
            "corpus_id": record.corpus_id,
            "paper": record.paper,
            "abstract": record.abstract_payload,
            "fulltext": record.fulltext_payload,
        });
        write_json(&out_dir.join(format!("{}.json", record.corpus_id)), &value)?;
    }

    write_stats(
        cfg,
        "ingest",
        json!({
            "papers_read": papers_read,
            "chemistry_papers": chemistry,
            "join": serde_json::to_value(&stats)?,
        }),
    )?;
    Ok(StageOutcome { input_count: papers_read, output_count: joined.len() as u64 })
}

// ---------------------------------------------------------------------
// structure
// ---------------------------------------------------------------------

/// Convert raw text plus annotations into normalized Markdown drafts.
pub fn run_structure(cfg: &PipelineConfig, whitelist: &SectionWhitelist) -> anyhow::Result<StageOutcome> {
    let in_dir = stage_dir(cfg, "ingested");
    let out_dir = stage_dir(cfg, "structured");
    fs::create_dir_all(&out_dir)?;
    let files = record_files(&in_dir)?;

    let results = exec::map_batch(&files, |path| -> Result<Option<Value>, String> {
        let value = read_json(path).map_err(|e| e.to_string())?;
        let Some(fulltext) = value.get("fulltext").filter(|v| !v.is_null()) else {
            return Ok(None);
        };
        let text = fulltext
            .pointer("/content/text")
            .and_then(Value::as_str)
            .ok_or("fulltext payload lacks content.text")?;
        let annotations = fulltext
            .pointer("/content/annotations")
            .cloned()
            .unwrap_or(Value::Null);

        let text_len = text.chars().count();
        let spans = match parse_annotations(&annotations, text_len) {
            Ok(parsed) => parsed.spans,
            Err(_) => return Ok(None),
        };
        let doc = match build_markdown(text, &spans) {
            Ok(doc) => doc,
            Err(_) => return Ok(None),
        };
        let doc = normalize_headers(doc, whitelist);
        let doc = match prune_sections(doc, cfg.min_words, whitelist) {
            Ok(doc) => doc,
            Err(_) => return Ok(None),
        };
        let markdown = merge_linewraps(&doc.markdown);

        let abstract_text = value
            .pointer("/abstract/abstract")
            .and_then(Value::as_str)
            .or_else(|| value.pointer("/paper/abstract").and_then(Value::as_str))
            .unwrap_or("");
        let corpus_id = value["corpus_id"].clone();
        Ok(Some(json!({
            "corpus_id": corpus_id,
            "metadata": value["paper"],
            "abstract": abstract_text,
            "fulltext": markdown,
        })))
    });

    let mut written = 0u64;
    let mut rejected = 0u64;
    let mut errors = Vec::new();
    for (path, result) in files.iter().zip(results) {
        match result {
            Ok(Some(draft)) => {
                let id = draft["corpus_id"].as_u64().unwrap_or_default();
                write_json(&out_dir.join(format!("{id}.json")), &draft)?;
                written += 1;
            }
            Ok(None) => rejected += 1,
            Err(message) => {
                rejected += 1;
                errors.push(json!({"file": path.display().to_string(), "error": message}));
            }
        }
    }

    write_stats(
        cfg,
        "structure",
        json!({"input": files.len(), "written": written, "rejected": rejected, "errors": errors}),
    )?;
    Ok(StageOutcome { input_count: files.len() as u64, output_count: written })
}

// ---------------------------------------------------------------------
// chunk
// ---------------------------------------------------------------------

/// Split each draft's Markdown into keyed, token-bounded paragraphs.
pub fn run_chunk(cfg: &PipelineConfig) -> anyhow::Result<StageOutcome> {
    let in_dir = stage_dir(cfg, "structured");
    let out_dir = stage_dir(cfg, "chunked");
    fs::create_dir_all(&out_dir)?;
    let files = record_files(&in_dir)?;
    let tokenizer = load_tokenizer(&cfg.tokenizer)?;
    let params = ChunkParams {
        max_tokens: cfg.max_tokens,
        overlap: cfg.overlap,
        min_tokens: cfg.min_tokens,
    };

    let results = exec::map_batch(&files, |path| -> Result<Option<Value>, String> {
        let mut value = read_json(path).map_err(|e| e.to_string())?;
        let corpus_id =
            value["corpus_id"].as_u64().ok_or("draft lacks a numeric corpus_id")?;
        let markdown = value["fulltext"].as_str().unwrap_or("");
        let chunks = match chunk_markdown(markdown, tokenizer.as_ref(), params) {
            Ok(chunks) => chunks,
            Err(_) => return Ok(None), // empty content or tokenizer failure
        };
        let keyed = assign_keys(chunks, corpus_id);
        let mut paragraphs = Map::new();
        for chunk in keyed {
            paragraphs.insert(chunk.key.to_string(), json!(chunk.text));
        }
        value["paragraphs"] = Value::Object(paragraphs);
        Ok(Some(value))
    });

    let mut written = 0u64;
    let mut skipped = 0u64;
    for result in results {
        match result {
            Ok(Some(draft)) => {
                let id = draft["corpus_id"].as_u64().unwrap_or_default();
                write_json(&out_dir.join(format!("{id}.json")), &draft)?;
                written += 1;
            }
            _ => skipped += 1,
        }
    }

    write_stats(
        cfg,
        "chunk",
        json!({"input": files.len(), "written": written, "skipped": skipped}),
    )?;
    Ok(StageOutcome { input_count: files.len() as u64, output_count: written })
}

// ---------------------------------------------------------------------
// embed
// ---------------------------------------------------------------------

/// Embed every paragraph, apply the abstract enrichment gates, and emit
/// complete records (license slots still null).
pub fn run_embed(cfg: &PipelineConfig) -> anyhow::Result<StageOutcome> {
    let in_dir = stage_dir(cfg, "chunked");
    let out_dir = stage_dir(cfg, "embedded");
    fs::create_dir_all(&out_dir)?;
    let files = record_files(&in_dir)?;
    let provider = make_embedder(&cfg.embedder)?;
    let enrich = cfg.enrich == "mock";

    let results = exec::map_batch(&files, |path| -> Result<Option<Vec<u8>>, String> {
        let value = read_json(path).map_err(|e| e.to_string())?;
        let corpus_id = value["corpus_id"].as_u64().ok_or("missing corpus_id")?;
        let metadata: Metadata =
            serde_json::from_value(value["metadata"].clone()).map_err(|e| e.to_string())?;
        let abstract_text = value["abstract"].as_str().unwrap_or("").to_string();
        let fulltext = value["fulltext"].as_str().unwrap_or("").to_string();
        let Some(paragraph_obj) = value["paragraphs"].as_object() else {
            return Ok(None);
        };
        if paragraph_obj.is_empty() {
            return Ok(None);
        }

        let mut keys = Vec::with_capacity(paragraph_obj.len());
        let mut texts: Vec<&str> = Vec::with_capacity(paragraph_obj.len());
        for (key, text) in paragraph_obj {
            keys.push(key.clone());
            texts.push(text.as_str().ok_or("paragraph value is not a string")?);
        }
        let vectors = embed_passages(provider.as_ref(), &texts).map_err(|e| e.to_string())?;

        let mut paragraphs = BTreeMap::new();
        let mut embeddings = BTreeMap::new();
        for ((key, text), vector) in keys.iter().zip(&texts).zip(vectors) {
            let key: litforge_core::ParagraphKey = key.parse().map_err(|_| "bad key")?;
            paragraphs.insert(key, text.to_string());
            embeddings.insert(key, vector);
        }

        let gate = abstract_enrichment_gate(&abstract_text);
        let eligible = gate == EnrichmentGate::Eligible;
        let abstract_embedding = if eligible {
            Some(
                embed_passages(provider.as_ref(), &[abstract_text.as_str()])
                    .map_err(|e| e.to_string())?
                    .remove(0),
            )
        } else {
            None
        };

        let record = CorpusRecord {
            schema_version: "1.0".into(),
            corpus_id,
            metadata,
            abstract_text: abstract_text.clone(),
            fulltext,
            paragraphs,
            embeddings,
            abstract_embedding,
            predicted_subfield: (enrich && eligible).then(|| mock_subfields(corpus_id)),
            tldr: (enrich && eligible).then(|| mock_tldr(&abstract_text)),
            unpaywall_license: None,
            crossref_license: None,
            openalex_license: None,
        };
        Ok(Some(serialize_record(&record)))
    });

    let mut written = 0u64;
    let mut skipped = 0u64;
    for (path, result) in files.iter().zip(results) {
        match result {
            Ok(Some(bytes)) => {
                let name = path.file_name().expect("record files have names");
                fs::write(out_dir.join(name), bytes)?;
                written += 1;
            }
            _ => skipped += 1,
        }
    }

    write_stats(
        cfg,
        "embed",
        json!({"input": files.len(), "written": written, "skipped": skipped}),
    )?;
    Ok(StageOutcome { input_count: files.len() as u64, output_count: written })
}

// ---------------------------------------------------------------------
// screen
// ---------------------------------------------------------------------

fn evidence_client(cfg: &PipelineConfig) -> Box<dyn EvidenceClient> {
    if cfg.live_licenses {
        Box::new(LiveClient::new(DEFAULT_RATE_PER_SOURCE).recording_to(&cfg.cassettes))
    } else {
        Box::new(CassetteClient::new(&cfg.cassettes))
    }
}

/// Resolve license evidence for each record and retain only records whose
/// resolved license passes the agreement rule and the allowed set.
pub fn run_screen(cfg: &PipelineConfig) -> anyhow::Result<StageOutcome> {
    let in_dir = stage_dir(cfg, "embedded");
    let out_dir = stage_dir(cfg, "screened");
    fs::create_dir_all(&out_dir)?;
    let files = record_files(&in_dir)?;
    let client = evidence_client(cfg);

    struct Decision {
        corpus_id: u64,
        resolved: String,
        sources: String,
        retained: bool,
        bytes: Option<Vec<u8>>,
    }

    let results = exec::map_batch(&files, |path| -> Result<Decision, String> {
        let bytes = fs::read(path).map_err(|e| e.to_string())?;
        let mut record = parse_record(&bytes).map_err(|e| e.to_string())?;

        let has_evidence = record.unpaywall_license.is_some()
            || record.crossref_license.is_some()
            || record.openalex_license.is_some();
        if !has_evidence {
            if let Some(doi) = record.metadata.doi().and_then(|d| normalize_doi(d).ok()) {
                let fetch = |source: Source| {
                    let evidence = fetch_license_evidence(&doi, source, client.as_ref());
                    (!evidence.raw.is_null()).then_some(evidence.raw)
                };
                record.crossref_license = fetch(Source::Crossref);
                record.unpaywall_license = fetch(Source::Unpaywall);
                record.openalex_license = fetch(Source::Openalex);
            }
        }

        let resolved = resolve_from_slots(
            record.crossref_license.as_ref(),
            record.unpaywall_license.as_ref(),
            record.openalex_license.as_ref(),
        );
        let retained = screen_record(&resolved, &DEFAULT_ALLOWED) == Screening::Retain;
        Ok(Decision {
            corpus_id: record.corpus_id,
            resolved: resolved.resolved.clone(),
            sources: resolved.source_expr(),
            retained,
            bytes: retained.then(|| serialize_record(&record)),
        })
    });

    let mut retained = 0u64;
    let mut excluded = Vec::new();
    let mut failures = Vec::new();
    for (path, result) in files.iter().zip(results) {
        match result {
            Ok(decision) => {
                if let Some(bytes) = decision.bytes {
                    fs::write(out_dir.join(format!("{}.json", decision.corpus_id)), bytes)?;
                    retained += 1;
                } else {
                    excluded.push(json!({
                        "corpus_id": decision.corpus_id,
                        "resolved_license": decision.resolved,
                        "license_source": decision.sources,
                    }));
                }
            }
            Err(message) => {
                failures.push(json!({"file": path.display().to_string(), "error": message}));
            }
        }
    }

    write_stats(
        cfg,
        "screen",
        json!({
            "input": files.len(),
            "retained": retained,
            "excluded": excluded.len(),
            "exclusions": excluded,
            "failures": failures,
        }),
    )?;
    Ok(StageOutcome { input_count: files.len() as u64, output_count: retained })
}

// ---------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------

/// Run the nine-validator battery over every screened record. Reports go
/// to sidecar files or get embedded into record copies, per config.
pub fn run_validate(
    cfg: &PipelineConfig,
    only: Option<&[String]>,
) -> anyhow::Result<(StageOutcome, ValidationTotals)> {
    let in_dir = stage_dir(cfg, "screened");
    let out_dir = reports_dir(cfg).join("records");
    fs::create_dir_all(&out_dir)?;
    let files = record_files(&in_dir)?;
    let config = ValidationConfig {
        tokenizer: load_tokenizer(&cfg.tokenizer)?.into(),
        embedder: make_embedder(&cfg.embedder)?,
        ..ValidationConfig::default()
    };
    let keep = |name: &str| only.is_none_or(|names| names.iter().any(|n| n == name));
    for name in only.unwrap_or(&[]) {
        if !VALIDATOR_NAMES.contains(&name.as_str()) {
            bail!("unknown validator `{name}`");
        }
    }

    let results = exec::map_batch(&files, |path| -> Result<(Value, Value, Status), String> {
        let value = read_json(path).map_err(|e| e.to_string())?;
        let run = run_all(&value, filename_id(path), &config);
        let mut keyed = Map::new();
        let mut aggregate = Status::Pass;
        for report in &run.reports {
            if keep(&report.validator) {
                keyed.insert(report.validator.clone(), report.envelope());
                aggregate = aggregate.max(report.status);
            }
        }
        Ok((value, Value::Object(keyed), aggregate))
    });

    let mut totals = ValidationTotals::default();
    let mut per_validator: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for (path, result) in files.iter().zip(results) {
        let (record, reports, aggregate) =
            result.map_err(|e| anyhow::anyhow!("validating {}: {e}", path.display()))?;
        match aggregate {
            Status::Pass => totals.pass += 1,
            Status::Warn => totals.warn += 1,
            Status::Fail => totals.fail += 1,
        }
        for (validator, envelope) in reports.as_object().expect("reports object") {
            let status = envelope["status"].as_str().unwrap_or("pass").to_string();
            *per_validator.entry(validator.clone()).or_default().entry(status).or_default() += 1;
        }

        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("record");
        if cfg.emit == "embedded" {
            let mut combined = record;
            for (validator, envelope) in reports.as_object().expect("reports object") {
                combined[validator] = envelope.clone();
            }
            write_json(&out_dir.join(format!("{stem}.json")), &combined)?;
        } else {
            write_json(&out_dir.join(format!("{stem}.report.json")), &reports)?;
        }
    }

    write_stats(
        cfg,
        "validate",
        json!({
            "input": files.len(),
            "pass": totals.pass,
            "warn": totals.warn,
            "fail": totals.fail,
            "per_validator": per_validator,
        }),
    )?;
    Ok((
        StageOutcome { input_count: files.len() as u64, output_count: files.len() as u64 },
        totals,
    ))
}

// ---------------------------------------------------------------------
// index
// ---------------------------------------------------------------------

/// Build the paragraph-level and abstract-level flat indexes.
pub fn run_index(cfg: &PipelineConfig) -> anyhow::Result<StageOutcome> {
    let in_dir = stage_dir(cfg, "screened");
    let out_dir = stage_dir(cfg, "index");
    fs::create_dir_all(&out_dir)?;
    let files = record_files(&in_dir)?;

    let mut paragraph_items = Vec::new();
    let mut abstract_items = Vec::new();
    for path in &files {
        let bytes = fs::read(path)?;
        let record =
            parse_record(&bytes).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        for (key, vector) in &record.embeddings {
            paragraph_items.push((key.to_string(), vector.clone()));
        }
        if let Some(vector) = &record.abstract_embedding {
            abstract_items.push((record.corpus_id.to_string(), vector.clone()));
        }
    }

    let paragraph_index = VectorIndex::build(paragraph_items, Metric::InnerProduct)?;
    paragraph_index.save(&out_dir.join("paragraphs.idx"))?;
    let abstract_index = VectorIndex::build(abstract_items, Metric::InnerProduct)?;
    abstract_index.save(&out_dir.join("abstracts.idx"))?;

    write_stats(
        cfg,
        "index",
        json!({
            "records": files.len(),
            "paragraph_vectors": paragraph_index.len(),
            "abstract_vectors": abstract_index.len(),
        }),
    )?;
    Ok(StageOutcome { input_count: files.len() as u64, output_count: files.len() as u64 })
}

// ---------------------------------------------------------------------
// run-all
// ---------------------------------------------------------------------

/// Execute the enabled stages in pipeline order, recording per-stage
/// counts in a manifest. A disabled stage carries its count forward.
pub fn run_pipeline(cfg: &PipelineConfig) -> anyhow::Result<(RunManifest, ValidationTotals)> {
    fs::create_dir_all(&cfg.out)?;
    let mut manifest = RunManifest::new(cfg.hash());
    let whitelist = SectionWhitelist::builtin();
    let mut carried = 0u64;
    let mut totals = ValidationTotals::default();

    macro_rules! stage {
        ($enabled:expr, $name:expr, $run:expr) => {
            if $enabled {
                let outcome: StageOutcome = $run?;
                manifest.record_stage($name, outcome.input_count, outcome.output_count);
                carried = outcome.output_count;
            } else {
                manifest.record_stage($name, carried, carried);
            }
        };
    }

    stage!(cfg.stages.ingest, "ingest", run_ingest(cfg));
    stage!(cfg.stages.structure, "structure", run_structure(cfg, &whitelist));
    stage!(cfg.stages.chunk, "chunk", run_chunk(cfg));
    stage!(cfg.stages.embed, "embed", run_embed(cfg));
    stage!(cfg.stages.screen, "screen", run_screen(cfg));
    if cfg.stages.validate {
        let (outcome, t) = run_validate(cfg, None)?;
        manifest.record_stage("validate", outcome.input_count, outcome.output_count);
        carried = outcome.output_count;
        totals = t;
    } else {
        manifest.record_stage("validate", carried, carried);
    }
    stage!(cfg.stages.index, "index", run_index(cfg));

    manifest.finish();
    write_json(&cfg.out.join("manifest.json"), &serde_json::to_value(&manifest)?)?;
    Ok((manifest, totals))
}
