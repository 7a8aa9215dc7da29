//! Command-line front end for the corpus pipeline: stage subcommands,
//! retrieval and trend analyses, report rollups, and the orchestrated
//! `run-all`. Exit codes: 0 success, 2 validation failures present,
//! 1 operational error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use litforge_cli::config::PipelineConfig;
use litforge_cli::rollup::report_rollup;
use litforge_cli::stages::{self, filename_id, record_files};
use litforge_cli::EXIT_VALIDATION_FAILURES;
use litforge_core::license::{
    fetch_license_evidence, normalize_doi, resolve_from_slots, CassetteClient, EvidenceClient,
    LiveClient, Source, DEFAULT_ALLOWED, DEFAULT_RATE_PER_SOURCE,
};
use litforge_core::record::parse_record;
use litforge_core::retrieval::{
    assemble_context, mmr_rerank, AbstractCatalog, ContextItem, RecommendFilter, RecommendQuery,
    VectorIndex,
};
use litforge_core::structure::SectionWhitelist;
use litforge_core::trend::{
    aggregate, builtin_rules, flag_document, load_rules, resolve_year, series_csv, CompiledRule,
};
use litforge_core::validate::run_all as run_validators;

#[derive(Parser)]
#[command(name = "litforge", version, about = "Corpus construction, screening, and retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutDir {
    /// Pipeline root directory; stages read and write its subdirectories.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Stream dumps, filter by field of study, and join by corpus id.
    Ingest {
        #[command(flatten)]
        out: OutDir,
        #[arg(long)]
        papers: PathBuf,
        #[arg(long)]
        abstracts: PathBuf,
        #[arg(long)]
        fulltext: PathBuf,
        /// Drop papers without a full-text match.
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        require_fulltext: bool,
    },
    /// Convert raw text plus annotations into normalized Markdown.
    Structure {
        #[command(flatten)]
        out: OutDir,
        /// Section whitelist file (one name per line, `#` comments).
        #[arg(long)]
        whitelist: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        min_words: usize,
    },
    /// Token-aware recursive chunking with overlap.
    Chunk {
        #[command(flatten)]
        out: OutDir,
        #[arg(long, default_value_t = 200)]
        max_tokens: usize,
        #[arg(long, default_value_t = 20)]
        overlap: usize,
        #[arg(long, default_value_t = 100)]
        min_tokens: usize,
        /// `whitespace` or a subword vocabulary file path.
        #[arg(long, default_value = "whitespace")]
        tokenizer: String,
    },
    /// Embed paragraphs and apply the abstract enrichment gates.
    Embed {
        #[command(flatten)]
        out: OutDir,
        /// `mock` or `external:<endpoint>`.
        #[arg(long, default_value = "mock")]
        embedder: String,
        /// `mock` fills tldr/subfield deterministically; `none` skips.
        #[arg(long, default_value = "mock")]
        enrich: String,
    },
    /// Resolve license evidence and retain agreeing open records.
    Screen {
        #[command(flatten)]
        out: OutDir,
        /// Cassette directory (per-source evidence bodies).
        #[arg(long, default_value = "cassettes")]
        cassettes: PathBuf,
        /// Query live metadata services instead of cassettes.
        #[arg(long, conflicts_with = "offline")]
        live: bool,
        /// Force cassette replay (the default).
        #[arg(long)]
        offline: bool,
        /// Screen a newline-separated DOI list instead of the record
        /// pipeline; prints one license report per line.
        #[arg(long)]
        doi_file: Option<PathBuf>,
    },
    /// Run the nine record validators.
    Validate {
        #[command(flatten)]
        out: OutDir,
        /// `sidecar` report files or `embedded` record copies.
        #[arg(long, default_value = "sidecar")]
        emit: String,
        /// Comma-separated validator names to emit (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
    },
    /// Build the paragraph- and abstract-level flat indexes.
    Index {
        #[command(flatten)]
        out: OutDir,
    },
    /// Search a saved index; prints hits with payloads as JSON lines.
    Search {
        #[arg(long)]
        index: PathBuf,
        /// Record directory for hit payloads.
        #[arg(long)]
        records: PathBuf,
        /// Free text, or an id present in the index (paragraph key or
        /// corpus id) to use that stored vector as the query.
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// MMR lambda in [0, 1]; omitted means no diversification.
        #[arg(long)]
        mmr: Option<f64>,
    },
    /// Recommend similar papers from abstract embeddings.
    Recommend {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, conflicts_with = "query_text")]
        query_id: Option<u64>,
        #[arg(long)]
        query_text: Option<String>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long)]
        year_min: Option<i64>,
        #[arg(long)]
        year_max: Option<i64>,
        /// Minimum predicted-subfield confidence, as `label:threshold`.
        #[arg(long)]
        subfield: Option<String>,
        #[arg(long)]
        open_access_only: bool,
        #[arg(long)]
        mmr: Option<f64>,
    },
    /// Extract mention trends into per-rule CSV series.
    Trend {
        #[arg(long)]
        records: PathBuf,
        /// Output directory for `<rule>.csv` files.
        #[arg(long)]
        out_dir: PathBuf,
        /// Rules file (TOML); defaults to the built-in rules.
        #[arg(long)]
        rules: Option<PathBuf>,
    },
    /// Aggregate validation reports into a corpus-level summary.
    Rollup {
        /// Directory of sidecar reports or embedded record copies.
        #[arg(long)]
        reports: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every enabled stage per the config file.
    RunAll {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn base_config(out: PathBuf) -> PipelineConfig {
    PipelineConfig { out, ..PipelineConfig::default() }
}

fn run() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Ingest { out, papers, abstracts, fulltext, require_fulltext } => {
            let cfg = PipelineConfig {
                papers,
                abstracts,
                fulltext,
                require_fulltext,
                ..base_config(out.out)
            };
            let outcome = stages::run_ingest(&cfg)?;
            println!("ingested {} of {} papers", outcome.output_count, outcome.input_count);
        }
        Command::Structure { out, whitelist, min_words } => {
            let cfg = PipelineConfig { min_words, ..base_config(out.out) };
            let whitelist = match whitelist {
                Some(path) => SectionWhitelist::load(&path)?,
                None => SectionWhitelist::builtin(),
            };
            let outcome = stages::run_structure(&cfg, &whitelist)?;
            println!("structured {} of {} records", outcome.output_count, outcome.input_count);
        }
        Command::Chunk { out, max_tokens, overlap, min_tokens, tokenizer } => {
            let cfg = PipelineConfig {
                max_tokens,
                overlap,
                min_tokens,
                tokenizer,
                ..base_config(out.out)
            };
            let outcome = stages::run_chunk(&cfg)?;
            println!("chunked {} of {} records", outcome.output_count, outcome.input_count);
        }
        Command::Embed { out, embedder, enrich } => {
            let cfg = PipelineConfig { embedder, enrich, ..base_config(out.out) };
            let outcome = stages::run_embed(&cfg)?;
            println!("embedded {} of {} records", outcome.output_count, outcome.input_count);
        }
        Command::Screen { out, cassettes, live, offline: _, doi_file } => {
            if let Some(list) = doi_file {
                screen_doi_file(&list, &cassettes, live)?;
            } else {
                let cfg = PipelineConfig { cassettes, live_licenses: live, ..base_config(out.out) };
                let outcome = stages::run_screen(&cfg)?;
                println!("retained {} of {} records", outcome.output_count, outcome.input_count);
            }
        }
        Command::Validate { out, emit, only } => {
            if emit != "sidecar" && emit != "embedded" {
                bail!("--emit must be `sidecar` or `embedded`");
            }
            let cfg = PipelineConfig { emit, ..base_config(out.out) };
            let only = (!only.is_empty()).then_some(only);
            let (outcome, totals) = stages::run_validate(&cfg, only.as_deref())?;
            println!(
                "validated {} records: {} pass, {} warn, {} fail",
                outcome.input_count, totals.pass, totals.warn, totals.fail
            );
            if totals.fail > 0 {
                return Ok(ExitCode::from(EXIT_VALIDATION_FAILURES));
            }
        }
        Command::Index { out } => {
            let cfg = base_config(out.out);
            let outcome = stages::run_index(&cfg)?;
            println!("indexed {} records", outcome.input_count);
        }
        Command::Search { index, records, query, k, mmr } => {
            search_command(&index, &records, &query, k, mmr)?;
        }
        Command::Recommend {
            records,
            query_id,
            query_text,
            k,
            year_min,
            year_max,
            subfield,
            open_access_only,
            mmr,
        } => {
            let query = match (query_id, query_text) {
                (Some(id), _) => RecommendQuery::CorpusId(id),
                (None, Some(text)) => RecommendQuery::Text(text),
                (None, None) => bail!("provide --query-id or --query-text"),
            };
            let subfield_min = match subfield {
                Some(spec) => {
                    let (label, threshold) = spec
                        .rsplit_once(':')
                        .context("--subfield expects `label:threshold`")?;
                    Some((label.to_string(), threshold.parse::<f64>()?))
                }
                None => None,
            };
            let filter = RecommendFilter {
                year_range: match (year_min, year_max) {
                    (None, None) => None,
                    (lo, hi) => Some((lo.unwrap_or(i64::MIN), hi.unwrap_or(i64::MAX))),
                },
                subfield_min,
                open_access_only,
            };
            let corpus = load_records(&records)?;
            let catalog = AbstractCatalog::build(&corpus)?;
            let hits =
                catalog.recommend(&query, &filter, k, mmr, &litforge_core::MockEmbedder)?;
            for hit in hits {
                println!("{}", serde_json::to_string(&hit)?);
            }
        }
        Command::Trend { records, out_dir, rules } => {
            let rules = match rules {
                Some(path) => load_rules(&path)?,
                None => builtin_rules(),
            };
            let corpus = load_records(&records)?;
            std::fs::create_dir_all(&out_dir)?;
            for rule in rules {
                let compiled = CompiledRule::new(rule)?;
                let flags: Vec<(i32, bool)> = corpus
                    .iter()
                    .filter_map(|record| {
                        resolve_year(record).map(|year| (year, flag_document(record, &compiled)))
                    })
                    .collect();
                let series = aggregate(flags);
                let path = out_dir.join(format!("{}.csv", compiled.rule.name));
                std::fs::write(&path, series_csv(&series))?;
                println!("wrote {}", path.display());
            }
        }
        Command::Rollup { reports, out } => {
            let summary = report_rollup(&reports)?;
            let rendered = serde_json::to_string_pretty(&summary)?;
            match out {
                Some(path) => std::fs::write(path, rendered + "\n")?,
                None => println!("{rendered}"),
            }
        }
        Command::RunAll { config } => {
            let cfg = PipelineConfig::load(&config)?;
            litforge_core::exec::configure_threads(cfg.parallelism);
            let (manifest, totals) = stages::run_pipeline(&cfg)?;
            for stage in &manifest.stages {
                println!(
                    "{:<10} {:>6} -> {:>6} ({:.1}%)",
                    stage.name, stage.input_count, stage.output_count, stage.retained_pct
                );
            }
            println!(
                "validation: {} pass, {} warn, {} fail",
                totals.pass, totals.warn, totals.fail
            );
            if totals.fail > 0 {
                return Ok(ExitCode::from(EXIT_VALIDATION_FAILURES));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Screen a DOI list against the three sources, printing one keyed
/// license report per input line.
fn screen_doi_file(list: &PathBuf, cassettes: &PathBuf, live: bool) -> anyhow::Result<()> {
    let client: Box<dyn EvidenceClient> = if live {
        Box::new(LiveClient::new(DEFAULT_RATE_PER_SOURCE).recording_to(cassettes))
    } else {
        Box::new(CassetteClient::new(cassettes))
    };
    let contents = std::fs::read_to_string(list)?;
    for line in contents.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let doi = normalize_doi(line)?;
        let evidence: Vec<_> = Source::ALL
            .into_iter()
            .map(|source| fetch_license_evidence(&doi, source, client.as_ref()))
            .collect();
        let slot = |i: usize| (!evidence[i].raw.is_null()).then(|| evidence[i].raw.clone());
        let value = json!({
            "crossref_license": slot(0),
            "unpaywall_license": slot(1),
            "openalex_license": slot(2),
        });
        let report = litforge_core::validate::license::validate_license(&value, &DEFAULT_ALLOWED);
        let mut keyed = report.keyed();
        keyed["doi"] = json!(doi);
        println!("{}", serde_json::to_string(&keyed)?);
    }
    Ok(())
}

fn load_records(dir: &PathBuf) -> anyhow::Result<Vec<litforge_core::CorpusRecord>> {
    let mut records = Vec::new();
    for path in record_files(dir)? {
        let bytes = std::fs::read(&path)?;
        let record = parse_record(&bytes)
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        records.push(record);
    }
    Ok(records)
}

fn search_command(
    index_path: &PathBuf,
    records_dir: &PathBuf,
    query: &str,
    k: usize,
    mmr: Option<f64>,
) -> anyhow::Result<()> {
    let index = VectorIndex::load(index_path)?;
    let query_vector: Vec<f32> = match index.vector(query) {
        Some(stored) => stored.to_vec(),
        None => litforge_core::embedding::embed_query(&litforge_core::MockEmbedder, query)?
            .as_slice()
            .to_vec(),
    };
    let overfetch = if mmr.is_some() { (4 * k).min(index.len()) } else { k };
    let mut hits = index.search(&query_vector, overfetch)?;
    if let Some(lambda) = mmr {
        hits = mmr_rerank(&hits, &index, lambda, k);
    }
    hits.truncate(k);

    // Attach payloads from the record directory; hits may be paragraph
    // keys or bare corpus ids.
    let mut items = Vec::new();
    for hit in &hits {
        let key: Result<litforge_core::ParagraphKey, _> = hit.id.parse();
        let (corpus_id, paragraph) = match key {
            Ok(key) => (key.corpus_id, Some(key)),
            Err(_) => (hit.id.parse::<u64>().context("hit id is neither key nor corpus id")?, None),
        };
        let path = records_dir.join(format!("{corpus_id}.json"));
        let record = parse_record(&std::fs::read(&path)?)
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        let payload = match paragraph {
            Some(key) => ContextItem::from_record(key, &record),
            None => None,
        };
        let line = json!({
            "id": hit.id,
            "score": hit.score,
            "title": record.metadata.title,
            "authors": record.metadata.author_names(),
            "year": record.metadata.year,
            "doi": record.metadata.doi(),
            "tldr": record.tldr,
            "text": payload.as_ref().map(|p| p.text.clone()),
        });
        println!("{}", serde_json::to_string(&line)?);
        if let Some(item) = payload {
            items.push(item);
        }
    }
    if !items.is_empty() {
        let assembled = assemble_context(&items, query);
        eprintln!("references: {}", serde_json::to_string(&assembled.references)?);
    }
    Ok(())
}
