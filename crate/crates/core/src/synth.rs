//! Deterministic synthetic corpus generation: English-like documents,
//! fully populated records, and upstream-shaped dump files. Used by the
//! test suites, the benchmarks, and demo pipelines; everything is a pure
//! function of the seed.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use flate2::write::GzEncoder;
use flate2::Compression as GzLevel;
use rand::prelude::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};

use crate::chunk::{assign_keys, chunk_document, ChunkParams, WhitespaceTokenizer};
use crate::embedding::{abstract_enrichment_gate, mock_embed, EnrichmentGate, Role};
use crate::record::{CorpusRecord, Metadata};
use crate::structure::{Section, StructuredDoc};
use crate::tokenize::split_sentences;

const CONTENT_WORDS: &[&str] = &[
    "catalyst", "reaction", "spectra", "nanoparticle", "substrate", "solvent", "polymer",
    "membrane", "electrode", "sample", "temperature", "pressure", "yield", "selectivity",
    "absorption", "emission", "wavelength", "detector", "synthesis", "compound", "molecule",
    "bond", "crystal", "surface", "coating", "solution", "measurement", "analysis", "signal",
    "spectrum", "gradient", "kinetics", "diffusion", "oxidation", "reduction", "ligand",
    "complex", "buffer", "titration", "chromatography", "microscopy", "resonance", "plasmon",
];

const CONNECTOR_WORDS: &[&str] = &[
    "the", "of", "and", "to", "is", "was", "for", "with", "that", "this", "are", "were", "from",
    "which", "been", "has", "have", "not", "their", "these", "than", "also", "during", "between",
    "using", "we",
];

const VENUES: &[&str] = &[
    "Journal of Synthetic Results",
    "Spectroscopy Letters B",
    "Annual Methods Reports",
    "",
];

const SUBFIELD_LABELS: &[&str] = &[
    "Catalysis",
    "Organic Chemistry",
    "Polymer Chemistry",
    "Inorganic Chemistry",
    "Materials Science",
    "Analytical Chemistry",
    "Physical Chemistry",
    "Biochemistry",
    "Environmental Chemistry",
    "Energy Chemistry",
    "Medicinal Chemistry",
    "Chemical Engineering",
    "Supramolecular Chemistry",
    "Radiochemistry & Nuclear Chemistry",
    "Forensic & Legal Chemistry",
    "Food Chemistry",
    "Chemical Education",
    "Others",
];

/// Sentences planted for trend tests, keyed by rule name.
pub const PLANT_SENTENCES: &[(&str, &str)] = &[
    ("gold-sers", "Gold nanoparticles produced a strong SERS enhancement in this assay."),
    ("silver-sers", "Silver nanoparticles were the SERS substrate of choice here."),
    ("raman-785nm", "Raman spectra were collected under 785 nm laser excitation."),
    ("raman-532nm", "We applied 532 nm laser excitation for the Raman measurements."),
];

/// Tuning knobs for document generation.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub docs: usize,
    /// Every n-th document gets an abstract below the enrichment
    /// threshold (None: all abstracts eligible).
    pub short_abstract_every: Option<usize>,
    /// Every n-th document ends with a short final paragraph.
    pub short_tail_every: usize,
    /// Plant trend-rule mention sentences with deterministic frequencies.
    pub plant_mentions: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            docs: 100,
            short_abstract_every: None,
            short_tail_every: 3,
            plant_mentions: false,
        }
    }
}

fn word(rng: &mut ChaCha20Rng) -> &'static str {
    if rng.random_bool(0.55) {
        CONNECTOR_WORDS.choose(rng).unwrap()
    } else {
        CONTENT_WORDS.choose(rng).unwrap()
    }
}

/// One sentence of roughly `len` words, capitalized, period-terminated.
fn sentence(rng: &mut ChaCha20Rng, len: usize) -> String {
    let mut words: Vec<String> = (0..len).map(|_| word(rng).to_string()).collect();
    if let Some(first) = words.first_mut() {
        let mut chars = first.chars();
        if let Some(c) = chars.next() {
            *first = c.to_uppercase().collect::<String>() + chars.as_str();
        }
    }
    format!("{}.", words.join(" "))
}

/// A paragraph of at least `min_tokens` whitespace tokens.
fn paragraph(rng: &mut ChaCha20Rng, min_tokens: usize) -> String {
    let mut sentences = Vec::new();
    let mut tokens = 0usize;
    while tokens < min_tokens {
        let len = rng.random_range(8..=16);
        sentences.push(sentence(rng, len));
        tokens += len;
    }
    sentences.join(" ")
}

fn text_of_chars(rng: &mut ChaCha20Rng, min_chars: usize) -> String {
    let mut out = String::new();
    while out.chars().count() < min_chars {
        if !out.is_empty() {
            out.push(' ');
        }
        let len = rng.random_range(10..=18);
        out.push_str(&sentence(rng, len));
    }
    out
}

/// One synthetic document: structured sections plus bibliographic fields.
#[derive(Debug, Clone)]
pub struct SynthDoc {
    pub corpus_id: u64,
    pub title: String,
    pub abstract_text: String,
    pub year: i64,
    pub doi: String,
    pub doc: StructuredDoc,
    /// Trend-rule names planted into this document.
    pub planted: Vec<&'static str>,
}

/// Generate `config.docs` structured documents deterministically.
pub fn synth_docs(config: &SynthConfig) -> Vec<SynthDoc> {
    let mut out = Vec::with_capacity(config.docs);
    for i in 0..config.docs {
        // Per-document rng keeps documents independent of corpus size.
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed ^ (0x9e3779b9 * (i as u64 + 1)));
        let corpus_id = 100_000 + i as u64;
        let title_len = rng.random_range(4..=8);
        let title = sentence(&mut rng, title_len).trim_end_matches('.').to_string();
        let year = 2015 + (i as i64 % 10);
        let doi = format!("10.5555/synth.{corpus_id}");

        let abstract_text = match config.short_abstract_every {
            Some(every) if every > 0 && i % every == 0 => text_of_chars(&mut rng, 40),
            _ => text_of_chars(&mut rng, 1050),
        };

        let mut planted = Vec::new();
        let mut sections = vec![Section {
            header: "Abstract".into(),
            level: 2,
            paragraphs: vec![abstract_text.clone()],
        }];
        for (si, header) in ["Introduction", "Methods", "Results", "Discussion"]
            .iter()
            .enumerate()
        {
            let n_paras = rng.random_range(1..=3);
            let mut paragraphs = Vec::new();
            for pi in 0..n_paras {
                let min_tokens = rng.random_range(120..=360);
                let mut text = paragraph(&mut rng, min_tokens);
                if config.plant_mentions && *header == "Methods" && pi == 0 {
                    // Frequency drifts with year so shares differ by year.
                    for (ri, (name, plant)) in PLANT_SENTENCES.iter().enumerate() {
                        let period = 2 + (ri + i) % 4;
                        if i % period == 0 {
                            text.push(' ');
                            text.push_str(plant);
                            planted.push(*name);
                        }
                    }
                }
                paragraphs.push(text);
            }
            // Some documents end on a deliberately short final paragraph.
            let last_section = si == 3;
            if last_section && config.short_tail_every > 0 && i % config.short_tail_every == 0 {
                paragraphs.push(paragraph(&mut rng, 40));
            }
            sections.push(Section { header: header.to_string(), level: 2, paragraphs });
        }

        let mut all = vec![Section { header: title.clone(), level: 1, paragraphs: Vec::new() }];
        all.extend(sections);
        let markdown = render_markdown(&all);
        out.push(SynthDoc {
            corpus_id,
            title,
            abstract_text,
            year,
            doi,
            doc: StructuredDoc { markdown, sections: all },
            planted,
        });
    }
    out
}

fn render_markdown(sections: &[Section]) -> String {
    let mut lines = Vec::new();
    for section in sections {
        lines.push(format!("{} {}", "#".repeat(section.level as usize), section.header));
        for p in &section.paragraphs {
            lines.push(p.clone());
        }
    }
    lines.join("\n")
}

/// Deterministic two-sentence summary capped at 50 words.
pub fn mock_tldr(abstract_text: &str) -> String {
    let sentences = split_sentences(abstract_text);
    let mut words = Vec::new();
    for sentence in sentences.iter().take(2) {
        words.extend(sentence.split_whitespace());
    }
    words.truncate(50);
    words.join(" ")
}

/// Deterministic subfield scores: two labels picked by corpus id.
pub fn mock_subfields(corpus_id: u64) -> Value {
    let a = (corpus_id % SUBFIELD_LABELS.len() as u64) as usize;
    let b = (corpus_id / 7 % SUBFIELD_LABELS.len() as u64) as usize;
    let score_a = 0.55 + (corpus_id % 40) as f64 / 100.0;
    let mut map = serde_json::Map::new();
    map.insert(SUBFIELD_LABELS[a].to_string(), json!(score_a));
    if b != a {
        map.insert(SUBFIELD_LABELS[b].to_string(), json!(0.35));
    }
    Value::Object(map)
}

fn metadata_for(doc: &SynthDoc) -> Metadata {
    Metadata {
        title: Some(doc.title.clone()),
        authors: Some(vec![
            json!({"authorId": format!("{}", doc.corpus_id * 2 + 1), "name": "R. Example"}),
            json!({"authorId": format!("{}", doc.corpus_id * 2 + 2), "name": "T. Sample"}),
        ]),
        venue: Some(VENUES[(doc.corpus_id % VENUES.len() as u64) as usize].to_string()),
        publicationvenueid: None,
        year: Some(doc.year),
        publicationdate: Some(format!("{}-06-15", doc.year)),
        corpusid: Some(doc.corpus_id),
        externalids: Some(
            [("DOI".to_string(), json!(doc.doi))].into_iter().collect::<serde_json::Map<_, _>>(),
        ),
        url: Some(format!("https://example.org/paper/{}", doc.corpus_id)),
        isopenaccess: Some(true),
        s2fieldsofstudy: Some(json!([
            {"category": "Chemistry", "source": "external"},
            {"category": "Materials Science", "source": "external"}
        ])),
        publicationtypes: Some(json!(["JournalArticle"])),
        referencecount: Some((doc.corpus_id % 90) as i64),
        citationcount: Some((doc.corpus_id % 400) as i64),
        influentialcitationcount: Some((doc.corpus_id % 12) as i64),
        journal: Some(json!({"name": "Synth. J.", "volume": "12", "pages": "1-9"})),
        extra: serde_json::Map::new(),
    }
}

/// Fully populated valid record: chunked, mock-embedded, enriched when the
/// abstract is eligible, with agreeing cc-by license evidence.
pub fn record_from_doc(doc: &SynthDoc) -> CorpusRecord {
    let chunks = assign_keys(
        chunk_document(&doc.doc, &WhitespaceTokenizer, ChunkParams::default())
            .expect("synthetic docs always chunk"),
        doc.corpus_id,
    );
    let mut paragraphs = BTreeMap::new();
    let mut embeddings = BTreeMap::new();
    for chunk in &chunks {
        paragraphs.insert(chunk.key, chunk.text.clone());
        embeddings.insert(chunk.key, mock_embed(&chunk.text, Role::Passage));
    }
    let eligible = abstract_enrichment_gate(&doc.abstract_text) == EnrichmentGate::Eligible;
    CorpusRecord {
        schema_version: "1.0".into(),
        corpus_id: doc.corpus_id,
        metadata: metadata_for(doc),
        abstract_text: doc.abstract_text.clone(),
        fulltext: doc.doc.markdown.clone(),
        paragraphs,
        embeddings,
        abstract_embedding: eligible.then(|| mock_embed(&doc.abstract_text, Role::Passage)),
        predicted_subfield: eligible.then(|| mock_subfields(doc.corpus_id)),
        tldr: eligible.then(|| mock_tldr(&doc.abstract_text)),
        unpaywall_license: Some(json!({"best_oa_location": {"license": "cc-by"}})),
        crossref_license: Some(json!({
            "license": format!("http://creativecommons.org/licenses/by/4.0/")
        })),
        openalex_license: Some(json!({"license": "cc-by"})),
    }
}

/// A complete valid corpus of `n` records.
pub fn synth_records(seed: u64, n: usize) -> Vec<CorpusRecord> {
    let config = SynthConfig { seed, docs: n, ..SynthConfig::default() };
    synth_docs(&config).iter().map(record_from_doc).collect()
}

/// Paths of the generated dump files.
#[derive(Debug, Clone)]
pub struct DumpPaths {
    pub papers: PathBuf,
    pub abstracts: PathBuf,
    pub fulltext: PathBuf,
    pub cassettes: PathBuf,
}

/// Raw text plus character-offset annotations in upstream shape. Even
/// documents carry annotations as arrays, odd documents as doubly-encoded
/// JSON strings.
fn fulltext_payload(doc: &SynthDoc, stringify: bool) -> Value {
    let mut text = String::new();
    let mut titles = Vec::new();
    let mut abstracts = Vec::new();
    let mut headers = Vec::new();
    let mut paragraphs = Vec::new();

    let push = |text: &mut String, piece: &str| -> (usize, usize) {
        if !text.is_empty() {
            text.push('\n');
        }
        let start = text.chars().count();
        text.push_str(piece);
        (start, start + piece.chars().count())
    };

    for section in &doc.doc.sections {
        if section.level == 1 {
            let (s, e) = push(&mut text, &section.header);
            titles.push(json!({"start": s, "end": e}));
            continue;
        }
        if section.header == "Abstract" {
            for p in &section.paragraphs {
                let (s, e) = push(&mut text, p);
                abstracts.push(json!({"start": s, "end": e}));
            }
            continue;
        }
        let (s, e) = push(&mut text, &section.header);
        headers.push(json!({"start": s, "end": e}));
        for p in &section.paragraphs {
            let (s, e) = push(&mut text, p);
            paragraphs.push(json!({"start": s, "end": e}));
        }
    }

    let wrap = |items: Vec<Value>| -> Value {
        if stringify {
            json!(serde_json::to_string(&items).expect("annotation serialization"))
        } else {
            json!(items)
        }
    };

    json!({
        "corpusid": doc.corpus_id,
        "content": {
            "text": text,
            "annotations": {
                "title": wrap(titles),
                "abstract": wrap(abstracts),
                "sectionheader": wrap(headers),
                "paragraph": wrap(paragraphs),
            }
        }
    })
}

fn write_gz_lines(path: &Path, lines: &[Value]) -> std::io::Result<()> {
    let mut enc = GzEncoder::new(File::create(path)?, GzLevel::default());
    for line in lines {
        writeln!(enc, "{line}")?;
    }
    enc.finish()?;
    Ok(())
}

/// Write upstream-shaped dump files plus license cassettes for a synthetic
/// corpus. Includes non-chemistry decoys, papers without full text, and a
/// deterministic minority of records whose license evidence conflicts or
/// is single-source (so screening actually excludes something).
pub fn write_dumps(dir: &Path, config: &SynthConfig) -> std::io::Result<DumpPaths> {
    fs::create_dir_all(dir)?;
    let docs = synth_docs(config);

    let mut papers = Vec::new();
    let mut abstracts = Vec::new();
    let mut fulltexts = Vec::new();
    let cassette_dir = dir.join("cassettes");
    for source in ["crossref", "unpaywall", "openalex"] {
        fs::create_dir_all(cassette_dir.join(source))?;
    }

    for (i, doc) in docs.iter().enumerate() {
        let meta = metadata_for(doc);
        let mut paper = serde_json::to_value(&meta).expect("metadata serializes");
        paper["corpusid"] = json!(doc.corpus_id);
        papers.push(paper);
        abstracts.push(json!({"corpusid": doc.corpus_id, "abstract": doc.abstract_text}));
        fulltexts.push(fulltext_payload(doc, i % 2 == 1));

        // License cassettes: mostly two or three agreeing cc-by sources,
        // with planted conflicts and single-source cases.
        let cassette = CassettePlan::for_index(i);
        cassette.write(&cassette_dir, &doc.doi)?;
    }

    // Decoys: non-chemistry papers and a chemistry paper without full text.
    let decoy_base = 900_000u64;
    papers.push(json!({
        "corpusid": decoy_base,
        "title": "A biology paper",
        "s2fieldsofstudy": [{"category": "Biology", "source": "external"}],
        "year": 2019
    }));
    papers.push(json!({
        "corpusid": decoy_base + 1,
        "title": "Chemistry abstract only",
        "s2fieldsofstudy": [{"category": "Chemistry", "source": "external"}],
        "year": 2021
    }));
    abstracts.push(json!({"corpusid": decoy_base + 1, "abstract": "Too small."}));

    let paths = DumpPaths {
        papers: dir.join("papers.jsonl.gz"),
        abstracts: dir.join("abstracts.jsonl.gz"),
        fulltext: dir.join("fulltext.jsonl.gz"),
        cassettes: cassette_dir,
    };
    write_gz_lines(&paths.papers, &papers)?;
    write_gz_lines(&paths.abstracts, &abstracts)?;
    write_gz_lines(&paths.fulltext, &fulltexts)?;
    Ok(paths)
}

enum CassettePlan {
    ThreeWayAgree,
    TwoWayAgree,
    Conflict,
    SingleSource,
}

impl CassettePlan {
    fn for_index(i: usize) -> Self {
        match i % 12 {
            10 => CassettePlan::Conflict,
            11 => CassettePlan::SingleSource,
            n if n % 2 == 0 => CassettePlan::ThreeWayAgree,
            _ => CassettePlan::TwoWayAgree,
        }
    }

    fn write(&self, dir: &Path, doi: &str) -> std::io::Result<()> {
        let client = crate::license::CassetteClient::new(dir);
        use crate::license::Source;
        let store = |source: Source, body: Value| {
            client
                .store(source, doi, body.to_string().as_bytes())
                .map_err(|e| std::io::Error::other(e.to_string()))
        };
        match self {
            CassettePlan::ThreeWayAgree => {
                store(Source::Crossref, json!({"license": "http://creativecommons.org/licenses/by/4.0/"}))?;
                store(Source::Unpaywall, json!({"best_oa_location": {"license": "cc-by"}}))?;
                store(Source::Openalex, json!({"license": "cc-by"}))?;
            }
            CassettePlan::TwoWayAgree => {
                store(Source::Crossref, json!({"license": "http://creativecommons.org/licenses/by/4.0/"}))?;
                store(Source::Unpaywall, json!({"best_oa_location": {"license": "cc-by"}}))?;
            }
            CassettePlan::Conflict => {
                store(Source::Unpaywall, json!({"best_oa_location": {"license": "closed"}}))?;
                store(Source::Openalex, json!({"license": "cc-by-nc"}))?;
            }
            CassettePlan::SingleSource => {
                store(Source::Openalex, json!({"license": "cc-by"}))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::{parse_record, serialize_record};

    #[test]
    fn generation_is_deterministic() {
        let a = synth_records(7, 5);
        let b = synth_records(7, 5);
        assert_eq!(a, b);
        let c = synth_records(8, 5);
        assert_ne!(a, c);
    }

    #[test]
    fn records_parse_and_round_trip() {
        for record in synth_records(3, 8) {
            let bytes = serialize_record(&record);
            let reparsed = parse_record(&bytes).unwrap();
            assert_eq!(record, reparsed);
        }
    }

    #[test]
    fn prefix_of_larger_corpus_matches() {
        let five = synth_records(7, 5);
        let ten = synth_records(7, 10);
        assert_eq!(five[..], ten[..5]);
    }

    #[test]
    fn tldr_is_capped() {
        let text = "One. Two. Three. ".repeat(40);
        let tldr = mock_tldr(&text);
        assert!(tldr.split_whitespace().count() <= 50);
        assert_eq!(mock_tldr("First sentence here. Second one. Third."), "First sentence here. Second one.");
    }

    #[test]
    fn subfields_are_valid_labels() {
        for id in [100_000u64, 100_007, 100_013] {
            let v = mock_subfields(id);
            for (label, score) in v.as_object().unwrap() {
                assert!(SUBFIELD_LABELS.contains(&label.as_str()));
                let s = score.as_f64().unwrap();
                assert!((0.0..=1.0).contains(&s));
            }
        }
    }

    #[test]
    fn dumps_write_and_restream() {
        let dir = tempfile::tempdir().unwrap();
        let config = SynthConfig { docs: 6, ..SynthConfig::default() };
        let paths = write_dumps(dir.path(), &config).unwrap();
        let entries: Vec<_> = crate::ingest::stream_file(&paths.papers)
            .unwrap()
            .map(|r| r.unwrap())
            .collect();
        assert_eq!(entries.len(), 8, "6 papers + 2 decoys");
        let chem = entries.iter().filter(|e| crate::ingest::filter_chemistry(e)).count();
        assert_eq!(chem, 7, "biology decoy filtered");
        assert!(paths.cassettes.join("crossref").exists());
    }
}
