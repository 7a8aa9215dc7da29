//! Declarative pipeline configuration: one TOML file, environment-variable
//! overrides, and a content hash recorded in every run manifest.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Threshold and provider defaults mirror the production values baked
/// into the core crate; every field can be overridden per run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Input dump paths.
    pub papers: PathBuf,
    pub abstracts: PathBuf,
    pub fulltext: PathBuf,
    /// License evidence store (directory of per-source cassettes).
    pub cassettes: PathBuf,
    /// Root output directory; stages write into subdirectories.
    pub out: PathBuf,

    /// Stage toggles; a disabled stage passes its input through.
    pub stages: StageToggles,

    pub require_fulltext: bool,
    pub min_words: usize,
    pub max_tokens: usize,
    pub overlap: usize,
    pub min_tokens: usize,
    /// `whitespace` or a path to a subword vocabulary file.
    pub tokenizer: String,
    /// `mock` or `external:<endpoint>`.
    pub embedder: String,
    /// `mock` fills tldr/subfield deterministically; `none` leaves them out.
    pub enrich: String,
    /// Live license fetches instead of cassette replay.
    pub live_licenses: bool,
    /// `sidecar` or `embedded` report emission.
    pub emit: String,
    /// Worker threads; 0 means the logical core count.
    pub parallelism: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageToggles {
    pub ingest: bool,
    pub structure: bool,
    pub chunk: bool,
    pub embed: bool,
    pub screen: bool,
    pub validate: bool,
    pub index: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        StageToggles {
            ingest: true,
            structure: true,
            chunk: true,
            embed: true,
            screen: true,
            validate: true,
            index: true,
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            papers: PathBuf::from("papers.jsonl.gz"),
            abstracts: PathBuf::from("abstracts.jsonl.gz"),
            fulltext: PathBuf::from("fulltext.jsonl.gz"),
            cassettes: PathBuf::from("cassettes"),
            out: PathBuf::from("out"),
            stages: StageToggles::default(),
            require_fulltext: true,
            min_words: 10,
            max_tokens: 200,
            overlap: 20,
            min_tokens: 100,
            tokenizer: "whitespace".into(),
            embedder: "mock".into(),
            enrich: "mock".into(),
            live_licenses: false,
            emit: "sidecar".into(),
            parallelism: 0,
            seed: 7,
        }
    }
}

impl PipelineConfig {
    /// Load from TOML, then apply `LITFORGE_*` environment overrides.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let contents = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config: PipelineConfig =
            toml::from_str(&contents).with_context(|| format!("parsing {}", path.display()))?;
        config.apply_env_overrides();
        Ok(config)
    }

    fn apply_env_overrides(&mut self) {
        if let Ok(v) = std::env::var("LITFORGE_OUT") {
            self.out = PathBuf::from(v);
        }
        if let Ok(v) = std::env::var("LITFORGE_PARALLELISM") {
            if let Ok(n) = v.parse() {
                self.parallelism = n;
            }
        }
        if let Ok(v) = std::env::var("LITFORGE_EMBEDDER") {
            self.embedder = v;
        }
    }

    /// Content hash over the canonical JSON form of the config.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
