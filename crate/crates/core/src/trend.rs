//! Technology-mention trend extraction: rule-based flags per document,
//! per-year document shares, and 3-year centered smoothing.

use std::collections::BTreeMap;
use std::path::Path;

use regex::RegexBuilder;
use serde::Deserialize;
use thiserror::Error;

use crate::record::CorpusRecord;
use crate::tokenize::split_sentences;

#[derive(Debug, Error)]
pub enum TrendError {
    #[error("rule `{name}` has no target patterns")]
    NoPatterns { name: String },
    #[error("rule `{name}`: bad pattern `{pattern}`: {detail}")]
    BadPattern { name: String, pattern: String, detail: String },
    #[error("rules file error: {0}")]
    RulesFile(String),
}

/// One mention rule: target patterns, optional context cues that must
/// co-occur in the same sentence, and an optional section-header scope.
/// All matching is case-insensitive.
#[derive(Debug, Clone, Deserialize)]
pub struct MentionRule {
    pub name: String,
    pub patterns: Vec<String>,
    #[serde(default)]
    pub cues: Vec<String>,
    #[serde(default)]
    pub sections: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
struct RulesFile {
    #[serde(rename = "rule")]
    rules: Vec<MentionRule>,
}

/// A rule with compiled regexes.
pub struct CompiledRule {
    pub rule: MentionRule,
    patterns: Vec<regex::Regex>,
    cues: Vec<regex::Regex>,
}

fn compile(name: &str, pattern: &str) -> Result<regex::Regex, TrendError> {
    RegexBuilder::new(pattern).case_insensitive(true).build().map_err(|e| {
        TrendError::BadPattern {
            name: name.to_string(),
            pattern: pattern.to_string(),
            detail: e.to_string(),
        }
    })
}

impl CompiledRule {
    pub fn new(rule: MentionRule) -> Result<Self, TrendError> {
        if rule.patterns.is_empty() {
            return Err(TrendError::NoPatterns { name: rule.name.clone() });
        }
        let patterns = rule
            .patterns
            .iter()
            .map(|p| compile(&rule.name, p))
            .collect::<Result<Vec<_>, _>>()?;
        let cues = rule
            .cues
            .iter()
            .map(|c| compile(&rule.name, c))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CompiledRule { rule, patterns, cues })
    }

    fn sentence_matches(&self, sentence: &str) -> bool {
        if !self.patterns.iter().any(|p| p.is_match(sentence)) {
            return false;
        }
        self.cues.is_empty() || self.cues.iter().any(|c| c.is_match(sentence))
    }

    fn section_in_scope(&self, header: &str) -> bool {
        match &self.rule.sections {
            None => true,
            Some(names) => {
                let header = header.trim().to_lowercase();
                names.iter().any(|n| n.trim().to_lowercase() == header)
            }
        }
    }
}

/// Built-in rules file (`data/trend_rules.toml`).
pub fn builtin_rules() -> Vec<MentionRule> {
    parse_rules(include_str!("../data/trend_rules.toml")).expect("builtin rules parse")
}

pub fn parse_rules(contents: &str) -> Result<Vec<MentionRule>, TrendError> {
    let parsed: RulesFile =
        toml::from_str(contents).map_err(|e| TrendError::RulesFile(e.to_string()))?;
    Ok(parsed.rules)
}

pub fn load_rules(path: &Path) -> Result<Vec<MentionRule>, TrendError> {
    let contents =
        std::fs::read_to_string(path).map_err(|e| TrendError::RulesFile(e.to_string()))?;
    parse_rules(&contents)
}

/// Text units scanned for one record: the record's paragraphs, or, when
/// the rule is section-scoped, the bodies of in-scope sections parsed
/// from the Markdown full text.
fn scan_units<'a>(record: &'a CorpusRecord, rule: &CompiledRule) -> Vec<&'a str> {
    if rule.rule.sections.is_none() {
        return record.paragraphs.values().map(String::as_str).collect();
    }
    let mut units = Vec::new();
    let mut in_scope = false;
    for line in record.fulltext.lines() {
        let trimmed = line.trim();
        if let Some(header) = trimmed.strip_prefix('#') {
            let header = header.trim_start_matches('#').trim();
            in_scope = rule.section_in_scope(header);
        } else if in_scope && !trimmed.is_empty() {
            units.push(trimmed);
        }
    }
    units
}

/// True iff some in-scope sentence matches a target pattern and, when the
/// rule carries cues, a cue occurs in the same sentence.
pub fn flag_document(record: &CorpusRecord, rule: &CompiledRule) -> bool {
    scan_units(record, rule)
        .iter()
        .flat_map(|unit| split_sentences(unit))
        .any(|sentence| rule.sentence_matches(sentence))
}

/// Publication year: the metadata `year` field, falling back to the year
/// of `publicationdate`; `None` excludes the document from the series.
pub fn resolve_year(record: &CorpusRecord) -> Option<i32> {
    if let Some(year) = record.metadata.year {
        return i32::try_from(year).ok();
    }
    let date = record.metadata.publicationdate.as_deref()?;
    let year_part = date.split('-').next()?;
    let year: i32 = year_part.trim().parse().ok()?;
    Some(year)
}

/// Per-year counts and share for one rule.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct YearStat {
    pub doc_count: u64,
    pub flag_count: u64,
    pub share: f64,
}

/// Year-keyed series; missing years are absent, not zero-filled.
pub type YearlySeries = BTreeMap<i32, YearStat>;

/// Group flags by year and compute shares.
pub fn aggregate(flags: impl IntoIterator<Item = (i32, bool)>) -> YearlySeries {
    let mut series = YearlySeries::new();
    for (year, flagged) in flags {
        let stat = series.entry(year).or_default();
        stat.doc_count += 1;
        if flagged {
            stat.flag_count += 1;
        }
    }
    for stat in series.values_mut() {
        stat.share = stat.flag_count as f64 / stat.doc_count as f64;
    }
    series
}

/// 3-year centered moving average of shares: each year averages the
/// values present in {y-1, y, y+1}; absent neighbors are skipped rather
/// than treated as zero.
pub fn smooth_3yr(series: &YearlySeries) -> BTreeMap<i32, f64> {
    series
        .keys()
        .map(|&year| {
            let mut sum = 0.0;
            let mut n = 0u32;
            for y in [year - 1, year, year + 1] {
                if let Some(stat) = series.get(&y) {
                    sum += stat.share;
                    n += 1;
                }
            }
            (year, sum / n as f64)
        })
        .collect()
}

/// Render a per-rule CSV: `year,doc_count,flag_count,share,smoothed_share`.
pub fn series_csv(series: &YearlySeries) -> String {
    let smoothed = smooth_3yr(series);
    let mut out = String::from("year,doc_count,flag_count,share,smoothed_share\n");
    for (year, stat) in series {
        out.push_str(&format!(
            "{year},{},{},{},{}\n",
            stat.doc_count, stat.flag_count, stat.share, smoothed[year]
        ));
    }
    out
}
