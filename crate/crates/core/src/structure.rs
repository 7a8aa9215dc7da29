//! Document structuring: character-offset annotations over raw text are
//! turned into a normalized Markdown document with a level-1 title,
//! whitelisted level-2 section headers, and paragraphs grouped under the
//! nearest preceding section.

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StructureError {
    #[error("no usable annotation span remains ({dropped} dropped)")]
    NoUsableSpans { dropped: usize },
    #[error("insufficient structure: {0}")]
    InsufficientStructure(&'static str),
    #[error("all sections pruned")]
    AllSectionsPruned,
    #[error("whitelist io error: {0}")]
    WhitelistIo(#[from] std::io::Error),
}

/// Annotation span kinds recognized in upstream payloads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SpanKind {
    Title,
    Abstract,
    SectionHeader,
    Paragraph,
}

impl SpanKind {
    fn from_name(name: &str) -> Option<Self> {
        match name {
            "title" => Some(SpanKind::Title),
            "abstract" => Some(SpanKind::Abstract),
            "sectionheader" => Some(SpanKind::SectionHeader),
            "paragraph" => Some(SpanKind::Paragraph),
            _ => None,
        }
    }
}

/// One annotation span over the raw text, in character offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnnotationSpan {
    pub kind: SpanKind,
    pub start: usize,
    pub end: usize,
}

/// Spans parsed from a payload plus the number of entries dropped for
/// offset errors.
#[derive(Debug, Clone)]
pub struct ParsedAnnotations {
    pub spans: Vec<AnnotationSpan>,
    pub dropped: usize,
}

/// One output section: a header at some level and its paragraphs.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub header: String,
    pub level: u8,
    pub paragraphs: Vec<String>,
}

/// The normalized document: rendered Markdown plus its section list.
/// The first section (when a title exists) is the level-1 title.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredDoc {
    pub markdown: String,
    pub sections: Vec<Section>,
}

impl StructuredDoc {
    pub fn title(&self) -> Option<&str> {
        self.sections.first().filter(|s| s.level == 1).map(|s| s.header.as_str())
    }

    fn render_markdown(sections: &[Section]) -> String {
        let mut lines = Vec::new();
        for section in sections {
            let hashes = "#".repeat(section.level as usize);
            lines.push(format!("{hashes} {}", section.header));
            for para in &section.paragraphs {
                lines.push(para.clone());
            }
        }
        lines.join("\n")
    }

    fn rebuild(mut self) -> Self {
        self.markdown = Self::render_markdown(&self.sections);
        self
    }
}

/// Parse an annotation payload. Values may be arrays of `{start, end}`
/// objects or doubly-encoded JSON strings of the same; offsets may be
/// numbers or numeric strings. Out-of-range or inverted spans are dropped
/// per-span; the record only fails when nothing usable remains.
pub fn parse_annotations(raw: &Value, text_len: usize) -> Result<ParsedAnnotations, StructureError> {
    let mut spans = Vec::new();
    let mut dropped = 0usize;

    let Some(obj) = raw.as_object() else {
        return Err(StructureError::NoUsableSpans { dropped: 0 });
    };

    for (name, value) in obj {
        let Some(kind) = SpanKind::from_name(name) else {
            continue;
        };
        let decoded: Value = match value {
            Value::String(s) => match serde_json::from_str(s) {
                Ok(v) => v,
                Err(_) => {
                    dropped += 1;
                    continue;
                }
            },
            other => other.clone(),
        };
        let Some(entries) = decoded.as_array() else {
            dropped += 1;
            continue;
        };
        for entry in entries {
            match span_from_entry(kind, entry, text_len) {
                Some(span) => spans.push(span),
                None => dropped += 1,
            }
        }
    }

    if spans.is_empty() {
        return Err(StructureError::NoUsableSpans { dropped });
    }
    spans.sort_by_key(|s| (s.start, s.end, s.kind));
    Ok(ParsedAnnotations { spans, dropped })
}

fn offset_of(value: Option<&Value>) -> Option<usize> {
    match value? {
        Value::Number(n) => n.as_u64().map(|v| v as usize),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn span_from_entry(kind: SpanKind, entry: &Value, text_len: usize) -> Option<AnnotationSpan> {
    let start = offset_of(entry.get("start"))?;
    let end = offset_of(entry.get("end"))?;
    if start >= end || end > text_len {
        return None;
    }
    Some(AnnotationSpan { kind, start, end })
}

fn slice_chars(text: &str, chars: &[(usize, char)], start: usize, end: usize) -> String {
    // Offsets are character positions; map to byte positions for slicing.
    let byte_start = chars[start].0;
    let byte_end = if end < chars.len() { chars[end].0 } else { text.len() };
    text[byte_start..byte_end].split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Build the structured document. The first title span becomes the
/// level-1 header; the abstract goes under a level-2 "Abstract" header;
/// each section header starts a section at level 2; paragraphs attach to
/// the nearest preceding section, with pre-header content attached to the
/// first section. Paragraph spans nested inside a header span are dropped
/// in favor of the header.
pub fn build_markdown(text: &str, spans: &[AnnotationSpan]) -> Result<StructuredDoc, StructureError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let text_len = chars.len();

    let mut title: Option<String> = None;
    let mut body_sections: Vec<Section> = Vec::new();
    let mut orphans: Vec<String> = Vec::new();
    let mut paragraph_count = 0usize;
    let mut header_count = 0usize;

    let header_ranges: Vec<(usize, usize)> = spans
        .iter()
        .filter(|s| matches!(s.kind, SpanKind::Title | SpanKind::SectionHeader | SpanKind::Abstract))
        .map(|s| (s.start, s.end))
        .collect();

    for span in spans {
        if span.end > text_len {
            continue;
        }
        let content = slice_chars(text, &chars, span.start, span.end);
        if content.is_empty() {
            continue;
        }
        match span.kind {
            SpanKind::Title => {
                if title.is_none() {
                    title = Some(content);
                }
            }
            SpanKind::Abstract => {
                body_sections.push(Section {
                    header: "Abstract".to_string(),
                    level: 2,
                    paragraphs: vec![content],
                });
            }
            SpanKind::SectionHeader => {
                header_count += 1;
                body_sections.push(Section { header: content, level: 2, paragraphs: Vec::new() });
            }
            SpanKind::Paragraph => {
                let nested_in_header = header_ranges
                    .iter()
                    .any(|&(hs, he)| hs <= span.start && span.end <= he);
                if nested_in_header {
                    continue;
                }
                paragraph_count += 1;
                match body_sections.last_mut() {
                    Some(section) => section.paragraphs.push(content),
                    None => orphans.push(content),
                }
            }
        }
    }

    // Content appearing before the first header attaches to the first section.
    if !orphans.is_empty() {
        match body_sections.first_mut() {
            Some(first) => {
                let mut paragraphs = orphans;
                paragraphs.append(&mut first.paragraphs);
                first.paragraphs = paragraphs;
            }
            None => body_sections.push(Section {
                header: String::new(),
                level: 2,
                paragraphs: orphans,
            }),
        }
    }

    if header_count == 0 {
        return Err(StructureError::InsufficientStructure("no section headers"));
    }
    if paragraph_count == 0 {
        return Err(StructureError::InsufficientStructure("no paragraphs"));
    }

    let mut sections = Vec::with_capacity(body_sections.len() + 1);
    if let Some(title) = title {
        sections.push(Section { header: title, level: 1, paragraphs: Vec::new() });
    }
    sections.extend(body_sections.into_iter().filter(|s| !s.header.is_empty() || !s.paragraphs.is_empty()));

    Ok(StructuredDoc { markdown: StructuredDoc::render_markdown(&sections), sections })
}

/// Canonical section names kept at level 2; everything else is demoted.
#[derive(Debug, Clone)]
pub struct SectionWhitelist {
    names: Vec<String>,
}

impl SectionWhitelist {
    pub fn new(names: impl IntoIterator<Item = impl Into<String>>) -> Self {
        SectionWhitelist {
            names: names.into_iter().map(|n| n.into().trim().to_lowercase()).collect(),
        }
    }

    /// Built-in list shipped with the crate (`data/section_whitelist.txt`).
    pub fn builtin() -> Self {
        Self::from_lines(include_str!("../data/section_whitelist.txt"))
    }

    /// One name per line; `#` starts a comment.
    pub fn from_lines(contents: &str) -> Self {
        Self::new(
            contents
                .lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty()),
        )
    }

    pub fn load(path: &std::path::Path) -> Result<Self, StructureError> {
        Ok(Self::from_lines(&std::fs::read_to_string(path)?))
    }

    pub fn contains(&self, header: &str) -> bool {
        let needle = header.trim().to_lowercase();
        self.names.iter().any(|n| *n == needle)
    }
}

/// Whitelisted headers stay at level 2 (case-insensitive); all others are
/// demoted to level 3. The level-1 title is untouched. Idempotent.
pub fn normalize_headers(doc: StructuredDoc, whitelist: &SectionWhitelist) -> StructuredDoc {
    let mut doc = doc;
    for section in &mut doc.sections {
        if section.level == 1 {
            continue;
        }
        section.level = if whitelist.contains(&section.header) { 2 } else { 3 };
    }
    doc.rebuild()
}

/// Remove sections whose header plus paragraphs total fewer than
/// `min_words` whitespace-separated words, unless whitelisted. The title
/// is exempt. Errors when nothing but the title remains. Idempotent.
pub fn prune_sections(
    doc: StructuredDoc,
    min_words: usize,
    whitelist: &SectionWhitelist,
) -> Result<StructuredDoc, StructureError> {
    let mut doc = doc;
    doc.sections.retain(|section| {
        if section.level == 1 || whitelist.contains(&section.header) {
            return true;
        }
        let words = section.header.split_whitespace().count()
            + section.paragraphs.iter().map(|p| p.split_whitespace().count()).sum::<usize>();
        words >= min_words
    });
    if !doc.sections.iter().any(|s| s.level != 1) {
        return Err(StructureError::AllSectionsPruned);
    }
    Ok(doc.rebuild())
}

fn is_structural_line(line: &str) -> bool {
    let trimmed = line.trim_start();
    if trimmed.is_empty() {
        return true;
    }
    // Markdown headers.
    if trimmed.starts_with('#') {
        return true;
    }
    // Checklist markers.
    if trimmed.starts_with("- [ ]") || trimmed.starts_with("- [x]") || trimmed.starts_with("- [X]") {
        return true;
    }
    is_equation_label(trimmed)
}

/// A line that is only an equation label: `(12)` or `Eq. 12`, optionally
/// padded with whitespace.
fn is_equation_label(line: &str) -> bool {
    let s = line.trim();
    if let Some(inner) = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        return !inner.is_empty() && inner.bytes().all(|b| b.is_ascii_digit());
    }
    if let Some(rest) = s.strip_prefix("Eq.") {
        let rest = rest.trim();
        return !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit());
    }
    false
}

/// Join hard-wrapped lines within a paragraph with single spaces. Headers,
/// checklist markers, and equation labels are preserved verbatim; a line
/// ending with sentence-terminal punctuation ends its paragraph. Blank
/// lines collapse into the single-newline paragraph separation, except
/// after a paragraph with no terminal mark, where one blank line stays as
/// the boundary marker. Idempotent.
pub fn merge_linewraps(markdown: &str) -> String {
    let mut out: Vec<String> = Vec::new();
    let mut current = String::new();
    let mut pending_blank = false;

    let flush = |current: &mut String, out: &mut Vec<String>| {
        if !current.is_empty() {
            out.push(std::mem::take(current));
        }
    };

    for line in markdown.lines() {
        let trimmed = line.trim_end();
        if trimmed.trim().is_empty() {
            flush(&mut current, &mut out);
            // A terminal mark (or a structural line) already marks the
            // boundary; otherwise keep one blank line so reruns do not
            // re-join the paragraphs.
            pending_blank = out
                .last()
                .is_some_and(|l| !is_structural_line(l) && !crate::tokenize::token_ends_sentence(l));
            continue;
        }
        if is_structural_line(trimmed) {
            flush(&mut current, &mut out);
            out.push(trimmed.to_string());
            pending_blank = false;
            continue;
        }
        if pending_blank {
            out.push(String::new());
            pending_blank = false;
        }
        if current.is_empty() {
            current = trimmed.trim_start().to_string();
        } else {
            current.push(' ');
            current.push_str(trimmed.trim());
        }
        if crate::tokenize::token_ends_sentence(trimmed) {
            flush(&mut current, &mut out);
        }
    }
    flush(&mut current, &mut out);
    out.join("\n")
}
