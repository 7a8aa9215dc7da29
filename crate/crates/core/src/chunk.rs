//! Token-aware recursive chunking. Documents split first on paragraph
//! boundaries, then on sentence-ending punctuation, finally on whitespace;
//! consecutive windows cut from one paragraph share a fixed token overlap,
//! and sub-minimum pieces merge into an adjacent chunk when the result
//! stays within the maximum. A final remainder may stay short; the chunk
//! validator flags it downstream.

use std::path::Path;

use thiserror::Error;

use crate::record::ParagraphKey;
use crate::structure::StructuredDoc;
use crate::tokenize::token_ends_sentence;

#[derive(Debug, Error)]
pub enum ChunkError {
    #[error("invalid parameters: require overlap < min_tokens <= max_tokens, got overlap={overlap} min={min_tokens} max={max_tokens}")]
    BadParams { max_tokens: usize, overlap: usize, min_tokens: usize },
    #[error("document has no chunkable content")]
    EmptyContent,
    #[error("tokenizer failure: {0}")]
    Tokenizer(String),
    #[error("tokenizer file error: {0}")]
    TokenizerFile(String),
}

/// Token counting and boundary provider. `count` must be additive over
/// whitespace-joined concatenation, which holds for both built-in
/// providers: tokens never span whitespace.
pub trait TokenizerProvider: Send + Sync {
    fn name(&self) -> &str;

    /// Token count of `text`, excluding any special tokens.
    fn count(&self, text: &str) -> usize;

    /// Token count of a single whitespace-delimited word.
    fn count_word(&self, word: &str) -> usize;
}

/// One whitespace-delimited word = one token.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl TokenizerProvider for WhitespaceTokenizer {
    fn name(&self) -> &str {
        "whitespace"
    }

    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }

    fn count_word(&self, _word: &str) -> usize {
        1
    }
}

/// Greedy longest-match subword tokenizer over a serialized vocabulary
/// file (one piece per line; continuation pieces carry a `##` prefix).
/// Words with no matching piece count as one unknown token.
#[derive(Debug, Clone)]
pub struct SubwordTokenizer {
    name: String,
    heads: std::collections::HashSet<String>,
    tails: std::collections::HashSet<String>,
    max_piece_chars: usize,
}

impl SubwordTokenizer {
    pub fn from_vocab_lines(name: impl Into<String>, lines: &str) -> Self {
        let mut heads = std::collections::HashSet::new();
        let mut tails = std::collections::HashSet::new();
        let mut max_piece_chars = 1;
        for line in lines.lines() {
            let piece = line.trim();
            if piece.is_empty() || piece.starts_with('[') {
                continue; // special tokens are excluded from counting
            }
            let (set, body) = match piece.strip_prefix("##") {
                Some(rest) => (&mut tails, rest),
                None => (&mut heads, piece),
            };
            max_piece_chars = max_piece_chars.max(body.chars().count());
            set.insert(body.to_string());
        }
        SubwordTokenizer { name: name.into(), heads, tails, max_piece_chars }
    }

    pub fn load(path: &Path) -> Result<Self, ChunkError> {
        let contents = std::fs::read_to_string(path)
            .map_err(|e| ChunkError::TokenizerFile(format!("{}: {e}", path.display())))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "subword".to_string());
        Ok(Self::from_vocab_lines(name, &contents))
    }

    fn word_pieces(&self, word: &str) -> usize {
        let chars: Vec<char> = word.to_lowercase().chars().collect();
        if chars.is_empty() {
            return 0;
        }
        let mut pieces = 0usize;
        let mut pos = 0usize;
        while pos < chars.len() {
            let set = if pos == 0 { &self.heads } else { &self.tails };
            let mut take = 0usize;
            let upper = (chars.len() - pos).min(self.max_piece_chars);
            for len in (1..=upper).rev() {
                let cand: String = chars[pos..pos + len].iter().collect();
                if set.contains(&cand) {
                    take = len;
                    break;
                }
            }
            if take == 0 {
                return pieces + 1; // unknown remainder counts once
            }
            pieces += 1;
            pos += take;
        }
        pieces
    }
}

impl TokenizerProvider for SubwordTokenizer {
    fn name(&self) -> &str {
        &self.name
    }

    fn count(&self, text: &str) -> usize {
        text.split_whitespace().map(|w| self.word_pieces(w)).sum()
    }

    fn count_word(&self, word: &str) -> usize {
        self.word_pieces(word)
    }
}

/// Resolve the CLI tokenizer spec: `whitespace` or a vocabulary file path.
pub fn load_tokenizer(spec: &str) -> Result<Box<dyn TokenizerProvider>, ChunkError> {
    if spec == "whitespace" {
        Ok(Box::new(WhitespaceTokenizer))
    } else {
        Ok(Box::new(SubwordTokenizer::load(Path::new(spec))?))
    }
}

/// Chunking parameters; defaults carry the production values.
#[derive(Debug, Clone, Copy)]
pub struct ChunkParams {
    pub max_tokens: usize,
    pub overlap: usize,
    pub min_tokens: usize,
}

impl Default for ChunkParams {
    fn default() -> Self {
        ChunkParams { max_tokens: 200, overlap: 20, min_tokens: 100 }
    }
}

impl ChunkParams {
    fn validate(&self) -> Result<(), ChunkError> {
        if self.overlap < self.min_tokens && self.min_tokens <= self.max_tokens {
            Ok(())
        } else {
            Err(ChunkError::BadParams {
                max_tokens: self.max_tokens,
                overlap: self.overlap,
                min_tokens: self.min_tokens,
            })
        }
    }
}

/// A chunk before key assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkText {
    pub text: String,
    pub token_count: usize,
    /// Leading tokens duplicated from the previous chunk (0 when no split
    /// occurred at this boundary).
    pub overlap_tokens: usize,
}

/// A keyed chunk, aligned one-to-one with its embedding downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct Chunk {
    pub key: ParagraphKey,
    pub text: String,
    pub token_count: usize,
    pub overlap_tokens: usize,
}

struct Piece {
    words: Vec<String>,
    token_count: usize,
    overlap_tokens: usize,
}

/// Split one paragraph's words into balanced windows. Window sizes target
/// the even split of the remaining tokens so a trailing remainder never
/// falls far below the rest; cuts snap to sentence ends when one fits the
/// budget and fall back to word boundaries otherwise.
fn split_paragraph(
    words: &[String],
    word_tokens: &[usize],
    params: ChunkParams,
) -> Vec<Piece> {
    let total: usize = word_tokens.iter().sum();
    if total == 0 {
        return Vec::new();
    }
    if total <= params.max_tokens {
        return vec![Piece {
            words: words.to_vec(),
            token_count: total,
            overlap_tokens: 0,
        }];
    }

    let mut pieces: Vec<Piece> = Vec::new();
    let mut start = 0usize; // word index where the un-emitted core begins
    let mut remaining = total;

    while start < words.len() {
        let prefix = if pieces.is_empty() { 0 } else { params.overlap };
        let pending = prefix + remaining;
        if pending <= params.max_tokens {
            pieces.push(make_window(words, word_tokens, start, words.len(), prefix, params));
            break;
        }

        let span = params.max_tokens - params.overlap;
        let k = (pending - params.overlap).div_ceil(span);
        let target = (pending + (k - 1) * params.overlap).div_ceil(k);
        let core_budget = (target - prefix).max(1);

        // Furthest sentence end within budget; fall back to a word-level
        // cut when no sentence end fits or snapping would drop the window
        // below the minimum.
        let mut sentence_cut = None;
        let mut tokens_here = 0usize;
        let mut word_cut = start;
        for i in start..words.len() {
            if tokens_here + word_tokens[i] > core_budget {
                break;
            }
            tokens_here += word_tokens[i];
            word_cut = i + 1;
            if token_ends_sentence(&words[i]) {
                sentence_cut = Some((i + 1, tokens_here));
            }
        }
        let cut = match sentence_cut {
            Some((cut, tokens)) if prefix + tokens >= params.min_tokens => cut,
            _ => word_cut,
        }
        .max(start + 1);

        let core_tokens: usize = word_tokens[start..cut].iter().sum();
        pieces.push(make_window(words, word_tokens, start, cut, prefix, params));
        start = cut;
        remaining -= core_tokens;
    }
    pieces
}

fn make_window(
    words: &[String],
    word_tokens: &[usize],
    start: usize,
    end: usize,
    overlap: usize,
    params: ChunkParams,
) -> Piece {
    let mut window_words: Vec<String> = Vec::new();
    let mut overlap_tokens = 0usize;
    if overlap > 0 {
        // Take the trailing words of the previous core worth `overlap` tokens.
        let mut taken = 0usize;
        let mut idx = start;
        while idx > 0 && taken < params.overlap {
            idx -= 1;
            taken += word_tokens[idx];
        }
        overlap_tokens = taken;
        window_words.extend(words[idx..start].iter().cloned());
    }
    window_words.extend(words[start..end].iter().cloned());
    let token_count = overlap_tokens + word_tokens[start..end].iter().sum::<usize>();
    Piece { words: window_words, token_count, overlap_tokens }
}

/// Chunk a structured document. Section headers are hard boundaries:
/// chunks carry paragraph text only and overlap never crosses a header.
pub fn chunk_document(
    doc: &StructuredDoc,
    provider: &dyn TokenizerProvider,
    params: ChunkParams,
) -> Result<Vec<ChunkText>, ChunkError> {
    params.validate()?;

    let mut pieces: Vec<Piece> = Vec::new();
    for section in &doc.sections {
        for paragraph in &section.paragraphs {
            let words: Vec<String> =
                paragraph.split_whitespace().map(str::to_string).collect();
            if words.is_empty() {
                continue;
            }
            let word_tokens: Vec<usize> =
                words.iter().map(|w| provider.count_word(w)).collect();
            pieces.extend(split_paragraph(&words, &word_tokens, params));
        }
    }
    if pieces.is_empty() {
        return Err(ChunkError::EmptyContent);
    }

    // Merge sub-minimum whole-paragraph pieces into a neighbor when the
    // result stays within max_tokens; backward first, then forward.
    let mut merged: Vec<ChunkText> = Vec::new();
    let mut pending_forward: Option<ChunkText> = None;
    for piece in pieces {
        let mut chunk = ChunkText {
            text: piece.words.join(" "),
            token_count: piece.token_count,
            overlap_tokens: piece.overlap_tokens,
        };
        if let Some(prefix) = pending_forward.take() {
            // Forward merges only target the start of a fresh paragraph;
            // a chunk that begins with overlap already repeats text.
            if chunk.overlap_tokens == 0
                && prefix.token_count + chunk.token_count <= params.max_tokens
            {
                chunk = ChunkText {
                    text: format!("{}\n{}", prefix.text, chunk.text),
                    token_count: prefix.token_count + chunk.token_count,
                    overlap_tokens: prefix.overlap_tokens,
                };
            } else {
                merged.push(prefix);
            }
        }
        let is_short = chunk.token_count < params.min_tokens;
        if is_short && chunk.overlap_tokens == 0 {
            if let Some(prev) = merged.last_mut() {
                if prev.token_count + chunk.token_count <= params.max_tokens {
                    prev.text.push('\n');
                    prev.text.push_str(&chunk.text);
                    prev.token_count += chunk.token_count;
                    continue;
                }
            }
            pending_forward = Some(chunk);
            continue;
        }
        merged.push(chunk);
    }
    if let Some(leftover) = pending_forward {
        // Nothing after it could absorb the short piece; keep it as the
        // final chunk if backward merge still cannot take it.
        match merged.last_mut() {
            Some(prev) if prev.token_count + leftover.token_count <= params.max_tokens => {
                prev.text.push('\n');
                prev.text.push_str(&leftover.text);
                prev.token_count += leftover.token_count;
            }
            _ => merged.push(leftover),
        }
    }

    Ok(merged)
}

/// Assign contiguous paragraph keys `{corpus_id}P0..P{n-1}`.
pub fn assign_keys(chunks: Vec<ChunkText>, corpus_id: u64) -> Vec<Chunk> {
    chunks
        .into_iter()
        .enumerate()
        .map(|(i, c)| Chunk {
            key: ParagraphKey::new(corpus_id, i as u32),
            text: c.text,
            token_count: c.token_count,
            overlap_tokens: c.overlap_tokens,
        })
        .collect()
}

/// Chunk markdown text directly (titles and headers excluded) by wrapping
/// it in a single-section document view.
pub fn chunk_markdown(
    markdown: &str,
    provider: &dyn TokenizerProvider,
    params: ChunkParams,
) -> Result<Vec<ChunkText>, ChunkError> {
    let mut sections = vec![crate::structure::Section {
        header: String::new(),
        level: 2,
        paragraphs: Vec::new(),
    }];
    for line in markdown.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            sections.push(crate::structure::Section {
                header: trimmed.trim_start_matches('#').trim().to_string(),
                level: 2,
                paragraphs: Vec::new(),
            });
        } else {
            sections.last_mut().expect("never empty").paragraphs.push(trimmed.to_string());
        }
    }
    chunk_document(&StructuredDoc { markdown: markdown.to_string(), sections }, provider, params)
}
