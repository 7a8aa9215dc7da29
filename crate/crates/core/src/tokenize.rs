//! Shared tokenization primitives: whitespace tokens, word tokens for
//! overlap metrics, and the sentence-boundary rule used by the chunker,
//! the text validator, and trend flagging.

/// Whitespace-separated tokens of `text`.
pub fn whitespace_tokens(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

/// Lowercased alphanumeric word tokens. Punctuation and symbols separate
/// tokens and are dropped, so "Anti-fouling (coatings)." yields
/// `["anti", "fouling", "coatings"]`.
pub fn word_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            for lc in ch.to_lowercase() {
                cur.push(lc);
            }
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// True if `ch` terminates a sentence.
pub fn is_sentence_terminal(ch: char) -> bool {
    matches!(ch, '.' | '!' | '?')
}

/// Count sentence-ending punctuation marks: occurrences of `.`, `!`, or `?`
/// followed by whitespace or end of text. Abbreviations are not special-cased.
pub fn sentence_mark_count(text: &str) -> usize {
    let mut count = 0;
    let mut chars = text.chars().peekable();
    while let Some(ch) = chars.next() {
        if is_sentence_terminal(ch) {
            match chars.peek() {
                None => count += 1,
                Some(next) if next.is_whitespace() => count += 1,
                _ => {}
            }
        }
    }
    count
}

/// Split `text` into sentences at terminal punctuation followed by
/// whitespace. The terminal mark stays with its sentence. Text without
/// terminal marks comes back as a single sentence.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let bytes = text.char_indices().collect::<Vec<_>>();
    for (pos, &(idx, ch)) in bytes.iter().enumerate() {
        if is_sentence_terminal(ch) {
            let at_end = pos + 1 == bytes.len();
            let before_ws = bytes.get(pos + 1).is_some_and(|&(_, c)| c.is_whitespace());
            if at_end || before_ws {
                let end = idx + ch.len_utf8();
                let piece = text[start..end].trim();
                if !piece.is_empty() {
                    out.push(piece);
                }
                start = end;
            }
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

/// True when the whitespace token at `tokens[i]` ends a sentence.
pub fn token_ends_sentence(token: &str) -> bool {
    token.chars().last().is_some_and(is_sentence_terminal)
}
