//! Unicode character classification for text-quality checks.

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

/// Per-class character counts over a string. Classes are disjoint and the
/// sum of all six equals the input length in Unicode scalar values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharClassCounts {
    pub valid: usize,
    pub corrupted: usize,
    pub control: usize,
    pub formatting: usize,
    pub unassigned: usize,
    pub whitespace: usize,
}

impl CharClassCounts {
    pub fn total(&self) -> usize {
        self.valid + self.corrupted + self.control + self.formatting + self.unassigned + self.whitespace
    }

    /// Problem classes only (everything that is neither valid nor whitespace).
    pub fn problems(&self) -> usize {
        self.corrupted + self.control + self.formatting + self.unassigned
    }
}

/// Classify every scalar value of `text`. U+FFFD counts as corrupted;
/// whitespace is checked before the general category so `\n` and `\t`
/// land in `whitespace` rather than `control`.
pub fn char_classes(text: &str) -> CharClassCounts {
    let mut counts = CharClassCounts::default();
    for ch in text.chars() {
        if ch == '\u{FFFD}' {
            counts.corrupted += 1;
        } else if ch.is_whitespace() {
            counts.whitespace += 1;
        } else {
            match get_general_category(ch) {
                GeneralCategory::Control => counts.control += 1,
                GeneralCategory::Format => counts.formatting += 1,
                GeneralCategory::Unassigned => counts.unassigned += 1,
                _ => counts.valid += 1,
            }
        }
    }
    counts
}

/// Up to `limit` problem characters with their scalar values, for report
/// example sections.
pub fn problem_char_examples(text: &str, limit: usize) -> Vec<String> {
    let mut out = Vec::new();
    for ch in text.chars() {
        let bad = ch == '\u{FFFD}'
            || (!ch.is_whitespace()
                && matches!(
                    get_general_category(ch),
                    GeneralCategory::Control | GeneralCategory::Format | GeneralCategory::Unassigned
                ));
        if bad {
            out.push(format!("U+{:04X}", ch as u32));
            if out.len() == limit {
                break;
            }
        }
    }
    out
}

/// Share of non-whitespace scalars. 1.0 for empty text.
pub fn non_whitespace_ratio(text: &str) -> f64 {
    let total = text.chars().count();
    if total == 0 {
        return 1.0;
    }
    let ws = text.chars().filter(|c| c.is_whitespace()).count();
    (total - ws) as f64 / total as f64
}

/// Share of ASCII letters among all scalars. 1.0 for empty text.
pub fn ascii_letter_ratio(text: &str) -> f64 {
    let total = text.chars().count();
    if total == 0 {
        return 1.0;
    }
    let letters = text.chars().filter(|c| c.is_ascii_alphabetic()).count();
    letters as f64 / total as f64
}
