//! Language identification provider.
//!
//! The built-in detector is a stopword-profile classifier: each supported
//! language carries a set of discriminative function words (pairwise
//! disjoint across profiles), tokens vote for the profile that contains
//! them, and confidence is the winning share of all votes. It is a
//! model-free stand-in that preserves the `(language, confidence)`
//! contract; swap in a real detector via the trait for production use.

use crate::tokenize::word_tokens;

/// Detection outcome. `confidence` is in [0, 1]; `language` is an ISO-ish
/// short code, or "unknown" when no profile matched.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguageGuess {
    pub language: String,
    pub confidence: f64,
}

pub trait LanguageDetector: Send + Sync {
    fn detect(&self, text: &str) -> LanguageGuess;
}

const EN: &[&str] = &[
    "the", "of", "and", "to", "is", "was", "for", "with", "that", "this", "are", "were", "from",
    "which", "been", "has", "have", "not", "can", "their", "these", "than", "its", "both", "also",
    "during", "between", "results", "using", "we",
];
const DE: &[&str] = &[
    "der", "die", "das", "und", "nicht", "mit", "von", "zu", "auf", "ist", "dem", "den", "ein",
    "eine", "als", "auch", "werden", "wurde", "durch", "bei", "sind", "oder", "wird", "nach",
    "zwischen", "dieser", "unter",
];
const FR: &[&str] = &[
    "le", "la", "les", "des", "une", "est", "dans", "pour", "par", "sur", "avec", "sont", "cette",
    "nous", "plus", "comme", "mais", "ont", "aux", "ces", "entre", "donc", "ainsi", "leurs",
];
const ES: &[&str] = &[
    "el", "los", "las", "es", "para", "por", "con", "como", "pero", "sus", "esta", "este", "son",
    "del", "se", "ha", "han", "muy", "cuando", "donde", "cual", "cada",
];
// ASCII proxy for romanized Chinese; a placeholder profile, not a real
// language model.
const ZH: &[&str] = &[
    "shi", "bu", "wo", "zhe", "zai", "ta", "women", "zhong", "guo", "dui", "hao", "zhege",
    "keyi", "mei",
];

const PROFILES: &[(&str, &[&str])] = &[("en", EN), ("de", DE), ("fr", FR), ("es", ES), ("zh", ZH)];

/// Default stopword-profile detector over {en, de, fr, es, zh}.
#[derive(Debug, Clone, Copy, Default)]
pub struct StopwordDetector;

impl LanguageDetector for StopwordDetector {
    fn detect(&self, text: &str) -> LanguageGuess {
        let tokens = word_tokens(text);
        let mut votes = [0usize; 5];
        for tok in &tokens {
            for (i, (_, words)) in PROFILES.iter().enumerate() {
                if words.contains(&tok.as_str()) {
                    votes[i] += 1;
                    break;
                }
            }
        }
        let total: usize = votes.iter().sum();
        if total == 0 {
            return LanguageGuess { language: "unknown".into(), confidence: 0.0 };
        }
        let (best_idx, best) = votes
            .iter()
            .enumerate()
            .max_by_key(|(_, v)| **v)
            .expect("profiles are non-empty");
        LanguageGuess {
            language: PROFILES[best_idx].0.to_string(),
            confidence: *best as f64 / total as f64,
        }
    }
}
