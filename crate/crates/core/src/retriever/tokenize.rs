//! Shared lexical tokenizer for sparse retrieval.
//!
//! Lowercases with Unicode rules, then splits on runs of non-alphanumeric
//! characters. No stemming, no stopword removal — queries and documents must
//! go through the exact same function or term statistics drift.

/// Tokenize text into lowercase alphanumeric terms.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}
