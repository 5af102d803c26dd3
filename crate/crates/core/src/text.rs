//! Canonical text form shared by lexicon terms, playlist titles and lyrics.

use alloc::string::String;
use alloc::vec::Vec;

use unicode_normalization::UnicodeNormalization;

/// NFKC, lowercase, trimmed.
pub fn normalize(s: &str) -> String {
    let nfkc: String = s.nfkc().collect();
    nfkc.trim().to_lowercase()
}

/// Splits normalized text into tokens on whitespace and punctuation.
///
/// Apostrophes inside a word are kept ("don't" stays one token) so that
/// contractions in lyrics don't spray fragments into the vocabulary.
pub fn tokenize(s: &str) -> Vec<String> {
    let norm = normalize(s);
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = norm.chars().peekable();
    while let Some(c) = chars.next() {
        if c.is_alphanumeric() {
            cur.push(c);
        } else if (c == '\'' || c == '\u{2019}')
            && !cur.is_empty()
            && chars.peek().is_some_and(|n| n.is_alphanumeric())
        {
            cur.push('\'');
        } else if !cur.is_empty() {
            out.push(core::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}
