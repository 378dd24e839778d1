//! Tokenization, stable hashing, and small word lists shared across modules.
//!
//! Tokens are maximal runs of alphanumeric codepoints. Everything else
//! (whitespace, punctuation, control characters) separates tokens. This is
//! deliberately cheap to break: inserting a control character inside a word
//! splits it into two different tokens.

/// Function words excluded from content-word features and entity extraction.
pub const FUNCTION_WORDS: &[&str] = &[
    "a", "an", "the", "is", "was", "were", "are", "be", "been", "in", "of",
    "to", "for", "as", "on", "at", "by", "and", "or", "that", "it", "its",
    "with", "from", "after", "before", "has", "had", "have", "he", "she",
    "they", "their", "there", "who", "this", "but", "into", "about", "every",
    "all", "any", "some", "his", "her",
];

/// Negation markers recognized by the verifier's indicator features.
pub const NEGATION_MARKERS: &[&str] = &["not", "never", "no", "none", "cannot", "without", "hardly"];

/// Split into lowercased alphanumeric tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    split_alnum(text).map(|t| t.to_lowercase()).collect()
}

/// Split into alphanumeric tokens preserving the original case.
pub fn tokenize_cased(text: &str) -> Vec<String> {
    split_alnum(text).map(str::to_string).collect()
}

fn split_alnum(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty())
}

pub fn is_function_word(token: &str) -> bool {
    let lower = token.to_lowercase();
    FUNCTION_WORDS.contains(&lower.as_str())
}

pub fn is_negation_marker(token: &str) -> bool {
    let lower = token.to_lowercase();
    NEGATION_MARKERS.contains(&lower.as_str())
}

/// Content words: lowercased tokens minus function words.
pub fn content_words(text: &str) -> Vec<String> {
    tokenize(text).into_iter().filter(|t| !is_function_word(t)).collect()
}

/// Entity tokens: capitalized non-function tokens plus all-digit tokens, in
/// their original surface form. A stand-in for named-entity recognition on
/// corpora whose entities are capitalized.
pub fn entity_tokens(text: &str) -> Vec<String> {
    tokenize_cased(text)
        .into_iter()
        .filter(|t| {
            let capitalized = t.chars().next().is_some_and(|c| c.is_uppercase());
            let numeric = t.chars().all(|c| c.is_ascii_digit());
            (capitalized && !is_function_word(t)) || numeric
        })
        .collect()
}

/// 64-bit FNV-1a. Stable across platforms and releases, unlike the std hasher.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Hash a namespaced sequence of token parts into one stable id.
pub fn hash_parts(namespace: &str, parts: &[&str]) -> u64 {
    let mut buf = Vec::with_capacity(namespace.len() + parts.iter().map(|p| p.len() + 1).sum::<usize>());
    buf.extend_from_slice(namespace.as_bytes());
    for p in parts {
        buf.push(0x1f);
        buf.extend_from_slice(p.as_bytes());
    }
    fnv1a64(&buf)
}
