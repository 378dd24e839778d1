//! Omission attacks: pick, among candidate rewrites of the evidence, the one
//! the adversary's retriever ranks lowest against the claim.

use crate::error::{Error, Result};
use crate::retrieval::{score, Index};
use crate::text::tokenize_cased;

/// Paraphrase and generation pools default to this many candidates.
pub const DEFAULT_OMITTING_CANDIDATES: usize = 20;

/// Argmin of the retrieval score over the candidates, ties broken by first
/// occurrence. Errors on an empty candidate list.
pub fn omitting_attack(index: &Index, claim_text: &str, candidates: &[String]) -> Result<(String, f64)> {
    if candidates.is_empty() {
        return Err(Error::AttackInapplicable("empty candidate list".into()));
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, cand) in candidates.iter().enumerate() {
        let s = score(index, claim_text, cand);
        if best.map_or(true, |(_, b)| s < b) {
            best = Some((i, s));
        }
    }
    let (i, s) = best.unwrap();
    Ok((candidates[i].clone(), s))
}

/// Claim-agnostic rule-based rewriter: single-token drops plus clause
/// rotations. A deterministic stand-in for an external paraphrase or
/// generation model when no candidate pool is supplied.
pub fn reference_rewrites(sentence: &str, n: usize) -> Vec<String> {
    let tokens = tokenize_cased(sentence);
    let mut out: Vec<String> = Vec::new();
    let mut push = |candidate: String| {
        if candidate != sentence && !candidate.is_empty() && !out.contains(&candidate) {
            out.push(candidate);
        }
    };
    if tokens.len() > 1 {
        for i in 0..tokens.len() {
            let dropped: Vec<&str> = tokens
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, t)| t.as_str())
                .collect();
            push(dropped.join(" "));
        }
        for split in [tokens.len() / 2, tokens.len() / 3] {
            if split > 0 && split < tokens.len() {
                let (head, tail) = tokens.split_at(split);
                push(format!("{} {}", tail.join(" "), head.join(" ")));
            }
        }
    }
    out.truncate(n);
    out
}
