//! Word-substitution attacks against the adversary's verifier: genetic
//! search over embedding-neighbor swaps, and greedy importance-ordered
//! replacement from a candidate generator.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::lexicon::EmbeddingLexicon;
use super::{token_importance, PerturbedEvidence};
use crate::corpus::{Label, SentenceRef};
use crate::error::{Error, Result};
use crate::optimizers::{genetic_search, GeneticState, SearchBudget};
use crate::pools::CandidatePool;
use crate::text::tokenize_cased;
use crate::verification::{verify_pair, Verifier};

/// Embedding distance bound for substitution candidates.
pub const DEFAULT_NEIGHBOR_DELTA: f64 = 0.4;
/// At most this fraction of tokens may be replaced by the greedy attack.
pub const DEFAULT_MAX_TOKEN_FRACTION: f64 = 0.15;
/// Generator candidates scoring below this are discarded.
pub const DEFAULT_CANDIDATE_SCORE_THRESHOLD: f64 = 1.0e-5;

/// A replacement candidate with its generator score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    pub text: String,
    pub score: f64,
}

/// Produces ranked replacement candidates for one token position.
pub trait CandidateGenerator {
    fn candidates(&self, sref: Option<&SentenceRef>, tokens: &[String], position: usize)
        -> Vec<ScoredCandidate>;
}

/// Embedding-neighbor candidates; score is `exp(-distance)`.
pub struct LexiconNeighborGenerator<'a> {
    pub lexicon: &'a EmbeddingLexicon,
    pub delta: f64,
}

impl CandidateGenerator for LexiconNeighborGenerator<'_> {
    fn candidates(
        &self,
        _sref: Option<&SentenceRef>,
        tokens: &[String],
        position: usize,
    ) -> Vec<ScoredCandidate> {
        self.lexicon
            .neighbors(&tokens[position], self.delta)
            .into_iter()
            .map(|(text, dist)| ScoredCandidate { text, score: (-dist).exp() })
            .collect()
    }
}

/// File-backed per-position candidates, keyed `doc_id#index@position`.
/// Candidates carry rank-decay scores 1/(rank+1).
pub struct PoolReplacementGenerator<'a> {
    pub pool: &'a CandidatePool,
}

impl CandidateGenerator for PoolReplacementGenerator<'_> {
    fn candidates(
        &self,
        sref: Option<&SentenceRef>,
        _tokens: &[String],
        position: usize,
    ) -> Vec<ScoredCandidate> {
        let Some(sref) = sref else {
            return Vec::new();
        };
        let key = CandidatePool::position_key(sref, position);
        self.pool
            .get(&key)
            .map(|cands| {
                cands
                    .iter()
                    .enumerate()
                    .map(|(rank, text)| ScoredCandidate {
                        text: text.clone(),
                        score: 1.0 / (rank as f64 + 1.0),
                    })
                    .collect()
            })
            .unwrap_or_default()
    }
}

/// Token-replacement map over a fixed sentence: one optional substitution
/// choice per covered position. Crossover mixes choices per position.
#[derive(Clone)]
struct SubstitutionState {
    base: Arc<Vec<String>>,
    options: Arc<Vec<Vec<String>>>,
    choice: Vec<Option<usize>>,
}

impl SubstitutionState {
    fn decode(&self) -> String {
        self.base
            .iter()
            .enumerate()
            .map(|(i, tok)| match self.choice[i] {
                Some(k) => self.options[i][k].as_str(),
                None => tok.as_str(),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn substitution_count(&self) -> usize {
        self.choice.iter().filter(|c| c.is_some()).count()
    }
}

impl GeneticState for SubstitutionState {
    fn crossover(&self, other: &Self, rng: &mut ChaCha8Rng) -> Self {
        let choice = self
            .choice
            .iter()
            .zip(&other.choice)
            .map(|(&a, &b)| if rng.gen::<bool>() { a } else { b })
            .collect();
        SubstitutionState { base: Arc::clone(&self.base), options: Arc::clone(&self.options), choice }
    }

    fn cache_key(&self) -> String {
        self.decode()
    }
}

fn substitution_neighbors(state: &SubstitutionState) -> Vec<SubstitutionState> {
    let mut out = Vec::new();
    for pos in 0..state.choice.len() {
        if state.options[pos].is_empty() {
            continue;
        }
        for k in 0..state.options[pos].len() {
            if state.choice[pos] != Some(k) {
                let mut next = state.clone();
                next.choice[pos] = Some(k);
                out.push(next);
            }
        }
        if state.choice[pos].is_some() {
            let mut next = state.clone();
            next.choice[pos] = None;
            out.push(next);
        }
    }
    out
}

/// Population search over embedding-neighbor substitutions, maximizing the
/// probability of `target_label`. Fails (flagged, not an error) when no
/// explored candidate beats the original; errors only when the lexicon
/// covers no evidence token.
pub fn lexical_variation(
    claim_text: &str,
    evidence_text: &str,
    verifier: &Verifier,
    lexicon: &EmbeddingLexicon,
    target_label: Label,
    delta: f64,
    budget: &SearchBudget,
) -> Result<PerturbedEvidence> {
    let tokens = tokenize_cased(evidence_text);
    if tokens.is_empty() {
        return Err(Error::AttackInapplicable("evidence has no tokens".into()));
    }
    let options: Vec<Vec<String>> = tokens
        .iter()
        .map(|t| lexicon.neighbors(t, delta).into_iter().map(|(w, _)| w).collect())
        .collect();
    if options.iter().all(Vec::is_empty) {
        return Err(Error::AttackInapplicable("lexicon covers no evidence token".into()));
    }
    let choice = vec![None; tokens.len()];
    let initial = SubstitutionState { base: Arc::new(tokens), options: Arc::new(options), choice };
    let before = verify_pair(verifier, claim_text, evidence_text).probability(target_label);
    let outcome = genetic_search(
        initial,
        substitution_neighbors,
        |s: &SubstitutionState| verify_pair(verifier, claim_text, &s.decode()).probability(target_label),
        budget,
        Some(0.5),
    );
    let success = outcome.best_value > before;
    let attacked_text = if success { outcome.best.decode() } else { evidence_text.to_string() };
    Ok(PerturbedEvidence {
        original_text: evidence_text.to_string(),
        attacked_text,
        method: "lexical-variation".to_string(),
        budget_used: if success { outcome.best.substitution_count() } else { 0 },
        objective_before: before,
        objective_after: outcome.best_value.max(before),
        success,
    })
}

/// Greedy replacement in token-importance order: at each position, try the
/// generator candidates above the score threshold and keep the replacement
/// that most lowers the correct-label probability. Stops when the predicted
/// label flips or the token budget `floor(fraction * len)` is spent.
#[allow(clippy::too_many_arguments)]
pub fn contextualized_replace(
    claim_text: &str,
    evidence_text: &str,
    correct_label: Label,
    verifier: &Verifier,
    generator: &dyn CandidateGenerator,
    sref: Option<&SentenceRef>,
    max_token_fraction: f64,
    candidate_score_threshold: f64,
) -> Result<PerturbedEvidence> {
    let mut tokens = tokenize_cased(evidence_text);
    if tokens.is_empty() {
        return Err(Error::AttackInapplicable("evidence has no tokens".into()));
    }
    let before = verify_pair(verifier, claim_text, evidence_text).probability(correct_label);
    let token_budget = (max_token_fraction * tokens.len() as f64).floor() as usize;

    let ranked = token_importance(verifier, claim_text, &tokens, correct_label);
    let mut any_candidate = false;
    let mut replaced = 0usize;
    let mut current = before;
    if token_budget > 0 {
        for (pos, _) in ranked {
            if replaced >= token_budget {
                break;
            }
            let candidates = generator.candidates(sref, &tokens, pos);
            let mut best: Option<(String, f64)> = None;
            for cand in candidates.into_iter().filter(|c| c.score >= candidate_score_threshold) {
                any_candidate = true;
                if cand.text == tokens[pos] {
                    continue;
                }
                let mut trial = tokens.clone();
                trial[pos] = cand.text.clone();
                let p = verify_pair(verifier, claim_text, &trial.join(" ")).probability(correct_label);
                if p < best.as_ref().map_or(current, |(_, bp)| *bp) {
                    best = Some((cand.text, p));
                }
            }
            if let Some((text, p)) = best {
                tokens[pos] = text;
                current = p;
                replaced += 1;
                let dist = verify_pair(verifier, claim_text, &tokens.join(" "));
                if dist.argmax() != correct_label {
                    break;
                }
            }
        }
        if !any_candidate {
            return Err(Error::AttackInapplicable(
                "no generator candidate above the score threshold".into(),
            ));
        }
    }

    let success = replaced > 0 && current < before;
    let attacked_text = if success { tokens.join(" ") } else { evidence_text.to_string() };
    Ok(PerturbedEvidence {
        original_text: evidence_text.to_string(),
        attacked_text,
        method: "contextualized-replace".to_string(),
        budget_used: replaced,
        objective_before: before,
        objective_after: if success { current } else { before },
        success,
    })
}
