//! Evidence-camouflaging attacks: make claim-relevant evidence unretrieved
//! or inconclusive. The attacker retrieves the top sentences for each SUP or
//! REF claim with its own retriever, perturbs them, and replaces the
//! originals in the repository. Camouflage requires replace control; the add
//! variant exists only for the modification-method comparison experiment.

pub mod imperceptible;
pub mod lexicon;
pub mod omitting;
pub mod substitution;

pub use imperceptible::{
    eligible_sites, search_perturbation, strip_controls, AttackObjective, HomoglyphTable, Technique,
    DEFAULT_EPSILON, EXTENDED_EPSILON,
};
pub use lexicon::EmbeddingLexicon;
pub use omitting::{omitting_attack, reference_rewrites, DEFAULT_OMITTING_CANDIDATES};
pub use substitution::{
    contextualized_replace, lexical_variation, CandidateGenerator, LexiconNeighborGenerator,
    PoolReplacementGenerator, ScoredCandidate, DEFAULT_CANDIDATE_SCORE_THRESHOLD,
    DEFAULT_MAX_TOKEN_FRACTION, DEFAULT_NEIGHBOR_DELTA,
};

use serde::{Deserialize, Serialize};

use crate::corpus::{ClaimSet, Label, Modification, ModificationKind, Repository, SentenceRef};
use crate::error::{Error, Result};
use crate::optimizers::{SearchBudget, DEFAULT_DE_ITERATIONS, DEFAULT_DE_POPULATION};
use crate::pools::CandidatePool;
use crate::retrieval::{retrieve, score, Index};
use crate::text::{fnv1a64, tokenize_cased};
use crate::verification::{verify_pair, Verifier};

/// One attacked sentence with its before/after objective trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedEvidence {
    pub original_text: String,
    pub attacked_text: String,
    pub method: String,
    pub budget_used: usize,
    pub objective_before: f64,
    pub objective_after: f64,
    pub success: bool,
}

/// Outcome of attacking one retrieved sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceAttack {
    /// The replaced sentence (camouflage) or the inserted one (planting).
    pub sref: SentenceRef,
    pub method: String,
    pub success: bool,
    pub objective_before: f64,
    pub objective_after: f64,
    pub note: Option<String>,
}

/// Per-claim attack record, the attacker-side half of an experiment outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackRecord {
    pub claim_id: String,
    pub sentences: Vec<SentenceAttack>,
    /// True when at least one repository modification was applied.
    pub attacked: bool,
    pub note: Option<String>,
}

/// Camouflage attack selection with per-method hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CamouflageMethod {
    LexicalVariation { delta: f64, population: usize, iterations: usize, max_calls: usize },
    ContextualizedReplace { max_token_fraction: f64, candidate_score_threshold: f64 },
    Imperceptible {
        technique: Technique,
        objective: AttackObjective,
        epsilon: usize,
        population: usize,
        iterations: usize,
        max_calls: usize,
    },
    OmittingParaphrase,
    OmittingGenerate,
}

impl CamouflageMethod {
    pub fn lexical_variation() -> Self {
        CamouflageMethod::LexicalVariation {
            delta: DEFAULT_NEIGHBOR_DELTA,
            population: 60,
            iterations: 20,
            max_calls: 4000,
        }
    }

    pub fn contextualized_replace() -> Self {
        CamouflageMethod::ContextualizedReplace {
            max_token_fraction: DEFAULT_MAX_TOKEN_FRACTION,
            candidate_score_threshold: DEFAULT_CANDIDATE_SCORE_THRESHOLD,
        }
    }

    pub fn imperceptible(technique: Technique, objective: AttackObjective, epsilon: usize) -> Self {
        CamouflageMethod::Imperceptible {
            technique,
            objective,
            epsilon,
            population: DEFAULT_DE_POPULATION,
            iterations: DEFAULT_DE_ITERATIONS,
            max_calls: 4000,
        }
    }

    pub fn name(&self) -> String {
        match self {
            CamouflageMethod::LexicalVariation { .. } => "lexical-variation".into(),
            CamouflageMethod::ContextualizedReplace { .. } => "contextualized-replace".into(),
            CamouflageMethod::Imperceptible { technique, objective, epsilon, .. } => {
                format!("imperceptible-{}-{}-eps{}", technique.name(), objective.name(), epsilon)
            }
            CamouflageMethod::OmittingParaphrase => "omitting-paraphrase".into(),
            CamouflageMethod::OmittingGenerate => "omitting-generate".into(),
        }
    }

    /// Does the method score candidates with the adversary's verifier?
    fn needs_verifier(&self) -> bool {
        matches!(
            self,
            CamouflageMethod::LexicalVariation { .. }
                | CamouflageMethod::ContextualizedReplace { .. }
                | CamouflageMethod::Imperceptible { objective: AttackObjective::VerifierLoss, .. }
        )
    }
}

/// Attack-side assets. The lexicon backs both the substitution search and
/// the default replacement generator; pools carry external paraphrase or
/// generation candidates.
pub struct CamouflageContext<'a> {
    pub verifier: Option<&'a Verifier>,
    pub lexicon: Option<&'a EmbeddingLexicon>,
    pub replacement_generator: Option<&'a dyn CandidateGenerator>,
    pub pool: Option<&'a CandidatePool>,
    pub seed: u64,
}

/// Importance of each evidence token: the drop in correct-label probability
/// when that token is deleted. Descending, ties by position ascending.
pub fn token_importance(
    verifier: &Verifier,
    claim_text: &str,
    evidence_tokens: &[String],
    correct_label: Label,
) -> Vec<(usize, f64)> {
    let base_text = evidence_tokens.join(" ");
    let base = verify_pair(verifier, claim_text, &base_text).probability(correct_label);
    let mut ranked: Vec<(usize, f64)> = (0..evidence_tokens.len())
        .map(|i| {
            let rest: Vec<&str> = evidence_tokens
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, t)| t.as_str())
                .collect();
            let p = verify_pair(verifier, claim_text, &rest.join(" ")).probability(correct_label);
            (i, base - p)
        })
        .collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    ranked
}

fn opposite(label: Label) -> Label {
    match label {
        Label::Sup => Label::Ref,
        Label::Ref => Label::Sup,
        Label::Nei => Label::Nei,
    }
}

fn sentence_seed(base: u64, claim_id: &str, sref: &SentenceRef) -> u64 {
    fnv1a64(format!("{base}/{claim_id}/{sref}").as_bytes())
}

fn attack_sentence(
    method: &CamouflageMethod,
    ctx: &CamouflageContext,
    ra_index: &Index,
    claim_text: &str,
    claim_label: Label,
    sref: &SentenceRef,
    text: &str,
    seed: u64,
) -> Result<PerturbedEvidence> {
    if method.needs_verifier() {
        let verifier = ctx
            .verifier
            .ok_or_else(|| Error::Config(format!("{} needs the adversary verifier", method.name())))?;
        // Verifier-guided attacks only perturb pairs the adversary verifier
        // currently gets right; the retrieved sentences inherit the claim's
        // label since gold annotations are not assumed at attack time.
        if verify_pair(verifier, claim_text, text).argmax() != claim_label {
            return Err(Error::AttackInapplicable(
                "adversary verifier prediction already incorrect for this pair".into(),
            ));
        }
    }
    match method {
        CamouflageMethod::LexicalVariation { delta, population, iterations, max_calls } => {
            let verifier = ctx.verifier.expect("checked above");
            let lexicon = ctx
                .lexicon
                .ok_or_else(|| Error::Config("lexical variation needs an embedding lexicon".into()))?;
            let budget = SearchBudget::new(*population, *iterations, seed, *max_calls);
            lexical_variation(
                claim_text,
                text,
                verifier,
                lexicon,
                opposite(claim_label),
                *delta,
                &budget,
            )
        }
        CamouflageMethod::ContextualizedReplace { max_token_fraction, candidate_score_threshold } => {
            let verifier = ctx.verifier.expect("checked above");
            let fallback;
            let generator: &dyn CandidateGenerator = match ctx.replacement_generator {
                Some(g) => g,
                None => {
                    let lexicon = ctx.lexicon.ok_or_else(|| {
                        Error::Config("contextualized replace needs a candidate generator or lexicon".into())
                    })?;
                    fallback = LexiconNeighborGenerator { lexicon, delta: DEFAULT_NEIGHBOR_DELTA };
                    &fallback
                }
            };
            contextualized_replace(
                claim_text,
                text,
                claim_label,
                verifier,
                generator,
                Some(sref),
                *max_token_fraction,
                *candidate_score_threshold,
            )
        }
        CamouflageMethod::Imperceptible { technique, objective, epsilon, population, iterations, max_calls } => {
            let budget = SearchBudget::new(*population, *iterations, seed, *max_calls);
            let table = HomoglyphTable::bundled();
            let (before, attacked, after, used) = match objective {
                AttackObjective::VerifierLoss => {
                    let verifier = ctx.verifier.expect("checked above");
                    let before = verify_pair(verifier, claim_text, text).probability(claim_label);
                    let (attacked, after, used) =
                        search_perturbation(text, *technique, table, *epsilon, &budget, |t| {
                            verify_pair(verifier, claim_text, t).probability(claim_label)
                        })?;
                    (before, attacked, after, used)
                }
                AttackObjective::RetrievalScore => {
                    let before = score(ra_index, claim_text, text);
                    let (attacked, after, used) =
                        search_perturbation(text, *technique, table, *epsilon, &budget, |t| {
                            score(ra_index, claim_text, t)
                        })?;
                    (before, attacked, after, used)
                }
            };
            let success = after < before;
            Ok(PerturbedEvidence {
                original_text: text.to_string(),
                attacked_text: if success { attacked } else { text.to_string() },
                method: method.name(),
                budget_used: if success { used } else { 0 },
                objective_before: before,
                objective_after: if success { after } else { before },
                success,
            })
        }
        CamouflageMethod::OmittingParaphrase | CamouflageMethod::OmittingGenerate => {
            let owned;
            let candidates: &[String] = match (method, ctx.pool) {
                (CamouflageMethod::OmittingParaphrase, Some(pool)) => {
                    pool.get(&CandidatePool::sentence_key(sref)).unwrap_or(&[])
                }
                (CamouflageMethod::OmittingGenerate, Some(pool)) => {
                    // Generation pools are keyed by the prompt, which is the
                    // old evidence sentence.
                    pool.get(&CandidatePool::prompt_key(text)).unwrap_or(&[])
                }
                _ => {
                    owned = reference_rewrites(text, DEFAULT_OMITTING_CANDIDATES);
                    &owned
                }
            };
            if candidates.is_empty() {
                return Err(Error::AttackInapplicable(format!(
                    "no rewrite candidates for {sref}"
                )));
            }
            let before = score(ra_index, claim_text, text);
            let (selected, after) = omitting_attack(ra_index, claim_text, candidates)?;
            let success = after < before;
            Ok(PerturbedEvidence {
                original_text: text.to_string(),
                attacked_text: if success { selected } else { text.to_string() },
                method: method.name(),
                budget_used: usize::from(success),
                objective_before: before,
                objective_after: if success { after } else { before },
                success,
            })
        }
    }
}

/// Run a camouflage attack over all SUP/REF claims: retrieve the top
/// `max_edited` sentences with the adversary's retriever, perturb each, and
/// replace the successful ones in the repository (one modification batch,
/// attack-marked). NEI claims are skipped; per-sentence failures are
/// recorded, not raised.
pub fn run_camouflage(
    claims: &ClaimSet,
    repo: &Repository,
    ra_index: &Index,
    method: &CamouflageMethod,
    ctx: &CamouflageContext,
    max_edited: usize,
) -> Result<(Repository, Vec<AttackRecord>)> {
    run_camouflage_with_kind(claims, repo, ra_index, method, ctx, max_edited, ModificationKind::Replace)
}

/// Camouflage with an explicit modification method. Only the add-vs-replace
/// comparison experiment passes `Add`; the plain entry point rejects it
/// because camouflaging only works by replacing the original evidence.
pub fn run_camouflage_with_kind(
    claims: &ClaimSet,
    repo: &Repository,
    ra_index: &Index,
    method: &CamouflageMethod,
    ctx: &CamouflageContext,
    max_edited: usize,
    kind: ModificationKind,
) -> Result<(Repository, Vec<AttackRecord>)> {
    if max_edited == 0 {
        return Err(Error::Config("max_edited must be at least 1".into()));
    }
    let mut records = Vec::new();
    let mut mods: Vec<Modification> = Vec::new();
    for claim in &claims.claims {
        if claim.label == Label::Nei {
            continue;
        }
        let ranked = retrieve(ra_index, repo, &claim.text, max_edited)?;
        if ranked.is_empty() {
            records.push(AttackRecord {
                claim_id: claim.id.clone(),
                sentences: Vec::new(),
                attacked: false,
                note: Some("no retrieval overlap".into()),
            });
            continue;
        }
        let mut sentences = Vec::new();
        let mut attacked = false;
        for (sref, _) in &ranked.hits {
            let Some(text) = repo.sentence(sref) else { continue };
            let seed = sentence_seed(ctx.seed, &claim.id, sref);
            match attack_sentence(method, ctx, ra_index, &claim.text, claim.label, sref, text, seed) {
                Ok(pe) => {
                    if pe.success {
                        match kind {
                            ModificationKind::Replace => mods.push(Modification::Replace {
                                target: sref.clone(),
                                new_text: pe.attacked_text.clone(),
                            }),
                            ModificationKind::Add => mods.push(Modification::Add {
                                doc_id: sref.doc_id.clone(),
                                new_text: pe.attacked_text.clone(),
                            }),
                        }
                        attacked = true;
                    }
                    sentences.push(SentenceAttack {
                        sref: sref.clone(),
                        method: pe.method.clone(),
                        success: pe.success,
                        objective_before: pe.objective_before,
                        objective_after: pe.objective_after,
                        note: None,
                    });
                }
                Err(Error::AttackInapplicable(msg)) => {
                    sentences.push(SentenceAttack {
                        sref: sref.clone(),
                        method: method.name(),
                        success: false,
                        objective_before: 0.0,
                        objective_after: 0.0,
                        note: Some(msg),
                    });
                }
                Err(other) => return Err(other),
            }
        }
        records.push(AttackRecord {
            claim_id: claim.id.clone(),
            sentences,
            attacked,
            note: (!attacked).then(|| "no successful perturbation".into()),
        });
    }
    // With Add, record the refs that will actually hold the attack sentences.
    if kind == ModificationKind::Add {
        let mut next_index: std::collections::BTreeMap<String, usize> = Default::default();
        for d in &repo.documents {
            next_index.insert(d.doc_id.clone(), d.sentences.len());
        }
        let mut mod_iter = mods.iter();
        for record in records.iter_mut() {
            for s in record.sentences.iter_mut().filter(|s| s.success) {
                if let Some(Modification::Add { doc_id, .. }) = mod_iter.next() {
                    let idx = next_index.entry(doc_id.clone()).or_insert(0);
                    s.sref = SentenceRef::new(doc_id.clone(), *idx);
                    *idx += 1;
                }
            }
        }
    }
    let attacked_repo = repo.apply_modifications(&mods, true)?;
    Ok((attacked_repo, records))
}

/// Convenience wrapper rejecting the add misconfiguration at the API edge.
pub fn validate_camouflage_kind(kind: ModificationKind) -> Result<()> {
    if kind == ModificationKind::Add {
        return Err(Error::Validation(
            "camouflaging attacks require the replace modification method".into(),
        ));
    }
    Ok(())
}

/// Tokenize evidence for masking and importance ranking, preserving case.
pub fn evidence_tokens(text: &str) -> Vec<String> {
    tokenize_cased(text)
}
