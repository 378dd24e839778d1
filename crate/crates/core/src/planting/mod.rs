//! Evidence-planting attacks: make the pipeline agree with a wrong claim.
//!
//! Two-stage rewriting masks claim-salient tokens in retrieved evidence and
//! fills the blanks conditioned on the claim; supporting generation produces
//! new evidence from the claim alone. Both filter sampled candidates through
//! the adversary's verifier (stance) or retriever before planting them, and
//! planting defaults to add control: pre-existing sentences are never
//! touched.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::camouflage::{token_importance, AttackRecord, SentenceAttack};
use crate::corpus::{ClaimSet, Label, Modification, ModificationKind, Repository, SentenceRef};
use crate::error::{Error, Result};
use crate::pools::CandidatePool;
use crate::retrieval::{masked_sentence_score, retrieve, score, Index};
use crate::text::{fnv1a64, is_function_word, tokenize_cased};
use crate::verification::{verify_pair, Verifier};

/// Placeholder mark in masked and exported text; bit-exact in files.
pub const PLACEHOLDER: &str = "\u{27E8}M\u{27E9}";

/// Mask budget when running the attack.
pub const DEFAULT_K_MASK_ATTACK: usize = 13;
/// Mask budget when exporting distant-supervision training triples.
pub const DEFAULT_K_MASK_TRAIN: usize = 16;
/// Candidate rewrites sampled per masked sentence.
pub const DEFAULT_REWRITE_SAMPLES: usize = 60;
/// Evidence sentences rewritten per claim.
pub const DEFAULT_REWRITE_EVIDENCE: usize = 2;
/// Candidates sampled by the generation attack.
pub const DEFAULT_GENERATION_SAMPLES: usize = 160;
/// Generated sentences kept (and planted) per claim.
pub const DEFAULT_GENERATION_KEEP: usize = 2;
/// Planted sentences per counterclaim when attacking correct claims.
pub const DEFAULT_COUNTER_KEEP: usize = 3;

/// Which signal ranked the masked tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaskerId {
    VerifierImportance,
    RetrievalImportance,
}

/// Evidence tokens with the top-k claim-salient positions masked.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedEvidence {
    pub tokens: Vec<String>,
    pub mask_positions: BTreeSet<usize>,
    pub masker: MaskerId,
}

impl MaskedEvidence {
    /// Tokens with placeholders substituted at masked positions.
    pub fn masked_tokens(&self) -> Vec<String> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if self.mask_positions.contains(&i) {
                    PLACEHOLDER.to_string()
                } else {
                    t.clone()
                }
            })
            .collect()
    }

    pub fn rendered(&self) -> String {
        self.masked_tokens().join(" ")
    }
}

/// Mask the top-k tokens by verifier importance (drop in correct-label
/// probability on deletion).
pub fn mask_by_verifier(
    claim_text: &str,
    evidence_tokens: &[String],
    verifier: &Verifier,
    correct_label: Label,
    k: usize,
) -> MaskedEvidence {
    let ranked = token_importance(verifier, claim_text, evidence_tokens, correct_label);
    let mask_positions: BTreeSet<usize> = ranked.into_iter().take(k).map(|(i, _)| i).collect();
    MaskedEvidence {
        tokens: evidence_tokens.to_vec(),
        mask_positions,
        masker: MaskerId::VerifierImportance,
    }
}

/// Mask the top-k tokens by retrieval importance: positions whose deletion
/// yields the lowest masked-sentence score, ascending, ties by position.
/// With no claim overlap every deletion ties at zero and masking falls back
/// to position order.
pub fn mask_by_retrieval(
    claim_text: &str,
    evidence_tokens: &[String],
    index: &Index,
    k: usize,
) -> Result<MaskedEvidence> {
    let mut scored: Vec<(usize, f64)> = Vec::with_capacity(evidence_tokens.len());
    for i in 0..evidence_tokens.len() {
        scored.push((i, masked_sentence_score(index, claim_text, evidence_tokens, i)?));
    }
    scored.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    let mask_positions: BTreeSet<usize> = scored.into_iter().take(k).map(|(i, _)| i).collect();
    Ok(MaskedEvidence {
        tokens: evidence_tokens.to_vec(),
        mask_positions,
        masker: MaskerId::RetrievalImportance,
    })
}

/// Fills masked evidence conditioned on the claim.
pub trait Corrector {
    fn fill(
        &self,
        claim_text: &str,
        masked: &MaskedEvidence,
        key: Option<&SentenceRef>,
        n_samples: usize,
        seed: u64,
    ) -> Result<Vec<String>>;
}

/// Deterministic template corrector: placeholders are filled left to right
/// with the claim's content words in claim order (cycling, with the start
/// offset rotated per sample); when the claim has no content words, with
/// high-frequency corpus tokens instead.
pub struct ReferenceCorrector {
    filler_tokens: Vec<String>,
}

impl ReferenceCorrector {
    pub fn new(filler_tokens: Vec<String>) -> Self {
        let filler_tokens = if filler_tokens.is_empty() {
            vec!["record".to_string(), "account".to_string(), "archive".to_string()]
        } else {
            filler_tokens
        };
        ReferenceCorrector { filler_tokens }
    }

    /// Fillers = most frequent content words of the repository.
    pub fn for_repository(repo: &Repository) -> Self {
        let mut freq: std::collections::BTreeMap<String, usize> = Default::default();
        for d in &repo.documents {
            for s in &d.sentences {
                for t in crate::text::tokenize(s) {
                    if !is_function_word(&t) {
                        *freq.entry(t).or_insert(0) += 1;
                    }
                }
            }
        }
        let mut by_freq: Vec<(String, usize)> = freq.into_iter().collect();
        by_freq.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ReferenceCorrector::new(by_freq.into_iter().take(12).map(|(t, _)| t).collect())
    }
}

impl Corrector for ReferenceCorrector {
    fn fill(
        &self,
        claim_text: &str,
        masked: &MaskedEvidence,
        _key: Option<&SentenceRef>,
        n_samples: usize,
        seed: u64,
    ) -> Result<Vec<String>> {
        use rand::{Rng, SeedableRng};
        let claim_words: Vec<String> =
            tokenize_cased(claim_text).into_iter().filter(|t| !is_function_word(t)).collect();
        let positions: Vec<usize> = masked.mask_positions.iter().copied().collect();
        let mut out = Vec::with_capacity(n_samples);
        for sample in 0..n_samples {
            let mut tokens = masked.tokens.clone();
            let mut rng =
                rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ fnv1a64(&(sample as u64).to_le_bytes()));
            for (rank, &pos) in positions.iter().enumerate() {
                let fill = if claim_words.is_empty() {
                    self.filler_tokens[(rank + sample) % self.filler_tokens.len()].clone()
                } else if sample < claim_words.len() || rng.gen_bool(0.7) {
                    claim_words[(rank + sample) % claim_words.len()].clone()
                } else {
                    self.filler_tokens[rng.gen_range(0..self.filler_tokens.len())].clone()
                };
                tokens[pos] = fill;
            }
            out.push(tokens.join(" "));
        }
        Ok(out)
    }
}

/// File-backed corrector keyed by the source sentence (`doc_id#index`).
pub struct PoolCorrector<'a> {
    pub pool: &'a CandidatePool,
}

impl Corrector for PoolCorrector<'_> {
    fn fill(
        &self,
        _claim_text: &str,
        _masked: &MaskedEvidence,
        key: Option<&SentenceRef>,
        n_samples: usize,
        _seed: u64,
    ) -> Result<Vec<String>> {
        let key = key.ok_or_else(|| Error::Config("pool corrector needs a sentence key".into()))?;
        let cands = self.pool.require(&CandidatePool::sentence_key(key))?;
        Ok(cands.iter().take(n_samples).cloned().collect())
    }
}

/// Run a corrector and enforce placeholder completeness: with zero
/// placeholders every candidate equals the unmasked text, and no candidate
/// may still contain the placeholder mark.
pub fn correct(
    corrector: &dyn Corrector,
    claim_text: &str,
    masked: &MaskedEvidence,
    key: Option<&SentenceRef>,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<String>> {
    if n_samples == 0 {
        return Err(Error::Config("n_samples must be at least 1".into()));
    }
    if masked.mask_positions.is_empty() {
        return Ok(vec![masked.tokens.join(" "); n_samples]);
    }
    let candidates = corrector.fill(claim_text, masked, key, n_samples, seed)?;
    for c in &candidates {
        if c.contains(PLACEHOLDER) {
            return Err(Error::Validation(format!(
                "corrector left a placeholder in candidate {c:?}"
            )));
        }
    }
    Ok(candidates)
}

/// Produces candidate evidence texts from a claim alone.
pub trait Generator {
    fn generate(&self, claim_text: &str, n_samples: usize, seed: u64) -> Result<Vec<String>>;
}

/// Deterministic template generator: declarative restatements of the claim
/// with sampled filler clauses. Exact claim copies are produced on purpose;
/// downstream filtering removes them.
pub struct ReferenceGenerator;

const GENERATOR_SUFFIXES: &[&str] = &[
    "by every account",
    "according to the town records",
    "as the archive confirms",
    "and the fact is well documented",
    "as noted in the chronicle",
    "in the oldest registry",
    "per the parish ledger",
];

const GENERATOR_PREFIXES: &[&str] = &["Records state that", "It is known that", "Every chronicle agrees that"];

impl Generator for ReferenceGenerator {
    fn generate(&self, claim_text: &str, n_samples: usize, seed: u64) -> Result<Vec<String>> {
        use rand::{Rng, SeedableRng};
        let base = claim_text.trim_end_matches('.').to_string();
        let mut out = Vec::with_capacity(n_samples);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for sample in 0..n_samples {
            let text = match sample {
                0 => claim_text.to_string(), // exact copy, filtered downstream
                _ => {
                    if rng.gen_bool(0.5) {
                        let suffix = GENERATOR_SUFFIXES[rng.gen_range(0..GENERATOR_SUFFIXES.len())];
                        format!("{base} {suffix}.")
                    } else {
                        let prefix = GENERATOR_PREFIXES[rng.gen_range(0..GENERATOR_PREFIXES.len())];
                        let suffix = GENERATOR_SUFFIXES[rng.gen_range(0..GENERATOR_SUFFIXES.len())];
                        format!("{prefix} {base} {suffix}.")
                    }
                }
            };
            out.push(text);
        }
        Ok(out)
    }
}

/// File-backed generator keyed by the prompt (the claim text).
pub struct PoolGenerator<'a> {
    pub pool: &'a CandidatePool,
}

impl Generator for PoolGenerator<'_> {
    fn generate(&self, claim_text: &str, n_samples: usize, _seed: u64) -> Result<Vec<String>> {
        let cands = self.pool.require(&CandidatePool::prompt_key(claim_text))?;
        Ok(cands.iter().take(n_samples).cloned().collect())
    }
}

/// Candidate filter: maximize the adversary verifier's SUP probability or
/// the adversary retriever's score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterDirection {
    StanceMax,
    RetrievalMax,
}

/// The scorer consulted by `select_candidate`; exactly one per direction.
pub enum FilterScorer<'a> {
    Stance(&'a Verifier),
    Retrieval(&'a Index),
}

impl FilterScorer<'_> {
    pub fn direction(&self) -> FilterDirection {
        match self {
            FilterScorer::Stance(_) => FilterDirection::StanceMax,
            FilterScorer::Retrieval(_) => FilterDirection::RetrievalMax,
        }
    }

    fn score(&self, claim_text: &str, candidate: &str) -> f64 {
        match self {
            FilterScorer::Stance(v) => verify_pair(v, claim_text, candidate).p_sup,
            FilterScorer::Retrieval(index) => score(index, claim_text, candidate),
        }
    }
}

/// Rank all non-copy candidates under the scorer, best first, ties by first
/// occurrence. Errors when every candidate is an exact claim copy.
pub fn rank_candidates(
    candidates: &[String],
    claim_text: &str,
    scorer: &FilterScorer,
) -> Result<Vec<(String, f64)>> {
    let filtered: Vec<(usize, &String)> =
        candidates.iter().enumerate().filter(|(_, c)| c.as_str() != claim_text).collect();
    if filtered.is_empty() {
        return Err(Error::DegenerateCandidates);
    }
    let mut scored: Vec<(usize, String, f64)> = filtered
        .into_iter()
        .map(|(i, c)| (i, c.clone(), scorer.score(claim_text, c)))
        .collect();
    scored.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then_with(|| a.0.cmp(&b.0)));
    Ok(scored.into_iter().map(|(_, c, s)| (c, s)).collect())
}

/// The argmax candidate under the scorer after copy exclusion.
pub fn select_candidate(
    candidates: &[String],
    claim_text: &str,
    scorer: &FilterScorer,
) -> Result<(String, f64)> {
    Ok(rank_candidates(candidates, claim_text, scorer)?.remove(0))
}

/// Configuration for the claim-aligned rewriting attack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewriteConfig {
    pub masker: MaskerId,
    pub direction: FilterDirection,
    pub n_evidence: usize,
    pub n_samples: usize,
    pub k_mask: usize,
    pub kind: ModificationKind,
}

impl Default for RewriteConfig {
    fn default() -> Self {
        RewriteConfig {
            masker: MaskerId::VerifierImportance,
            direction: FilterDirection::StanceMax,
            n_evidence: DEFAULT_REWRITE_EVIDENCE,
            n_samples: DEFAULT_REWRITE_SAMPLES,
            k_mask: DEFAULT_K_MASK_ATTACK,
            kind: ModificationKind::Add,
        }
    }
}

fn claim_seed(base: u64, claim_id: &str, sref: Option<&SentenceRef>) -> u64 {
    match sref {
        Some(r) => fnv1a64(format!("{base}/{claim_id}/{r}").as_bytes()),
        None => fnv1a64(format!("{base}/{claim_id}").as_bytes()),
    }
}

/// Mask, correct, and filter the top retrieved evidence of each REF claim,
/// planting the selected rewrite (add control by default; replace for the
/// modification-method comparison).
pub fn claim_aligned_rewrite(
    claims: &ClaimSet,
    repo: &Repository,
    ra_index: &Index,
    verifier: Option<&Verifier>,
    corrector: &dyn Corrector,
    cfg: &RewriteConfig,
    seed: u64,
) -> Result<(Repository, Vec<AttackRecord>)> {
    for c in &claims.claims {
        if c.label != Label::Ref {
            return Err(Error::Validation(format!(
                "claim-aligned rewriting applies to REF claims only; {} is {}",
                c.id, c.label
            )));
        }
    }
    let needs_verifier =
        cfg.masker == MaskerId::VerifierImportance || cfg.direction == FilterDirection::StanceMax;
    if needs_verifier && verifier.is_none() {
        return Err(Error::Config("this rewrite configuration needs the adversary verifier".into()));
    }

    let mut records = Vec::new();
    let mut mods: Vec<Modification> = Vec::new();
    let mut planted_refs: Vec<Vec<SentenceRef>> = Vec::new();
    for claim in &claims.claims {
        let ranked = retrieve(ra_index, repo, &claim.text, cfg.n_evidence)?;
        if ranked.is_empty() {
            records.push(AttackRecord {
                claim_id: claim.id.clone(),
                sentences: Vec::new(),
                attacked: false,
                note: Some("no retrieval overlap".into()),
            });
            planted_refs.push(Vec::new());
            continue;
        }
        let mut sentences = Vec::new();
        let mut claim_mods: Vec<Modification> = Vec::new();
        for (sref, _) in &ranked.hits {
            let Some(text) = repo.sentence(sref) else { continue };
            let tokens = tokenize_cased(text);
            if tokens.is_empty() {
                continue;
            }
            let masked = match cfg.masker {
                MaskerId::VerifierImportance => mask_by_verifier(
                    &claim.text,
                    &tokens,
                    verifier.expect("checked above"),
                    Label::Ref,
                    cfg.k_mask,
                ),
                MaskerId::RetrievalImportance => {
                    mask_by_retrieval(&claim.text, &tokens, ra_index, cfg.k_mask)?
                }
            };
            let sample_seed = claim_seed(seed, &claim.id, Some(sref));
            let candidates =
                correct(corrector, &claim.text, &masked, Some(sref), cfg.n_samples, sample_seed)?;
            let scorer = match cfg.direction {
                FilterDirection::StanceMax => FilterScorer::Stance(verifier.expect("checked above")),
                FilterDirection::RetrievalMax => FilterScorer::Retrieval(ra_index),
            };
            match select_candidate(&candidates, &claim.text, &scorer) {
                Ok((selected, after)) => {
                    let before = scorer.score(&claim.text, text);
                    claim_mods.push(match cfg.kind {
                        ModificationKind::Add => Modification::Add {
                            doc_id: format!("rewrite-{}", claim.id),
                            new_text: selected,
                        },
                        ModificationKind::Replace => {
                            Modification::Replace { target: sref.clone(), new_text: selected }
                        }
                    });
                    sentences.push(SentenceAttack {
                        sref: sref.clone(), // rewritten below for Add
                        method: "claim-aligned-rewrite".into(),
                        success: true,
                        objective_before: before,
                        objective_after: after,
                        note: None,
                    });
                }
                Err(Error::DegenerateCandidates) => {
                    sentences.push(SentenceAttack {
                        sref: sref.clone(),
                        method: "claim-aligned-rewrite".into(),
                        success: false,
                        objective_before: 0.0,
                        objective_after: 0.0,
                        note: Some("all candidates were exact claim copies".into()),
                    });
                }
                Err(other) => return Err(other),
            }
        }
        // For Add, the planted refs are the new doc's dense indices.
        if cfg.kind == ModificationKind::Add {
            let mut idx = 0usize;
            for s in sentences.iter_mut().filter(|s| s.success) {
                s.sref = SentenceRef::new(format!("rewrite-{}", claim.id), idx);
                idx += 1;
            }
        }
        let attacked = sentences.iter().any(|s| s.success);
        planted_refs.push(sentences.iter().filter(|s| s.success).map(|s| s.sref.clone()).collect());
        mods.extend(claim_mods);
        records.push(AttackRecord {
            claim_id: claim.id.clone(),
            sentences,
            attacked,
            note: (!attacked).then(|| "no candidate survived filtering".into()),
        });
    }
    let attacked_repo = repo.apply_modifications(&mods, true)?;
    Ok((attacked_repo, records))
}

/// Generate supporting evidence for REF/NEI claims, stance-filter, and plant
/// the top `n_keep` sentences as a new attacker document per claim.
pub fn supporting_generation(
    claims: &ClaimSet,
    repo: &Repository,
    generator: &dyn Generator,
    verifier: &Verifier,
    n_samples: usize,
    n_keep: usize,
    seed: u64,
) -> Result<(Repository, Vec<AttackRecord>)> {
    for c in &claims.claims {
        if c.label == Label::Sup {
            return Err(Error::Validation(format!(
                "supporting generation applies to REF and NEI claims only; {} is SUP",
                c.id
            )));
        }
    }
    let mut records = Vec::new();
    let mut mods = Vec::new();
    for claim in &claims.claims {
        let candidates = generator.generate(&claim.text, n_samples, claim_seed(seed, &claim.id, None))?;
        let scorer = FilterScorer::Stance(verifier);
        match rank_candidates(&candidates, &claim.text, &scorer) {
            Ok(ranked) => {
                let doc_id = format!("planted-{}", claim.id);
                let mut sentences = Vec::new();
                for (i, (text, p_sup)) in ranked.into_iter().take(n_keep).enumerate() {
                    mods.push(Modification::Add { doc_id: doc_id.clone(), new_text: text });
                    sentences.push(SentenceAttack {
                        sref: SentenceRef::new(doc_id.clone(), i),
                        method: "supporting-generation".into(),
                        success: true,
                        objective_before: 0.0,
                        objective_after: p_sup,
                        note: None,
                    });
                }
                records.push(AttackRecord {
                    claim_id: claim.id.clone(),
                    sentences,
                    attacked: true,
                    note: None,
                });
            }
            Err(Error::DegenerateCandidates) => {
                records.push(AttackRecord {
                    claim_id: claim.id.clone(),
                    sentences: Vec::new(),
                    attacked: false,
                    note: Some("generator produced only exact claim copies".into()),
                });
            }
            Err(other) => return Err(other),
        }
    }
    let attacked_repo = repo.apply_modifications(&mods, true)?;
    Ok((attacked_repo, records))
}

/// Plant evidence supporting externally written counterclaims and record the
/// outcomes against the original (correct) claims. The repository only
/// grows; whether the verdicts on the original claims move is the
/// experiment's question.
pub fn attack_correct_claims(
    pairs: &[(String, String)],
    claims: &ClaimSet,
    repo: &Repository,
    generator: &dyn Generator,
    verifier: &Verifier,
    n_samples: usize,
    n_keep: usize,
    seed: u64,
) -> Result<(Repository, Vec<AttackRecord>)> {
    let mut records = Vec::new();
    let mut mods = Vec::new();
    for (claim_id, counterclaim) in pairs {
        let original = claims
            .get(claim_id)
            .ok_or_else(|| Error::Validation(format!("unknown claim id {claim_id:?}")))?;
        if original.label != Label::Sup {
            return Err(Error::Validation(format!(
                "counterclaim attacks target SUP claims; {claim_id} is {}",
                original.label
            )));
        }
        let candidates =
            generator.generate(counterclaim, n_samples, claim_seed(seed, claim_id, None))?;
        let scorer = FilterScorer::Stance(verifier);
        // Stance is measured against the counterclaim the evidence must support.
        match rank_candidates(&candidates, counterclaim, &scorer) {
            Ok(ranked) => {
                let doc_id = format!("counter-{claim_id}");
                let mut sentences = Vec::new();
                for (i, (text, p_sup)) in ranked.into_iter().take(n_keep).enumerate() {
                    mods.push(Modification::Add { doc_id: doc_id.clone(), new_text: text });
                    sentences.push(SentenceAttack {
                        sref: SentenceRef::new(doc_id.clone(), i),
                        method: "counterclaim-generation".into(),
                        success: true,
                        objective_before: 0.0,
                        objective_after: p_sup,
                        note: None,
                    });
                }
                records.push(AttackRecord {
                    claim_id: claim_id.clone(),
                    sentences,
                    attacked: true,
                    note: None,
                });
            }
            Err(Error::DegenerateCandidates) => {
                records.push(AttackRecord {
                    claim_id: claim_id.clone(),
                    sentences: Vec::new(),
                    attacked: false,
                    note: Some("generator produced only exact counterclaim copies".into()),
                });
            }
            Err(other) => return Err(other),
        }
    }
    let attacked_repo = repo.apply_modifications(&mods, true)?;
    Ok((attacked_repo, records))
}

/// Counterclaim file: one record per line (original claim id, counterclaim).
#[derive(Serialize, Deserialize)]
struct CounterclaimRecord {
    claim_id: String,
    counterclaim: String,
}

pub fn load_counterclaims(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    use std::io::{BufRead, BufReader};
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CounterclaimRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        out.push((record.claim_id, record.counterclaim));
    }
    Ok(out)
}

pub fn save_counterclaims(pairs: &[(String, String)], path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    for (claim_id, counterclaim) in pairs {
        let record =
            CounterclaimRecord { claim_id: claim_id.clone(), counterclaim: counterclaim.clone() };
        writeln!(out, "{}", serde_json::to_string(&record)?)?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct DistantSupervisionRecord {
    claim_text: String,
    masked_evidence: String,
    target_evidence: String,
}

/// Export (claim, masked gold evidence, gold evidence) triples for training
/// an external corrector: SUP claims only, placeholder mark bit-exact.
/// Returns the number of records written.
pub fn export_distant_supervision(
    claims: &ClaimSet,
    repo: &Repository,
    ra_index: &Index,
    verifier: Option<&Verifier>,
    masker: MaskerId,
    k_mask: usize,
    path: impl AsRef<Path>,
) -> Result<usize> {
    let mut out = std::fs::File::create(path)?;
    let mut written = 0usize;
    for claim in claims.claims.iter().filter(|c| c.label == Label::Sup) {
        for gold in &claim.gold_evidence {
            let Some(text) = repo.sentence(gold) else {
                return Err(Error::GoldEvidence { ids: vec![claim.id.clone()] });
            };
            let tokens = tokenize_cased(text);
            if tokens.is_empty() {
                continue;
            }
            let masked = match masker {
                MaskerId::VerifierImportance => {
                    let v = verifier.ok_or_else(|| {
                        Error::Config("verifier masking needs the adversary verifier".into())
                    })?;
                    mask_by_verifier(&claim.text, &tokens, v, Label::Sup, k_mask)
                }
                MaskerId::RetrievalImportance => {
                    mask_by_retrieval(&claim.text, &tokens, ra_index, k_mask)?
                }
            };
            let record = DistantSupervisionRecord {
                claim_text: claim.text.clone(),
                masked_evidence: masked.rendered(),
                target_evidence: tokens.join(" "),
            };
            writeln!(out, "{}", serde_json::to_string(&record)?)?;
            written += 1;
        }
    }
    Ok(written)
}
