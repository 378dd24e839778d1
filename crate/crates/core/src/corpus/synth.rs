//! Deterministic synthetic corpus generator.
//!
//! Produces a closed-vocabulary world of entities and relation templates
//! ("<E> was born in <P>") so that gold evidence is lexically discoverable by
//! a term-overlap retriever and the three labels are linearly separable for
//! the pair verifier:
//!
//! - SUP claims restate a fact sentence present in the entity's document.
//! - REF claims assert a value the document explicitly negates ("<E> was not
//!   born in <P>"), so refutation is carried by negation markers.
//! - NEI claims use a relation the entity's document never mentions.
//!
//! Each (entity, relation) slot backs at most one claim, and documents carry
//! filler sentences (plus cross-entity mentions) as retrieval distractors.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Claim, ClaimOrigin, ClaimSet, Document, Label, Repository, SentenceRef};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub sup_claims: usize,
    pub ref_claims: usize,
    pub nei_claims: usize,
    /// Size of the filler-noun vocabulary.
    pub vocabulary_size: usize,
    /// Cross-entity mentions woven into each document's filler sentences.
    pub entities_per_document: usize,
    pub filler_sentences_per_document: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sup_claims: 40,
            ref_claims: 30,
            nei_claims: 30,
            vocabulary_size: 60,
            entities_per_document: 2,
            filler_sentences_per_document: 3,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.sup_claims < 1 || self.ref_claims < 1 || self.nei_claims < 1 {
            return Err(Error::Config("claim counts per label must be at least 1".into()));
        }
        if self.vocabulary_size < 8 {
            return Err(Error::Config("vocabulary size must be at least 8".into()));
        }
        if self.entities_per_document < 1 || self.filler_sentences_per_document < 1 {
            return Err(Error::Config("documents need at least one filler and one cross mention".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Relation {
    Born,
    Settled,
    Worked,
    Founded,
    Played,
}

const RELATIONS: [Relation; 5] =
    [Relation::Born, Relation::Settled, Relation::Worked, Relation::Founded, Relation::Played];

const PROFESSIONS: &[&str] = &["miller", "weaver", "smith", "scribe", "potter", "mason", "baker", "tanner"];
const INSTRUMENTS: &[&str] = &["fiddle", "flute", "drum", "lute", "horn", "pipe"];
const BASE_NOUNS: &[&str] = &[
    "garden", "mill", "harvest", "river", "market", "bridge", "orchard", "lantern", "meadow",
    "cellar", "archive", "letter", "winter", "festival",
];

const SYLLABLES: &[&str] = &[
    "bar", "den", "fel", "gor", "hul", "jor", "kel", "lam", "mir", "nor", "pel", "rud", "sar",
    "tor", "vel", "wim", "yor", "zan", "bel", "dor", "gal", "hen", "kir", "lun", "mos", "nel",
];

struct World {
    entities: Vec<String>,
    places: Vec<String>,
    orgs: Vec<String>,
    nouns: Vec<String>,
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

fn pseudo_word(rng: &mut ChaCha8Rng, used: &mut std::collections::BTreeSet<String>) -> String {
    loop {
        let a = SYLLABLES[rng.gen_range(0..SYLLABLES.len())];
        let b = SYLLABLES[rng.gen_range(0..SYLLABLES.len())];
        let word = format!("{a}{b}");
        if used.insert(word.clone()) {
            return word;
        }
    }
}

fn build_world(cfg: &SynthConfig, n_entities: usize, rng: &mut ChaCha8Rng) -> World {
    let mut used: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
    for w in PROFESSIONS.iter().chain(INSTRUMENTS).chain(BASE_NOUNS) {
        used.insert((*w).to_string());
    }
    let entities: Vec<String> = (0..n_entities).map(|_| capitalize(&pseudo_word(rng, &mut used))).collect();
    let places: Vec<String> = (0..14).map(|_| capitalize(&pseudo_word(rng, &mut used))).collect();
    let orgs: Vec<String> = (0..10).map(|_| capitalize(&pseudo_word(rng, &mut used))).collect();
    let mut nouns: Vec<String> = BASE_NOUNS.iter().map(|s| s.to_string()).collect();
    while nouns.len() < cfg.vocabulary_size {
        nouns.push(pseudo_word(rng, &mut used));
    }
    World { entities, places, orgs, nouns }
}

impl Relation {
    fn sample_value(self, world: &World, rng: &mut ChaCha8Rng) -> String {
        match self {
            Relation::Born | Relation::Settled => world.places[rng.gen_range(0..world.places.len())].clone(),
            Relation::Worked => PROFESSIONS[rng.gen_range(0..PROFESSIONS.len())].to_string(),
            Relation::Founded => world.orgs[rng.gen_range(0..world.orgs.len())].clone(),
            Relation::Played => INSTRUMENTS[rng.gen_range(0..INSTRUMENTS.len())].to_string(),
        }
    }

    /// A different value from the same pool, for mutually exclusive counterclaims.
    fn other_value(self, world: &World, current: &str, rng: &mut ChaCha8Rng) -> String {
        loop {
            let v = self.sample_value(world, rng);
            if v != current {
                return v;
            }
        }
    }

    fn claim_text(self, entity: &str, value: &str) -> String {
        match self {
            Relation::Born => format!("{entity} was born in {value}."),
            Relation::Settled => format!("{entity} settled in {value}."),
            Relation::Worked => format!("{entity} worked as a {value}."),
            Relation::Founded => format!("{entity} founded the {value} guild."),
            Relation::Played => format!("{entity} played the {value}."),
        }
    }

    fn sup_text(self, entity: &str, value: &str, rng: &mut ChaCha8Rng) -> String {
        match self {
            Relation::Born => {
                let year = 1850 + rng.gen_range(0..100);
                format!("{entity} was born in {value} in {year}.")
            }
            Relation::Settled => format!("{entity} settled in {value} after the war."),
            Relation::Worked => format!("{entity} worked as a {value} for many years."),
            Relation::Founded => {
                let year = 1850 + rng.gen_range(0..100);
                format!("{entity} founded the {value} guild in {year}.")
            }
            Relation::Played => format!("{entity} played the {value} at the village fair."),
        }
    }

    fn ref_text(self, entity: &str, value: &str, rng: &mut ChaCha8Rng) -> String {
        let never = rng.gen_bool(0.5);
        match self {
            Relation::Born => {
                if never {
                    format!("{entity} was never born in {value}.")
                } else {
                    format!("{entity} was not born in {value}.")
                }
            }
            Relation::Settled => format!("{entity} never settled in {value}."),
            Relation::Worked => {
                if never {
                    format!("{entity} never worked as a {value}.")
                } else {
                    format!("{entity} did not work as a {value}.")
                }
            }
            Relation::Founded => format!("{entity} did not found the {value} guild."),
            Relation::Played => format!("{entity} never played the {value}."),
        }
    }
}

struct PendingClaim {
    label: Label,
    entity_idx: usize,
    relation: Relation,
    value: String,
    /// Evidence sentence text for SUP/REF; NEI adds nothing to the document.
    evidence: Option<String>,
}

pub(crate) struct Synthesis {
    pub claims: ClaimSet,
    pub repo: Repository,
    pub counterclaims: Vec<(String, String)>,
}

pub(crate) fn synthesize(cfg: &SynthConfig, seed: u64) -> Result<Synthesis> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let total = cfg.sup_claims + cfg.ref_claims + cfg.nei_claims;
    // Three claims per entity leaves two relations untouched per document.
    let n_entities = total.div_ceil(3).max(4);
    let world = build_world(cfg, n_entities, &mut rng);

    let mut labels: Vec<Label> = Vec::with_capacity(total);
    labels.extend(std::iter::repeat(Label::Sup).take(cfg.sup_claims));
    labels.extend(std::iter::repeat(Label::Ref).take(cfg.ref_claims));
    labels.extend(std::iter::repeat(Label::Nei).take(cfg.nei_claims));
    labels.shuffle(&mut rng);

    let mut pending: Vec<PendingClaim> = Vec::with_capacity(total);
    let mut label_queue = labels.into_iter();
    'outer: for entity_idx in 0..n_entities {
        let mut relations = RELATIONS.to_vec();
        relations.shuffle(&mut rng);
        for relation in relations.into_iter().take(3) {
            let Some(label) = label_queue.next() else { break 'outer };
            let entity = &world.entities[entity_idx];
            let value = relation.sample_value(&world, &mut rng);
            let evidence = match label {
                Label::Sup => Some(relation.sup_text(entity, &value, &mut rng)),
                Label::Ref => Some(relation.ref_text(entity, &value, &mut rng)),
                Label::Nei => None,
            };
            pending.push(PendingClaim { label, entity_idx, relation, value, evidence });
        }
    }

    // Assemble documents: evidence sentences plus fillers, shuffled per doc.
    let mut doc_sentences: Vec<Vec<String>> = vec![Vec::new(); n_entities];
    for p in &pending {
        if let Some(text) = &p.evidence {
            doc_sentences[p.entity_idx].push(text.clone());
        }
    }
    for (idx, sentences) in doc_sentences.iter_mut().enumerate() {
        let entity = &world.entities[idx];
        let mut cross: Vec<&String> = Vec::new();
        for _ in 0..cfg.entities_per_document {
            let other = rng.gen_range(0..n_entities);
            if other != idx {
                cross.push(&world.entities[other]);
            }
        }
        for f in 0..cfg.filler_sentences_per_document {
            let noun = &world.nouns[rng.gen_range(0..world.nouns.len())];
            let noun2 = &world.nouns[rng.gen_range(0..world.nouns.len())];
            let sentence = match f % 3 {
                0 => format!("{entity} kept a small {noun} near the old {noun2}."),
                1 => match cross.first() {
                    Some(other) => format!("{entity} often visited {other} during the {noun}."),
                    None => format!("{entity} often walked to the {noun} before dawn."),
                },
                _ => format!("{entity} wrote letters about the {noun} for years."),
            };
            sentences.push(sentence);
        }
        sentences.shuffle(&mut rng);
    }

    let documents: Vec<Document> = world
        .entities
        .iter()
        .enumerate()
        .map(|(idx, entity)| Document {
            doc_id: entity.to_lowercase(),
            title: entity.clone(),
            sentences: doc_sentences[idx].clone(),
        })
        .collect();
    let repo = Repository::new(documents)?;

    let mut claims = Vec::with_capacity(total);
    let mut counterclaims = Vec::new();
    for (i, p) in pending.iter().enumerate() {
        let entity = &world.entities[p.entity_idx];
        let id = format!("c{:04}", i + 1);
        let text = p.relation.claim_text(entity, &p.value);
        let gold_evidence = match &p.evidence {
            Some(evidence_text) => {
                let doc_id = entity.to_lowercase();
                let doc = repo.document(&doc_id).expect("document exists");
                let sentence_index = doc
                    .sentences
                    .iter()
                    .position(|s| s == evidence_text)
                    .expect("evidence sentence present");
                vec![SentenceRef::new(doc_id, sentence_index)]
            }
            None => Vec::new(),
        };
        if p.label == Label::Sup {
            let other = p.relation.other_value(&world, &p.value, &mut rng);
            counterclaims.push((id.clone(), p.relation.claim_text(entity, &other)));
        }
        claims.push(Claim { id, text, label: p.label, gold_evidence, origin: ClaimOrigin::Original });
    }

    Ok(Synthesis { claims: ClaimSet::new(claims)?, repo, counterclaims })
}

/// Generate a claim set and matching repository, deterministic under `seed`.
pub fn generate_synthetic_corpus(cfg: &SynthConfig, seed: u64) -> Result<(ClaimSet, Repository)> {
    let s = synthesize(cfg, seed)?;
    Ok((s.claims, s.repo))
}

/// Mutually exclusive counterclaim texts for the SUP claims of the corpus
/// generated by the same `(config, seed)` pair.
pub fn counterclaims_for(cfg: &SynthConfig, seed: u64) -> Result<Vec<(String, String)>> {
    Ok(synthesize(cfg, seed)?.counterclaims)
}
