//! Codepoint-level perturbations that leave rendered text visually unchanged
//! while breaking tokenization: homoglyph substitution, zero-width
//! insertions, filler-plus-backspace pairs, and directionality wraps with
//! matching pops.
//!
//! Every technique is reversible by construction: stripping the control sets
//! (and filler+backspace pairs) recovers the original string byte-exactly,
//! and mapping confusables through the bundled skeleton does the same for
//! homoglyphs.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizers::{
    differential_evolution, GenomeSpace, PerturbationGene, PerturbationGenome, SearchBudget,
};

pub const INVISIBLE_CHARS: [char; 3] = ['\u{200B}', '\u{200C}', '\u{200D}'];
pub const BACKSPACE: char = '\u{0008}';
pub const DELETE_FILLERS: [char; 6] = ['x', 'q', 'j', 'z', 'v', 'k'];
pub const REORDER_OPENERS: [char; 2] = ['\u{202D}', '\u{202E}'];
pub const REORDER_POP: char = '\u{202C}';

/// Default and extended perturbation budgets.
pub const DEFAULT_EPSILON: usize = 5;
pub const EXTENDED_EPSILON: usize = 12;

/// Curated Latin-to-confusable mappings (Cyrillic, Greek, Cherokee,
/// Armenian). Extend via [`HomoglyphTable::with_extra`]: each extension pair
/// is (canonical char, confusable char), and a confusable may belong to only
/// one canonical entry.
const CONFUSABLE_PAIRS: &[(char, &str)] = &[
    ('a', "\u{0430}\u{0251}"), // а ɑ
    ('b', "\u{13CF}"),         // Ꮟ
    ('c', "\u{0441}\u{03F2}"), // с ϲ
    ('d', "\u{0501}"),         // ԁ
    ('e', "\u{0435}"),         // е
    ('g', "\u{0261}"),         // ɡ
    ('h', "\u{04BB}"),         // һ
    ('i', "\u{0456}"),         // і
    ('j', "\u{0458}"),         // ј
    ('k', "\u{03BA}"),         // κ
    ('l', "\u{04CF}"),         // ӏ
    ('n', "\u{0578}"),         // ո
    ('o', "\u{043E}\u{03BF}"), // о ο
    ('p', "\u{0440}"),         // р
    ('q', "\u{051B}"),         // ԛ
    ('s', "\u{0455}"),         // ѕ
    ('u', "\u{057D}"),         // ս
    ('v', "\u{0475}"),         // ѵ
    ('w', "\u{051D}"),         // ԝ
    ('x', "\u{0445}"),         // х
    ('y', "\u{0443}"),         // у
    ('z', "\u{1D22}"),         // ᴢ
    ('A', "\u{0410}\u{0391}"), // А Α
    ('B', "\u{0412}\u{0392}"), // В Β
    ('C', "\u{0421}\u{03F9}"), // С Ϲ
    ('D', "\u{13A0}"),         // Ꭰ
    ('E', "\u{0415}\u{0395}"), // Е Ε
    ('G', "\u{050C}"),         // Ԍ
    ('H', "\u{041D}\u{0397}"), // Н Η
    ('I', "\u{0406}\u{0399}"), // І Ι
    ('J', "\u{0408}"),         // Ј
    ('K', "\u{041A}\u{039A}"), // К Κ
    ('L', "\u{13DE}"),         // Ꮮ
    ('M', "\u{041C}\u{039C}"), // М Μ
    ('N', "\u{039D}"),         // Ν
    ('O', "\u{041E}\u{039F}"), // О Ο
    ('P', "\u{0420}\u{03A1}"), // Р Ρ
    ('Q', "\u{051A}"),         // Ԛ
    ('R', "\u{13A1}"),         // Ꭱ
    ('S', "\u{0405}"),         // Ѕ
    ('T', "\u{0422}\u{03A4}"), // Т Τ
    ('V', "\u{0474}"),         // Ѵ
    ('W', "\u{051C}"),         // Ԝ
    ('X', "\u{0425}\u{03A7}"), // Х Χ
    ('Y', "\u{03A5}\u{0423}"), // Υ У
    ('Z', "\u{0396}\u{13C3}"), // Ζ Ꮓ
];

/// Visually confusable codepoints plus the skeleton map back to canonical
/// forms.
#[derive(Debug, Clone)]
pub struct HomoglyphTable {
    forward: BTreeMap<char, Vec<char>>,
    reverse: BTreeMap<char, char>,
}

impl HomoglyphTable {
    fn from_pairs(pairs: &[(char, &str)], extra: &[(char, char)]) -> Result<Self> {
        let mut forward: BTreeMap<char, Vec<char>> = BTreeMap::new();
        let mut reverse: BTreeMap<char, char> = BTreeMap::new();
        let mut add = |canonical: char, confusable: char| -> Result<()> {
            if let Some(&existing) = reverse.get(&confusable) {
                if existing != canonical {
                    return Err(Error::Validation(format!(
                        "confusable {confusable:?} already maps to {existing:?}"
                    )));
                }
                return Ok(());
            }
            reverse.insert(confusable, canonical);
            forward.entry(canonical).or_default().push(confusable);
            Ok(())
        };
        for (canonical, confusables) in pairs {
            for confusable in confusables.chars() {
                add(*canonical, confusable)?;
            }
        }
        for (canonical, confusable) in extra {
            add(*canonical, *confusable)?;
        }
        Ok(HomoglyphTable { forward, reverse })
    }

    /// The bundled table; frozen so perturbations are bit-exact across runs.
    pub fn bundled() -> &'static HomoglyphTable {
        static TABLE: OnceLock<HomoglyphTable> = OnceLock::new();
        TABLE.get_or_init(|| HomoglyphTable::from_pairs(CONFUSABLE_PAIRS, &[]).expect("bundled table valid"))
    }

    /// Bundled table plus caller-supplied (canonical, confusable) pairs.
    pub fn with_extra(extra: &[(char, char)]) -> Result<HomoglyphTable> {
        HomoglyphTable::from_pairs(CONFUSABLE_PAIRS, extra)
    }

    pub fn confusables(&self, c: char) -> &[char] {
        self.forward.get(&c).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Canonical form of a single codepoint.
    pub fn skeleton_char(&self, c: char) -> char {
        self.reverse.get(&c).copied().unwrap_or(c)
    }

    /// Map all confusables back to canonical forms.
    pub fn skeleton(&self, text: &str) -> String {
        text.chars().map(|c| self.skeleton_char(c)).collect()
    }
}

/// Remove control codepoints: zero-width characters, directionality controls
/// and pops, and filler+backspace pairs (a backspace consumes the preceding
/// character).
pub fn strip_controls(text: &str) -> String {
    let mut out: Vec<char> = Vec::with_capacity(text.len());
    for c in text.chars() {
        if c == BACKSPACE {
            out.pop();
        } else if INVISIBLE_CHARS.contains(&c) || REORDER_OPENERS.contains(&c) || c == REORDER_POP {
            // dropped
        } else {
            out.push(c);
        }
    }
    out.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Technique {
    Homoglyph,
    Reorder,
    Delete,
    Invisible,
}

impl Technique {
    pub fn name(self) -> &'static str {
        match self {
            Technique::Homoglyph => "homoglyph",
            Technique::Reorder => "reorder",
            Technique::Delete => "delete",
            Technique::Invisible => "invisible",
        }
    }
}

/// What the perturbation minimizes: the verifier's correct-label probability
/// or the adversary retriever's relevance score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttackObjective {
    VerifierLoss,
    RetrievalScore,
}

impl AttackObjective {
    pub fn name(self) -> &'static str {
        match self {
            AttackObjective::VerifierLoss => "verifier",
            AttackObjective::RetrievalScore => "retrieval",
        }
    }
}

/// Edit sites for one technique over one sentence. Substitution sites index
/// single characters; insertion sites index gaps strictly inside tokens.
#[derive(Debug, Clone)]
pub struct EligibleSites {
    /// Char index of each site, ascending.
    positions: Vec<usize>,
    /// Choices available at each site.
    counts: Vec<usize>,
}

impl EligibleSites {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn choice_counts(&self) -> Vec<usize> {
        self.counts.clone()
    }
}

pub fn eligible_sites(text: &str, technique: Technique, table: &HomoglyphTable) -> EligibleSites {
    let chars: Vec<char> = text.chars().collect();
    let mut positions = Vec::new();
    let mut counts = Vec::new();
    match technique {
        Technique::Homoglyph => {
            for (i, &c) in chars.iter().enumerate() {
                let n = table.confusables(c).len();
                if n > 0 {
                    positions.push(i);
                    counts.push(n);
                }
            }
        }
        Technique::Invisible | Technique::Delete => {
            // Gap i sits between chars[i-1] and chars[i]; interior of a token
            // when both sides are alphanumeric.
            for i in 1..chars.len() {
                if chars[i - 1].is_alphanumeric() && chars[i].is_alphanumeric() {
                    positions.push(i);
                    counts.push(if technique == Technique::Invisible {
                        INVISIBLE_CHARS.len()
                    } else {
                        DELETE_FILLERS.len()
                    });
                }
            }
        }
        Technique::Reorder => {
            // Wrapping splits a token only when the char has an alphanumeric
            // neighbor on either side.
            for (i, &c) in chars.iter().enumerate() {
                if !c.is_alphanumeric() {
                    continue;
                }
                let left = i > 0 && chars[i - 1].is_alphanumeric();
                let right = i + 1 < chars.len() && chars[i + 1].is_alphanumeric();
                if left || right {
                    positions.push(i);
                    counts.push(REORDER_OPENERS.len());
                }
            }
        }
    }
    EligibleSites { positions, counts }
}

/// Apply a genome to the sentence. Duplicate site indices keep the first
/// gene; edits are applied back to front so positions stay valid.
pub fn decode_perturbation(
    text: &str,
    technique: Technique,
    table: &HomoglyphTable,
    sites: &EligibleSites,
    genome: &PerturbationGenome,
) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    let mut seen: std::collections::BTreeSet<usize> = Default::default();
    let mut edits: Vec<PerturbationGene> = Vec::new();
    for gene in genome {
        if gene.position < sites.positions.len() && seen.insert(gene.position) {
            edits.push(*gene);
        }
    }
    edits.sort_by(|a, b| b.position.cmp(&a.position));
    for gene in edits {
        let char_idx = sites.positions[gene.position];
        let choice = gene.choice % sites.counts[gene.position];
        match technique {
            Technique::Homoglyph => {
                chars[char_idx] = table.confusables(chars[char_idx])[choice];
            }
            Technique::Invisible => {
                chars.insert(char_idx, INVISIBLE_CHARS[choice]);
            }
            Technique::Delete => {
                chars.insert(char_idx, BACKSPACE);
                chars.insert(char_idx, DELETE_FILLERS[choice]);
            }
            Technique::Reorder => {
                chars.insert(char_idx + 1, REORDER_POP);
                chars.insert(char_idx, REORDER_OPENERS[choice]);
            }
        }
    }
    chars.into_iter().collect()
}

/// Differential-evolution search for the perturbation minimizing `objective`
/// over texts, bounded by `epsilon` edits. Errors when the sentence has fewer
/// than `epsilon` eligible sites.
pub fn search_perturbation<F>(
    text: &str,
    technique: Technique,
    table: &HomoglyphTable,
    epsilon: usize,
    budget: &SearchBudget,
    mut objective: F,
) -> Result<(String, f64, usize)>
where
    F: FnMut(&str) -> f64,
{
    if epsilon == 0 {
        return Err(Error::Config("epsilon must be at least 1".into()));
    }
    let sites = eligible_sites(text, technique, table);
    if sites.len() < epsilon {
        return Err(Error::AttackInapplicable(format!(
            "{} eligible positions for epsilon {epsilon} ({})",
            sites.len(),
            technique.name()
        )));
    }
    let space = GenomeSpace::new(epsilon, sites.choice_counts())?;
    let outcome = differential_evolution(
        &space,
        |genome| objective(&decode_perturbation(text, technique, table, &sites, genome)),
        budget,
    );
    let attacked = decode_perturbation(text, technique, table, &sites, &outcome.best);
    let distinct: std::collections::BTreeSet<usize> =
        outcome.best.iter().map(|g| g.position).collect();
    Ok((attacked, outcome.best_value, distinct.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_skeleton_is_consistent() {
        let table = HomoglyphTable::bundled();
        let mut pair_count = 0;
        for (canonical, confusables) in CONFUSABLE_PAIRS {
            assert_eq!(table.skeleton_char(*canonical), *canonical);
            for confusable in confusables.chars() {
                assert_eq!(table.skeleton_char(confusable), *canonical);
                assert_ne!(confusable, *canonical);
                pair_count += 1;
            }
        }
        assert!(pair_count >= 60, "only {pair_count} confusable pairs bundled");
    }

    #[test]
    fn control_sets_are_disjoint_from_printable_ascii() {
        for c in INVISIBLE_CHARS.iter().chain(REORDER_OPENERS.iter()).chain([&REORDER_POP, &BACKSPACE]) {
            assert!(!(' '..='~').contains(c), "{c:?} is printable ASCII");
        }
    }

    #[test]
    fn with_extra_rejects_conflicting_confusable() {
        // Cyrillic а already belongs to 'a'.
        assert!(HomoglyphTable::with_extra(&[('e', '\u{0430}')]).is_err());
        let extended = HomoglyphTable::with_extra(&[('m', '\u{217F}')]).unwrap();
        assert_eq!(extended.skeleton_char('\u{217F}'), 'm');
    }

    #[test]
    fn every_technique_is_reversible() {
        use rand::{Rng, SeedableRng};
        let table = HomoglyphTable::bundled();
        let sentences = [
            "Aldor was born in Tarsa in 1921.",
            "The old mill stands by the river.",
            "Pelsar never played the flute.",
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for technique in [Technique::Homoglyph, Technique::Reorder, Technique::Delete, Technique::Invisible] {
            for text in sentences {
                let sites = eligible_sites(text, technique, table);
                assert!(!sites.is_empty());
                for _ in 0..20 {
                    let genome: PerturbationGenome = (0..rng.gen_range(1..=5))
                        .map(|_| PerturbationGene {
                            position: rng.gen_range(0..sites.len()),
                            choice: rng.gen_range(0..8),
                        })
                        .collect();
                    let attacked = decode_perturbation(text, technique, table, &sites, &genome);
                    match technique {
                        Technique::Homoglyph => {
                            assert_eq!(table.skeleton(&attacked), table.skeleton(text));
                        }
                        _ => {
                            assert_eq!(strip_controls(&attacked), text, "{technique:?} not reversible");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn decode_respects_budget() {
        let table = HomoglyphTable::bundled();
        let text = "mars is red";
        let sites = eligible_sites(text, Technique::Homoglyph, table);
        let genome = vec![
            PerturbationGene { position: 0, choice: 0 },
            PerturbationGene { position: 0, choice: 1 }, // duplicate site: first wins
            PerturbationGene { position: 2, choice: 0 },
        ];
        let attacked = decode_perturbation(text, Technique::Homoglyph, table, &sites, &genome);
        let changed = attacked.chars().zip(text.chars()).filter(|(a, b)| a != b).count();
        assert_eq!(changed, 2);
    }

    #[test]
    fn epsilon_defaults_match_documented_budgets() {
        assert_eq!(DEFAULT_EPSILON, 5);
        assert_eq!(EXTENDED_EPSILON, 12);
    }

    #[test]
    fn too_few_eligible_positions_is_inapplicable() {
        let table = HomoglyphTable::bundled();
        let err = search_perturbation("!!!", Technique::Homoglyph, table, 1, &budget(1), |_| 0.0);
        assert!(matches!(err, Err(crate::error::Error::AttackInapplicable(_))));
    }

    fn budget(seed: u64) -> SearchBudget {
        SearchBudget::new(16, 3, seed, 10_000)
    }

    #[test]
    fn epsilon_one_homoglyph_matches_exhaustive_minimum() {
        use crate::corpus::{Document, Repository};
        use crate::retrieval::{build_index, score, RetrieverKind};
        let repo = Repository::new(vec![Document {
            doc_id: "d".into(),
            title: "d".into(),
            sentences: vec!["Mars is red".into(), "Venus is bright".into()],
        }])
        .unwrap();
        let index = build_index(&repo, RetrieverKind::TfIdfCosine);
        let table = HomoglyphTable::bundled();
        let claim = "mars is red";
        let text = "Mars is red";
        let sites = eligible_sites(text, Technique::Homoglyph, table);
        // Exhaustive minimum over all (site, confusable) pairs.
        let mut exhaustive = f64::INFINITY;
        for pos in 0..sites.len() {
            for choice in 0..8 {
                let genome = vec![PerturbationGene { position: pos, choice }];
                let attacked = decode_perturbation(text, Technique::Homoglyph, table, &sites, &genome);
                exhaustive = exhaustive.min(score(&index, claim, &attacked));
            }
        }
        let (attacked, best, used) = search_perturbation(
            text,
            Technique::Homoglyph,
            table,
            1,
            &SearchBudget::new(32, 20, 7, 100_000),
            |t| score(&index, claim, t),
        )
        .unwrap();
        assert!(used <= 1);
        assert!((best - exhaustive).abs() < 1e-12, "DE {best} vs exhaustive {exhaustive}");
        assert!(score(&index, claim, &attacked) <= score(&index, claim, text));
    }
}
