//! Claims and the versioned evidence repository.
//!
//! Repository snapshots are immutable values: applying a modification batch
//! produces a new snapshot with `version + 1` and leaves the input untouched,
//! so clean and attacked corpora can be compared side by side. Attack marks
//! are evaluation bookkeeping only; retrieval and verification never see them.

mod synth;

pub use synth::{counterclaims_for, generate_synthetic_corpus, SynthConfig};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Verdict label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "SUP")]
    Sup,
    #[serde(rename = "REF")]
    Ref,
    #[serde(rename = "NEI")]
    Nei,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Sup => "SUP",
            Label::Ref => "REF",
            Label::Nei => "NEI",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "SUP" => Ok(Label::Sup),
            "REF" => Ok(Label::Ref),
            "NEI" => Ok(Label::Nei),
            other => Err(Error::Validation(format!("unknown label {other:?}"))),
        }
    }
}

/// Where a claim came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClaimOrigin {
    Original,
    ParaphraseOf(String),
    CounterclaimOf(String),
}

impl ClaimOrigin {
    fn encode(&self) -> String {
        match self {
            ClaimOrigin::Original => "original".to_string(),
            ClaimOrigin::ParaphraseOf(id) => format!("paraphrase-of:{id}"),
            ClaimOrigin::CounterclaimOf(id) => format!("counterclaim-of:{id}"),
        }
    }

    fn decode(s: &str) -> Result<Self> {
        if s == "original" {
            return Ok(ClaimOrigin::Original);
        }
        if let Some(id) = s.strip_prefix("paraphrase-of:") {
            return Ok(ClaimOrigin::ParaphraseOf(id.to_string()));
        }
        if let Some(id) = s.strip_prefix("counterclaim-of:") {
            return Ok(ClaimOrigin::CounterclaimOf(id.to_string()));
        }
        Err(Error::Validation(format!("unknown origin {s:?}")))
    }
}

/// Reference to one sentence in one document.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SentenceRef {
    pub doc_id: String,
    pub sentence_index: usize,
}

impl SentenceRef {
    pub fn new(doc_id: impl Into<String>, sentence_index: usize) -> Self {
        SentenceRef { doc_id: doc_id.into(), sentence_index }
    }
}

impl fmt::Display for SentenceRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.doc_id, self.sentence_index)
    }
}

impl FromStr for SentenceRef {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (doc, idx) = s
            .rsplit_once('#')
            .ok_or_else(|| Error::Validation(format!("sentence ref {s:?} is missing '#'")))?;
        let sentence_index = idx
            .parse::<usize>()
            .map_err(|_| Error::Validation(format!("sentence ref {s:?} has a non-numeric index")))?;
        Ok(SentenceRef::new(doc, sentence_index))
    }
}

/// A claim with its gold label and evidence annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub id: String,
    pub text: String,
    pub label: Label,
    pub gold_evidence: Vec<SentenceRef>,
    pub origin: ClaimOrigin,
}

/// An ordered, id-unique collection of claims.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClaimSet {
    pub claims: Vec<Claim>,
}

impl ClaimSet {
    pub fn new(claims: Vec<Claim>) -> Result<Self> {
        let set = ClaimSet { claims };
        set.validate()?;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.claims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.claims.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Claim> {
        self.claims.iter().find(|c| c.id == id)
    }

    pub fn label_counts(&self) -> BTreeMap<Label, usize> {
        let mut counts = BTreeMap::new();
        for c in &self.claims {
            *counts.entry(c.label).or_insert(0) += 1;
        }
        counts
    }

    fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for c in &self.claims {
            if !seen.insert(c.id.as_str()) {
                return Err(Error::Validation(format!("duplicate claim id {:?}", c.id)));
            }
            if c.label == Label::Nei && !c.gold_evidence.is_empty() {
                return Err(Error::Validation(format!("NEI claim {:?} has gold evidence", c.id)));
            }
        }
        for c in &self.claims {
            let parent = match &c.origin {
                ClaimOrigin::Original => None,
                ClaimOrigin::ParaphraseOf(id) | ClaimOrigin::CounterclaimOf(id) => Some(id),
            };
            if let Some(id) = parent {
                if !seen.contains(id.as_str()) {
                    return Err(Error::Validation(format!(
                        "claim {:?} originates from unknown claim id {id:?}",
                        c.id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One titled document: an ordered list of sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub sentences: Vec<String>,
}

/// A repository modification. `Replace` overwrites an existing sentence;
/// `Add` appends to an existing document or starts a new one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Modification {
    Replace { target: SentenceRef, new_text: String },
    Add { doc_id: String, new_text: String },
}

/// Which repository control the attacker has.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModificationKind {
    Add,
    Replace,
}

impl fmt::Display for ModificationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModificationKind::Add => f.write_str("add"),
            ModificationKind::Replace => f.write_str("replace"),
        }
    }
}

/// Immutable snapshot of the evidence corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repository {
    pub version: u64,
    pub documents: Vec<Document>,
    /// Sentences inserted or edited by an attacker. Ground truth for attack
    /// recall; never exposed to the retriever or verifier.
    pub attack_marks: BTreeSet<SentenceRef>,
}

impl Repository {
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        let repo = Repository { version: 0, documents, attack_marks: BTreeSet::new() };
        repo.validate()?;
        Ok(repo)
    }

    pub fn empty() -> Self {
        Repository { version: 0, documents: Vec::new(), attack_marks: BTreeSet::new() }
    }

    fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for d in &self.documents {
            if d.doc_id.contains('#') {
                return Err(Error::Validation(format!("doc id {:?} contains '#'", d.doc_id)));
            }
            if !ids.insert(d.doc_id.as_str()) {
                return Err(Error::Validation(format!("duplicate doc id {:?}", d.doc_id)));
            }
            for s in &d.sentences {
                if s.contains('\n') {
                    return Err(Error::Validation(format!(
                        "sentence in doc {:?} contains a line separator",
                        d.doc_id
                    )));
                }
            }
        }
        for mark in &self.attack_marks {
            if self.sentence(mark).is_none() {
                return Err(Error::Validation(format!("attack mark {mark} does not resolve")));
            }
        }
        Ok(())
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.doc_id == doc_id)
    }

    pub fn sentence(&self, sref: &SentenceRef) -> Option<&str> {
        self.document(&sref.doc_id)
            .and_then(|d| d.sentences.get(sref.sentence_index))
            .map(String::as_str)
    }

    pub fn sentence_count(&self) -> usize {
        self.documents.iter().map(|d| d.sentences.len()).sum()
    }

    /// All sentence refs in (doc order, sentence order).
    pub fn all_refs(&self) -> Vec<SentenceRef> {
        let mut refs = Vec::with_capacity(self.sentence_count());
        for d in &self.documents {
            for i in 0..d.sentences.len() {
                refs.push(SentenceRef::new(d.doc_id.clone(), i));
            }
        }
        refs
    }

    /// Apply a modification batch, producing a new snapshot with `version + 1`.
    /// The receiver is unchanged. With `mark_as_attack`, every touched or added
    /// sentence enters `attack_marks`.
    pub fn apply_modifications(&self, mods: &[Modification], mark_as_attack: bool) -> Result<Repository> {
        let mut next = self.clone();
        next.version = self.version + 1;
        for m in mods {
            match m {
                Modification::Replace { target, new_text } => {
                    if new_text.contains('\n') {
                        return Err(Error::Validation("replacement text contains a line separator".into()));
                    }
                    let doc = next
                        .documents
                        .iter_mut()
                        .find(|d| d.doc_id == target.doc_id)
                        .ok_or_else(|| Error::Validation(format!("replace target {target} does not resolve")))?;
                    let slot = doc
                        .sentences
                        .get_mut(target.sentence_index)
                        .ok_or_else(|| Error::Validation(format!("replace target {target} does not resolve")))?;
                    *slot = new_text.clone();
                    if mark_as_attack {
                        next.attack_marks.insert(target.clone());
                    }
                }
                Modification::Add { doc_id, new_text } => {
                    if doc_id.contains('#') {
                        return Err(Error::Validation(format!("doc id {doc_id:?} contains '#'")));
                    }
                    if new_text.contains('\n') {
                        return Err(Error::Validation("added text contains a line separator".into()));
                    }
                    let idx = match next.documents.iter_mut().find(|d| d.doc_id == *doc_id) {
                        Some(doc) => {
                            doc.sentences.push(new_text.clone());
                            doc.sentences.len() - 1
                        }
                        None => {
                            next.documents.push(Document {
                                doc_id: doc_id.clone(),
                                title: doc_id.clone(),
                                sentences: vec![new_text.clone()],
                            });
                            0
                        }
                    };
                    if mark_as_attack {
                        next.attack_marks.insert(SentenceRef::new(doc_id.clone(), idx));
                    }
                }
            }
        }
        Ok(next)
    }
}

// ---------------------------------------------------------------------------
// Line-oriented file formats (JSON object per line, UTF-8, byte-exact texts).
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ClaimRecord {
    id: String,
    text: String,
    label: String,
    gold: Vec<String>,
    origin: String,
}

/// Load a claims file: one self-describing key/value record per line.
pub fn load_claims(path: impl AsRef<Path>) -> Result<ClaimSet> {
    let file = std::fs::File::open(path)?;
    let mut claims = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ClaimRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        let label = record.label.parse::<Label>().map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        let mut gold = Vec::new();
        for g in &record.gold {
            gold.push(g.parse::<SentenceRef>().map_err(|e| Error::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })?);
        }
        let origin = ClaimOrigin::decode(&record.origin).map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        claims.push(Claim { id: record.id, text: record.text, label, gold_evidence: gold, origin });
    }
    ClaimSet::new(claims)
}

pub fn save_claims(claims: &ClaimSet, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    for c in &claims.claims {
        let record = ClaimRecord {
            id: c.id.clone(),
            text: c.text.clone(),
            label: c.label.as_str().to_string(),
            gold: c.gold_evidence.iter().map(|g| g.to_string()).collect(),
            origin: c.origin.encode(),
        };
        writeln!(out, "{}", serde_json::to_string(&record)?)?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct DocumentRecord {
    doc_id: String,
    title: String,
    sentences: Vec<String>,
}

/// Load a documents file into a version-0 repository with no attack marks.
pub fn load_repository(path: impl AsRef<Path>) -> Result<Repository> {
    let file = std::fs::File::open(path)?;
    let mut documents = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DocumentRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        documents.push(Document { doc_id: record.doc_id, title: record.title, sentences: record.sentences });
    }
    Repository::new(documents)
}

/// Save only the document store; version and marks are runtime state.
pub fn save_repository(repo: &Repository, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    for d in &repo.documents {
        let record = DocumentRecord {
            doc_id: d.doc_id.clone(),
            title: d.title.clone(),
            sentences: d.sentences.clone(),
        };
        writeln!(out, "{}", serde_json::to_string(&record)?)?;
    }
    Ok(())
}

/// Stratified subsample: `ceil(fraction * len)` claims with per-label counts
/// within one of the exact proportional share, deterministic under `seed`.
pub fn subsample_claims(claims: &ClaimSet, fraction: f64, seed: u64) -> Result<ClaimSet> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("fraction {fraction} is outside (0, 1]")));
    }
    if (fraction - 1.0).abs() < f64::EPSILON {
        return Ok(claims.clone());
    }
    let total_target = (fraction * claims.len() as f64).ceil() as usize;

    // Largest-remainder allocation of the total across labels.
    let counts = claims.label_counts();
    let labels: Vec<Label> = counts.keys().copied().collect();
    let mut allocation: BTreeMap<Label, usize> = BTreeMap::new();
    let mut remainders: Vec<(f64, Label)> = Vec::new();
    let mut allocated = 0usize;
    for &label in &labels {
        let share = fraction * counts[&label] as f64;
        let floor = share.floor() as usize;
        allocation.insert(label, floor);
        allocated += floor;
        remainders.push((share - floor as f64, label));
    }
    remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut leftover = total_target.saturating_sub(allocated);
    for (_, label) in remainders {
        if leftover == 0 {
            break;
        }
        *allocation.get_mut(&label).unwrap() += 1;
        leftover -= 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep: BTreeSet<String> = BTreeSet::new();
    for &label in &labels {
        let mut ids: Vec<&str> =
            claims.claims.iter().filter(|c| c.label == label).map(|c| c.id.as_str()).collect();
        ids.shuffle(&mut rng);
        for id in ids.into_iter().take(allocation[&label].min(counts[&label])) {
            keep.insert(id.to_string());
        }
    }
    ClaimSet::new(claims.claims.iter().filter(|c| keep.contains(&c.id)).cloned().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmpfile(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_claims_empty_file() {
        let f = tmpfile("");
        let claims = load_claims(f.path()).unwrap();
        assert!(claims.is_empty());
    }

    #[test]
    fn load_claims_counts_per_label() {
        let f = tmpfile(concat!(
            r#"{"id":"c1","text":"a","label":"SUP","gold":["d#0"],"origin":"original"}"#, "\n",
            r#"{"id":"c2","text":"b","label":"REF","gold":["d#1"],"origin":"original"}"#, "\n",
            r#"{"id":"c3","text":"c","label":"NEI","gold":[],"origin":"original"}"#, "\n",
        ));
        let claims = load_claims(f.path()).unwrap();
        assert_eq!(claims.len(), 3);
        let counts = claims.label_counts();
        assert_eq!(counts[&Label::Sup], 1);
        assert_eq!(counts[&Label::Ref], 1);
        assert_eq!(counts[&Label::Nei], 1);
    }

    #[test]
    fn load_claims_bad_label_names_line() {
        let f = tmpfile(concat!(
            r#"{"id":"c1","text":"a","label":"SUP","gold":[],"origin":"original"}"#, "\n",
            r#"{"id":"c2","text":"b","label":"MAYBE","gold":[],"origin":"original"}"#, "\n",
        ));
        let err = load_claims(f.path()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn load_claims_duplicate_id_rejected() {
        let f = tmpfile(concat!(
            r#"{"id":"c1","text":"a","label":"NEI","gold":[],"origin":"original"}"#, "\n",
            r#"{"id":"c1","text":"b","label":"NEI","gold":[],"origin":"original"}"#, "\n",
        ));
        assert!(matches!(load_claims(f.path()).unwrap_err(), Error::Validation(_)));
    }

    #[test]
    fn nei_with_gold_rejected() {
        let claim = Claim {
            id: "c1".into(),
            text: "t".into(),
            label: Label::Nei,
            gold_evidence: vec![SentenceRef::new("d", 0)],
            origin: ClaimOrigin::Original,
        };
        assert!(ClaimSet::new(vec![claim]).is_err());
    }

    #[test]
    fn origin_must_reference_existing_claim() {
        let claim = Claim {
            id: "c1".into(),
            text: "t".into(),
            label: Label::Nei,
            gold_evidence: vec![],
            origin: ClaimOrigin::ParaphraseOf("ghost".into()),
        };
        assert!(ClaimSet::new(vec![claim]).is_err());
    }

    #[test]
    fn load_repository_empty() {
        let f = tmpfile("");
        let repo = load_repository(f.path()).unwrap();
        assert_eq!(repo.version, 0);
        assert!(repo.documents.is_empty());
    }

    #[test]
    fn load_repository_refs_resolve() {
        let f = tmpfile(concat!(
            r#"{"doc_id":"d1","title":"D1","sentences":["a","b","c"]}"#, "\n",
            r#"{"doc_id":"d2","title":"D2","sentences":["x","y","z"]}"#, "\n",
        ));
        let repo = load_repository(f.path()).unwrap();
        let refs = repo.all_refs();
        assert_eq!(refs.len(), 6);
        for r in &refs {
            assert!(repo.sentence(r).is_some());
        }
    }

    #[test]
    fn load_repository_duplicate_doc_id_rejected() {
        let f = tmpfile(concat!(
            r#"{"doc_id":"d1","title":"D1","sentences":["a"]}"#, "\n",
            r#"{"doc_id":"d1","title":"D1","sentences":["b"]}"#, "\n",
        ));
        assert!(matches!(load_repository(f.path()).unwrap_err(), Error::Validation(_)));
    }

    fn toy_repo() -> Repository {
        Repository::new(vec![Document {
            doc_id: "docA".into(),
            title: "A".into(),
            sentences: vec!["original zero".into(), "original one".into()],
        }])
        .unwrap()
    }

    #[test]
    fn empty_modification_batch_bumps_version_only() {
        let repo = toy_repo();
        let next = repo.apply_modifications(&[], false).unwrap();
        assert_eq!(next.version, 1);
        assert_eq!(next.documents, repo.documents);
        assert_eq!(next.attack_marks, repo.attack_marks);
    }

    #[test]
    fn replace_is_copy_on_write() {
        let repo = toy_repo();
        let target = SentenceRef::new("docA", 0);
        let next = repo
            .apply_modifications(&[Modification::Replace { target: target.clone(), new_text: "x".into() }], false)
            .unwrap();
        assert_eq!(next.sentence(&target), Some("x"));
        assert_eq!(repo.sentence(&target), Some("original zero"));
    }

    #[test]
    fn add_two_sentences_to_new_doc_with_marks() {
        let repo = toy_repo();
        let mods = vec![
            Modification::Add { doc_id: "adv-1".into(), new_text: "first".into() },
            Modification::Add { doc_id: "adv-1".into(), new_text: "second".into() },
        ];
        let next = repo.apply_modifications(&mods, true).unwrap();
        let expected: BTreeSet<SentenceRef> =
            [SentenceRef::new("adv-1", 0), SentenceRef::new("adv-1", 1)].into_iter().collect();
        assert_eq!(next.attack_marks, expected);
        assert_eq!(next.document("adv-1").unwrap().sentences, vec!["first", "second"]);
    }

    #[test]
    fn unresolvable_replace_identifies_target() {
        let repo = toy_repo();
        let bad = SentenceRef::new("ghost", 3);
        let err = repo
            .apply_modifications(&[Modification::Replace { target: bad, new_text: "x".into() }], false)
            .unwrap_err();
        assert!(err.to_string().contains("ghost#3"), "{err}");
    }

    #[test]
    fn subsample_full_fraction_is_identity() {
        let claims = synth_claims(100, 40, 30, 30);
        let sub = subsample_claims(&claims, 1.0, 9).unwrap();
        assert_eq!(sub, claims);
    }

    #[test]
    fn subsample_stratified_counts() {
        let claims = synth_claims(100, 40, 30, 30);
        let sub = subsample_claims(&claims, 0.1, 3).unwrap();
        assert_eq!(sub.len(), 10);
        let counts = sub.label_counts();
        assert_eq!(counts[&Label::Sup], 4);
        assert_eq!(counts[&Label::Ref], 3);
        assert_eq!(counts[&Label::Nei], 3);
    }

    #[test]
    fn subsample_rejects_bad_fraction() {
        let claims = synth_claims(10, 4, 3, 3);
        assert!(subsample_claims(&claims, 0.0, 1).is_err());
        assert!(subsample_claims(&claims, 1.5, 1).is_err());
    }

    #[test]
    fn subsample_is_deterministic() {
        let claims = synth_claims(100, 40, 30, 30);
        let a = subsample_claims(&claims, 0.25, 11).unwrap();
        let b = subsample_claims(&claims, 0.25, 11).unwrap();
        assert_eq!(a, b);
    }

    fn synth_claims(total: usize, sup: usize, ref_: usize, nei: usize) -> ClaimSet {
        assert_eq!(total, sup + ref_ + nei);
        let mut claims = Vec::new();
        for i in 0..total {
            let label = if i < sup {
                Label::Sup
            } else if i < sup + ref_ {
                Label::Ref
            } else {
                Label::Nei
            };
            let gold = if label == Label::Nei { vec![] } else { vec![SentenceRef::new("d", 0)] };
            claims.push(Claim {
                id: format!("c{i}"),
                text: format!("claim {i}"),
                label,
                gold_evidence: gold,
                origin: ClaimOrigin::Original,
            });
        }
        ClaimSet::new(claims).unwrap()
    }
}
