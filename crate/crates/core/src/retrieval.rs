//! Sentence retrieval: TF-IDF cosine (reference scorer) and BM25 (the
//! different-architecture black-box proxy).
//!
//! An index is built against exactly one repository version and is immutable
//! afterwards; concurrent retrieval needs no synchronization. Tokens absent
//! from the index vocabulary map to an unknown id that carries no statistics,
//! so they contribute no overlap mass — which is precisely what codepoint
//! level perturbations exploit to hide sentences.

use std::collections::BTreeMap;
use std::io::{BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Repository, SentenceRef};
use crate::error::{Error, Result};
use crate::text::tokenize;

/// Scorer family. BM25 defaults follow the usual k1=1.2, b=0.75.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RetrieverKind {
    TfIdfCosine,
    Bm25 { k1: f64, b: f64 },
}

impl RetrieverKind {
    pub fn bm25() -> Self {
        RetrieverKind::Bm25 { k1: 1.2, b: 0.75 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RetrieverKind::TfIdfCosine => "tfidf-cosine",
            RetrieverKind::Bm25 { .. } => "bm25",
        }
    }
}

/// Retrieval cap used throughout the pipeline.
pub const DEFAULT_RETRIEVAL_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SentenceEntry {
    doc_id: String,
    sentence_index: usize,
    /// (term id, count), term ids ascending.
    counts: Vec<(u32, u32)>,
    token_len: u32,
}

/// Immutable term-statistics index over one repository snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Index {
    pub format_version: u32,
    pub repo_version: u64,
    pub kind: RetrieverKind,
    pub lowercase: bool,
    vocabulary: BTreeMap<String, u32>,
    /// Per term id: number of sentences containing the term.
    doc_freq: Vec<u32>,
    sentences: Vec<SentenceEntry>,
    total_tokens: u64,
}

/// Ranked retrieval output: scores non-increasing, ties broken by
/// (doc_id, sentence_index) ascending, at most `k` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEvidence {
    pub hits: Vec<(SentenceRef, f64)>,
    pub k: usize,
}

impl RankedEvidence {
    pub fn refs(&self) -> Vec<SentenceRef> {
        self.hits.iter().map(|(r, _)| r.clone()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }
}

impl Index {
    fn norm_tokens(&self, text: &str) -> Vec<String> {
        if self.lowercase {
            tokenize(text)
        } else {
            crate::text::tokenize_cased(text)
        }
    }

    fn term_counts(&self, text: &str) -> Vec<(u32, u32)> {
        let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
        for tok in self.norm_tokens(text) {
            if let Some(&id) = self.vocabulary.get(&tok) {
                *counts.entry(id).or_insert(0) += 1;
            }
        }
        counts.into_iter().collect()
    }

    pub fn vocabulary_len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn contains_term(&self, term: &str) -> bool {
        self.vocabulary.contains_key(term)
    }

    fn num_sentences(&self) -> usize {
        self.sentences.len()
    }

    /// Smoothed tf-idf weight, strictly positive for any in-vocabulary term.
    fn idf(&self, term_id: u32) -> f64 {
        let n = self.num_sentences() as f64;
        let df = f64::from(self.doc_freq[term_id as usize]);
        ((1.0 + n) / (1.0 + df)).ln() + 1.0
    }

    fn bm25_idf(&self, term_id: u32) -> f64 {
        let n = self.num_sentences() as f64;
        let df = f64::from(self.doc_freq[term_id as usize]);
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    fn avg_sentence_len(&self) -> f64 {
        if self.sentences.is_empty() {
            0.0
        } else {
            self.total_tokens as f64 / self.sentences.len() as f64
        }
    }

    fn score_counts(&self, claim: &[(u32, u32)], sentence: &[(u32, u32)], sentence_len: u32) -> f64 {
        if self.num_sentences() == 0 {
            return 0.0;
        }
        match self.kind {
            RetrieverKind::TfIdfCosine => {
                let weight = |counts: &[(u32, u32)]| -> Vec<(u32, f64)> {
                    counts.iter().map(|&(id, c)| (id, f64::from(c) * self.idf(id))).collect()
                };
                let cv = weight(claim);
                let sv = weight(sentence);
                let norm = |v: &[(u32, f64)]| v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
                let (cn, sn) = (norm(&cv), norm(&sv));
                if cn == 0.0 || sn == 0.0 {
                    return 0.0;
                }
                let smap: BTreeMap<u32, f64> = sv.into_iter().collect();
                let dot: f64 = cv.iter().filter_map(|(id, w)| smap.get(id).map(|sw| w * sw)).sum();
                dot / (cn * sn)
            }
            RetrieverKind::Bm25 { k1, b } => {
                let smap: BTreeMap<u32, u32> = sentence.iter().copied().collect();
                let avg = self.avg_sentence_len();
                if avg == 0.0 {
                    return 0.0;
                }
                let len_norm = 1.0 - b + b * f64::from(sentence_len) / avg;
                claim
                    .iter()
                    .filter_map(|&(id, _)| {
                        smap.get(&id).map(|&tf| {
                            let tf = f64::from(tf);
                            self.bm25_idf(id) * tf * (k1 + 1.0) / (tf + k1 * len_norm)
                        })
                    })
                    .sum()
            }
        }
    }
}

/// Build an index over every sentence of `repo`.
pub fn build_index(repo: &Repository, kind: RetrieverKind) -> Index {
    build_index_with(repo, kind, true)
}

pub fn build_index_with(repo: &Repository, kind: RetrieverKind, lowercase: bool) -> Index {
    let mut index = Index {
        format_version: 1,
        repo_version: repo.version,
        kind,
        lowercase,
        vocabulary: BTreeMap::new(),
        doc_freq: Vec::new(),
        sentences: Vec::new(),
        total_tokens: 0,
    };
    let mut tokenized: Vec<(String, usize, Vec<String>)> = Vec::new();
    for d in &repo.documents {
        for (i, s) in d.sentences.iter().enumerate() {
            let toks = index.norm_tokens(s);
            for t in &toks {
                index.vocabulary.entry(t.clone()).or_insert(0);
            }
            tokenized.push((d.doc_id.clone(), i, toks));
        }
    }
    for (next_id, (_, id)) in index.vocabulary.iter_mut().enumerate() {
        *id = next_id as u32;
    }
    index.doc_freq = vec![0; index.vocabulary.len()];
    for (doc_id, sentence_index, toks) in tokenized {
        let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
        for t in &toks {
            *counts.entry(index.vocabulary[t]).or_insert(0) += 1;
        }
        for &id in counts.keys() {
            index.doc_freq[id as usize] += 1;
        }
        index.total_tokens += toks.len() as u64;
        index.sentences.push(SentenceEntry {
            doc_id,
            sentence_index,
            counts: counts.into_iter().collect(),
            token_len: toks.len() as u32,
        });
    }
    index
}

/// Relevance of `sentence_text` to `claim_text`. Pure in both texts and the
/// index statistics. TfIdfCosine lies in [0, 1]; BM25 is nonnegative.
pub fn score(index: &Index, claim_text: &str, sentence_text: &str) -> f64 {
    let claim = index.term_counts(claim_text);
    let toks = index.norm_tokens(sentence_text);
    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    let mut len = 0u32;
    for t in toks {
        if let Some(&id) = index.vocabulary.get(&t) {
            *counts.entry(id).or_insert(0) += 1;
            len += 1;
        }
    }
    let sentence: Vec<(u32, u32)> = counts.into_iter().collect();
    index.score_counts(&claim, &sentence, len)
}

/// Top-`k` sentences by score. Zero-score sentences (no term overlap) are not
/// returned; attack marks play no role here.
pub fn retrieve(index: &Index, repo: &Repository, claim_text: &str, k: usize) -> Result<RankedEvidence> {
    if index.repo_version != repo.version {
        return Err(Error::StaleIndex { index_version: index.repo_version, repo_version: repo.version });
    }
    let claim = index.term_counts(claim_text);
    let mut scored: Vec<(SentenceRef, f64)> = index
        .sentences
        .iter()
        .map(|e| {
            let s = index.score_counts(&claim, &e.counts, e.token_len);
            (SentenceRef::new(e.doc_id.clone(), e.sentence_index), s)
        })
        .filter(|(_, s)| *s > 0.0)
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| a.0.doc_id.cmp(&b.0.doc_id))
            .then_with(|| a.0.sentence_index.cmp(&b.0.sentence_index))
    });
    scored.truncate(k);
    Ok(RankedEvidence { hits: scored, k })
}

/// Score of the sentence with the token at `masked_position` deleted.
/// Equal by construction to `score` on the re-joined remaining tokens.
pub fn masked_sentence_score(
    index: &Index,
    claim_text: &str,
    sentence_tokens: &[String],
    masked_position: usize,
) -> Result<f64> {
    if masked_position >= sentence_tokens.len() {
        return Err(Error::Validation(format!(
            "masked position {masked_position} out of range for {} tokens",
            sentence_tokens.len()
        )));
    }
    let remaining: Vec<&str> = sentence_tokens
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != masked_position)
        .map(|(_, t)| t.as_str())
        .collect();
    Ok(score(index, claim_text, &remaining.join(" ")))
}

pub fn save_index(index: &Index, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "{}", serde_json::to_string(index)?)?;
    Ok(())
}

pub fn load_index(path: impl AsRef<Path>) -> Result<Index> {
    let file = std::fs::File::open(path)?;
    let index: Index = serde_json::from_reader(BufReader::new(file))?;
    if index.format_version != 1 {
        return Err(Error::Validation(format!("unsupported index format version {}", index.format_version)));
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn repo_from(sentences: &[(&str, &[&str])]) -> Repository {
        Repository::new(
            sentences
                .iter()
                .map(|(id, ss)| Document {
                    doc_id: (*id).to_string(),
                    title: (*id).to_string(),
                    sentences: ss.iter().map(|s| s.to_string()).collect(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn empty_repo_gives_empty_vocabulary_and_ranking() {
        let repo = Repository::empty();
        let index = build_index(&repo, RetrieverKind::TfIdfCosine);
        assert_eq!(index.vocabulary_len(), 0);
        let ranked = retrieve(&index, &repo, "anything at all", 5).unwrap();
        assert!(ranked.is_empty());
    }

    #[test]
    fn vocabulary_is_distinct_normalized_tokens() {
        let repo = repo_from(&[
            ("d1", &["Mars is red.", "The sky is blue.", "Mars has two moons."]),
            ("d2", &["Venus is bright.", "The moons orbit Mars.", "Red dust covers Mars."]),
        ]);
        let index = build_index(&repo, RetrieverKind::TfIdfCosine);
        let mut expected: std::collections::BTreeSet<String> = Default::default();
        for d in &repo.documents {
            for s in &d.sentences {
                expected.extend(tokenize(s));
            }
        }
        assert_eq!(index.vocabulary_len(), expected.len());
        for t in expected {
            assert!(index.contains_term(&t));
        }
    }

    #[test]
    fn identical_in_vocab_texts_score_one() {
        let repo = repo_from(&[("d", &["mars is red", "venus is bright"])]);
        let index = build_index(&repo, RetrieverKind::TfIdfCosine);
        let s = score(&index, "mars is red", "mars is red");
        assert!((s - 1.0).abs() < 1e-12, "score {s}");
    }

    #[test]
    fn disjoint_vocabulary_scores_zero() {
        let repo = repo_from(&[("d", &["mars is red", "venus glows white"])]);
        let index = build_index(&repo, RetrieverKind::TfIdfCosine);
        assert_eq!(score(&index, "mars is red", "venus glows white"), 0.0);
    }

    /// Independent brute-force tf-idf cosine used as the oracle: document
    /// frequencies recomputed from the raw strings, no shared code path.
    fn brute_tfidf_cosine(corpus: &[&str], claim: &str, sentence: &str) -> f64 {
        let n = corpus.len() as f64;
        let df = |term: &str| corpus.iter().filter(|s| tokenize(s).contains(&term.to_string())).count() as f64;
        let vocab: std::collections::BTreeSet<String> = corpus.iter().flat_map(|s| tokenize(s)).collect();
        let weights = |text: &str| -> std::collections::BTreeMap<String, f64> {
            let mut m = std::collections::BTreeMap::new();
            for t in tokenize(text) {
                if vocab.contains(&t) {
                    *m.entry(t).or_insert(0.0) += 1.0;
                }
            }
            for (t, w) in m.iter_mut() {
                *w *= ((1.0 + n) / (1.0 + df(t))).ln() + 1.0;
            }
            m
        };
        let (cw, sw) = (weights(claim), weights(sentence));
        let dot: f64 = cw.iter().filter_map(|(t, w)| sw.get(t).map(|v| w * v)).sum();
        let norm = |m: &std::collections::BTreeMap<String, f64>| m.values().map(|w| w * w).sum::<f64>().sqrt();
        if norm(&cw) == 0.0 || norm(&sw) == 0.0 {
            return 0.0;
        }
        dot / (norm(&cw) * norm(&sw))
    }

    #[test]
    fn tfidf_matches_brute_force_on_toy_corpus() {
        let corpus = ["mars is red", "venus is bright tonight", "red dust storms cover mars"];
        let repo = repo_from(&[("d1", &[corpus[0]]), ("d2", &[corpus[1]]), ("d3", &[corpus[2]])]);
        let index = build_index(&repo, RetrieverKind::TfIdfCosine);
        let claim = "mars is red";
        for sentence in corpus {
            let got = score(&index, claim, sentence);
            let want = brute_tfidf_cosine(&corpus, claim, sentence);
            assert!((got - want).abs() < 1e-9, "sentence {sentence:?}: got {got}, want {want}");
        }
    }

    #[test]
    fn bm25_matches_independent_formula() {
        let corpus = ["mars is red", "venus is bright tonight", "red dust storms cover mars"];
        let repo = repo_from(&[("d1", &[corpus[0]]), ("d2", &[corpus[1]]), ("d3", &[corpus[2]])]);
        let index = build_index(&repo, RetrieverKind::bm25());
        let n = 3.0f64;
        let avg = (3.0 + 4.0 + 5.0) / 3.0;
        let df = |term: &str| corpus.iter().filter(|s| tokenize(s).contains(&term.to_string())).count() as f64;
        // claim "red mars" against sentence "red dust storms cover mars" (len 5, tf 1 each)
        let (k1, b) = (1.2, 0.75);
        let len_norm = 1.0 - b + b * 5.0 / avg;
        let idf = |t: &str| ((n - df(t) + 0.5) / (df(t) + 0.5) + 1.0).ln();
        let want = [idf("red"), idf("mars")]
            .iter()
            .map(|i| i * 1.0 * (k1 + 1.0) / (1.0 + k1 * len_norm))
            .sum::<f64>();
        let got = score(&index, "red mars", corpus[2]);
        assert!((got - want).abs() < 1e-9, "got {got}, want {want}");
    }

    #[test]
    fn retrieve_single_overlap_k1() {
        let repo = repo_from(&[
            ("d1", &["the lantern glows warmly"]),
            ("d2", &["mars shines at dusk"]),
            ("d3", &["rivers flood in spring"]),
        ]);
        let index = build_index(&repo, RetrieverKind::TfIdfCosine);
        let ranked = retrieve(&index, &repo, "mars at night", 1).unwrap();
        assert_eq!(ranked.hits.len(), 1);
        assert_eq!(ranked.hits[0].0, SentenceRef::new("d2", 0));
    }

    #[test]
    fn retrieve_matches_full_sort_oracle() {
        use rand::{Rng, SeedableRng};
        let (claims, repo) =
            crate::corpus::generate_synthetic_corpus(&crate::corpus::SynthConfig::default(), 5).unwrap();
        for kind in [RetrieverKind::TfIdfCosine, RetrieverKind::bm25()] {
            let index = build_index(&repo, kind);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
            for trial in 0..200 {
                let claim = &claims.claims[trial % claims.len()].text;
                let k = rng.gen_range(1..=7);
                let got = retrieve(&index, &repo, claim, k).unwrap();
                // Oracle: score every sentence via the public scorer, sort, truncate.
                let mut all: Vec<(SentenceRef, f64)> = repo
                    .all_refs()
                    .into_iter()
                    .map(|r| {
                        let s = score(&index, claim, repo.sentence(&r).unwrap());
                        (r, s)
                    })
                    .filter(|(_, s)| *s > 0.0)
                    .collect();
                all.sort_by(|a, b| {
                    b.1.partial_cmp(&a.1)
                        .unwrap()
                        .then_with(|| a.0.doc_id.cmp(&b.0.doc_id))
                        .then_with(|| a.0.sentence_index.cmp(&b.0.sentence_index))
                });
                all.truncate(k);
                assert_eq!(got.hits.len(), all.len());
                for ((gr, gs), (wr, ws)) in got.hits.iter().zip(&all) {
                    assert_eq!(gr, wr);
                    assert!((gs - ws).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn stale_index_is_rejected() {
        let repo = repo_from(&[("d", &["mars is red"])]);
        let index = build_index(&repo, RetrieverKind::TfIdfCosine);
        let modified = repo.apply_modifications(&[], false).unwrap();
        assert!(matches!(
            retrieve(&index, &modified, "mars", 5),
            Err(Error::StaleIndex { index_version: 0, repo_version: 1 })
        ));
    }

    #[test]
    fn masked_score_zero_overlap_stays_zero() {
        let repo = repo_from(&[("d", &["lanterns glow at dusk", "mars is red"])]);
        let index = build_index(&repo, RetrieverKind::TfIdfCosine);
        let tokens: Vec<String> = tokenize("lanterns glow at dusk");
        let claim = "mars is red";
        assert_eq!(score(&index, claim, "lanterns glow at dusk"), 0.0);
        for i in 0..tokens.len() {
            assert_eq!(masked_sentence_score(&index, claim, &tokens, i).unwrap(), 0.0);
        }
    }

    #[test]
    fn masking_the_only_overlap_token_drops_to_zero() {
        let repo = repo_from(&[("d", &["mars glows at dusk", "rivers are wide"])]);
        let index = build_index(&repo, RetrieverKind::TfIdfCosine);
        let tokens: Vec<String> = tokenize("mars glows at dusk");
        let before = score(&index, "mars is red", "mars glows at dusk");
        assert!(before > 0.0);
        let after = masked_sentence_score(&index, "mars is red", &tokens, 0).unwrap();
        assert_eq!(after, 0.0);
    }

    #[test]
    fn masked_sweep_matches_independent_scores() {
        let repo = repo_from(&[("d", &["the red dust storms on mars rise in the long winter season"])]);
        let index = build_index(&repo, RetrieverKind::TfIdfCosine);
        let tokens: Vec<String> = tokenize("the red dust storms on mars rise in the long winter season");
        let claim = "red storms on mars in winter";
        for i in 0..tokens.len() {
            let got = masked_sentence_score(&index, claim, &tokens, i).unwrap();
            let joined: Vec<&str> = tokens
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, t)| t.as_str())
                .collect();
            let want = score(&index, claim, &joined.join(" "));
            assert_eq!(got, want);
        }
        assert!(matches!(
            masked_sentence_score(&index, claim, &tokens, tokens.len()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn unknown_codepoint_token_contributes_no_overlap() {
        let repo = repo_from(&[("d", &["mars is red", "venus is bright"])]);
        let index = build_index(&repo, RetrieverKind::TfIdfCosine);
        // Cyrillic а inside "mars": the token is not in the vocabulary.
        let perturbed = "m\u{0430}rs is red";
        let clean = score(&index, "mars is red", "mars is red");
        let attacked = score(&index, "mars is red", perturbed);
        assert!(attacked < clean);
        assert_eq!(score(&index, "mars", perturbed), 0.0);
    }

    #[test]
    fn monotone_overlap_under_unit_counts() {
        // Fixed toy index; adding a claim term the sentence lacks (at unit
        // count) never decreases the tf-idf cosine.
        let repo = repo_from(&[("d", &["alpha beta gamma delta", "beta epsilon", "gamma delta epsilon zeta"])]);
        let index = build_index(&repo, RetrieverKind::TfIdfCosine);
        let claim = "alpha beta gamma zeta";
        let base = "beta epsilon";
        let before = score(&index, claim, base);
        for extra in ["alpha", "gamma", "zeta"] {
            let after = score(&index, claim, &format!("{base} {extra}"));
            assert!(after >= before, "adding {extra}: {after} < {before}");
        }
    }

    #[test]
    fn index_round_trips_exactly() {
        let (_, repo) =
            crate::corpus::generate_synthetic_corpus(&crate::corpus::SynthConfig::default(), 8).unwrap();
        for kind in [RetrieverKind::TfIdfCosine, RetrieverKind::bm25()] {
            let index = build_index(&repo, kind);
            let f = tempfile::NamedTempFile::new().unwrap();
            save_index(&index, f.path()).unwrap();
            let back = load_index(f.path()).unwrap();
            assert_eq!(index, back);
        }
    }

    #[test]
    fn wb_bb_pair_can_rank_differently() {
        let repo = repo_from(&[
            ("d1", &["mars mars mars is red and red"]),
            ("d2", &["mars is red"]),
            ("d3", &["venus is bright"]),
        ]);
        let tfidf = build_index(&repo, RetrieverKind::TfIdfCosine);
        let bm25 = build_index(&repo, RetrieverKind::bm25());
        let a = retrieve(&tfidf, &repo, "mars is red", 2).unwrap();
        let b = retrieve(&bm25, &repo, "mars is red", 2).unwrap();
        // Both retrievers return results; orderings are allowed to differ.
        assert_eq!(a.hits.len(), 2);
        assert_eq!(b.hits.len(), 2);
    }
}
