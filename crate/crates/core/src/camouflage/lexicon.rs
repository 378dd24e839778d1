//! Word-embedding lexicon backing the substitution attacks.
//!
//! Loads GloVe-style text files (token then space-separated components, one
//! entry per line). Neighbor queries are linear scans under the Euclidean
//! metric; lookups lowercase the query token.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Repository;
use crate::error::{Error, Result};
use crate::text::{content_words, fnv1a64};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingLexicon {
    dim: usize,
    words: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingLexicon {
    pub fn from_entries(entries: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let mut iter = entries.iter();
        let dim = match iter.next() {
            Some((_, v)) => v.len(),
            None => return Err(Error::Validation("lexicon has no entries".into())),
        };
        if dim == 0 {
            return Err(Error::Validation("lexicon vectors are zero-dimensional".into()));
        }
        let mut words = BTreeMap::new();
        for (w, v) in entries {
            if v.len() != dim {
                return Err(Error::Validation(format!(
                    "vector for {w:?} has {} components, expected {dim}",
                    v.len()
                )));
            }
            words.insert(w.to_lowercase(), v);
        }
        Ok(EmbeddingLexicon { dim, words })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut entries = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts
                .next()
                .ok_or(Error::Parse { line: lineno + 1, message: "empty lexicon record".into() })?
                .to_string();
            let vector: std::result::Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
            let vector = vector.map_err(|e| Error::Parse {
                line: lineno + 1,
                message: format!("bad component: {e}"),
            })?;
            entries.push((word, vector));
        }
        Self::from_entries(entries)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::fs::File::create(path)?;
        for (w, v) in &self.words {
            let comps: Vec<String> = v.iter().map(|c| format!("{c}")).collect();
            writeln!(out, "{w} {}", comps.join(" "))?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains_key(&word.to_lowercase())
    }

    /// Words strictly within `delta` of `word`, nearest first, excluding the
    /// word itself. Empty when the word is unknown.
    pub fn neighbors(&self, word: &str, delta: f64) -> Vec<(String, f64)> {
        let key = word.to_lowercase();
        let Some(center) = self.words.get(&key) else {
            return Vec::new();
        };
        let mut out: Vec<(String, f64)> = self
            .words
            .iter()
            .filter(|(w, _)| **w != key)
            .filter_map(|(w, v)| {
                let d = euclidean(center, v);
                (d < delta).then(|| (w.clone(), d))
            })
            .collect();
        out.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        out
    }

    /// Synthetic lexicon over a repository's content vocabulary, for
    /// self-contained runs without a real embedding file. Base words land far
    /// apart; every base word gets two nearby pseudo-variants, and a few
    /// semantic families (professions, instruments, negations) are clustered
    /// so their members are mutual neighbors.
    pub fn reference_for(repo: &Repository, seed: u64) -> Self {
        const DIM: usize = 12;
        const CLUSTERS: &[&[&str]] = &[
            &["miller", "weaver", "smith", "scribe", "potter", "mason", "baker", "tanner"],
            &["fiddle", "flute", "drum", "lute", "horn", "pipe"],
            &["not", "never", "hardly"],
        ];
        let mut vocab: std::collections::BTreeSet<String> = Default::default();
        for d in &repo.documents {
            for s in &d.sentences {
                vocab.extend(content_words(s));
            }
        }
        // Negation markers are function-word-adjacent but needed as lexicon
        // entries so REF evidence has covered tokens.
        vocab.insert("not".into());
        vocab.insert("never".into());

        let word_rng = |w: &str, salt: u64| {
            ChaCha8Rng::seed_from_u64(fnv1a64(w.as_bytes()) ^ seed.wrapping_mul(0x9e37_79b9) ^ salt)
        };
        let cluster_of = |w: &str| CLUSTERS.iter().position(|c| c.contains(&w));

        let mut entries: Vec<(String, Vec<f64>)> = Vec::new();
        for w in &vocab {
            let base: Vec<f64> = match cluster_of(w) {
                Some(ci) => {
                    let mut anchor_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1000 + ci as u64));
                    let anchor: Vec<f64> = (0..DIM).map(|_| anchor_rng.gen_range(-1.5..1.5)).collect();
                    let mut rng = word_rng(w, 1);
                    offset(&anchor, 0.15, &mut rng)
                }
                None => {
                    let mut rng = word_rng(w, 1);
                    (0..DIM).map(|_| rng.gen_range(-1.5..1.5)).collect()
                }
            };
            for (i, suffix) in ["an", "el"].iter().enumerate() {
                let mut rng = word_rng(w, 10 + i as u64);
                entries.push((format!("{w}{suffix}"), offset(&base, 0.3, &mut rng)));
            }
            entries.push((w.clone(), base));
        }
        Self::from_entries(entries).expect("reference lexicon is well-formed")
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Point at uniform-random direction and radius at most `max_radius`.
fn offset(center: &[f64], max_radius: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let dir: Vec<f64> = (0..center.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
    let radius = rng.gen_range(0.05..max_radius);
    center.iter().zip(&dir).map(|(c, d)| c + d / norm * radius).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic_corpus, SynthConfig};

    #[test]
    fn load_save_round_trip() {
        let lex = EmbeddingLexicon::from_entries(vec![
            ("alpha".into(), vec![0.0, 0.0]),
            ("beta".into(), vec![0.1, 0.0]),
            ("gamma".into(), vec![5.0, 5.0]),
        ])
        .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        lex.save(f.path()).unwrap();
        assert_eq!(EmbeddingLexicon::load(f.path()).unwrap(), lex);
    }

    #[test]
    fn neighbors_respect_threshold_and_order() {
        let lex = EmbeddingLexicon::from_entries(vec![
            ("alpha".into(), vec![0.0, 0.0]),
            ("beta".into(), vec![0.1, 0.0]),
            ("close".into(), vec![0.3, 0.0]),
            ("far".into(), vec![5.0, 5.0]),
        ])
        .unwrap();
        let n = lex.neighbors("alpha", 0.4);
        assert_eq!(n.iter().map(|(w, _)| w.as_str()).collect::<Vec<_>>(), vec!["beta", "close"]);
        assert!(lex.neighbors("missing", 0.4).is_empty());
    }

    #[test]
    fn reference_lexicon_covers_corpus_content_words() {
        let (_, repo) = generate_synthetic_corpus(&SynthConfig::default(), 4).unwrap();
        let lex = EmbeddingLexicon::reference_for(&repo, 4);
        assert!(lex.contains("not"));
        // Every content word has at least its two pseudo-variants in range.
        let mut checked = 0;
        for d in repo.documents.iter().take(5) {
            for s in &d.sentences {
                for w in content_words(s) {
                    assert!(!lex.neighbors(&w, 0.4).is_empty(), "no neighbors for {w:?}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn profession_cluster_members_are_mutual_neighbors() {
        let (_, repo) = generate_synthetic_corpus(&SynthConfig::default(), 4).unwrap();
        let lex = EmbeddingLexicon::reference_for(&repo, 4);
        if lex.contains("miller") && lex.contains("weaver") {
            let n = lex.neighbors("miller", 0.4);
            assert!(n.iter().any(|(w, _)| w == "weaver"), "professions not clustered: {n:?}");
        }
        // Negations cluster together but stay away from content words.
        let n = lex.neighbors("not", 0.4);
        assert!(n.iter().any(|(w, _)| w == "never"));
    }

    #[test]
    fn reference_lexicon_is_deterministic() {
        let (_, repo) = generate_synthetic_corpus(&SynthConfig::default(), 6).unwrap();
        assert_eq!(EmbeddingLexicon::reference_for(&repo, 9), EmbeddingLexicon::reference_for(&repo, 9));
    }
}
