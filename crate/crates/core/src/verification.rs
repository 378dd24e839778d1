//! Claim–evidence pair verifier and top-k verdict aggregation.
//!
//! The verifier is a multinomial logistic regression over hashed text-pair
//! features, trained by SGD with a fixed seed. Hashed features are binary
//! presence indicators; a handful of dense slots (overlap ratio, negation
//! markers, length buckets) sit past the hash space. The adversary's and the
//! defender's verifiers differ by seed and hash dimension, and only the
//! defender runs the aggregation rule.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{ClaimSet, Label, Repository};
use crate::error::{Error, Result};
use crate::retrieval::{retrieve, Index, RankedEvidence};
use crate::text::{hash_parts, is_function_word, is_negation_marker, tokenize};

/// Dense feature slots appended after the hash space.
pub const EXTRA_FEATURES: usize = 12;

const LABELS: [Label; 3] = [Label::Sup, Label::Ref, Label::Nei];

fn label_index(label: Label) -> usize {
    match label {
        Label::Sup => 0,
        Label::Ref => 1,
        Label::Nei => 2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifierConfig {
    pub hash_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        VerifierConfig { hash_dim: 4096, epochs: 30, learning_rate: 0.5, seed: 7 }
    }
}

/// Sparse feature vector; indices strictly ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFeatures {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
    pub dim: usize,
}

fn length_bucket(len: usize) -> usize {
    match len {
        0..=4 => 0,
        5..=9 => 1,
        10..=19 => 2,
        _ => 3,
    }
}

/// Deterministic, pure featurization of a claim–evidence pair.
pub fn featurize(claim_text: &str, evidence_text: &str, hash_dim: usize) -> PairFeatures {
    let claim: Vec<String> = tokenize(claim_text);
    let evidence: Vec<String> = tokenize(evidence_text);
    let mut hashed: std::collections::BTreeSet<u32> = Default::default();
    let mut put = |ns: &str, parts: &[&str]| {
        hashed.insert((hash_parts(ns, parts) % hash_dim as u64) as u32);
    };
    for t in &claim {
        put("cu", &[t]);
    }
    for w in claim.windows(2) {
        put("cb", &[&w[0], &w[1]]);
    }
    for t in &evidence {
        put("eu", &[t]);
    }
    for w in evidence.windows(2) {
        put("eb", &[&w[0], &w[1]]);
    }
    let claim_content: Vec<&String> = claim.iter().filter(|t| !is_function_word(t)).collect();
    let evidence_content: Vec<&String> = evidence.iter().filter(|t| !is_function_word(t)).collect();
    for c in &claim_content {
        for e in &evidence_content {
            put("xx", &[c, e]);
        }
    }

    let mut indices: Vec<u32> = hashed.into_iter().collect();
    let mut values = vec![1.0; indices.len()];

    let claim_set: std::collections::BTreeSet<&String> = claim.iter().collect();
    let evidence_set: std::collections::BTreeSet<&String> = evidence.iter().collect();
    let union = claim_set.union(&evidence_set).count();
    let overlap = if union == 0 {
        0.0
    } else {
        claim_set.intersection(&evidence_set).count() as f64 / union as f64
    };
    let claim_neg = claim.iter().any(|t| is_negation_marker(t));
    let evidence_neg = evidence.iter().any(|t| is_negation_marker(t));

    let base = hash_dim as u32;
    let mut extra = |offset: u32, value: f64| {
        if value != 0.0 {
            indices.push(base + offset);
            values.push(value);
        }
    };
    extra(0, overlap);
    extra(1, if claim_neg { 1.0 } else { 0.0 });
    extra(2, if evidence_neg { 1.0 } else { 0.0 });
    extra(3, if claim_neg != evidence_neg { 1.0 } else { 0.0 });
    extra(4 + length_bucket(claim.len()) as u32, 1.0);
    extra(8 + length_bucket(evidence.len()) as u32, 1.0);

    PairFeatures { indices, values, dim: hash_dim + EXTRA_FEATURES }
}

/// Probability triple over {SUP, REF, NEI}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictDistribution {
    pub p_sup: f64,
    pub p_ref: f64,
    pub p_nei: f64,
}

impl VerdictDistribution {
    pub fn probability(&self, label: Label) -> f64 {
        match label {
            Label::Sup => self.p_sup,
            Label::Ref => self.p_ref,
            Label::Nei => self.p_nei,
        }
    }

    pub fn argmax(&self) -> Label {
        let mut best = Label::Sup;
        for label in [Label::Ref, Label::Nei] {
            if self.probability(label) > self.probability(best) {
                best = label;
            }
        }
        best
    }
}

/// Trained pair verifier: one weight row per label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verifier {
    pub config: VerifierConfig,
    weights: [Vec<f64>; 3],
}

impl Verifier {
    /// Zero-weight verifier; predicts the uniform distribution everywhere.
    pub fn uniform(config: VerifierConfig) -> Self {
        let dim = config.hash_dim + EXTRA_FEATURES;
        Verifier { config, weights: [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]] }
    }

    pub fn weights(&self) -> &[Vec<f64>; 3] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [Vec<f64>; 3] {
        &mut self.weights
    }
}

fn scores(weights: &[Vec<f64>; 3], x: &PairFeatures) -> [f64; 3] {
    let mut s = [0.0f64; 3];
    for (k, row) in weights.iter().enumerate() {
        s[k] = x.indices.iter().zip(&x.values).map(|(&i, &v)| row[i as usize] * v).sum();
    }
    s
}

fn softmax(s: [f64; 3]) -> [f64; 3] {
    let m = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps = [(s[0] - m).exp(), (s[1] - m).exp(), (s[2] - m).exp()];
    let z: f64 = exps.iter().sum();
    [exps[0] / z, exps[1] / z, exps[2] / z]
}

/// Negative log-likelihood of `label` for one featurized pair.
pub fn pair_loss(weights: &[Vec<f64>; 3], x: &PairFeatures, label: Label) -> f64 {
    let p = softmax(scores(weights, x));
    -p[label_index(label)].max(1e-300).ln()
}

/// Analytic gradient of `pair_loss` w.r.t. the weights, sparse per class:
/// entries aligned with `x.indices`.
pub fn pair_gradient(weights: &[Vec<f64>; 3], x: &PairFeatures, label: Label) -> [Vec<f64>; 3] {
    let p = softmax(scores(weights, x));
    let mut grad = [
        Vec::with_capacity(x.indices.len()),
        Vec::with_capacity(x.indices.len()),
        Vec::with_capacity(x.indices.len()),
    ];
    for (k, g) in grad.iter_mut().enumerate() {
        let err = p[k] - if k == label_index(label) { 1.0 } else { 0.0 };
        for &v in &x.values {
            g.push(err * v);
        }
    }
    grad
}

/// Training pairs: (claim text, evidence text, label). SUP/REF claims pair
/// with each gold sentence; NEI claims pair with their top-3 retrieved
/// sentences.
pub fn build_training_pairs(
    claims: &ClaimSet,
    repo: &Repository,
    retriever: &Index,
) -> Result<Vec<(String, String, Label)>> {
    let mut missing: Vec<String> = Vec::new();
    let mut pairs = Vec::new();
    for c in &claims.claims {
        match c.label {
            Label::Sup | Label::Ref => {
                let mut any = false;
                for g in &c.gold_evidence {
                    match repo.sentence(g) {
                        Some(text) => {
                            pairs.push((c.text.clone(), text.to_string(), c.label));
                            any = true;
                        }
                        None => missing.push(c.id.clone()),
                    }
                }
                if !any && c.gold_evidence.is_empty() {
                    missing.push(c.id.clone());
                }
            }
            Label::Nei => {
                let ranked = retrieve(retriever, repo, &c.text, 3)?;
                for (r, _) in &ranked.hits {
                    if let Some(text) = repo.sentence(r) {
                        pairs.push((c.text.clone(), text.to_string(), Label::Nei));
                    }
                }
            }
        }
    }
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        return Err(Error::GoldEvidence { ids: missing });
    }
    Ok(pairs)
}

/// Train by SGD on the pair set; deterministic under `config.seed`.
pub fn train_verifier(
    claims: &ClaimSet,
    repo: &Repository,
    retriever: &Index,
    config: VerifierConfig,
) -> Result<Verifier> {
    let pairs = build_training_pairs(claims, repo, retriever)?;
    let features: Vec<(PairFeatures, Label)> = pairs
        .iter()
        .map(|(c, e, l)| (featurize(c, e, config.hash_dim), *l))
        .collect();
    let mut verifier = Verifier::uniform(config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..features.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (x, label) = &features[i];
            let grad = pair_gradient(&verifier.weights, x, *label);
            for (k, g) in grad.iter().enumerate() {
                for (j, &idx) in x.indices.iter().enumerate() {
                    verifier.weights[k][idx as usize] -= config.learning_rate * g[j];
                }
            }
        }
    }
    Ok(verifier)
}

/// Verdict distribution for one claim–evidence pair. Pure.
pub fn verify_pair(v: &Verifier, claim_text: &str, evidence_text: &str) -> VerdictDistribution {
    let x = featurize(claim_text, evidence_text, v.config.hash_dim);
    let p = softmax(scores(&v.weights, &x));
    VerdictDistribution { p_sup: p[0], p_ref: p[1], p_nei: p[2] }
}

/// Threshold rule over per-sentence verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationRule {
    pub tau: f64,
    pub rule_id: String,
}

impl AggregationRule {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::Config(format!("tau {tau} is outside (0, 1)")));
        }
        Ok(AggregationRule { tau, rule_id: "max-confidence-v1".to_string() })
    }
}

impl Default for AggregationRule {
    fn default() -> Self {
        AggregationRule::new(0.5).unwrap()
    }
}

/// Max rule over a list of per-sentence distributions: if any sentence is
/// confidently SUP or REF (>= tau), that sentence's stronger side wins with
/// its confidence; otherwise NEI with the largest p_nei. Empty input is
/// (NEI, 1.0).
pub fn aggregate_distributions(dists: &[VerdictDistribution], rule: &AggregationRule) -> (Label, f64) {
    if dists.is_empty() {
        return (Label::Nei, 1.0);
    }
    let mut best_label = Label::Nei;
    let mut best = f64::NEG_INFINITY;
    let mut best_nei = f64::NEG_INFINITY;
    for d in dists {
        let (side, p) = if d.p_sup >= d.p_ref { (Label::Sup, d.p_sup) } else { (Label::Ref, d.p_ref) };
        if p > best {
            best = p;
            best_label = side;
        }
        if d.p_nei > best_nei {
            best_nei = d.p_nei;
        }
    }
    if best >= rule.tau {
        (best_label, best)
    } else {
        (Label::Nei, best_nei)
    }
}

/// Apply the rule to retrieved evidence for one claim.
pub fn aggregate_verdict(
    v: &Verifier,
    claim_text: &str,
    evidence: &RankedEvidence,
    repo: &Repository,
    rule: &AggregationRule,
) -> (Label, f64) {
    let dists: Vec<VerdictDistribution> = evidence
        .hits
        .iter()
        .filter_map(|(r, _)| repo.sentence(r).map(|text| verify_pair(v, claim_text, text)))
        .collect();
    aggregate_distributions(&dists, rule)
}

/// Text dump: config echo then one dense weight row per label. Round-trips
/// exactly (floats written in shortest round-trip form).
pub fn save_verifier(v: &Verifier, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "verifier-format 1")?;
    writeln!(out, "hash_dim {}", v.config.hash_dim)?;
    writeln!(out, "epochs {}", v.config.epochs)?;
    writeln!(out, "learning_rate {}", v.config.learning_rate)?;
    writeln!(out, "seed {}", v.config.seed)?;
    for (k, label) in LABELS.iter().enumerate() {
        writeln!(out, "weights {label}")?;
        let row: Vec<String> = v.weights[k].iter().map(|w| format!("{w}")).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn load_verifier(path: impl AsRef<Path>) -> Result<Verifier> {
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let mut next = |what: &str| -> Result<String> {
        lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Validation(format!("verifier dump truncated before {what}")))
    };
    let header = next("header")?;
    if header != "verifier-format 1" {
        return Err(Error::Validation(format!("unsupported verifier dump header {header:?}")));
    }
    let mut field = |name: &str| -> Result<String> {
        let line = next(name)?;
        line.strip_prefix(&format!("{name} "))
            .map(str::to_string)
            .ok_or_else(|| Error::Validation(format!("expected field {name:?}, got {line:?}")))
    };
    let hash_dim: usize = field("hash_dim")?.parse().map_err(|_| Error::Validation("bad hash_dim".into()))?;
    let epochs: usize = field("epochs")?.parse().map_err(|_| Error::Validation("bad epochs".into()))?;
    let learning_rate: f64 =
        field("learning_rate")?.parse().map_err(|_| Error::Validation("bad learning_rate".into()))?;
    let seed: u64 = field("seed")?.parse().map_err(|_| Error::Validation("bad seed".into()))?;
    let config = VerifierConfig { hash_dim, epochs, learning_rate, seed };
    let dim = hash_dim + EXTRA_FEATURES;
    let mut weights: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (k, label) in LABELS.iter().enumerate() {
        let tag = next("weights tag")?;
        if tag != format!("weights {label}") {
            return Err(Error::Validation(format!("expected weights row for {label}, got {tag:?}")));
        }
        let row = next("weights row")?;
        let parsed: std::result::Result<Vec<f64>, _> =
            row.split_whitespace().map(str::parse::<f64>).collect();
        let parsed = parsed.map_err(|_| Error::Validation(format!("bad weight value in {label} row")))?;
        if parsed.len() != dim {
            return Err(Error::Validation(format!(
                "weights row for {label} has {} values, expected {dim}",
                parsed.len()
            )));
        }
        weights[k] = parsed;
    }
    Ok(Verifier { config, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic_corpus, SynthConfig};
    use crate::retrieval::{build_index, RetrieverKind};
    use proptest::prelude::*;

    #[test]
    fn featurize_empty_pair_has_only_length_buckets() {
        let f = featurize("", "", 64);
        assert_eq!(f.indices, vec![64 + 4, 64 + 8]);
        assert_eq!(f.values, vec![1.0, 1.0]);
    }

    #[test]
    fn featurize_identical_texts_overlap_one() {
        let f = featurize("one two three four five", "one two three four five", 4096);
        let overlap_idx = 4096u32;
        let pos = f.indices.iter().position(|&i| i == overlap_idx).unwrap();
        assert_eq!(f.values[pos], 1.0);
    }

    #[test]
    fn featurize_is_deterministic() {
        let a = featurize("mars is red", "mars was not red", 2048);
        let b = featurize("mars is red", "mars was not red", 2048);
        assert_eq!(a, b);
    }

    #[test]
    fn zero_weight_verifier_is_uniform() {
        let v = Verifier::uniform(VerifierConfig { epochs: 0, ..VerifierConfig::default() });
        let d = verify_pair(&v, "any claim", "any evidence");
        assert!((d.p_sup - 1.0 / 3.0).abs() < 1e-12);
        assert!((d.p_ref - 1.0 / 3.0).abs() < 1e-12);
        assert!((d.p_nei - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_epoch_training_is_uniform() {
        let (claims, repo) = generate_synthetic_corpus(&SynthConfig::default(), 1).unwrap();
        let index = build_index(&repo, RetrieverKind::TfIdfCosine);
        let cfg = VerifierConfig { epochs: 0, ..VerifierConfig::default() };
        let v = train_verifier(&claims, &repo, &index, cfg).unwrap();
        let d = verify_pair(&v, &claims.claims[0].text, "whatever evidence");
        assert!((d.p_sup - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn nei_claim_contributes_three_pairs() {
        let (claims, repo) = generate_synthetic_corpus(&SynthConfig::default(), 1).unwrap();
        let index = build_index(&repo, RetrieverKind::TfIdfCosine);
        let pairs = build_training_pairs(&claims, &repo, &index).unwrap();
        let nei_claims: Vec<_> = claims.claims.iter().filter(|c| c.label == Label::Nei).collect();
        for c in nei_claims {
            let count = pairs.iter().filter(|(ct, _, l)| ct == &c.text && *l == Label::Nei).count();
            assert_eq!(count, 3, "NEI claim {:?}", c.id);
        }
    }

    #[test]
    fn unresolvable_gold_evidence_lists_claim_ids() {
        let (mut claims, repo) = generate_synthetic_corpus(&SynthConfig::default(), 1).unwrap();
        let index = build_index(&repo, RetrieverKind::TfIdfCosine);
        let victim = claims.claims.iter().position(|c| c.label == Label::Sup).unwrap();
        let victim_id = claims.claims[victim].id.clone();
        claims.claims[victim].gold_evidence = vec![crate::corpus::SentenceRef::new("ghost", 99)];
        match train_verifier(&claims, &repo, &index, VerifierConfig::default()) {
            Err(Error::GoldEvidence { ids }) => assert_eq!(ids, vec![victim_id]),
            other => panic!("expected gold-evidence error, got {other:?}"),
        }
    }

    /// Pinned once on the default synthetic corpus, seed 1. Training must be
    /// byte-deterministic, so the exact value is a regression anchor.
    #[test]
    fn training_accuracy_on_separable_corpus() {
        let (claims, repo) = generate_synthetic_corpus(&SynthConfig::default(), 1).unwrap();
        let index = build_index(&repo, RetrieverKind::TfIdfCosine);
        let cfg = VerifierConfig { seed: 1, ..VerifierConfig::default() };
        let v = train_verifier(&claims, &repo, &index, cfg).unwrap();
        let pairs = build_training_pairs(&claims, &repo, &index).unwrap();
        let correct = pairs
            .iter()
            .filter(|(c, e, l)| verify_pair(&v, c, e).argmax() == *l)
            .count();
        let acc = correct as f64 / pairs.len() as f64;
        assert!(acc >= 0.95, "training accuracy {acc}");
        // SUP gold pairs specifically: at least 90% classified SUP.
        let sup: Vec<_> = pairs.iter().filter(|(_, _, l)| *l == Label::Sup).collect();
        let sup_ok = sup.iter().filter(|(c, e, _)| verify_pair(&v, c, e).argmax() == Label::Sup).count();
        assert!(sup_ok as f64 >= 0.9 * sup.len() as f64);
    }

    #[test]
    fn training_is_seed_deterministic() {
        let (claims, repo) = generate_synthetic_corpus(&SynthConfig::default(), 2).unwrap();
        let index = build_index(&repo, RetrieverKind::TfIdfCosine);
        let cfg = VerifierConfig { seed: 11, epochs: 5, ..VerifierConfig::default() };
        let a = train_verifier(&claims, &repo, &index, cfg).unwrap();
        let b = train_verifier(&claims, &repo, &index, cfg).unwrap();
        assert_eq!(a.weights(), b.weights());
        let c = train_verifier(&claims, &repo, &index, VerifierConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(a.weights(), c.weights());
    }

    #[test]
    fn gradient_matches_central_differences() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let hash_dim = 128;
        for _ in 0..20 {
            let claim: String =
                (0..rng.gen_range(1..8)).map(|_| format!("w{} ", rng.gen_range(0..40))).collect();
            let evidence: String =
                (0..rng.gen_range(1..10)).map(|_| format!("w{} ", rng.gen_range(0..40))).collect();
            let x = featurize(&claim, &evidence, hash_dim);
            let label = [Label::Sup, Label::Ref, Label::Nei][rng.gen_range(0..3)];
            let mut weights: [Vec<f64>; 3] = [
                (0..hash_dim + EXTRA_FEATURES).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                (0..hash_dim + EXTRA_FEATURES).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                (0..hash_dim + EXTRA_FEATURES).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            ];
            let grad = pair_gradient(&weights, &x, label);
            let h = 1e-6;
            for k in 0..3 {
                for (j, &idx) in x.indices.iter().enumerate() {
                    let orig = weights[k][idx as usize];
                    weights[k][idx as usize] = orig + h;
                    let up = pair_loss(&weights, &x, label);
                    weights[k][idx as usize] = orig - h;
                    let down = pair_loss(&weights, &x, label);
                    weights[k][idx as usize] = orig;
                    let numeric = (up - down) / (2.0 * h);
                    let analytic = grad[k][j];
                    // Scale floor guards against fp cancellation on near-zero
                    // gradients, where central differences lose precision.
                    let denom = numeric.abs().max(analytic.abs()).max(1e-3);
                    assert!(
                        ((numeric - analytic) / denom).abs() < 1e-5,
                        "class {k} idx {idx}: numeric {numeric} vs analytic {analytic}"
                    );
                }
            }
        }
    }

    #[test]
    fn aggregate_empty_is_confident_nei() {
        let rule = AggregationRule::default();
        assert_eq!(aggregate_distributions(&[], &rule), (Label::Nei, 1.0));
    }

    #[test]
    fn aggregate_all_nei_leaning_is_nei() {
        let rule = AggregationRule::default();
        let d = VerdictDistribution { p_sup: 0.2, p_ref: 0.1, p_nei: 0.7 };
        let (label, conf) = aggregate_distributions(&[d; 5], &rule);
        assert_eq!(label, Label::Nei);
        assert!((conf - 0.7).abs() < 1e-12);
    }

    #[test]
    fn single_confident_sup_pair_wins() {
        let rule = AggregationRule::default();
        let nei = VerdictDistribution { p_sup: 0.2, p_ref: 0.1, p_nei: 0.7 };
        let sup = VerdictDistribution { p_sup: 0.9, p_ref: 0.05, p_nei: 0.05 };
        let (label, conf) = aggregate_distributions(&[nei, nei, sup, nei, nei], &rule);
        assert_eq!(label, Label::Sup);
        assert!((conf - 0.9).abs() < 1e-12);
    }

    #[test]
    fn verifier_round_trips_exactly() {
        let (claims, repo) = generate_synthetic_corpus(&SynthConfig::default(), 3).unwrap();
        let index = build_index(&repo, RetrieverKind::TfIdfCosine);
        let cfg = VerifierConfig { epochs: 3, hash_dim: 512, ..VerifierConfig::default() };
        let v = train_verifier(&claims, &repo, &index, cfg).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_verifier(&v, f.path()).unwrap();
        let back = load_verifier(f.path()).unwrap();
        assert_eq!(v, back);
    }

    proptest! {
        #[test]
        fn distribution_is_valid_for_any_pair(claim in ".{0,40}", evidence in ".{0,60}") {
            let v = Verifier::uniform(VerifierConfig { hash_dim: 256, ..VerifierConfig::default() });
            let d = verify_pair(&v, &claim, &evidence);
            prop_assert!(d.p_sup >= 0.0 && d.p_sup <= 1.0);
            prop_assert!(d.p_ref >= 0.0 && d.p_ref <= 1.0);
            prop_assert!(d.p_nei >= 0.0 && d.p_nei <= 1.0);
            prop_assert!((d.p_sup + d.p_ref + d.p_nei - 1.0).abs() < 1e-9);
        }

        #[test]
        fn aggregation_flip_requires_stronger_newcomer(
            raw in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 1..6),
            new in (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0),
        ) {
            let normalize = |(a, b, c): (f64, f64, f64)| {
                let z = (a + b + c).max(1e-9);
                VerdictDistribution { p_sup: a / z, p_ref: b / z, p_nei: c / z }
            };
            let rule = AggregationRule::default();
            let dists: Vec<VerdictDistribution> = raw.into_iter().map(normalize).collect();
            let newcomer = normalize(new);
            let (before, before_conf) = aggregate_distributions(&dists, &rule);
            let mut extended = dists.clone();
            extended.push(newcomer);
            let (after, _) = aggregate_distributions(&extended, &rule);
            let flipped = (before == Label::Sup && after == Label::Ref)
                || (before == Label::Ref && after == Label::Sup);
            if flipped {
                prop_assert!(newcomer.p_sup.max(newcomer.p_ref) > before_conf);
            }
        }
    }
}
