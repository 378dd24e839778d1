use factlab::camouflage::*;
use factlab::corpus::Label;
use factlab::verification::{featurize, verify_pair, Verifier, VerifierConfig};

fn main() {
    let mut verifier = Verifier::uniform(VerifierConfig {
        hash_dim: 512,
        epochs: 0,
        learning_rate: 0.1,
        seed: 0,
    });
    let f = featurize("", "red", 512);
    println!("indices for red: {:?} values {:?}", f.indices, f.values);
    verifier.weights_mut()[0][f.indices[0] as usize] = 6.0;
    let evidence = "mars is red and quite dusty today";
    let before = verify_pair(&verifier, "mars is red", evidence);
    println!("before: {before:?}");
    let lexicon = EmbeddingLexicon::from_entries(vec![
        ("red".into(), vec![0.0, 0.0]),
        ("crimson".into(), vec![0.2, 0.0]),
        ("scarlet".into(), vec![0.0, 0.25]),
    ]).unwrap();
    let tokens: Vec<String> = evidence.split(' ').map(String::from).collect();
    let ranked = token_importance(&verifier, "mars is red", &tokens, Label::Sup);
    println!("importance: {ranked:?}");
    let gen = LexiconNeighborGenerator { lexicon: &lexicon, delta: 0.4 };
    let out = contextualized_replace("mars is red", evidence, Label::Sup, &verifier, &gen, None,
        DEFAULT_MAX_TOKEN_FRACTION, DEFAULT_CANDIDATE_SCORE_THRESHOLD).unwrap();
    println!("out: {out:?}");
}
