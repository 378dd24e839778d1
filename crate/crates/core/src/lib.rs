//! Desk-scale fact-verification pipeline with an evidence-manipulation
//! attack and evaluation harness.
//!
//! The library is organized around the pipeline (corpus, retrieval,
//! verification), two attack families (camouflage hides claim-relevant
//! evidence, planting injects claim-supporting evidence), the black-box
//! optimizers the attacks run on, and an experiment harness that reproduces
//! the evaluation protocol (per-label accuracy, attack recall, to-NEI ratio,
//! budget/knowledge sweeps, paraphrase robustness).

pub mod camouflage;
pub mod corpus;
pub mod error;
pub mod optimizers;
pub mod pipeline;
pub mod planting;
pub mod pools;
pub mod retrieval;
pub mod text;
pub mod verification;

pub use error::{Error, Result};
