//! Defender-side pipeline: retrieve top-k, verify each pair, aggregate.

use serde::{Deserialize, Serialize};

use crate::corpus::{Label, Repository};
use crate::error::Result;
use crate::retrieval::{build_index, retrieve, Index, RankedEvidence, RetrieverKind, DEFAULT_RETRIEVAL_K};
use crate::verification::{aggregate_verdict, AggregationRule, Verifier};

/// A complete verdict pipeline bound to one repository version through its
/// index. Immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub index: Index,
    pub verifier: Verifier,
    pub rule: AggregationRule,
    pub k: usize,
}

/// Verdict plus the evidence it was based on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineVerdict {
    pub label: Label,
    pub confidence: f64,
    pub evidence: RankedEvidence,
}

impl Pipeline {
    pub fn new(repo: &Repository, kind: RetrieverKind, verifier: Verifier, rule: AggregationRule) -> Self {
        Pipeline { index: build_index(repo, kind), verifier, rule, k: DEFAULT_RETRIEVAL_K }
    }

    /// Same verifier and rule, index rebuilt against `repo`.
    pub fn rebuilt_for(&self, repo: &Repository) -> Self {
        Pipeline {
            index: build_index(repo, self.index.kind),
            verifier: self.verifier.clone(),
            rule: self.rule.clone(),
            k: self.k,
        }
    }

    pub fn verdict(&self, repo: &Repository, claim_text: &str) -> Result<PipelineVerdict> {
        let evidence = retrieve(&self.index, repo, claim_text, self.k)?;
        let (label, confidence) = aggregate_verdict(&self.verifier, claim_text, &evidence, repo, &self.rule);
        Ok(PipelineVerdict { label, confidence, evidence })
    }
}
