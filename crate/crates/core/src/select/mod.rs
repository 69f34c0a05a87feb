//! Selection ensembling: return one of the candidate graphs unchanged.
//!
//! Selection can never produce a graph that was not already among the
//! inputs, so it never introduces structural corruption the way merging
//! can. Ties always go to the lowest candidate index.

mod scorer;

pub use scorer::{
    mock_perplexity, read_score_file, MockScorer, PerplexityScore, ProcessScorer, ScoreFileScorer, Scorer, ScorerError,
    ScorerRequest, ScorerResponse, DEFAULT_TIMEOUT,
};

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{serialize_penman, AmrGraph};
use crate::smatch::{compute_smatch_with, SmatchConfig};

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("candidate set is empty")]
    Empty,
    #[error("duplicate system id {0:?}")]
    DuplicateSystem(String),
    #[error("selection by perplexity needs the source sentence (set {0:?})")]
    MissingSentence(String),
    #[error("no scorer given")]
    NoScorers,
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionStrategy {
    SmatchAvg,
    PplZero,
    PplAvg,
    OracleBest,
}

impl SelectionStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            SelectionStrategy::SmatchAvg => "smatch-avg",
            SelectionStrategy::PplZero => "ppl-zero",
            SelectionStrategy::PplAvg => "ppl-avg",
            SelectionStrategy::OracleBest => "oracle-best",
        }
    }
}

impl fmt::Display for SelectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Predictions of several systems for one sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    /// Identifier of the sentence, used to build scorer request ids.
    pub id: String,
    pub sentence: Option<String>,
    candidates: Vec<(String, AmrGraph)>,
}

impl CandidateSet {
    pub fn new(
        id: impl Into<String>,
        sentence: Option<String>,
        candidates: Vec<(String, AmrGraph)>,
    ) -> Result<Self, SelectError> {
        if candidates.is_empty() {
            return Err(SelectError::Empty);
        }
        let mut seen = HashSet::new();
        for (system, _) in &candidates {
            if !seen.insert(system.as_str()) {
                return Err(SelectError::DuplicateSystem(system.clone()));
            }
        }
        Ok(CandidateSet { id: id.into(), sentence, candidates })
    }

    /// Candidates named `sys0, sys1, ...`.
    pub fn from_graphs(
        id: impl Into<String>,
        sentence: Option<String>,
        graphs: impl IntoIterator<Item = AmrGraph>,
    ) -> Result<Self, SelectError> {
        let candidates = graphs.into_iter().enumerate().map(|(i, g)| (format!("sys{i}"), g)).collect();
        CandidateSet::new(id, sentence, candidates)
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidates(&self) -> &[(String, AmrGraph)] {
        &self.candidates
    }

    pub fn graph(&self, index: usize) -> &AmrGraph {
        &self.candidates[index].1
    }

    pub fn graphs(&self) -> impl ExactSizeIterator<Item = &AmrGraph> {
        self.candidates.iter().map(|(_, g)| g)
    }

    /// Request id for candidate `index`: `"{set id}::{system id}"`.
    pub fn request_id(&self, index: usize) -> String {
        format!("{}::{}", self.id, self.candidates[index].0)
    }

    fn sentence_for_scoring(&self) -> Result<&str, SelectError> {
        self.sentence.as_deref().ok_or_else(|| SelectError::MissingSentence(self.id.clone()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub chosen_index: usize,
    pub per_candidate_scores: Vec<f64>,
    pub strategy: SelectionStrategy,
}

impl SelectionResult {
    pub fn chosen<'a>(&self, set: &'a CandidateSet) -> &'a AmrGraph {
        set.graph(self.chosen_index)
    }
}

/// First index of the maximum.
pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// First index of the minimum.
pub(crate) fn argmin(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = i;
        }
    }
    best
}

/// Picks the candidate with the highest mean SMATCH F1 against the others.
/// A single candidate scores 1.0.
pub fn select_smatch_avg(set: &CandidateSet, restarts: usize) -> SelectionResult {
    select_smatch_avg_with(set, &SmatchConfig::with_restarts(restarts))
}

pub fn select_smatch_avg_with(set: &CandidateSet, config: &SmatchConfig) -> SelectionResult {
    let l = set.len();
    let scores: Vec<f64> = (0..l)
        .map(|i| {
            if l == 1 {
                return 1.0;
            }
            let total: f64 = (0..l)
                .filter(|&j| j != i)
                .map(|j| compute_smatch_with(set.graph(i), set.graph(j), config).score.f1)
                .sum();
            total / (l - 1) as f64
        })
        .collect();
    SelectionResult {
        chosen_index: argmax(&scores),
        per_candidate_scores: scores,
        strategy: SelectionStrategy::SmatchAvg,
    }
}

/// Picks the candidate closest to `gold`: the upper bound of any selector.
pub fn select_oracle_best(set: &CandidateSet, gold: &AmrGraph, restarts: usize) -> SelectionResult {
    select_oracle_best_with(set, gold, &SmatchConfig::with_restarts(restarts))
}

pub fn select_oracle_best_with(set: &CandidateSet, gold: &AmrGraph, config: &SmatchConfig) -> SelectionResult {
    let scores: Vec<f64> = set.graphs().map(|g| compute_smatch_with(g, gold, config).score.f1).collect();
    SelectionResult {
        chosen_index: argmax(&scores),
        per_candidate_scores: scores,
        strategy: SelectionStrategy::OracleBest,
    }
}

/// One request per candidate, each conditioned on the sentence and every
/// candidate (the target included).
pub fn ppl_zero_requests(set: &CandidateSet) -> Result<Vec<ScorerRequest>, SelectError> {
    let sentence = set.sentence_for_scoring()?;
    let context: Vec<String> = set.graphs().map(serialize_penman).collect();
    Ok((0..set.len())
        .map(|i| ScorerRequest {
            request_id: set.request_id(i),
            sentence: sentence.to_string(),
            context_graphs: context.clone(),
            target_graph: context[i].clone(),
        })
        .collect())
}

/// One request per candidate, conditioned on the sentence only.
pub fn ppl_avg_requests(set: &CandidateSet) -> Result<Vec<ScorerRequest>, SelectError> {
    let sentence = set.sentence_for_scoring()?;
    Ok((0..set.len())
        .map(|i| ScorerRequest {
            request_id: set.request_id(i),
            sentence: sentence.to_string(),
            context_graphs: Vec::new(),
            target_graph: serialize_penman(set.graph(i)),
        })
        .collect())
}

/// Picks the candidate with the lowest perplexity given the sentence and
/// all candidates.
pub fn select_ppl_zero(set: &CandidateSet, scorer: &mut dyn Scorer) -> Result<SelectionResult, SelectError> {
    let requests = ppl_zero_requests(set)?;
    let scores: Vec<f64> = scorer.score_batch(&requests)?.into_iter().map(|p| p.value()).collect();
    Ok(SelectionResult {
        chosen_index: argmin(&scores),
        per_candidate_scores: scores,
        strategy: SelectionStrategy::PplZero,
    })
}

/// Picks the candidate with the lowest perplexity averaged over `scorers`,
/// each conditioned on the sentence alone. Any scorer failure fails the
/// selection.
pub fn select_ppl_avg(set: &CandidateSet, scorers: &mut [&mut dyn Scorer]) -> Result<SelectionResult, SelectError> {
    if scorers.is_empty() {
        return Err(SelectError::NoScorers);
    }
    let requests = ppl_avg_requests(set)?;
    let mut per_scorer = Vec::with_capacity(scorers.len());
    for scorer in scorers.iter_mut() {
        per_scorer.push(scorer.score_batch(&requests)?);
    }
    let scores = average_perplexities(&per_scorer);
    Ok(SelectionResult {
        chosen_index: argmin(&scores),
        per_candidate_scores: scores,
        strategy: SelectionStrategy::PplAvg,
    })
}

/// Candidate-wise mean over scorers.
pub(crate) fn average_perplexities(per_scorer: &[Vec<PerplexityScore>]) -> Vec<f64> {
    let n = per_scorer.first().map_or(0, Vec::len);
    (0..n).map(|i| per_scorer.iter().map(|s| s[i].value()).sum::<f64>() / per_scorer.len() as f64).collect()
}
