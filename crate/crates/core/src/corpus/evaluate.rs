use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::report::{EvaluationReport, EvaluationRow, RowKind};
use super::{CorpusEntry, MultiSystemCorpus};
use crate::graph::AmrGraph;
use crate::graphene::{graphene_base, graphene_smatch, MergeConfig, MergeError};
use crate::select::{
    argmin, average_perplexities, ppl_avg_requests, ppl_zero_requests, select_oracle_best_with, select_smatch_avg_with,
    CandidateSet, PerplexityScore, Scorer, ScorerError, ScorerRequest, SelectError,
};
use crate::smatch::{compute_breakdown_with, BreakdownScores, Search, SmatchConfig};
use crate::validate::count_corrupted;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    GrapheneBase,
    GrapheneSmatch,
    SmatchAvg,
    PplZero,
    PplAvg,
    OracleBest,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::GrapheneBase,
        Strategy::GrapheneSmatch,
        Strategy::SmatchAvg,
        Strategy::PplZero,
        Strategy::PplAvg,
        Strategy::OracleBest,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::GrapheneBase => "graphene-base",
            Strategy::GrapheneSmatch => "graphene-smatch",
            Strategy::SmatchAvg => "smatch-avg",
            Strategy::PplZero => "ppl-zero",
            Strategy::PplAvg => "ppl-avg",
            Strategy::OracleBest => "oracle-best",
        }
    }

    pub fn needs_scorer(&self) -> bool {
        matches!(self, Strategy::PplZero | Strategy::PplAvg)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL.into_iter().find(|st| st.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Strategy::ALL.iter().map(Strategy::name).collect();
            format!("unknown strategy {s:?} (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold corpus has no entry for ids {0:?}")]
    MissingGold(Vec<String>),
    #[error("strategy {0} needs a perplexity scorer")]
    MissingScorer(Strategy),
    #[error("entry {id}: {source}")]
    Select { id: String, source: SelectError },
    #[error("entry {id}: {source}")]
    Merge { id: String, source: MergeError },
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationConfig {
    pub strategies: Vec<Strategy>,
    /// Base SMATCH settings. Entry `i` uses `smatch.derive(i)` for every
    /// search it runs, so results do not depend on the worker count.
    pub smatch: SmatchConfig,
    /// Merge settings; the `smatch` field is replaced per entry.
    pub merge: MergeConfig,
    /// Worker threads; `None` uses one per processor.
    pub jobs: Option<usize>,
    /// Record wall-clock time of each strategy phase.
    pub measure_time: bool,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            strategies: Strategy::ALL.to_vec(),
            smatch: SmatchConfig::default(),
            merge: MergeConfig::default(),
            jobs: None,
            measure_time: true,
        }
    }
}

fn on_pool<T: Send>(pool: Option<&ThreadPool>, f: impl FnOnce() -> T + Send) -> T {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

/// Scores every input system and every enabled strategy against `gold`.
///
/// Perplexity strategies use `scorers`: `ppl-zero` asks the first one,
/// `ppl-avg` averages over all of them. Scores are micro-averaged over the
/// corpus.
pub fn evaluate(
    corpus: &MultiSystemCorpus,
    gold: &[CorpusEntry],
    config: &EvaluationConfig,
    scorers: &mut [Box<dyn Scorer>],
) -> Result<EvaluationReport, EvalError> {
    let by_id: HashMap<&str, &AmrGraph> = gold.iter().map(|e| (e.id.as_str(), &e.graph)).collect();
    let missing: Vec<String> =
        corpus.entries.iter().filter(|e| !by_id.contains_key(e.id.as_str())).map(|e| e.id.clone()).collect();
    if !missing.is_empty() {
        return Err(EvalError::MissingGold(missing));
    }
    if let Some(s) = config.strategies.iter().find(|s| s.needs_scorer()) {
        if scorers.is_empty() {
            return Err(EvalError::MissingScorer(*s));
        }
    }
    let gold_graphs: Vec<&AmrGraph> = corpus.entries.iter().map(|e| by_id[e.id.as_str()]).collect();
    let pool = match config.jobs {
        Some(n) => {
            Some(rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| EvalError::Pool(e.to_string()))?)
        }
        None => None,
    };
    let pool = pool.as_ref();

    let sets: Vec<CandidateSet> = corpus
        .entries
        .iter()
        .map(|e| {
            let cands = corpus.systems.iter().cloned().zip(e.graphs.iter().cloned()).collect();
            CandidateSet::new(e.id.clone(), e.sentence.clone(), cands)
                .map_err(|source| EvalError::Select { id: e.id.clone(), source })
        })
        .collect::<Result<_, _>>()?;

    let score = |outputs: &[&AmrGraph]| -> (BreakdownScores, usize) {
        let per_entry: Vec<BreakdownScores> = on_pool(pool, || {
            outputs
                .par_iter()
                .zip(gold_graphs.par_iter())
                .enumerate()
                .map(|(i, (out, g))| {
                    compute_breakdown_with(out, g, &Search::Climb(config.smatch.derive(i as u64)))
                        .expect("hill climbing has no size bound")
                })
                .collect()
        });
        let total = per_entry.iter().fold(BreakdownScores::empty(), |acc, b| acc.accumulate(b));
        (total, count_corrupted(outputs.iter().copied()))
    };

    let mut rows = Vec::new();
    for (s, name) in corpus.systems.iter().enumerate() {
        let outputs: Vec<&AmrGraph> = corpus.entries.iter().map(|e| &e.graphs[s]).collect();
        let (scores, corrupted) = score(&outputs);
        rows.push(EvaluationRow { model: name.clone(), kind: RowKind::System, time_seconds: None, corrupted, scores });
    }

    for strategy in &config.strategies {
        let started = Instant::now();
        let outputs: Vec<AmrGraph> = match strategy {
            Strategy::GrapheneBase | Strategy::GrapheneSmatch => on_pool(pool, || {
                sets.par_iter()
                    .enumerate()
                    .map(|(i, set)| {
                        let cfg = MergeConfig { smatch: config.smatch.derive(i as u64), ..config.merge.clone() };
                        let graphs: Vec<AmrGraph> = set.graphs().cloned().collect();
                        let merged = match strategy {
                            Strategy::GrapheneBase => graphene_base(&graphs, &cfg),
                            _ => graphene_smatch(&graphs, &cfg),
                        };
                        merged.map(|m| m.graph).map_err(|source| EvalError::Merge { id: set.id.clone(), source })
                    })
                    .collect::<Result<Vec<_>, _>>()
            })?,
            Strategy::SmatchAvg => on_pool(pool, || {
                sets.par_iter()
                    .enumerate()
                    .map(|(i, set)| select_smatch_avg_with(set, &config.smatch.derive(i as u64)).chosen(set).clone())
                    .collect()
            }),
            Strategy::OracleBest => on_pool(pool, || {
                sets.par_iter()
                    .zip(gold_graphs.par_iter())
                    .enumerate()
                    .map(|(i, (set, g))| {
                        select_oracle_best_with(set, g, &config.smatch.derive(i as u64)).chosen(set).clone()
                    })
                    .collect()
            }),
            Strategy::PplZero => {
                let requests = build_requests(&sets, ppl_zero_requests)?;
                let scores = scorers[0].score_batch(&requests.concat())?;
                pick_by_perplexity(&sets, &requests, &[scores])
            }
            Strategy::PplAvg => {
                let requests = build_requests(&sets, ppl_avg_requests)?;
                let flat = requests.concat();
                let mut per_scorer = Vec::with_capacity(scorers.len());
                for scorer in scorers.iter_mut() {
                    per_scorer.push(scorer.score_batch(&flat)?);
                }
                pick_by_perplexity(&sets, &requests, &per_scorer)
            }
        };
        let elapsed = started.elapsed().as_secs_f64();
        let refs: Vec<&AmrGraph> = outputs.iter().collect();
        let (scores, corrupted) = score(&refs);
        rows.push(EvaluationRow {
            model: strategy.name().to_string(),
            kind: RowKind::Strategy,
            time_seconds: config.measure_time.then_some(elapsed),
            corrupted,
            scores,
        });
    }

    Ok(EvaluationReport { corpus_size: corpus.len(), seed: config.smatch.seed, restarts: config.smatch.restarts, rows })
}

fn build_requests(
    sets: &[CandidateSet],
    make: fn(&CandidateSet) -> Result<Vec<ScorerRequest>, SelectError>,
) -> Result<Vec<Vec<ScorerRequest>>, EvalError> {
    sets.iter().map(|s| make(s).map_err(|source| EvalError::Select { id: s.id.clone(), source })).collect()
}

/// Splits flat per-scorer results back into sets and picks each argmin of
/// the mean perplexity.
fn pick_by_perplexity(
    sets: &[CandidateSet],
    requests: &[Vec<ScorerRequest>],
    per_scorer: &[Vec<PerplexityScore>],
) -> Vec<AmrGraph> {
    let mut offset = 0;
    let mut out = Vec::with_capacity(sets.len());
    for (set, reqs) in sets.iter().zip(requests) {
        let chunk: Vec<Vec<PerplexityScore>> =
            per_scorer.iter().map(|s| s[offset..offset + reqs.len()].to_vec()).collect();
        offset += reqs.len();
        out.push(set.graph(argmin(&average_perplexities(&chunk))).clone());
    }
    out
}
