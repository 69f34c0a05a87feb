//! SMATCH: F1 over the maximum triple overlap between two graphs.
//!
//! The overlap is maximized over injective variable alignments. That
//! search is NP-hard, so [`compute_smatch`] runs restarted hill climbing;
//! [`best_alignment_exact`] enumerates alignments with branch and bound and
//! serves as the oracle for small graphs.

mod breakdown;
mod engine;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{extract_triples, AmrGraph, Triple, TripleSet, Variable};

pub use breakdown::{compute_breakdown, compute_breakdown_with, BreakdownScores, SubMetric};
use engine::Problem;

pub const DEFAULT_RESTARTS: usize = 8;
pub const DEFAULT_EXACT_BOUND: usize = 10;
pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmatchError {
    #[error("exact search needs at most {bound} variables on the smaller side, got {size}")]
    TooLarge { size: usize, bound: usize },
    #[error("alignment is not injective: {0} is the image of two variables")]
    NotInjective(Variable),
}

/// Partial injective map from candidate variables to reference variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    map: BTreeMap<Variable, Variable>,
}

impl Alignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Variable, Variable)>) -> Result<Self, SmatchError> {
        let mut a = Alignment::new();
        for (c, r) in pairs {
            a.insert(c, r)?;
        }
        Ok(a)
    }

    /// Maps `candidate` to `reference`, replacing any previous image of
    /// `candidate`. Fails if another variable already maps to `reference`.
    pub fn insert(&mut self, candidate: Variable, reference: Variable) -> Result<(), SmatchError> {
        if self.map.iter().any(|(c, r)| r == &reference && c != &candidate) {
            return Err(SmatchError::NotInjective(reference));
        }
        self.map.insert(candidate, reference);
        Ok(())
    }

    pub fn get(&self, candidate: &Variable) -> Option<&Variable> {
        self.map.get(candidate)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Variable, &Variable)> {
        self.map.iter()
    }

    /// The reverse map, reference -> candidate.
    pub fn inverse(&self) -> Alignment {
        Alignment { map: self.map.iter().map(|(c, r)| (r.clone(), c.clone())).collect() }
    }

    fn from_mapping(problem: &Problem, mapping: &[Option<usize>]) -> Self {
        let map = mapping
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.map(|j| (problem.cand_vars[i].clone(), problem.ref_vars[j].clone())))
            .collect();
        Alignment { map }
    }
}

/// Match counts and the derived precision, recall and F1, all in [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmatchScore {
    pub matched: usize,
    pub candidate_total: usize,
    pub reference_total: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl SmatchScore {
    pub fn from_counts(matched: usize, candidate_total: usize, reference_total: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let f1 = ratio(2 * matched, candidate_total + reference_total);
        SmatchScore {
            matched,
            candidate_total,
            reference_total,
            precision: ratio(matched, candidate_total),
            recall: ratio(matched, reference_total),
            f1,
        }
    }

    /// Like [`from_counts`](Self::from_counts), but two empty sets agree
    /// perfectly (P = R = F1 = 1). Used by sub-metrics whose triple filter
    /// may select nothing on either side.
    pub fn from_counts_vacuous(matched: usize, candidate_total: usize, reference_total: usize) -> Self {
        if candidate_total == 0 && reference_total == 0 {
            SmatchScore { matched: 0, candidate_total: 0, reference_total: 0, precision: 1.0, recall: 1.0, f1: 1.0 }
        } else {
            Self::from_counts(matched, candidate_total, reference_total)
        }
    }

    /// F1 as the exact fraction `2 * matched / (candidate_total + reference_total)`.
    pub fn f1_ratio(&self) -> (usize, usize) {
        (2 * self.matched, self.candidate_total + self.reference_total)
    }

    /// Adds counts for corpus-level micro averaging.
    pub fn accumulate(&self, other: &SmatchScore) -> SmatchScore {
        SmatchScore::from_counts(
            self.matched + other.matched,
            self.candidate_total + other.candidate_total,
            self.reference_total + other.reference_total,
        )
    }

    pub fn swapped(&self) -> SmatchScore {
        SmatchScore::from_counts(self.matched, self.reference_total, self.candidate_total)
    }
}

impl fmt::Display for SmatchScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P {:.1} R {:.1} F1 {:.1}", 100.0 * self.precision, 100.0 * self.recall, 100.0 * self.f1)
    }
}

/// Hill-climbing parameters. The search is a pure function of the two
/// triple sets and this config.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmatchConfig {
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SmatchConfig {
    fn default() -> Self {
        SmatchConfig { restarts: DEFAULT_RESTARTS, seed: DEFAULT_SEED }
    }
}

impl SmatchConfig {
    pub fn with_restarts(restarts: usize) -> Self {
        SmatchConfig { restarts: restarts.max(1), ..Self::default() }
    }

    /// A config whose seed also depends on `stream`, for independent
    /// per-item searches that stay reproducible under parallelism.
    pub fn derive(&self, stream: u64) -> Self {
        // splitmix64 step
        let mut z = self.seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        SmatchConfig { restarts: self.restarts, seed: z ^ (z >> 31) }
    }
}

/// Which alignment search to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Search {
    Climb(SmatchConfig),
    Exact { bound: usize },
}

impl Search {
    pub fn align(&self, candidate: &TripleSet, reference: &TripleSet) -> Result<SmatchResult, SmatchError> {
        match self {
            Search::Climb(cfg) => Ok(align_triples(candidate, reference, cfg)),
            Search::Exact { bound } => align_triples_exact(candidate, reference, *bound),
        }
    }

    pub fn score(&self, candidate: &AmrGraph, reference: &AmrGraph) -> Result<SmatchScore, SmatchError> {
        Ok(self.align(&extract_triples(candidate), &extract_triples(reference))?.score)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmatchResult {
    pub alignment: Alignment,
    pub score: SmatchScore,
}

/// Counts candidate triples that, with variables mapped through
/// `alignment`, appear in `reference`. Triples with an unmapped variable
/// never match.
pub fn matched_count(candidate: &TripleSet, reference: &TripleSet, alignment: &Alignment) -> usize {
    let m = |v: &Variable| alignment.get(v).cloned();
    candidate
        .iter()
        .filter(|t| {
            let mapped = match t {
                Triple::Root(v) => m(v).map(Triple::Root),
                Triple::Instance(v, c) => m(v).map(|v| Triple::Instance(v, c.clone())),
                Triple::Relation(s, r, tg) => m(s).zip(m(tg)).map(|(s, tg)| Triple::Relation(s, r.clone(), tg)),
                Triple::Attribute(s, r, c) => m(s).map(|s| Triple::Attribute(s, r.clone(), c.clone())),
            };
            mapped.is_some_and(|t| reference.contains(&t))
        })
        .count()
}

/// Hill-climbing SMATCH over triple sets.
pub fn align_triples(candidate: &TripleSet, reference: &TripleSet, config: &SmatchConfig) -> SmatchResult {
    let problem = Problem::new(candidate, reference);
    let (mapping, matched) = problem.search(config.restarts, config.seed);
    SmatchResult {
        alignment: Alignment::from_mapping(&problem, &mapping),
        score: SmatchScore::from_counts(matched as usize, candidate.len(), reference.len()),
    }
}

/// Exhaustive SMATCH over triple sets; fails when the smaller side has more
/// than `bound` variables.
pub fn align_triples_exact(
    candidate: &TripleSet,
    reference: &TripleSet,
    bound: usize,
) -> Result<SmatchResult, SmatchError> {
    let forward = Problem::new(candidate, reference);
    let size = forward.n().min(forward.m());
    if size > bound {
        return Err(SmatchError::TooLarge { size, bound });
    }
    // The match relation is symmetric, so search from the smaller side.
    let alignment = if forward.n() <= forward.m() {
        let (mapping, _) = forward.exhaustive();
        Alignment::from_mapping(&forward, &mapping)
    } else {
        let backward = Problem::new(reference, candidate);
        let (mapping, _) = backward.exhaustive();
        Alignment::from_mapping(&backward, &mapping).inverse()
    };
    let matched = matched_count(candidate, reference, &alignment);
    Ok(SmatchResult { alignment, score: SmatchScore::from_counts(matched, candidate.len(), reference.len()) })
}

/// SMATCH with `restarts` climbs (one greedy, the rest random) and the
/// default seed.
pub fn compute_smatch(candidate: &AmrGraph, reference: &AmrGraph, restarts: usize) -> SmatchScore {
    compute_smatch_with(candidate, reference, &SmatchConfig::with_restarts(restarts)).score
}

pub fn compute_smatch_with(candidate: &AmrGraph, reference: &AmrGraph, config: &SmatchConfig) -> SmatchResult {
    align_triples(&extract_triples(candidate), &extract_triples(reference), config)
}

/// The optimal alignment, by exhaustive search, with the default size bound.
pub fn best_alignment_exact(
    candidate: &AmrGraph,
    reference: &AmrGraph,
) -> Result<(Alignment, SmatchScore), SmatchError> {
    best_alignment_exact_bounded(candidate, reference, DEFAULT_EXACT_BOUND)
}

pub fn best_alignment_exact_bounded(
    candidate: &AmrGraph,
    reference: &AmrGraph,
    bound: usize,
) -> Result<(Alignment, SmatchScore), SmatchError> {
    let r = align_triples_exact(&extract_triples(candidate), &extract_triples(reference), bound)?;
    Ok((r.alignment, r.score))
}

/// Exact-SMATCH F1 of 1.0 between two graphs: same triples up to renaming.
/// Cheap necessary conditions are checked before the search.
pub fn isomorphic(a: &AmrGraph, b: &AmrGraph) -> bool {
    let ta = extract_triples(a);
    let tb = extract_triples(b);
    if ta.len() != tb.len() || a.num_instances() != b.num_instances() {
        return false;
    }
    let concepts = |g: &AmrGraph| {
        let mut c: Vec<String> = g.instances().map(|(_, c)| c.to_string()).collect();
        c.sort();
        c
    };
    if concepts(a) != concepts(b) {
        return false;
    }
    let r = align_triples(&ta, &tb, &SmatchConfig::default());
    if r.score.matched == ta.len() {
        return true;
    }
    match align_triples_exact(&ta, &tb, usize::MAX) {
        Ok(r) => r.score.matched == ta.len(),
        Err(_) => false,
    }
}
