//! Pivot-voting graph merging.
//!
//! Each candidate in turn serves as the pivot. The other candidates are
//! aligned to it and vote on every pivot node, relation and attribute as
//! well as on relations and nodes the pivot lacks. Elements whose vote
//! fraction reaches the threshold survive; the pivot votes for its own
//! elements. With two candidates and the default threshold of 0.5 every
//! element of either graph survives, which is how conflicting edges (a
//! `:mod` and an `:ARG1` between the same two nodes) end up side by side
//! in the output.
//!
//! [`graphene_base`] picks the merged pivot with the highest mean support;
//! [`graphene_smatch`] picks the one with the highest mean SMATCH against
//! the original candidates.

use std::collections::{HashMap, HashSet, VecDeque};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{AmrGraph, Attribute, Concept, Relation, Role, Variable};
use crate::smatch::{compute_smatch_with, Alignment, SmatchConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MergeError {
    #[error("no candidate graphs")]
    NoCandidates,
    #[error("need at least 2 candidates, got {0}")]
    TooFewCandidates(usize),
    #[error("merging needs at least one graph besides the pivot")]
    NoVoters,
    #[error("vote threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),
}

/// What to do when asked to ensemble fewer than two candidates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Degenerate {
    /// Return the single candidate unchanged, with a warning.
    PassThrough,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeConfig {
    /// Minimum fraction of graphs (pivot included) that must carry an
    /// element for it to survive; compared with `>=`.
    pub vote_threshold: f64,
    /// Keep every competing label between the same node pair (or value for
    /// the same node and role) that reaches the threshold. When false only
    /// the best supported one survives, the pivot's winning ties.
    pub keep_ties: bool,
    pub smatch: SmatchConfig,
    pub degenerate: Degenerate,
}

impl Default for MergeConfig {
    fn default() -> Self {
        MergeConfig {
            vote_threshold: 0.5,
            keep_ties: true,
            smatch: SmatchConfig::default(),
            degenerate: Degenerate::PassThrough,
        }
    }
}

impl MergeConfig {
    fn check(&self) -> Result<(), MergeError> {
        if self.vote_threshold > 0.0 && self.vote_threshold <= 1.0 {
            Ok(())
        } else {
            Err(MergeError::InvalidThreshold(self.vote_threshold))
        }
    }
}

/// A voted element, in pivot variable space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Element {
    Node {
        variable: Variable,
        concept: Concept,
    },
    Relation(Relation),
    Attribute(Attribute),
    /// A node absent from the pivot, attached below `anchor` by `role`.
    AddedNode {
        anchor: Variable,
        role: Role,
        concept: Concept,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoteTally {
    pub element: Element,
    pub support: usize,
    pub total_voters: usize,
}

impl VoteTally {
    pub fn fraction(&self) -> f64 {
        self.support as f64 / self.total_voters as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MergedGraph {
    /// The corrected pivot, with variables renamed `z0, z1, ...`.
    pub graph: AmrGraph,
    /// Mean vote fraction of the retained elements.
    pub support_score: f64,
    /// Tallies of the retained elements, in pivot variable names.
    pub retained: Vec<VoteTally>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleOutcome {
    pub graph: AmrGraph,
    /// Index of the winning pivot, `None` on pass-through.
    pub pivot: Option<usize>,
    /// Selection score of each merged pivot (support or mean SMATCH).
    pub pivot_scores: Vec<f64>,
}

/// Alignment from `other`'s variables to `pivot`'s.
pub fn align_to_pivot(pivot: &AmrGraph, other: &AmrGraph, config: &MergeConfig) -> Alignment {
    compute_smatch_with(other, pivot, &config.smatch).alignment
}

pub fn merge_with_pivot(
    pivot: &AmrGraph,
    others: &[AmrGraph],
    config: &MergeConfig,
) -> Result<MergedGraph, MergeError> {
    config.check()?;
    if others.is_empty() {
        return Err(MergeError::NoVoters);
    }
    let voters = others.len() + 1;
    let passes = |support: usize| support as f64 + 1e-9 >= config.vote_threshold * voters as f64;
    let tally = |element: Element, support: usize| VoteTally { element, support, total_voters: voters };

    let alignments: Vec<Alignment> = others
        .iter()
        .enumerate()
        .map(|(k, o)| {
            let cfg = MergeConfig { smatch: config.smatch.derive(k as u64), ..config.clone() };
            align_to_pivot(pivot, o, &cfg)
        })
        .collect();
    let inverses: Vec<Alignment> = alignments.iter().map(Alignment::inverse).collect();

    // nodes
    let mut presence: HashMap<&Variable, usize> = HashMap::new();
    let mut concept_votes: HashMap<&Variable, IndexMap<Concept, usize>> = HashMap::new();
    for (v, c) in pivot.instances() {
        presence.insert(v, 1);
        concept_votes.entry(v).or_default().insert(c.clone(), 1);
        for (other, inv) in others.iter().zip(&inverses) {
            if let Some(ov) = inv.get(v) {
                *presence.get_mut(v).unwrap() += 1;
                let oc = other.concept(ov).expect("aligned variable exists").clone();
                *concept_votes.get_mut(v).unwrap().entry(oc).or_default() += 1;
            }
        }
    }
    let mut decided: HashMap<&Variable, (Concept, usize)> = HashMap::new();
    let mut nodes: HashSet<&Variable> = HashSet::new();
    for v in pivot.variables() {
        let votes = &concept_votes[v];
        let (best, support) = votes
            .iter()
            .fold(None::<(&Concept, usize)>, |acc, (c, s)| match acc {
                Some((_, bs)) if bs >= *s => acc,
                _ => Some((c, *s)),
            })
            .expect("pivot concept voted");
        decided.insert(v, (best.clone(), support));
        if v == pivot.root() || passes(presence[v]) {
            nodes.insert(v);
        }
    }

    // relations and attributes in pivot space
    let mut rel_votes: IndexMap<Relation, usize> = pivot.relations().iter().map(|r| (r.clone(), 1)).collect();
    let mut attr_votes: IndexMap<Attribute, usize> = pivot.attributes().iter().map(|a| (a.clone(), 1)).collect();
    let mut additions: IndexMap<(Variable, Role, Concept), usize> = IndexMap::new();
    for (other, al) in others.iter().zip(&alignments) {
        let mut added_here = HashSet::new();
        for r in other.relations() {
            match (al.get(&r.source), al.get(&r.target)) {
                (Some(s), Some(t)) => {
                    let key = Relation { source: s.clone(), role: r.role.clone(), target: t.clone() };
                    *rel_votes.entry(key).or_default() += 1;
                }
                (Some(s), None) => {
                    let c = other.concept(&r.target).expect("valid graph").clone();
                    let key = (s.clone(), r.role.clone(), c);
                    if added_here.insert(key.clone()) {
                        *additions.entry(key).or_default() += 1;
                    }
                }
                _ => {}
            }
        }
        for a in other.attributes() {
            if let Some(s) = al.get(&a.source) {
                let key = Attribute { source: s.clone(), role: a.role.clone(), value: a.value.clone() };
                *attr_votes.entry(key).or_default() += 1;
            }
        }
    }

    let voted_rels = pick_competing(&rel_votes, |r| (r.source.clone(), r.target.clone()), config, &passes);
    let voted_attrs = pick_competing(&attr_votes, |a| (a.source.clone(), a.role.clone()), config, &passes);

    // Deleting an element must not disconnect the graph: restore pivot
    // relations (and their targets) until every kept node is reachable.
    let mut restored: Vec<&Relation> = Vec::new();
    loop {
        let live: Vec<(&Variable, &Variable)> = voted_rels
            .iter()
            .filter(|r| nodes.contains(&r.source) && nodes.contains(&r.target))
            .map(|r| (&r.source, &r.target))
            .chain(restored.iter().map(|r| (&r.source, &r.target)))
            .collect();
        let reach = reachable(pivot.root(), &live);
        if nodes.iter().all(|v| reach.contains(v)) {
            break;
        }
        let missing: HashSet<&Variable> = nodes.iter().copied().filter(|v| !reach.contains(v)).collect();
        let bridge = pivot
            .relations()
            .iter()
            .filter(|r| reach.contains(&r.source) && !reach.contains(&r.target))
            .find(|r| missing.contains(&r.target))
            .or_else(|| {
                pivot.relations().iter().find(|r| {
                    reach.contains(&r.source) && !reach.contains(&r.target) && leads_to(pivot, &r.target, &missing)
                })
            })
            .expect("pivot graph is connected");
        nodes.insert(&bridge.target);
        restored.push(bridge);
    }

    let mut retained = Vec::new();
    let mut instances: Vec<(Variable, Concept)> = Vec::new();
    for v in pivot.variables().filter(|v| nodes.contains(v)) {
        let (c, s) = &decided[v];
        instances.push((v.clone(), c.clone()));
        retained.push(tally(Element::Node { variable: v.clone(), concept: c.clone() }, *s));
    }
    let mut relations: Vec<Relation> = Vec::new();
    let mut seen_rel: HashSet<&Relation> = HashSet::new();
    for r in voted_rels
        .iter()
        .filter(|r| nodes.contains(&r.source) && nodes.contains(&r.target))
        .copied()
        .chain(restored.iter().copied())
    {
        if seen_rel.insert(r) {
            relations.push(r.clone());
            retained.push(tally(Element::Relation(r.clone()), rel_votes[r]));
        }
    }
    let mut attributes: Vec<Attribute> = Vec::new();
    for a in voted_attrs.iter().filter(|a| nodes.contains(&a.source)) {
        attributes.push((*a).clone());
        retained.push(tally(Element::Attribute((*a).clone()), attr_votes[*a]));
    }
    let taken: HashSet<String> = pivot.variables().map(|v| v.to_string()).collect();
    let mut fresh = (0..).map(|i| format!("add{i}")).filter(|n| !taken.contains(n));
    for ((anchor, role, concept), support) in &additions {
        if !passes(*support) || !nodes.contains(anchor) {
            continue;
        }
        let var = Variable::new(fresh.next().expect("infinite")).expect("valid name");
        instances.push((var.clone(), concept.clone()));
        relations.push(Relation { source: anchor.clone(), role: role.clone(), target: var });
        retained.push(tally(
            Element::AddedNode { anchor: anchor.clone(), role: role.clone(), concept: concept.clone() },
            *support,
        ));
    }

    let graph = AmrGraph::new(pivot.root().clone(), instances, relations, attributes)
        .expect("merge keeps graph invariants")
        .rename_variables();
    let support_score = retained.iter().map(VoteTally::fraction).sum::<f64>() / retained.len() as f64;
    Ok(MergedGraph { graph, support_score, retained })
}

/// Among elements sharing a group key, keep those that reach the threshold:
/// all of them with `keep_ties`, else only the best supported (first
/// inserted wins ties, so pivot elements win).
fn pick_competing<'a, T, K>(
    votes: &'a IndexMap<T, usize>,
    group: impl Fn(&T) -> K,
    config: &MergeConfig,
    passes: &impl Fn(usize) -> bool,
) -> Vec<&'a T>
where
    T: std::hash::Hash + Eq,
    K: std::hash::Hash + Eq,
{
    if config.keep_ties {
        return votes.iter().filter(|(_, s)| passes(**s)).map(|(t, _)| t).collect();
    }
    let mut best: IndexMap<K, (&T, usize)> = IndexMap::new();
    for (t, s) in votes {
        let entry = best.entry(group(t)).or_insert((t, *s));
        if *s > entry.1 {
            *entry = (t, *s);
        }
    }
    votes.iter().filter(|(t, s)| passes(**s) && std::ptr::eq(best[&group(t)].0, *t)).map(|(t, _)| t).collect()
}

fn reachable<'a>(root: &'a Variable, edges: &[(&'a Variable, &'a Variable)]) -> HashSet<&'a Variable> {
    let mut out: HashMap<&Variable, Vec<&Variable>> = HashMap::new();
    for (s, t) in edges {
        out.entry(*s).or_default().push(*t);
    }
    let mut seen = HashSet::from([root]);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &t in out.get(v).into_iter().flatten() {
            if seen.insert(t) {
                queue.push_back(t);
            }
        }
    }
    seen
}

fn leads_to(pivot: &AmrGraph, from: &Variable, targets: &HashSet<&Variable>) -> bool {
    let edges: Vec<(&Variable, &Variable)> = pivot.relations().iter().map(|r| (&r.source, &r.target)).collect();
    reachable(from, &edges).iter().any(|v| targets.contains(v))
}

fn degenerate(candidates: &[AmrGraph], config: &MergeConfig) -> Result<Option<EnsembleOutcome>, MergeError> {
    match candidates.len() {
        0 => Err(MergeError::NoCandidates),
        1 if config.degenerate == Degenerate::PassThrough => {
            log::warn!("ensembling a single candidate; passing it through");
            Ok(Some(EnsembleOutcome { graph: candidates[0].clone(), pivot: None, pivot_scores: vec![] }))
        }
        1 => Err(MergeError::TooFewCandidates(1)),
        _ => Ok(None),
    }
}

fn merge_all(candidates: &[AmrGraph], config: &MergeConfig) -> Result<Vec<MergedGraph>, MergeError> {
    (0..candidates.len())
        .map(|i| {
            let others: Vec<AmrGraph> =
                candidates.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, g)| g.clone()).collect();
            merge_with_pivot(&candidates[i], &others, config)
        })
        .collect()
}

fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// Merges with every candidate as pivot and returns the merge with the
/// highest support score (lowest pivot index on ties).
pub fn graphene_base(candidates: &[AmrGraph], config: &MergeConfig) -> Result<EnsembleOutcome, MergeError> {
    config.check()?;
    if let Some(out) = degenerate(candidates, config)? {
        return Ok(out);
    }
    let merged = merge_all(candidates, config)?;
    let scores: Vec<f64> = merged.iter().map(|m| m.support_score).collect();
    let best = argmax_first(&scores);
    Ok(EnsembleOutcome { graph: merged[best].graph.clone(), pivot: Some(best), pivot_scores: scores })
}

/// Merges with every candidate as pivot and returns the merge with the
/// highest mean SMATCH F1 against the original candidates.
pub fn graphene_smatch(candidates: &[AmrGraph], config: &MergeConfig) -> Result<EnsembleOutcome, MergeError> {
    config.check()?;
    if let Some(out) = degenerate(candidates, config)? {
        return Ok(out);
    }
    let merged = merge_all(candidates, config)?;
    let scores: Vec<f64> = merged
        .iter()
        .map(|m| {
            candidates.iter().map(|c| compute_smatch_with(&m.graph, c, &config.smatch).score.f1).sum::<f64>()
                / candidates.len() as f64
        })
        .collect();
    let best = argmax_first(&scores);
    Ok(EnsembleOutcome { graph: merged[best].graph.clone(), pivot: Some(best), pivot_scores: scores })
}
