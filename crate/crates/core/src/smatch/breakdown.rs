//! Fine-grained sub-metrics: SMATCH over transformed or filtered triples.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{align_triples, align_triples_exact, Search, SmatchConfig, SmatchError, SmatchScore};
use crate::graph::{extract_triples, AmrGraph, Concept, Role, Triple, TripleSet, Variable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubMetric {
    Smatch,
    Unlabeled,
    NoWsd,
    Concepts,
    Ner,
    Negations,
    Wiki,
    Reentrancies,
    Srl,
}

impl SubMetric {
    pub const ALL: [SubMetric; 9] = [
        SubMetric::Smatch,
        SubMetric::Unlabeled,
        SubMetric::NoWsd,
        SubMetric::Concepts,
        SubMetric::Ner,
        SubMetric::Negations,
        SubMetric::Wiki,
        SubMetric::Reentrancies,
        SubMetric::Srl,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            SubMetric::Smatch => "SMATCH",
            SubMetric::Unlabeled => "Unlabeled",
            SubMetric::NoWsd => "NoWSD",
            SubMetric::Concepts => "Concepts",
            SubMetric::Ner => "NER",
            SubMetric::Negations => "Negations",
            SubMetric::Wiki => "Wikification",
            SubMetric::Reentrancies => "Reentrancies",
            SubMetric::Srl => "SRL",
        }
    }

    /// The triples of `graph` this sub-metric scores.
    pub fn project(&self, graph: &AmrGraph) -> TripleSet {
        let triples = extract_triples(graph);
        match self {
            SubMetric::Smatch => triples,
            SubMetric::Unlabeled => {
                let dummy = Role::new(":rel").expect("valid role");
                triples.map(|t| match t {
                    Triple::Relation(s, _, tg) => Triple::Relation(s.clone(), dummy.clone(), tg.clone()),
                    other => other.clone(),
                })
            }
            SubMetric::NoWsd => triples.map(|t| match t {
                Triple::Instance(v, c) => Triple::Instance(v.clone(), c.without_sense()),
                other => other.clone(),
            }),
            SubMetric::Concepts => triples.filter(|t| matches!(t, Triple::Instance(..))),
            SubMetric::Ner => {
                let name = Concept::new("name").expect("valid concept");
                let names: HashSet<&Variable> =
                    graph.instances().filter(|(_, c)| **c == name).map(|(v, _)| v).collect();
                triples.filter(|t| match t {
                    Triple::Instance(v, _) => names.contains(v),
                    Triple::Relation(_, r, tg) => r.as_str() == ":name" && names.contains(tg),
                    Triple::Attribute(s, r, _) => r.op_index().is_some() && names.contains(s),
                    Triple::Root(_) => false,
                })
            }
            SubMetric::Negations => triples.filter(|t| t.role().is_some_and(|r| r.as_str() == ":polarity")),
            SubMetric::Wiki => triples.filter(|t| matches!(t, Triple::Attribute(_, r, _) if r.as_str() == ":wiki")),
            SubMetric::Reentrancies => {
                let deg = graph.in_degrees();
                edges_with_endpoints(&triples, |t| {
                    matches!(t,
                    Triple::Relation(_, _, tg) if deg.get(tg).copied().unwrap_or(0) >= 2)
                })
            }
            SubMetric::Srl => edges_with_endpoints(&triples, |t| matches!(t, Triple::Relation(_, r, _) if r.is_arg())),
        }
    }
}

/// Selected relation triples plus the instance triples of their endpoints.
fn edges_with_endpoints(triples: &TripleSet, select: impl Fn(&Triple) -> bool) -> TripleSet {
    let mut endpoints = HashSet::new();
    for t in triples {
        if let Triple::Relation(s, _, tg) = t {
            if select(t) {
                endpoints.insert(s.clone());
                endpoints.insert(tg.clone());
            }
        }
    }
    triples.filter(|t| match t {
        Triple::Relation(..) => select(t),
        Triple::Instance(v, _) => endpoints.contains(v),
        _ => false,
    })
}

/// Every sub-metric score for one graph pair (or summed over a corpus).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakdownScores {
    pub smatch: SmatchScore,
    pub unlabeled: SmatchScore,
    pub no_wsd: SmatchScore,
    pub concepts: SmatchScore,
    pub ner: SmatchScore,
    pub negations: SmatchScore,
    pub wiki: SmatchScore,
    pub reentrancies: SmatchScore,
    pub srl: SmatchScore,
}

impl BreakdownScores {
    pub fn get(&self, metric: SubMetric) -> &SmatchScore {
        match metric {
            SubMetric::Smatch => &self.smatch,
            SubMetric::Unlabeled => &self.unlabeled,
            SubMetric::NoWsd => &self.no_wsd,
            SubMetric::Concepts => &self.concepts,
            SubMetric::Ner => &self.ner,
            SubMetric::Negations => &self.negations,
            SubMetric::Wiki => &self.wiki,
            SubMetric::Reentrancies => &self.reentrancies,
            SubMetric::Srl => &self.srl,
        }
    }

    fn get_mut(&mut self, metric: SubMetric) -> &mut SmatchScore {
        match metric {
            SubMetric::Smatch => &mut self.smatch,
            SubMetric::Unlabeled => &mut self.unlabeled,
            SubMetric::NoWsd => &mut self.no_wsd,
            SubMetric::Concepts => &mut self.concepts,
            SubMetric::Ner => &mut self.ner,
            SubMetric::Negations => &mut self.negations,
            SubMetric::Wiki => &mut self.wiki,
            SubMetric::Reentrancies => &mut self.reentrancies,
            SubMetric::Srl => &mut self.srl,
        }
    }

    /// All-empty scores, the identity for [`accumulate`](Self::accumulate).
    pub fn empty() -> Self {
        let e = SmatchScore::from_counts_vacuous(0, 0, 0);
        BreakdownScores {
            smatch: e,
            unlabeled: e,
            no_wsd: e,
            concepts: e,
            ner: e,
            negations: e,
            wiki: e,
            reentrancies: e,
            srl: e,
        }
    }

    /// Sums counts per sub-metric (micro average).
    pub fn accumulate(&self, other: &BreakdownScores) -> BreakdownScores {
        let mut out = *self;
        for m in SubMetric::ALL {
            let (a, b) = (self.get(m), other.get(m));
            *out.get_mut(m) = SmatchScore::from_counts_vacuous(
                a.matched + b.matched,
                a.candidate_total + b.candidate_total,
                a.reference_total + b.reference_total,
            );
        }
        out
    }
}

pub fn compute_breakdown(candidate: &AmrGraph, reference: &AmrGraph) -> BreakdownScores {
    compute_breakdown_with(candidate, reference, &Search::Climb(SmatchConfig::default()))
        .expect("hill climbing has no size bound")
}

/// Breakdown with a chosen alignment search. Each sub-metric aligns its own
/// projected triples.
pub fn compute_breakdown_with(
    candidate: &AmrGraph,
    reference: &AmrGraph,
    search: &Search,
) -> Result<BreakdownScores, SmatchError> {
    let mut out = BreakdownScores::empty();
    for (k, m) in SubMetric::ALL.into_iter().enumerate() {
        let c = m.project(candidate);
        let r = m.project(reference);
        let matched = if c.is_empty() || r.is_empty() {
            0
        } else {
            match search {
                Search::Climb(cfg) => align_triples(&c, &r, &cfg.derive(k as u64)).score.matched,
                Search::Exact { bound } => align_triples_exact(&c, &r, *bound)?.score.matched,
            }
        };
        *out.get_mut(m) = SmatchScore::from_counts_vacuous(matched, c.len(), r.len());
    }
    Ok(out)
}
