use std::collections::{HashMap, HashSet};
use std::fmt;

use super::{AmrGraph, Attribute, Concept, Constant, Relation, Role, Variable};

/// The unit SMATCH counts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Triple {
    Root(Variable),
    Instance(Variable, Concept),
    Relation(Variable, Role, Variable),
    Attribute(Variable, Role, Constant),
}

impl Triple {
    /// The role label, for relation and attribute triples.
    pub fn role(&self) -> Option<&Role> {
        match self {
            Triple::Relation(_, r, _) | Triple::Attribute(_, r, _) => Some(r),
            _ => None,
        }
    }

    pub fn source(&self) -> &Variable {
        match self {
            Triple::Root(v) | Triple::Instance(v, _) => v,
            Triple::Relation(s, _, _) | Triple::Attribute(s, _, _) => s,
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Triple::Root(v) => write!(f, "(empty, :root, {v})"),
            Triple::Instance(v, c) => write!(f, "({v}, :instance, {c})"),
            Triple::Relation(s, r, t) => write!(f, "({s}, {r}, {t})"),
            Triple::Attribute(s, r, c) => write!(f, "({s}, {r}, {c})"),
        }
    }
}

/// A set of triples that remembers insertion order.
#[derive(Clone, Debug, Default)]
pub struct TripleSet {
    order: Vec<Triple>,
    members: HashSet<Triple>,
}

impl TripleSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a triple; returns false if it was already present.
    pub fn insert(&mut self, triple: Triple) -> bool {
        if self.members.insert(triple.clone()) {
            self.order.push(triple);
            true
        } else {
            false
        }
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.members.contains(triple)
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Triple> {
        self.order.iter()
    }

    /// Keeps the triples for which `keep` returns true.
    pub fn filter(&self, mut keep: impl FnMut(&Triple) -> bool) -> TripleSet {
        self.iter().filter(|t| keep(t)).cloned().collect()
    }

    /// Applies `f` to every triple; collisions collapse.
    pub fn map(&self, f: impl FnMut(&Triple) -> Triple) -> TripleSet {
        self.iter().map(f).collect()
    }

    /// Every variable mentioned, in first-mention order.
    pub fn variables(&self) -> Vec<Variable> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut add = |v: &Variable| {
            if seen.insert(v.clone()) {
                out.push(v.clone());
            }
        };
        for t in &self.order {
            match t {
                Triple::Root(v) | Triple::Instance(v, _) | Triple::Attribute(v, _, _) => add(v),
                Triple::Relation(s, _, t) => {
                    add(s);
                    add(t);
                }
            }
        }
        out
    }
}

impl PartialEq for TripleSet {
    fn eq(&self, other: &Self) -> bool {
        self.members == other.members
    }
}

impl Eq for TripleSet {}

impl FromIterator<Triple> for TripleSet {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        let mut set = TripleSet::new();
        for t in iter {
            set.insert(t);
        }
        set
    }
}

impl<'a> IntoIterator for &'a TripleSet {
    type Item = &'a Triple;
    type IntoIter = std::slice::Iter<'a, Triple>;

    fn into_iter(self) -> Self::IntoIter {
        self.iter()
    }
}

/// Decomposes a graph into root, instance, relation and attribute triples.
///
/// Triples come out in Penman document order: each variable's instance
/// triple follows the edge that introduces it.
pub fn extract_triples(graph: &AmrGraph) -> TripleSet {
    let mut kids: HashMap<&Variable, Vec<&Relation>> = HashMap::new();
    for r in graph.relations() {
        kids.entry(&r.source).or_default().push(r);
    }
    let mut attrs: HashMap<&Variable, Vec<&Attribute>> = HashMap::new();
    for a in graph.attributes() {
        attrs.entry(&a.source).or_default().push(a);
    }

    let mut set = TripleSet::new();
    set.insert(Triple::Root(graph.root().clone()));
    let mut visited = HashSet::new();
    visit(graph, graph.root(), &kids, &attrs, &mut visited, &mut set);
    set
}

fn visit<'g>(
    graph: &'g AmrGraph,
    var: &'g Variable,
    kids: &HashMap<&'g Variable, Vec<&'g Relation>>,
    attrs: &HashMap<&'g Variable, Vec<&'g Attribute>>,
    visited: &mut HashSet<&'g Variable>,
    set: &mut TripleSet,
) {
    visited.insert(var);
    let concept = graph.concept(var).expect("checked invariant").clone();
    set.insert(Triple::Instance(var.clone(), concept));
    for a in attrs.get(var).into_iter().flatten() {
        set.insert(Triple::Attribute(a.source.clone(), a.role.clone(), a.value.clone()));
    }
    for r in kids.get(var).into_iter().flatten() {
        set.insert(Triple::Relation(r.source.clone(), r.role.clone(), r.target.clone()));
        if !visited.contains(&r.target) {
            visit(graph, &r.target, kids, attrs, visited, set);
        }
    }
}
