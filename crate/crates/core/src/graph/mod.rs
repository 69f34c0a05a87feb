//! The AMR graph data model.
//!
//! An [`AmrGraph`] is a rooted, labeled, possibly reentrant directed graph.
//! Variables carry exactly one concept; relations connect two variables;
//! attributes attach a [`Constant`] to a variable. Graphs are immutable once
//! built and every constructor checks the structural invariants, so any
//! `AmrGraph` value can be serialized back to Penman notation.

mod penman;
pub mod random;
mod triples;

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use penman::{detokenize, linearize, parse_penman, serialize_penman, tokenize, ParseError, ParseErrorKind};
pub use triples::{extract_triples, Triple, TripleSet};

/// A node identifier such as `z0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Variable(String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Result<Self, GraphError> {
        let name = name.into();
        let valid = !name.is_empty()
            && !name.starts_with(':')
            && !name.chars().any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '/' | '"'));
        if valid {
            Ok(Variable(name))
        } else {
            Err(GraphError::InvalidLabel { what: "variable", label: name })
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A node concept, e.g. `schedule-01` or `person`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Concept(String);

impl Concept {
    pub fn new(label: impl Into<String>) -> Result<Self, GraphError> {
        let label = label.into();
        let valid = !label.is_empty()
            && !label.starts_with('"')
            && !label.starts_with(':')
            && !label.chars().any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '"'));
        if valid {
            Ok(Concept(label))
        } else {
            Err(GraphError::InvalidLabel { what: "concept", label })
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// True for PropBank-style frames: the label ends in `-` plus two or
    /// three decimal digits (`schedule-01`, `have-org-role-91`).
    pub fn is_predicate(&self) -> bool {
        frame_stem(&self.0).is_some()
    }

    /// The concept with its frame sense suffix removed (`duck-01` -> `duck`).
    /// Non-frame concepts are returned unchanged.
    pub fn without_sense(&self) -> Concept {
        match frame_stem(&self.0) {
            Some(stem) => Concept(stem.to_string()),
            None => self.clone(),
        }
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Free-function form of [`Concept::is_predicate`].
pub fn is_predicate(concept: &Concept) -> bool {
    concept.is_predicate()
}

fn frame_stem(label: &str) -> Option<&str> {
    let dash = label.rfind('-')?;
    let digits = &label[dash + 1..];
    if dash > 0 && (2..=3).contains(&digits.len()) && digits.bytes().all(|b| b.is_ascii_digit()) {
        Some(&label[..dash])
    } else {
        None
    }
}

/// A literal attribute value: a quoted string (kept with its quotes), a
/// number, or a bare symbol such as `-`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Constant(String);

impl Constant {
    pub fn new(value: impl Into<String>) -> Result<Self, GraphError> {
        let value = value.into();
        let valid = if value.starts_with('"') {
            value.len() >= 2 && value.ends_with('"')
        } else {
            !value.is_empty()
                && !value.starts_with(':')
                && !value.chars().any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '/' | '"'))
        };
        if valid {
            Ok(Constant(value))
        } else {
            Err(GraphError::InvalidLabel { what: "constant", label: value })
        }
    }

    /// Wraps `text` in double quotes, escaping embedded quotes and backslashes.
    pub fn quoted(text: &str) -> Self {
        let mut out = String::with_capacity(text.len() + 2);
        out.push('"');
        for c in text.chars() {
            if c == '"' || c == '\\' {
                out.push('\\');
            }
            out.push(c);
        }
        out.push('"');
        Constant(out)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_quoted(&self) -> bool {
        self.0.starts_with('"')
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An edge or attribute label, always beginning with `:`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Role(String);

impl Role {
    pub fn new(label: impl Into<String>) -> Result<Self, GraphError> {
        let label = label.into();
        let valid = label.len() > 1
            && label.starts_with(':')
            && !label.chars().any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '"'));
        if valid {
            Ok(Role(label))
        } else {
            Err(GraphError::InvalidLabel { what: "role", label })
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// `:ARG0`, `:ARG12`, `:ARG1-of`.
    pub fn is_arg(&self) -> bool {
        self.numbered(":ARG", true).is_some()
    }

    pub fn is_inverse(&self) -> bool {
        self.0.ends_with("-of")
    }

    /// `:op1`, `:op2`, ... (not `:op1-of`).
    pub fn op_index(&self) -> Option<u32> {
        self.numbered(":op", false)
    }

    /// `:snt1`, `:snt2`, ...
    pub fn snt_index(&self) -> Option<u32> {
        self.numbered(":snt", false)
    }

    fn numbered(&self, prefix: &str, allow_of: bool) -> Option<u32> {
        let rest = self.0.strip_prefix(prefix)?;
        let digits = if allow_of { rest.strip_suffix("-of").unwrap_or(rest) } else { rest };
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        digits.parse().ok()
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Relation {
    pub source: Variable,
    pub role: Role,
    pub target: Variable,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Attribute {
    pub source: Variable,
    pub role: Role,
    pub value: Constant,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("invalid {what} label {label:?}")]
    InvalidLabel { what: &'static str, label: String },
    #[error("variable {0} is declared twice")]
    DuplicateInstance(Variable),
    #[error("variable {0} is used but has no instance")]
    MissingInstance(Variable),
    #[error("variable {0} is not reachable from the root")]
    Unreachable(Variable),
}

/// A rooted AMR graph.
///
/// Invariants checked on construction:
/// * every variable mentioned by the root, a relation or an attribute has
///   exactly one instance;
/// * every variable is reachable from the root following relations in their
///   stored direction, so the graph always has a Penman spanning tree;
/// * relations and attributes contain no exact duplicates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmrGraph {
    root: Variable,
    instances: IndexMap<Variable, Concept>,
    relations: Vec<Relation>,
    attributes: Vec<Attribute>,
}

impl AmrGraph {
    /// Builds a graph, dropping exact duplicate relations and attributes.
    pub fn new(
        root: Variable,
        instances: impl IntoIterator<Item = (Variable, Concept)>,
        relations: impl IntoIterator<Item = Relation>,
        attributes: impl IntoIterator<Item = Attribute>,
    ) -> Result<Self, GraphError> {
        let mut map = IndexMap::new();
        for (var, concept) in instances {
            if map.insert(var.clone(), concept).is_some() {
                return Err(GraphError::DuplicateInstance(var));
            }
        }
        let mut seen = HashSet::new();
        let relations: Vec<Relation> = relations.into_iter().filter(|r| seen.insert(r.clone())).collect();
        let mut seen = HashSet::new();
        let attributes: Vec<Attribute> = attributes.into_iter().filter(|a| seen.insert(a.clone())).collect();

        let graph = AmrGraph { root, instances: map, relations, attributes };
        graph.check()?;
        Ok(graph)
    }

    fn check(&self) -> Result<(), GraphError> {
        let declared = |v: &Variable| {
            if self.instances.contains_key(v) {
                Ok(())
            } else {
                Err(GraphError::MissingInstance(v.clone()))
            }
        };
        declared(&self.root)?;
        for r in &self.relations {
            declared(&r.source)?;
            declared(&r.target)?;
        }
        for a in &self.attributes {
            declared(&a.source)?;
        }
        let reached = self.reachable();
        if let Some(v) = self.instances.keys().find(|v| !reached.contains(*v)) {
            return Err(GraphError::Unreachable(v.clone()));
        }
        Ok(())
    }

    fn reachable(&self) -> HashSet<Variable> {
        let mut out: HashMap<&Variable, Vec<&Variable>> = HashMap::new();
        for r in &self.relations {
            out.entry(&r.source).or_default().push(&r.target);
        }
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([&self.root]);
        seen.insert(self.root.clone());
        while let Some(v) = queue.pop_front() {
            for &t in out.get(v).into_iter().flatten() {
                if seen.insert(t.clone()) {
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    /// Parses Penman text. Shorthand for [`parse_penman`].
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        parse_penman(text)
    }

    pub fn root(&self) -> &Variable {
        &self.root
    }

    pub fn instances(&self) -> impl ExactSizeIterator<Item = (&Variable, &Concept)> {
        self.instances.iter()
    }

    pub fn concept(&self, var: &Variable) -> Option<&Concept> {
        self.instances.get(var)
    }

    pub fn variables(&self) -> impl ExactSizeIterator<Item = &Variable> {
        self.instances.keys()
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn num_instances(&self) -> usize {
        self.instances.len()
    }

    pub fn outgoing<'a>(&'a self, var: &'a Variable) -> impl Iterator<Item = &'a Relation> + 'a {
        self.relations.iter().filter(move |r| &r.source == var)
    }

    pub fn attributes_of<'a>(&'a self, var: &'a Variable) -> impl Iterator<Item = &'a Attribute> + 'a {
        self.attributes.iter().filter(move |a| &a.source == var)
    }

    /// Variables in depth-first discovery order from the root, following
    /// outgoing relations in stored order. This is the order in which the
    /// Penman serializer declares them.
    pub fn dfs_order(&self) -> Vec<Variable> {
        let mut children: HashMap<&Variable, Vec<&Variable>> = HashMap::new();
        for r in &self.relations {
            children.entry(&r.source).or_default().push(&r.target);
        }
        let mut order = Vec::with_capacity(self.instances.len());
        let mut seen = HashSet::new();
        // explicit stack of (node, next child index) to avoid recursion depth limits
        let mut stack: Vec<(&Variable, usize)> = vec![(&self.root, 0)];
        seen.insert(&self.root);
        order.push(self.root.clone());
        while let Some((v, idx)) = stack.pop() {
            let kids = children.get(v).map(Vec::as_slice).unwrap_or(&[]);
            if let Some(&child) = kids.get(idx) {
                stack.push((v, idx + 1));
                if seen.insert(child) {
                    order.push(child.clone());
                    stack.push((child, 0));
                }
            }
        }
        order
    }

    /// Renames variables to `z0`, `z1`, ... in depth-first discovery order.
    pub fn rename_variables(&self) -> AmrGraph {
        let mapping: HashMap<Variable, Variable> =
            self.dfs_order().into_iter().enumerate().map(|(i, v)| (v, Variable(format!("z{i}")))).collect();
        self.rename_with(&mapping)
    }

    fn rename_with(&self, mapping: &HashMap<Variable, Variable>) -> AmrGraph {
        let m = |v: &Variable| mapping[v].clone();
        AmrGraph {
            root: m(&self.root),
            instances: self.instances.iter().map(|(v, c)| (m(v), c.clone())).collect(),
            relations: self
                .relations
                .iter()
                .map(|r| Relation { source: m(&r.source), role: r.role.clone(), target: m(&r.target) })
                .collect(),
            attributes: self
                .attributes
                .iter()
                .map(|a| Attribute { source: m(&a.source), role: a.role.clone(), value: a.value.clone() })
                .collect(),
        }
    }

    /// In-degree of every variable over relations.
    pub fn in_degrees(&self) -> HashMap<&Variable, usize> {
        let mut deg: HashMap<&Variable, usize> = self.instances.keys().map(|v| (v, 0)).collect();
        for r in &self.relations {
            *deg.entry(&r.target).or_default() += 1;
        }
        deg
    }
}

/// Free-function form of [`AmrGraph::rename_variables`].
pub fn rename_variables(graph: &AmrGraph) -> AmrGraph {
    graph.rename_variables()
}

impl fmt::Display for AmrGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_penman(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(s: &str) -> Variable {
        Variable::new(s).unwrap()
    }

    #[test]
    fn predicate_pattern() {
        let p = |s: &str| Concept::new(s).unwrap().is_predicate();
        assert!(p("schedule-01"));
        assert!(p("have-org-role-91"));
        assert!(p("run-101"));
        assert!(!p("movie"));
        assert!(!p("date-entity"));
        assert!(!p("run-1"));
        assert!(!p("run-1234"));
        assert!(!p("-01"));
    }

    #[test]
    fn sense_stripping() {
        let c = Concept::new("duck-01").unwrap();
        assert_eq!(c.without_sense().as_str(), "duck");
        let c = Concept::new("premiere").unwrap();
        assert_eq!(c.without_sense().as_str(), "premiere");
    }

    #[test]
    fn role_classes() {
        let r = |s: &str| Role::new(s).unwrap();
        assert!(r(":ARG0").is_arg());
        assert!(r(":ARG1-of").is_arg());
        assert!(!r(":ARGx").is_arg());
        assert!(!r(":mod").is_arg());
        assert_eq!(r(":op3").op_index(), Some(3));
        assert_eq!(r(":op1-of").op_index(), None);
        assert_eq!(r(":snt2").snt_index(), Some(2));
        assert!(Role::new(":").is_err());
        assert!(Role::new("ARG0").is_err());
    }

    #[test]
    fn label_validation() {
        assert!(Variable::new("z0").is_ok());
        assert!(Variable::new("").is_err());
        assert!(Variable::new("a b").is_err());
        assert!(Variable::new("a/b").is_err());
        assert!(Concept::new("\"x\"").is_err());
        assert!(Constant::new("\"15:00\"").is_ok());
        assert!(Constant::new("-").is_ok());
        assert!(Constant::new("\"").is_err());
        assert_eq!(Constant::quoted("a\"b").as_str(), "\"a\\\"b\"");
    }

    #[test]
    fn construction_invariants() {
        let c = |s: &str| Concept::new(s).unwrap();
        let rel = |s: &str, r: &str, t: &str| Relation { source: var(s), role: Role::new(r).unwrap(), target: var(t) };
        let err = AmrGraph::new(var("a"), [(var("a"), c("x"))], [rel("a", ":ARG0", "b")], []).unwrap_err();
        assert_eq!(err, GraphError::MissingInstance(var("b")));

        let err = AmrGraph::new(var("a"), [(var("a"), c("x")), (var("b"), c("y"))], [], []).unwrap_err();
        assert_eq!(err, GraphError::Unreachable(var("b")));

        // reachable only against the stored direction
        let err = AmrGraph::new(var("a"), [(var("a"), c("x")), (var("b"), c("y"))], [rel("b", ":ARG0", "a")], [])
            .unwrap_err();
        assert_eq!(err, GraphError::Unreachable(var("b")));

        let g = AmrGraph::new(
            var("a"),
            [(var("a"), c("x")), (var("b"), c("y"))],
            [rel("a", ":ARG0", "b"), rel("a", ":ARG0", "b")],
            [],
        )
        .unwrap();
        assert_eq!(g.relations().len(), 1);
    }

    #[test]
    fn rename_follows_dfs() {
        let g = AmrGraph::parse("(s / see-01 :ARG0 (p / person) :ARG1 (t / tree :mod p))").unwrap();
        let r = g.rename_variables();
        assert_eq!(r.root().as_str(), "z0");
        let names: Vec<_> = r.variables().map(|v| v.as_str().to_string()).collect();
        assert_eq!(names, ["z0", "z1", "z2"]);
        assert_eq!(r.concept(&var("z1")).unwrap().as_str(), "person");
        assert_eq!(r.rename_variables(), r);
    }
}
