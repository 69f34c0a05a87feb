//! Structural well-formedness checks.
//!
//! SMATCH treats a graph as a bag of triples and never notices when a merge
//! produces something no annotator could have written. Four checks catch
//! the common cases:
//!
//! 1. [`ArgOnNonPredicate`](ViolationKind::ArgOnNonPredicate): an `:ARGn` edge leaving a
//!    concept that is not a frame. For inverted `:ARGn-of` edges the frame is
//!    the edge's target, so the target is checked instead.
//! 2. [`OpOrSntOnPredicate`](ViolationKind::OpOrSntOnPredicate): an `:opN` or `:sntN` edge
//!    leaving a frame.
//! 3. [`EntityStructure`](ViolationKind::EntityStructure): a `name` node must carry only
//!    constant `:opN` attributes numbered `1..=k`, and must hang off a
//!    `:name` edge; `:wiki` may only appear next to an outgoing `:name`.
//! 4. [`ConnectorStructure`](ViolationKind::ConnectorStructure): `and`/`or`/`either`/`neither`
//!    need at least two `:opN` children numbered `1..=k` and nothing else
//!    but modifiers; `multi-sentence` needs `:sntN` numbered `1..=k`.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::{AmrGraph, Role, Variable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViolationKind {
    ArgOnNonPredicate,
    OpOrSntOnPredicate,
    EntityStructure,
    ConnectorStructure,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub variable: Variable,
    pub role: Option<Role>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.role {
            Some(r) => write!(f, "{} at ({} {}): {}", self.kind, self.variable, r, self.message),
            None => write!(f, "{} at {}: {}", self.kind, self.variable, self.message),
        }
    }
}

/// Violations in document order (source variable in depth-first order,
/// then role).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Violation> {
        self.violations.iter()
    }
}

const CONNECTORS: &[&str] = &["and", "or", "either", "neither"];

/// Roles a connector may carry besides its operands.
const CONNECTOR_MODIFIERS: &[&str] = &[
    ":mod",
    ":polarity",
    ":time",
    ":location",
    ":manner",
    ":frequency",
    ":duration",
    ":condition",
    ":concession",
    ":purpose",
    ":cause",
    ":degree",
    ":quant",
    ":mode",
    ":polite",
    ":extent",
    ":direction",
    ":source",
    ":destination",
    ":path",
    ":topic",
    ":medium",
    ":example",
    ":beneficiary",
    ":instrument",
    ":accompanier",
    ":domain",
];

enum Target<'g> {
    Var(&'g Variable),
    Const,
}

struct Collector<'g> {
    graph: &'g AmrGraph,
    out: Vec<Violation>,
}

impl<'g> Collector<'g> {
    fn push(&mut self, kind: ViolationKind, var: &Variable, role: Option<&Role>, message: String) {
        self.out.push(Violation { kind, variable: var.clone(), role: role.cloned(), message });
    }

    fn concept(&self, v: &Variable) -> &'g str {
        self.graph.concept(v).map(|c| c.as_str()).unwrap_or("")
    }
}

pub fn validate_graph(graph: &AmrGraph) -> ValidationReport {
    let mut edges: HashMap<&Variable, Vec<(&Role, Target)>> = HashMap::new();
    for a in graph.attributes() {
        edges.entry(&a.source).or_default().push((&a.role, Target::Const));
    }
    for r in graph.relations() {
        edges.entry(&r.source).or_default().push((&r.role, Target::Var(&r.target)));
    }
    let name_targets: HashSet<&Variable> =
        graph.relations().iter().filter(|r| r.role.as_str() == ":name").map(|r| &r.target).collect();

    let mut c = Collector { graph, out: Vec::new() };
    let order = graph.dfs_order();
    for var in &order {
        let concept = graph.concept(var).expect("checked invariant");
        let out = edges.get(var).map(Vec::as_slice).unwrap_or(&[]);
        let predicate = concept.is_predicate();

        // (i) and (ii)
        for (role, target) in out {
            if role.is_arg() {
                if role.is_inverse() {
                    match target {
                        Target::Var(t) if !graph.concept(t).is_some_and(|c| c.is_predicate()) => {
                            c.push(
                                ViolationKind::ArgOnNonPredicate,
                                var,
                                Some(role),
                                format!("{role} points at non-predicate {}", c.concept(t)),
                            );
                        }
                        Target::Const => c.push(
                            ViolationKind::ArgOnNonPredicate,
                            var,
                            Some(role),
                            format!("{role} points at a constant"),
                        ),
                        _ => {}
                    }
                } else if !predicate {
                    c.push(
                        ViolationKind::ArgOnNonPredicate,
                        var,
                        Some(role),
                        format!("non-predicate {concept} has argument {role}"),
                    );
                }
            }
            if predicate && (role.op_index().is_some() || role.snt_index().is_some()) {
                c.push(ViolationKind::OpOrSntOnPredicate, var, Some(role), format!("predicate {concept} has {role}"));
            }
        }

        // (iii)
        if concept.as_str() == "name" {
            let mut ops = Vec::new();
            for (role, target) in out {
                match (role.op_index(), target) {
                    (Some(i), Target::Const) => ops.push((i, *role)),
                    (_, Target::Var(_)) => c.push(
                        ViolationKind::EntityStructure,
                        var,
                        Some(role),
                        format!("name node has relation {role}"),
                    ),
                    (None, Target::Const) => c.push(
                        ViolationKind::EntityStructure,
                        var,
                        Some(role),
                        format!("name node has non-operand attribute {role}"),
                    ),
                }
            }
            if ops.is_empty() {
                c.push(ViolationKind::EntityStructure, var, None, "name node has no :op attributes".into());
            } else {
                check_contiguous(&mut c, ViolationKind::EntityStructure, var, ops);
            }
            if !name_targets.contains(var) {
                c.push(ViolationKind::EntityStructure, var, None, "name node is not the target of :name".into());
            }
        }
        if out.iter().any(|(r, t)| r.as_str() == ":wiki" && matches!(t, Target::Const)) {
            let has_name = out.iter().any(|(r, t)| r.as_str() == ":name" && matches!(t, Target::Var(_)));
            if !has_name {
                let role = out.iter().find(|(r, _)| r.as_str() == ":wiki").map(|(r, _)| *r);
                c.push(ViolationKind::EntityStructure, var, role, ":wiki without :name".into());
            }
        }

        // (iv)
        if CONNECTORS.contains(&concept.as_str()) {
            let mut ops = Vec::new();
            for (role, _) in out {
                if let Some(i) = role.op_index() {
                    ops.push((i, *role));
                } else if !role.is_inverse() && !CONNECTOR_MODIFIERS.contains(&role.as_str()) {
                    c.push(
                        ViolationKind::ConnectorStructure,
                        var,
                        Some(role),
                        format!("connector {concept} has non-modifier role {role}"),
                    );
                }
            }
            if ops.len() < 2 {
                c.push(
                    ViolationKind::ConnectorStructure,
                    var,
                    None,
                    format!("connector {concept} has {} operand(s)", ops.len()),
                );
            }
            if !ops.is_empty() {
                check_contiguous(&mut c, ViolationKind::ConnectorStructure, var, ops);
            }
        } else if concept.as_str() == "multi-sentence" {
            let snts: Vec<(u32, &Role)> = out.iter().filter_map(|(r, _)| r.snt_index().map(|i| (i, *r))).collect();
            if snts.is_empty() {
                c.push(ViolationKind::ConnectorStructure, var, None, "multi-sentence has no :snt".into());
            } else {
                check_contiguous(&mut c, ViolationKind::ConnectorStructure, var, snts);
            }
        }
    }

    let rank: HashMap<&Variable, usize> = order.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut violations = c.out;
    violations.sort_by(|a, b| {
        let key = |v: &Violation| (rank[&v.variable], v.role.clone());
        key(a).cmp(&key(b)).then(a.kind.cmp(&b.kind))
    });
    ValidationReport { violations }
}

/// Operand numbers must be exactly `1..=k` with no repeats. Reports the
/// first operand that breaks the sequence.
fn check_contiguous(c: &mut Collector, kind: ViolationKind, var: &Variable, mut ops: Vec<(u32, &Role)>) {
    ops.sort_by_key(|(i, _)| *i);
    for (expected, (i, role)) in (1u32..).zip(&ops) {
        if *i != expected {
            let what = if *i < expected { "repeated" } else { "out of sequence" };
            c.push(kind, var, Some(role), format!("operand {role} is {what}"));
            return;
        }
    }
}

pub fn is_corrupted(graph: &AmrGraph) -> bool {
    !validate_graph(graph).is_empty()
}

pub fn count_corrupted<'a>(graphs: impl IntoIterator<Item = &'a AmrGraph>) -> usize {
    graphs.into_iter().filter(|g| is_corrupted(g)).count()
}
