#![allow(dead_code)]

use std::collections::HashSet;

use amr_ensemble::corpus::{parse_corpus, CorpusEntry};
use amr_ensemble::graph::random::{random_graph, random_well_formed, RandomGraphConfig};
use amr_ensemble::graph::{extract_triples, AmrGraph, Attribute, Concept, Constant, Relation, Role, Triple, Variable};
use amr_ensemble::validate::ViolationKind;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture_path(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture_entries(name: &str) -> Vec<CorpusEntry> {
    let path = fixture_path(name);
    parse_corpus(&std::fs::read_to_string(&path).unwrap(), path.as_ref()).unwrap()
}

pub fn fixture(name: &str) -> AmrGraph {
    fixture_entries(name).remove(0).graph
}

pub fn g(text: &str) -> AmrGraph {
    AmrGraph::parse(text).unwrap()
}

/// F1 as an exact fraction `2m / (c + r)`.
pub fn f1_fraction(matched: usize, cand: usize, refr: usize) -> (usize, usize) {
    (2 * matched, cand + refr)
}

/// `a > b` for fractions with positive denominators.
pub fn fraction_gt(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 * b.1 > b.0 * a.1
}

/// Best match count over every partial injective variable mapping,
/// counted by mapping each triple and looking it up. Shares nothing with
/// the library's search code; only usable for a handful of variables.
pub fn brute_force_matched(cand: &AmrGraph, refr: &AmrGraph) -> usize {
    let ct: Vec<Triple> = extract_triples(cand).iter().cloned().collect();
    let rt: HashSet<String> = extract_triples(refr).iter().map(|t| t.to_string()).collect();
    let cv: Vec<Variable> = cand.variables().cloned().collect();
    let rv: Vec<Variable> = refr.variables().cloned().collect();
    let mut best = 0;
    let mut mapping: Vec<Option<usize>> = vec![None; cv.len()];
    let mut used = vec![false; rv.len()];
    fn count(
        ct: &[Triple],
        rt: &HashSet<String>,
        cv: &[Variable],
        rv: &[Variable],
        mapping: &[Option<usize>],
    ) -> usize {
        let m = |v: &Variable| -> Option<Variable> {
            let i = cv.iter().position(|x| x == v)?;
            mapping[i].map(|j| rv[j].clone())
        };
        ct.iter()
            .filter(|t| {
                let mapped = match t {
                    Triple::Root(v) => m(v).map(Triple::Root),
                    Triple::Instance(v, c) => m(v).map(|v| Triple::Instance(v, c.clone())),
                    Triple::Relation(s, r, tg) => m(s).zip(m(tg)).map(|(s, tg)| Triple::Relation(s, r.clone(), tg)),
                    Triple::Attribute(s, r, c) => m(s).map(|s| Triple::Attribute(s, r.clone(), c.clone())),
                };
                mapped.is_some_and(|t| rt.contains(&t.to_string()))
            })
            .count()
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        i: usize,
        ct: &[Triple],
        rt: &HashSet<String>,
        cv: &[Variable],
        rv: &[Variable],
        mapping: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        best: &mut usize,
    ) {
        if i == cv.len() {
            *best = (*best).max(count(ct, rt, cv, rv, mapping));
            return;
        }
        rec(i + 1, ct, rt, cv, rv, mapping, used, best);
        for j in 0..rv.len() {
            if !used[j] {
                used[j] = true;
                mapping[i] = Some(j);
                rec(i + 1, ct, rt, cv, rv, mapping, used, best);
                mapping[i] = None;
                used[j] = false;
            }
        }
    }
    rec(0, &ct, &rt, &cv, &rv, &mut mapping, &mut used, &mut best);
    best
}

const VOCAB: &[&str] = &["want-01", "boy", "go-02", "girl", "see-01"];
const ROLES: &[&str] = &[":ARG0", ":ARG1", ":mod", ":time"];

/// A modified copy of `graph`: some concepts and roles changed, maybe an
/// attribute added, variables renamed at random.
pub fn perturb<R: Rng>(rng: &mut R, graph: &AmrGraph) -> AmrGraph {
    let mut names: Vec<String> = (0..graph.num_instances()).map(|i| format!("p{i}")).collect();
    names.shuffle(rng);
    let rename = |v: &Variable| {
        let i = graph.variables().position(|x| x == v).unwrap();
        Variable::new(names[i].clone()).unwrap()
    };
    let instances: Vec<(Variable, Concept)> = graph
        .instances()
        .map(|(v, c)| {
            let c = if rng.gen_bool(0.2) { Concept::new(*VOCAB.choose(rng).unwrap()).unwrap() } else { c.clone() };
            (rename(v), c)
        })
        .collect();
    let relations: Vec<Relation> = graph
        .relations()
        .iter()
        .map(|r| Relation {
            source: rename(&r.source),
            role: if rng.gen_bool(0.2) { Role::new(*ROLES.choose(rng).unwrap()).unwrap() } else { r.role.clone() },
            target: rename(&r.target),
        })
        .collect();
    let mut attributes: Vec<Attribute> = graph
        .attributes()
        .iter()
        .filter(|_| rng.gen_bool(0.8))
        .map(|a| Attribute { source: rename(&a.source), role: a.role.clone(), value: a.value.clone() })
        .collect();
    if rng.gen_bool(0.3) {
        let (v, _) = &instances[rng.gen_range(0..instances.len())];
        attributes.push(Attribute {
            source: v.clone(),
            role: Role::new(":polarity").unwrap(),
            value: Constant::new("-").unwrap(),
        });
    }
    AmrGraph::new(rename(graph.root()), instances, relations, attributes).unwrap()
}

/// A graph pair with at most `max_nodes` variables per side: either a
/// graph and a perturbed copy, or two independent graphs over a small
/// vocabulary.
pub fn random_pair<R: Rng>(rng: &mut R, max_nodes: usize) -> (AmrGraph, AmrGraph) {
    let cfg = |rng: &mut R| RandomGraphConfig {
        nodes: rng.gen_range(1..=max_nodes),
        extra_relations: rng.gen_range(0..=2),
        attributes: rng.gen_range(0..=2),
        concept_vocabulary: rng.gen_range(2..=5),
        role_vocabulary: rng.gen_range(1..=4),
    };
    let c = cfg(rng);
    let a = random_graph(rng, &c);
    let b = if rng.gen_bool(0.6) {
        perturb(rng, &a)
    } else {
        let c = cfg(rng);
        random_graph(rng, &c)
    };
    (a, b)
}

pub type Expected = (ViolationKind, Variable, Option<Role>);

fn add(
    graph: &AmrGraph,
    nodes: &[(&str, &str)],
    rels: &[(&Variable, &str, &str)],
    attrs: &[(&Variable, &str, &str)],
) -> AmrGraph {
    let var = |s: &str| Variable::new(s).unwrap();
    let instances: Vec<(Variable, Concept)> = graph
        .instances()
        .map(|(v, c)| (v.clone(), c.clone()))
        .chain(nodes.iter().map(|(v, c)| (var(v), Concept::new(*c).unwrap())))
        .collect();
    let relations: Vec<Relation> = graph
        .relations()
        .iter()
        .cloned()
        .chain(rels.iter().map(|(s, r, t)| Relation {
            source: (*s).clone(),
            role: Role::new(*r).unwrap(),
            target: var(t),
        }))
        .collect();
    let attributes: Vec<Attribute> = graph
        .attributes()
        .iter()
        .cloned()
        .chain(attrs.iter().map(|(s, r, c)| Attribute {
            source: (*s).clone(),
            role: Role::new(*r).unwrap(),
            value: Constant::new(*c).unwrap(),
        }))
        .collect();
    AmrGraph::new(graph.root().clone(), instances, relations, attributes).unwrap()
}

const CONNECTORS: &[&str] = &["and", "or"];

fn pick<'a, R: Rng>(rng: &mut R, graph: &'a AmrGraph, keep: impl Fn(&str) -> bool) -> Option<&'a Variable> {
    let pool: Vec<&Variable> = graph.instances().filter(|(_, c)| keep(c.as_str())).map(|(v, _)| v).collect();
    pool.choose(rng).copied()
}

fn is_plain_object(c: &str) -> bool {
    !Concept::new(c).unwrap().is_predicate() && c != "name" && !CONNECTORS.contains(&c)
}

fn ops_of(graph: &AmrGraph, v: &Variable) -> usize {
    graph.relations().iter().filter(|r| &r.source == v && r.role.op_index().is_some()).count()
        + graph.attributes().iter().filter(|a| &a.source == v && a.role.op_index().is_some()).count()
}

/// Injects one violation of `kind` into a well-formed graph and returns the
/// corrupted graph with the violation's expected location.
pub fn inject<R: Rng>(rng: &mut R, graph: &AmrGraph, kind: ViolationKind) -> (AmrGraph, Expected) {
    let role = |s: &str| Some(Role::new(s).unwrap());
    let root = graph.root();
    match kind {
        ViolationKind::ArgOnNonPredicate => match pick(rng, graph, is_plain_object) {
            Some(v) => {
                let r = *[":ARG0", ":ARG1", ":ARG2"].choose(rng).unwrap();
                (add(graph, &[("inj0", "thing")], &[(v, r, "inj0")], &[]), (kind, v.clone(), role(r)))
            }
            None => {
                let x = Variable::new("inj0").unwrap();
                let out = add(
                    graph,
                    &[("inj0", "thing"), ("inj1", "boy")],
                    &[(root, ":mod", "inj0"), (&x, ":ARG1", "inj1")],
                    &[],
                );
                (out, (kind, x, role(":ARG1")))
            }
        },
        ViolationKind::OpOrSntOnPredicate => {
            let v = pick(rng, graph, |c| Concept::new(c).unwrap().is_predicate()).unwrap_or(root);
            let r = *[":op1", ":op2", ":snt1"].choose(rng).unwrap();
            (add(graph, &[("inj0", "thing")], &[(v, r, "inj0")], &[]), (kind, v.clone(), role(r)))
        }
        ViolationKind::EntityStructure => {
            let name = pick(rng, graph, |c| c == "name");
            match name {
                Some(n) if rng.gen_bool(0.5) => {
                    (add(graph, &[("inj0", "thing")], &[(n, ":mod", "inj0")], &[]), (kind, n.clone(), role(":mod")))
                }
                Some(n) if rng.gen_bool(0.5) => {
                    let k = ops_of(graph, n) + 2;
                    let r = format!(":op{k}");
                    (add(graph, &[], &[], &[(n, &r, "\"Gap\"")]), (kind, n.clone(), role(&r)))
                }
                _ => {
                    let v = pick(rng, graph, |c| c != "name" && !CONNECTORS.contains(&c)).unwrap();
                    let has_name = graph.outgoing(v).any(|r| r.role.as_str() == ":name");
                    if has_name {
                        // entity: give its name node a relation instead
                        let n = graph.outgoing(v).find(|r| r.role.as_str() == ":name").unwrap().target.clone();
                        (add(graph, &[("inj0", "thing")], &[(&n, ":mod", "inj0")], &[]), (kind, n, role(":mod")))
                    } else {
                        (add(graph, &[], &[], &[(v, ":wiki", "\"Q9\"")]), (kind, v.clone(), role(":wiki")))
                    }
                }
            }
        }
        ViolationKind::ConnectorStructure => match pick(rng, graph, |c| CONNECTORS.contains(&c)) {
            Some(c) if rng.gen_bool(0.5) => {
                let k = ops_of(graph, c) + 2;
                let r = format!(":op{k}");
                (add(graph, &[("inj0", "thing")], &[(c, &r, "inj0")], &[]), (kind, c.clone(), role(&r)))
            }
            Some(c) => {
                (add(graph, &[("inj0", "thing")], &[(c, ":poss", "inj0")], &[]), (kind, c.clone(), role(":poss")))
            }
            None => {
                let v = pick(rng, graph, is_plain_object).unwrap_or(root);
                let a = Variable::new("inj0").unwrap();
                let out =
                    add(graph, &[("inj0", "and"), ("inj1", "boy")], &[(v, ":mod", "inj0"), (&a, ":op1", "inj1")], &[]);
                (out, (kind, a, None))
            }
        },
    }
}

pub fn random_clean<R: Rng>(rng: &mut R) -> AmrGraph {
    let n = rng.gen_range(3..=12);
    random_well_formed(rng, n)
}
