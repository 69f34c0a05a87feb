//! Seeded random graph generators for property tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{AmrGraph, Attribute, Concept, Constant, Relation, Role, Variable};

/// Shape of a graph from [`random_graph`].
#[derive(Clone, Debug)]
pub struct RandomGraphConfig {
    /// Number of variables, at least 1.
    pub nodes: usize,
    /// Extra relations added on top of the spanning tree (reentrancies).
    pub extra_relations: usize,
    pub attributes: usize,
    /// Draw concepts from this many distinct labels. Small vocabularies make
    /// alignment ambiguous.
    pub concept_vocabulary: usize,
    pub role_vocabulary: usize,
}

impl Default for RandomGraphConfig {
    fn default() -> Self {
        RandomGraphConfig { nodes: 6, extra_relations: 2, attributes: 2, concept_vocabulary: 5, role_vocabulary: 4 }
    }
}

const CONCEPTS: &[&str] = &[
    "want-01",
    "boy",
    "go-02",
    "girl",
    "see-01",
    "tree",
    "city",
    "big",
    "person",
    "run-02",
    "dog",
    "thing",
    "say-01",
    "house",
    "believe-01",
    "cat",
];
const ROLES: &[&str] = &[":ARG0", ":ARG1", ":mod", ":time", ":ARG2", ":location", ":poss", ":manner"];
const CONSTANTS: &[&str] = &["-", "\"x\"", "1", "\"15:00\"", "+"];
const ATTR_ROLES: &[&str] = &[":polarity", ":quant", ":value", ":op1"];

fn fresh_names<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Variable> {
    let letters = b"abcdefghijklmnopqrstuvwxy";
    let mut names: Vec<Variable> = (0..n)
        .map(|i| {
            let l = letters[rng.gen_range(0..letters.len())] as char;
            Variable::new(format!("{l}{i}")).expect("valid name")
        })
        .collect();
    names.shuffle(rng);
    names
}

/// A random connected graph: a random tree plus extra relations between
/// earlier and later nodes (so it stays acyclic) plus random attributes.
pub fn random_graph<R: Rng + ?Sized>(rng: &mut R, config: &RandomGraphConfig) -> AmrGraph {
    let n = config.nodes.max(1);
    let vars = fresh_names(rng, n);
    let cv = config.concept_vocabulary.clamp(1, CONCEPTS.len());
    let rv = config.role_vocabulary.clamp(1, ROLES.len());
    let concept = |rng: &mut R| Concept::new(CONCEPTS[rng.gen_range(0..cv)]).unwrap();
    let role = |rng: &mut R| Role::new(ROLES[rng.gen_range(0..rv)]).unwrap();

    let instances: Vec<(Variable, Concept)> = vars.iter().map(|v| (v.clone(), concept(rng))).collect();
    let mut relations = Vec::new();
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        relations.push(Relation { source: vars[parent].clone(), role: role(rng), target: vars[i].clone() });
    }
    if n > 1 {
        for _ in 0..config.extra_relations {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a == b {
                continue;
            }
            let (s, t) = (a.min(b), a.max(b));
            relations.push(Relation { source: vars[s].clone(), role: role(rng), target: vars[t].clone() });
        }
    }
    let mut attributes = Vec::new();
    for _ in 0..config.attributes {
        attributes.push(Attribute {
            source: vars[rng.gen_range(0..n)].clone(),
            role: Role::new(ATTR_ROLES[rng.gen_range(0..ATTR_ROLES.len())]).unwrap(),
            value: Constant::new(CONSTANTS[rng.gen_range(0..CONSTANTS.len())]).unwrap(),
        });
    }
    AmrGraph::new(vars[0].clone(), instances, relations, attributes).expect("generator keeps invariants")
}

const PLAIN_PREDICATES: &[&str] = &["want-01", "go-02", "see-01", "say-01", "believe-01", "run-02"];
const PLAIN_OBJECTS: &[&str] = &["boy", "tree", "big", "dog", "thing", "house", "cat", "movie"];
const ENTITY_TYPES: &[&str] = &["person", "city", "organization", "country"];
const PREDICATE_ROLES: &[&str] = &[":ARG0", ":ARG1", ":ARG2", ":mod", ":time", ":location"];
const OBJECT_ROLES: &[&str] = &[":mod", ":poss", ":location", ":part", ":topic"];
const NAME_PARTS: &[&str] = &["\"Antonio\"", "\"Banderas\"", "\"New\"", "\"York\"", "\"Rome\""];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Predicate,
    Object,
    Entity,
    Name,
    Connector,
}

/// A random graph that passes every structural check of
/// [`crate::validate::validate_graph`]: `:ARG` roles only leave predicates,
/// `:op` roles only leave connectors and names, names are well formed and
/// connectors have contiguous `:opN` children.
///
/// `nodes` is a target; composite structures may overshoot it by two.
pub fn random_well_formed<R: Rng + ?Sized>(rng: &mut R, nodes: usize) -> AmrGraph {
    let target = nodes.max(1);
    let mut kinds: Vec<Kind> = Vec::new();
    let mut concepts: Vec<&str> = Vec::new();
    let mut rels: Vec<(usize, String, usize)> = Vec::new();
    let mut attrs: Vec<(usize, String, String)> = Vec::new();

    let plain = |rng: &mut R, kinds: &mut Vec<Kind>, concepts: &mut Vec<&str>| -> usize {
        if rng.gen_bool(0.5) {
            kinds.push(Kind::Predicate);
            concepts.push(PLAIN_PREDICATES.choose(rng).unwrap());
        } else {
            kinds.push(Kind::Object);
            concepts.push(PLAIN_OBJECTS.choose(rng).unwrap());
        }
        kinds.len() - 1
    };
    let role_for = |rng: &mut R, kind: Kind| -> String {
        let pool = if kind == Kind::Predicate { PREDICATE_ROLES } else { OBJECT_ROLES };
        pool.choose(rng).unwrap().to_string()
    };

    kinds.push(Kind::Predicate);
    concepts.push(PLAIN_PREDICATES.choose(rng).unwrap());

    while kinds.len() < target {
        let parents: Vec<usize> =
            (0..kinds.len()).filter(|&i| matches!(kinds[i], Kind::Predicate | Kind::Object | Kind::Entity)).collect();
        let parent = *parents.choose(rng).unwrap();
        let role = role_for(rng, kinds[parent]);
        let roll: f64 = rng.gen();
        if roll < 0.15 && kinds.len() + 2 <= target + 1 {
            kinds.push(Kind::Entity);
            concepts.push(ENTITY_TYPES.choose(rng).unwrap());
            let entity = kinds.len() - 1;
            rels.push((parent, role, entity));
            kinds.push(Kind::Name);
            concepts.push("name");
            let name = kinds.len() - 1;
            rels.push((entity, ":name".into(), name));
            for k in 1..=rng.gen_range(1..=3) {
                attrs.push((name, format!(":op{k}"), NAME_PARTS.choose(rng).unwrap().to_string()));
            }
            if rng.gen_bool(0.3) {
                attrs.push((entity, ":wiki".into(), "\"Q1\"".into()));
            }
        } else if roll < 0.3 && kinds.len() + 3 <= target + 2 {
            kinds.push(Kind::Connector);
            concepts.push(if rng.gen_bool(0.5) { "and" } else { "or" });
            let conn = kinds.len() - 1;
            rels.push((parent, role, conn));
            for k in 1..=rng.gen_range(2..=3) {
                let child = plain(rng, &mut kinds, &mut concepts);
                rels.push((conn, format!(":op{k}"), child));
            }
        } else {
            let child = plain(rng, &mut kinds, &mut concepts);
            rels.push((parent, role, child));
        }
    }

    // reentrancies from earlier to later plain nodes
    let n = kinds.len();
    for _ in 0..rng.gen_range(0..=2) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        let (s, t) = (a.min(b), a.max(b));
        if s == t
            || !matches!(kinds[s], Kind::Predicate | Kind::Object | Kind::Entity)
            || matches!(kinds[t], Kind::Name)
        {
            continue;
        }
        let role = role_for(rng, kinds[s]);
        rels.push((s, role, t));
    }
    for (i, kind) in kinds.iter().enumerate() {
        if matches!(kind, Kind::Predicate | Kind::Object) && rng.gen_bool(0.15) {
            attrs.push((i, ":polarity".into(), "-".into()));
        }
    }

    let vars = fresh_names(rng, n);
    let instances = (0..n).map(|i| (vars[i].clone(), Concept::new(concepts[i]).unwrap()));
    let relations = rels.into_iter().map(|(s, r, t)| Relation {
        source: vars[s].clone(),
        role: Role::new(r).unwrap(),
        target: vars[t].clone(),
    });
    let attributes = attrs.into_iter().map(|(s, r, v)| Attribute {
        source: vars[s].clone(),
        role: Role::new(r).unwrap(),
        value: Constant::new(v).unwrap(),
    });
    AmrGraph::new(
        vars[0].clone(),
        instances.collect::<Vec<_>>(),
        relations.collect::<Vec<_>>(),
        attributes.collect::<Vec<_>>(),
    )
    .expect("generator keeps invariants")
}
