//! Alignment search over triple sets.
//!
//! Both the hill climber and the exhaustive search work on a [`Problem`]:
//! candidate and reference variables sorted by name, a dense matrix of
//! per-pair unary matches (root, instance, attribute and self-loop triples)
//! and the candidate's binary relations grouped by endpoint pair. Sorting
//! makes the search a function of the triple sets alone, independent of
//! the order they were produced in.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{Triple, TripleSet, Variable};

pub(crate) struct Problem {
    pub cand_vars: Vec<Variable>,
    pub ref_vars: Vec<Variable>,
    /// unary[i][j]: triples gained by mapping candidate i to reference j
    unary: Vec<Vec<u32>>,
    /// candidate relations between distinct variables, grouped by (source, target)
    pairs: Vec<(usize, usize, Vec<u32>)>,
    /// pair indices touching each candidate variable
    incident: Vec<Vec<usize>>,
    /// sorted reference relation roles, indexed `source * m + target`
    ref_pairs: Vec<Vec<u32>>,
}

impl Problem {
    pub fn new(cand: &TripleSet, refr: &TripleSet) -> Self {
        let mut cand_vars = cand.variables();
        cand_vars.sort();
        let mut ref_vars = refr.variables();
        ref_vars.sort();
        let ci: HashMap<&Variable, usize> = cand_vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let ri: HashMap<&Variable, usize> = ref_vars.iter().enumerate().map(|(i, v)| (v, i)).collect();

        // intern roles so pair comparisons are integer set lookups
        let mut roles: HashMap<String, u32> = HashMap::new();
        let mut intern = |s: &str| {
            let next = roles.len() as u32;
            *roles.entry(s.to_string()).or_insert(next)
        };

        // unary features: a string key per (variable, feature)
        let mut ref_unary: Vec<HashSet<String>> = vec![HashSet::new(); ref_vars.len()];
        let m = ref_vars.len();
        let mut ref_pairs: Vec<Vec<u32>> = vec![Vec::new(); m * m];
        for t in refr {
            match t {
                Triple::Relation(s, r, tg) if s != tg => {
                    ref_pairs[ri[s] * m + ri[tg]].push(intern(r.as_str()));
                }
                _ => {
                    ref_unary[ri[t.source()]].insert(unary_key(t));
                }
            }
        }
        let mut cand_unary: Vec<Vec<String>> = vec![Vec::new(); cand_vars.len()];
        let mut grouped: HashMap<(usize, usize), Vec<u32>> = HashMap::new();
        for t in cand {
            match t {
                Triple::Relation(s, r, tg) if s != tg => {
                    grouped.entry((ci[s], ci[tg])).or_default().push(intern(r.as_str()));
                }
                _ => cand_unary[ci[t.source()]].push(unary_key(t)),
            }
        }
        for roles in &mut ref_pairs {
            roles.sort_unstable();
            roles.dedup();
        }
        let unary = cand_unary
            .iter()
            .map(|feats| ref_unary.iter().map(|rf| feats.iter().filter(|f| rf.contains(*f)).count() as u32).collect())
            .collect();
        let mut pairs: Vec<(usize, usize, Vec<u32>)> = grouped.into_iter().map(|((s, t), r)| (s, t, r)).collect();
        pairs.sort();
        let mut incident = vec![Vec::new(); cand_vars.len()];
        for (k, (s, t, _)) in pairs.iter().enumerate() {
            incident[*s].push(k);
            incident[*t].push(k);
        }
        Problem { cand_vars, ref_vars, unary, pairs, incident, ref_pairs }
    }

    pub fn n(&self) -> usize {
        self.cand_vars.len()
    }

    pub fn m(&self) -> usize {
        self.ref_vars.len()
    }

    fn pair_score(&self, k: usize, mapping: &[Option<usize>]) -> u32 {
        let (s, t, roles) = &self.pairs[k];
        match (mapping[*s], mapping[*t]) {
            (Some(a), Some(b)) => {
                let refs = &self.ref_pairs[a * self.ref_vars.len() + b];
                if refs.is_empty() {
                    0
                } else {
                    roles.iter().filter(|r| refs.binary_search(r).is_ok()).count() as u32
                }
            }
            _ => 0,
        }
    }

    pub fn score(&self, mapping: &[Option<usize>]) -> u32 {
        let unary: u32 = mapping.iter().enumerate().filter_map(|(i, m)| m.map(|j| self.unary[i][j])).sum();
        let binary: u32 = (0..self.pairs.len()).map(|k| self.pair_score(k, mapping)).sum();
        unary + binary
    }

    /// Score contribution of the triples touching any variable in `vars`.
    fn local(&self, vars: &[usize], mapping: &[Option<usize>]) -> u32 {
        let mut total = 0;
        let mut counted: Vec<usize> = Vec::new();
        for &i in vars {
            if let Some(j) = mapping[i] {
                total += self.unary[i][j];
            }
            for &k in &self.incident[i] {
                if !counted.contains(&k) {
                    counted.push(k);
                    total += self.pair_score(k, mapping);
                }
            }
        }
        total
    }

    /// Steepest-ascent hill climbing from `mapping`. Moves are reassigning a
    /// candidate variable to a free reference variable and swapping the
    /// images of two candidate variables; the first best move in variable
    /// order wins ties.
    pub fn climb(&self, mapping: &mut [Option<usize>]) -> u32 {
        let n = self.n();
        let m = self.m();
        let mut used = vec![false; m];
        for j in mapping.iter().flatten() {
            used[*j] = true;
        }
        loop {
            let mut best_gain = 0i64;
            let mut best_move: Option<Move> = None;
            for i in 0..n {
                let before = self.local(&[i], mapping) as i64;
                let old = mapping[i];
                for (j, &taken) in used.iter().enumerate() {
                    if taken {
                        continue;
                    }
                    mapping[i] = Some(j);
                    let gain = self.local(&[i], mapping) as i64 - before;
                    if gain > best_gain {
                        best_gain = gain;
                        best_move = Some(Move::Reassign(i, j));
                    }
                }
                mapping[i] = old;
                for k in i + 1..n {
                    if mapping[i] == mapping[k] {
                        continue;
                    }
                    let before = self.local(&[i, k], mapping) as i64;
                    mapping.swap(i, k);
                    let gain = self.local(&[i, k], mapping) as i64 - before;
                    mapping.swap(i, k);
                    if gain > best_gain {
                        best_gain = gain;
                        best_move = Some(Move::Swap(i, k));
                    }
                }
            }
            match best_move {
                None => break,
                Some(Move::Reassign(i, j)) => {
                    if let Some(old) = mapping[i] {
                        used[old] = false;
                    }
                    mapping[i] = Some(j);
                    used[j] = true;
                }
                Some(Move::Swap(i, k)) => mapping.swap(i, k),
            }
        }
        self.score(mapping)
    }

    /// Greedy start: each candidate variable in order takes the free
    /// reference variable with the most unary matches (concept agreement),
    /// or stays unmapped if none matches.
    pub fn greedy_start(&self) -> Vec<Option<usize>> {
        let mut used = vec![false; self.m()];
        let mut mapping = vec![None; self.n()];
        for (i, slot) in mapping.iter_mut().enumerate() {
            let mut best: Option<(u32, usize)> = None;
            for (j, (&w, &taken)) in self.unary[i].iter().zip(&used).enumerate() {
                if !taken && w > 0 && best.is_none_or(|(bw, _)| w > bw) {
                    best = Some((w, j));
                }
            }
            if let Some((_, j)) = best {
                used[j] = true;
                *slot = Some(j);
            }
        }
        mapping
    }

    pub fn random_start(&self, rng: &mut ChaCha8Rng) -> Vec<Option<usize>> {
        let mut refs: Vec<usize> = (0..self.m()).collect();
        refs.shuffle(rng);
        let mut cands: Vec<usize> = (0..self.n()).collect();
        cands.shuffle(rng);
        let mut mapping = vec![None; self.n()];
        for (i, j) in cands.into_iter().zip(refs) {
            mapping[i] = Some(j);
        }
        mapping
    }

    /// Restarted hill climbing: one greedy start, then `restarts - 1`
    /// random starts from a generator seeded with `seed`.
    pub fn search(&self, restarts: usize, seed: u64) -> (Vec<Option<usize>>, u32) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best = self.greedy_start();
        let mut best_score = self.climb(&mut best);
        for _ in 1..restarts.max(1) {
            if best_score as usize == self.upper_bound() {
                break;
            }
            let mut mapping = self.random_start(&mut rng);
            let s = self.climb(&mut mapping);
            if s > best_score {
                best_score = s;
                best = mapping;
            }
        }
        (best, best_score)
    }

    /// No alignment can match more than this many candidate triples.
    pub fn upper_bound(&self) -> usize {
        let unary: u32 = self.unary.iter().map(|row| row.iter().copied().max().unwrap_or(0)).sum();
        let binary: usize = self.pairs.iter().map(|(_, _, r)| r.len()).sum();
        unary as usize + binary
    }

    /// Exhaustive branch-and-bound search. Requires `n <= m`: every
    /// candidate variable gets a distinct reference variable, which is
    /// enough because extending a partial alignment never loses matches.
    pub fn exhaustive(&self) -> (Vec<Option<usize>>, u32) {
        debug_assert!(self.n() <= self.m());
        let n = self.n();
        // most constrained variables first
        let mut order: Vec<usize> = (0..n).collect();
        let weight = |i: usize| {
            self.unary[i].iter().copied().max().unwrap_or(0) as usize
                + self.incident[i].iter().map(|&k| self.pairs[k].2.len()).sum::<usize>()
        };
        order.sort_by_key(|&i| std::cmp::Reverse(weight(i)));
        let max_unary: Vec<u32> = self.unary.iter().map(|row| row.iter().copied().max().unwrap_or(0)).collect();

        let mut state = Exhaustive {
            problem: self,
            order,
            max_unary,
            mapping: vec![None; n],
            used: vec![false; self.m()],
            best: vec![None; n],
            best_score: 0,
        };
        state.descend(0, 0);
        (state.best, state.best_score)
    }
}

enum Move {
    Reassign(usize, usize),
    Swap(usize, usize),
}

struct Exhaustive<'p> {
    problem: &'p Problem,
    order: Vec<usize>,
    max_unary: Vec<u32>,
    mapping: Vec<Option<usize>>,
    used: Vec<bool>,
    best: Vec<Option<usize>>,
    best_score: u32,
}

impl Exhaustive<'_> {
    fn descend(&mut self, depth: usize, current: u32) {
        let p = self.problem;
        if depth == self.order.len() {
            if current > self.best_score || self.best.iter().all(Option::is_none) {
                self.best_score = current;
                self.best = self.mapping.clone();
            }
            return;
        }
        // optimistic bound on what the unassigned variables can still add
        let mut bound = current;
        for &i in &self.order[depth..] {
            bound += self.max_unary[i];
        }
        for (s, t, roles) in &p.pairs {
            if self.mapping[*s].is_none() || self.mapping[*t].is_none() {
                bound += roles.len() as u32;
            }
        }
        if bound <= self.best_score && self.best.iter().any(Option::is_some) {
            return;
        }
        let i = self.order[depth];
        for j in 0..p.m() {
            if self.used[j] {
                continue;
            }
            self.mapping[i] = Some(j);
            self.used[j] = true;
            let mut gain = p.unary[i][j];
            for &k in &p.incident[i] {
                gain += p.pair_score(k, &self.mapping);
            }
            self.descend(depth + 1, current + gain);
            self.used[j] = false;
            self.mapping[i] = None;
        }
    }
}

fn unary_key(t: &Triple) -> String {
    match t {
        Triple::Root(_) => "R".to_string(),
        Triple::Instance(_, c) => format!("I\u{1}{c}"),
        Triple::Attribute(_, r, c) => format!("A\u{1}{r}\u{1}{c}"),
        // self-loop relations
        Triple::Relation(_, r, _) => format!("L\u{1}{r}"),
    }
}
