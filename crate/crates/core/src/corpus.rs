//! Seeded random rule corpora for property checks and verification runs.
//!
//! Generation is driven by ChaCha8 so a seed reproduces the same rules on
//! every platform.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Label, LabelledGraph, NodeId};
use crate::rate::RateMonomial;
use crate::rule::Rule;

/// Shape bounds for [`random_rules`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusShape {
    pub labels: Vec<String>,
    pub max_nodes: usize,
    pub max_edges: usize,
    /// Upper bound on nodes present only on the rhs.
    pub max_created: usize,
}

impl Default for CorpusShape {
    fn default() -> Self {
        CorpusShape { labels: vec!["A".into(), "B".into()], max_nodes: 3, max_edges: 3, max_created: 1 }
    }
}

fn labels(shape: &CorpusShape) -> Vec<Label> {
    shape.labels.iter().map(|l| Label::new(l).expect("corpus labels are non-empty")).collect()
}

fn random_edges(rng: &mut ChaCha8Rng, ids: &[NodeId], max: usize) -> Vec<(NodeId, NodeId)> {
    if ids.is_empty() {
        return Vec::new();
    }
    let mut all: Vec<(NodeId, NodeId)> = ids.iter().flat_map(|&s| ids.iter().map(move |&t| (s, t))).collect();
    all.shuffle(rng);
    let k = rng.gen_range(0..=max.min(all.len()));
    all.truncate(k);
    all.sort();
    all
}

fn random_rule(rng: &mut ChaCha8Rng, shape: &CorpusShape, alphabet: &[Label], index: usize) -> Rule {
    let n_lhs = rng.gen_range(0..=shape.max_nodes);
    let lhs_ids: Vec<NodeId> = (0..n_lhs as NodeId).collect();
    let mut lhs = LabelledGraph::new();
    for &v in &lhs_ids {
        lhs.add_node(v, alphabet.choose(rng).expect("non-empty alphabet").clone()).expect("fresh id");
    }
    for (s, t) in random_edges(rng, &lhs_ids, shape.max_edges) {
        lhs.add_edge(s, t).expect("endpoints exist");
    }

    let mut kept: Vec<NodeId> = lhs_ids.iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
    let room = shape.max_nodes - kept.len();
    let created = rng.gen_range(0..=shape.max_created.min(room));
    let mut next = n_lhs as NodeId;
    for _ in 0..created {
        kept.push(next);
        next += 1;
    }
    let mut rhs = LabelledGraph::new();
    for &v in &kept {
        let keep_label = v < n_lhs as NodeId && rng.gen_bool(0.5);
        let label = if keep_label {
            lhs.nodes()[&v].clone()
        } else {
            alphabet.choose(rng).expect("non-empty alphabet").clone()
        };
        rhs.add_node(v, label).expect("fresh id");
    }
    // Bias towards keeping matched edges so relabel-only and
    // edge-preserving rules show up as well as full rewrites.
    let mut edges: Vec<(NodeId, NodeId)> = lhs
        .edges()
        .iter()
        .copied()
        .filter(|(s, t)| rhs.contains_node(*s) && rhs.contains_node(*t) && rng.gen_bool(0.5))
        .collect();
    for e in random_edges(rng, &kept, shape.max_edges) {
        if edges.len() < shape.max_edges && !edges.contains(&e) {
            edges.push(e);
        }
    }
    for (s, t) in edges {
        rhs.add_edge(s, t).expect("endpoints exist");
    }
    Rule::new(format!("r{index}"), lhs, rhs, RateMonomial::symbol(&format!("k{index}"))).expect("generated rule is valid")
}

/// `count` random rules named `r0, r1, …` with rates `k0, k1, …`.
pub fn random_rules(seed: u64, count: usize, shape: &CorpusShape) -> Vec<Rule> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet = labels(shape);
    (0..count).map(|i| random_rule(&mut rng, shape, &alphabet, i)).collect()
}

/// Pairs `(r_{i+1}, r_i)` cyclically, as `(second, first)`.
pub fn cyclic_pairs(rules: &[Rule]) -> Vec<(Rule, Rule)> {
    (0..rules.len()).map(|i| (rules[(i + 1) % rules.len()].clone(), rules[i].clone())).collect()
}

/// Edge-free rules whose every lhs node is deleted and every rhs node
/// created, i.e. plain reactions written as graph rules. Returned as
/// `(second, first)`.
pub fn edge_free_pairs(seed: u64, count: usize, labels: &[&str], max_side: usize) -> Vec<(Rule, Rule)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet: Vec<Label> = labels.iter().map(|l| Label::new(l).expect("non-empty label")).collect();
    let side = |rng: &mut ChaCha8Rng, base: NodeId| {
        let mut g = LabelledGraph::new();
        for k in 0..rng.gen_range(0..=max_side) {
            g.add_node(base + k as NodeId, alphabet.choose(rng).expect("non-empty alphabet").clone()).expect("fresh id");
        }
        g
    };
    (0..count)
        .map(|i| {
            let mut rule = |tag: &str| {
                let lhs = side(&mut rng, 0);
                let rhs = side(&mut rng, 10);
                Rule::new(format!("{tag}{i}"), lhs, rhs, RateMonomial::symbol(&format!("{tag}{i}"))).expect("valid rule")
            };
            let first = rule("p");
            let second = rule("q");
            (second, first)
        })
        .collect()
}

/// Largest number of rhs-only nodes over a set of rules, for universe sizing.
pub fn max_created(rules: &[Rule]) -> usize {
    rules.iter().map(|r| r.created().len()).max().unwrap_or(0)
}
