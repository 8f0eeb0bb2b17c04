//! Structural product of rule operators.
//!
//! `Ŵ2 Ŵ1` expands into a sum over overlaps of the right-hand side of `r1`
//! with the left-hand side of `r2`. Each overlap yields one compound rule, or
//! nothing when the sequential application can never fire on it.
//!
//! Compounds are computed per ordered node pair by tracing the edge bit
//! through `r1` then `r2`: every rule either needs the bit set, needs it
//! clear, or leaves it alone, and may overwrite it. The trace either
//! contradicts itself (the term vanishes) or collapses to a single
//! requirement on the host plus a final value, which is exactly what a rule
//! can express with lhs edges, rhs edges and forbidden edges.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Rational64;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::canon::CanonicalForm;
use crate::graph::{label_partial_injections, Label, LabelledGraph, NodeId, PartialInjection};
use crate::rate::RateMonomial;
use crate::rule::{number_rule, Rule};

/// What happens to edges left without a labelled endpoint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Semantics {
    /// Deleting a node only clears its label; incident edges stay behind.
    #[default]
    KeepHanging,
    /// Deleting a node also removes every incident edge.
    CleanHanging,
}

impl Semantics {
    pub const ALL: [Semantics; 2] = [Semantics::KeepHanging, Semantics::CleanHanging];

    pub fn name(self) -> &'static str {
        match self {
            Semantics::KeepHanging => "keep",
            Semantics::CleanHanging => "clean",
        }
    }
}

/// `Hat` is the bare rewrite operator `Ŵ`; `Full` subtracts its diagonal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    #[default]
    Hat,
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComposeError {
    #[error("overlap is not generated from `{r1}` and `{r2}`: {reason}")]
    NotAnOverlap { r1: String, r2: String, reason: String },
    #[error("rule `{0}` already carries rhs phantoms and cannot be composed")]
    PhantomInput(String),
}

/// A shared subgraph between `r1.rhs` and `r2.lhs`: `map` sends the shared
/// node set `S` (its keys) into `r2.lhs`, `links` holds every `r1.rhs` edge
/// inside `S` whose image is an `r2.lhs` edge.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Overlap {
    pub map: PartialInjection,
    pub links: BTreeSet<(NodeId, NodeId)>,
}

impl Overlap {
    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    fn forced_links(r1: &Rule, r2: &Rule, map: &PartialInjection) -> BTreeSet<(NodeId, NodeId)> {
        r1.rhs()
            .edges()
            .iter()
            .filter(|(s, t)| match (map.get(s), map.get(t)) {
                (Some(a), Some(b)) => r2.lhs().has_edge(*a, *b),
                _ => false,
            })
            .copied()
            .collect()
    }
}

/// Every overlap of `r1.rhs` with `r2.lhs`, the empty one first.
pub fn overlap_classes(r1: &Rule, r2: &Rule) -> Vec<Overlap> {
    label_partial_injections(r1.rhs(), r2.lhs())
        .into_iter()
        .map(|map| Overlap { links: Overlap::forced_links(r1, r2, &map), map })
        .collect()
}

fn check_overlap(r1: &Rule, r2: &Rule, o: &Overlap) -> Result<(), ComposeError> {
    let fail = |reason: String| {
        Err(ComposeError::NotAnOverlap { r1: r1.name().into(), r2: r2.name().into(), reason })
    };
    let mut images = BTreeSet::new();
    for (&v, &w) in &o.map {
        let (Some(a), Some(b)) = (r1.rhs().label(v), r2.lhs().label(w)) else {
            return fail(format!("{v} -> {w} is not a pair of rhs/lhs nodes"));
        };
        if a != b {
            return fail(format!("{v} -> {w} changes label {a} to {b}"));
        }
        if !images.insert(w) {
            return fail(format!("node {w} is hit twice"));
        }
    }
    if o.links != Overlap::forced_links(r1, r2, &o.map) {
        return fail("shared edge set is not the maximal one".into());
    }
    Ok(())
}

/// One rule's effect on a single edge bit.
#[derive(Clone, Copy)]
struct Action {
    need: Option<bool>,
    set: Option<bool>,
}

impl Action {
    fn of(rule: &Rule, s: NodeId, t: NodeId) -> Action {
        let l = rule.lhs().has_edge(s, t);
        let r = rule.rhs().has_edge(s, t);
        let f = rule.forbidden().contains(&(s, t));
        match (l, r, f) {
            (true, true, _) => Action { need: Some(true), set: Some(true) },
            (true, false, _) => Action { need: Some(true), set: Some(false) },
            (false, true, _) => Action { need: Some(false), set: Some(true) },
            (false, false, true) => Action { need: Some(false), set: None },
            (false, false, false) => Action { need: None, set: None },
        }
    }
}

/// Symbolic value of one host edge bit along the sequential trace.
struct Trace {
    need: Option<bool>,
    val: Option<bool>,
}

impl Trace {
    fn start(fresh: bool) -> Self {
        Trace { need: None, val: if fresh { Some(false) } else { None } }
    }

    /// Returns false when the trace is contradictory.
    fn step(&mut self, a: Action) -> bool {
        if let Some(n) = a.need {
            match self.val {
                Some(c) if c != n => return false,
                Some(_) => {}
                None => {
                    self.need = Some(n);
                    self.val = Some(n);
                }
            }
        }
        if let Some(s) = a.set {
            self.val = Some(s);
        }
        true
    }

    fn clear(&mut self) {
        self.val = Some(false);
    }
}

#[derive(Default, Clone)]
struct Vertex {
    r1: Option<NodeId>,
    r2: Option<NodeId>,
    lhs: Option<Label>,
    rhs: Option<Label>,
    fresh: bool,
    dies_in_r1: bool,
    dies_in_r2: bool,
}

/// The compound rule of `r1` followed by `r2` glued along `o`, or `None`
/// when that term of the product vanishes.
pub fn compose(r1: &Rule, r2: &Rule, o: &Overlap, mode: Semantics) -> Result<Option<Rule>, ComposeError> {
    check_overlap(r1, r2, o)?;
    for r in [r1, r2] {
        if !r.rhs().phantoms().is_empty() {
            return Err(ComposeError::PhantomInput(r.name().into()));
        }
    }

    let r1_ids: BTreeSet<NodeId> = r1.lhs().nodes().keys().chain(r1.rhs().nodes().keys()).copied().collect();
    let r2_ids: BTreeSet<NodeId> = r2.lhs().nodes().keys().chain(r2.rhs().nodes().keys()).copied().collect();
    let back: BTreeMap<NodeId, NodeId> = o.map.iter().map(|(&v, &w)| (w, v)).collect();

    let mut verts: BTreeMap<NodeId, Vertex> = BTreeMap::new();
    for &v in &r1_ids {
        verts.insert(v, Vertex { r1: Some(v), ..Default::default() });
    }
    let mut to_c: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut next: NodeId = 0;
    for &w in &r2_ids {
        let c = match back.get(&w) {
            Some(&v) => v,
            None => {
                while r1_ids.contains(&next) {
                    next += 1;
                }
                next += 1;
                next - 1
            }
        };
        to_c.insert(w, c);
        verts.entry(c).or_default().r2 = Some(w);
    }

    for (&c, x) in verts.iter_mut() {
        let (in_l1, in_r1) = match x.r1 {
            Some(v) => (r1.lhs().contains_node(v), r1.rhs().contains_node(v)),
            None => (false, false),
        };
        let (in_l2, in_r2) = match x.r2 {
            Some(w) => (r2.lhs().contains_node(w), r2.rhs().contains_node(w)),
            None => (false, false),
        };
        let shared = x.r1.is_some() && x.r2.is_some();
        x.fresh = (in_r1 && !in_l1) || (x.r1.is_none() && !in_l2);
        x.dies_in_r1 = in_l1 && !in_r1;
        x.dies_in_r2 = in_l2 && !in_r2;
        x.lhs = if in_l1 {
            r1.lhs().label(c).cloned()
        } else if x.r1.is_none() && in_l2 {
            r2.lhs().label(x.r2.unwrap()).cloned()
        } else {
            None
        };
        x.rhs = if in_r2 {
            r2.rhs().label(x.r2.unwrap()).cloned()
        } else if in_r1 && !shared {
            r1.rhs().label(c).cloned()
        } else {
            None
        };
    }

    let mut pairs: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    pairs.extend(r1.lhs().edges());
    pairs.extend(r1.rhs().edges());
    pairs.extend(r1.forbidden());
    for &(s, t) in r2.lhs().edges().iter().chain(r2.rhs().edges()).chain(r2.forbidden()) {
        pairs.insert((to_c[&s], to_c[&t]));
    }

    let mut lhs_edges = BTreeSet::new();
    let mut rhs_edges = BTreeSet::new();
    let mut forbidden = BTreeSet::new();
    for (u, v) in pairs {
        let (xu, xv) = (&verts[&u], &verts[&v]);
        let mut tr = Trace::start(xu.fresh || xv.fresh);
        if let (Some(a), Some(b)) = (xu.r1, xv.r1) {
            if !tr.step(Action::of(r1, a, b)) {
                return Ok(None);
            }
        }
        if mode == Semantics::CleanHanging && (xu.dies_in_r1 || xv.dies_in_r1) {
            tr.clear();
        }
        if let (Some(a), Some(b)) = (xu.r2, xv.r2) {
            if !tr.step(Action::of(r2, a, b)) {
                return Ok(None);
            }
        }
        if mode == Semantics::CleanHanging && (xu.dies_in_r2 || xv.dies_in_r2) {
            tr.clear();
        }
        match (tr.need, tr.val) {
            (Some(true), Some(true)) => {
                lhs_edges.insert((u, v));
                rhs_edges.insert((u, v));
            }
            (Some(true), _) => {
                lhs_edges.insert((u, v));
            }
            (Some(false), Some(true)) | (None, Some(true)) => {
                rhs_edges.insert((u, v));
            }
            (Some(false), _) => {
                forbidden.insert((u, v));
            }
            (None, _) => {}
        }
    }

    let mut lhs = LabelledGraph::new();
    let mut rhs = LabelledGraph::new();
    for (&c, x) in &verts {
        if let Some(l) = &x.lhs {
            lhs.add_node(c, l.clone()).expect("fresh compound id");
        }
        if let Some(l) = &x.rhs {
            rhs.add_node(c, l.clone()).expect("fresh compound id");
        }
    }
    for &(s, t) in &rhs_edges {
        for end in [s, t] {
            if !rhs.contains_node(end) {
                debug_assert_eq!(mode, Semantics::KeepHanging, "clean traces end cleared at dead nodes");
                rhs.add_phantom(end).expect("phantom is not an rhs node");
            }
        }
    }
    for (s, t) in lhs_edges {
        lhs.add_edge(s, t).expect("needed edges join lhs nodes");
    }
    for (s, t) in rhs_edges {
        rhs.add_edge(s, t).expect("endpoints present");
    }
    let rule = Rule::with_forbidden(
        format!("{}.{}", r2.name(), r1.name()),
        lhs,
        rhs,
        forbidden,
        r1.rate() * r2.rate(),
    )
    .expect("compound rules are well formed");
    Ok(Some(rule))
}

/// `weight · rate · rule`. The rule is renumbered canonically and carries
/// the same rate as the term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleTerm {
    pub weight: i64,
    pub rate: RateMonomial,
    pub rule: Rule,
}

impl RuleTerm {
    /// Weight times rate coefficient.
    pub fn scalar(&self) -> Rational64 {
        Rational64::from_integer(self.weight) * self.rate.coefficient()
    }
}

/// A collected linear combination of rule operators.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleSum {
    terms: Vec<RuleTerm>,
}

impl RuleSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(rule: &Rule) -> Self {
        collect([(Rational64::one(), rule.clone())])
    }

    pub fn terms(&self) -> &[RuleTerm] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// Builds a sum from terms exactly as given, without merging; pass the
    /// result through [`RuleSum::collected`] to normalise it.
    pub fn from_raw_terms(terms: Vec<RuleTerm>) -> Self {
        RuleSum { terms }
    }

    pub fn collected(&self) -> Self {
        collect(self.terms.iter().map(|t| (Rational64::from_integer(t.weight), t.rule.with_rate(t.rate.clone()))))
    }

    pub fn scaled(&self, k: i64) -> Self {
        collect(self.weighted().map(|(w, r)| (w * k, r)))
    }

    pub fn plus(&self, other: &RuleSum) -> Self {
        collect(self.weighted().chain(other.weighted()))
    }

    pub fn minus(&self, other: &RuleSum) -> Self {
        collect(self.weighted().chain(other.weighted().map(|(w, r)| (-w, r))))
    }

    fn weighted(&self) -> impl Iterator<Item = (Rational64, Rule)> + '_ {
        self.terms.iter().map(|t| (Rational64::from_integer(t.weight), t.rule.clone()))
    }
}

/// Merges isomorphic rules with equal rate symbols, summing `factor ×
/// rate coefficient`; drops zero terms; sorts canonically.
pub fn collect(items: impl IntoIterator<Item = (Rational64, Rule)>) -> RuleSum {
    let mut acc: BTreeMap<(CanonicalForm, Vec<String>), (Rational64, Rule)> = BTreeMap::new();
    for (factor, rule) in items {
        let (form, canon) = rule.canonicalized();
        let key = (form, rule.rate().symbols().to_vec());
        let amount = factor * rule.rate().coefficient();
        acc.entry(key)
            .and_modify(|(w, _)| *w += amount)
            .or_insert((amount, canon));
    }
    let terms = acc
        .into_iter()
        .filter(|(_, (w, _))| !w.is_zero())
        .map(|((_, symbols), (w, rule))| {
            let rate = RateMonomial::new(Rational64::new(1, *w.denom()), symbols);
            RuleTerm { weight: *w.numer(), rule: rule.renamed("").with_rate(rate.clone()), rate }
        })
        .collect();
    RuleSum { terms }
}

fn hat_terms(r2: &Rule, r1: &Rule, mode: Semantics, with_empty: bool) -> Result<Vec<Rule>, ComposeError> {
    let mut out = Vec::new();
    for o in overlap_classes(r1, r2) {
        if o.is_empty() && !with_empty {
            continue;
        }
        if let Some(r) = compose(r1, r2, &o, mode)? {
            out.push(r);
        }
    }
    Ok(out)
}

/// `Ŵ2 Ŵ1` (r1 acts first) as a collected sum of compound rules.
pub fn product_hat(r2: &Rule, r1: &Rule, mode: Semantics) -> Result<RuleSum, ComposeError> {
    Ok(collect(hat_terms(r2, r1, mode, true)?.into_iter().map(|r| (Rational64::one(), r))))
}

fn full_terms(r2: &Rule, r1: &Rule, mode: Semantics, with_empty: bool) -> Result<Vec<(Rational64, Rule)>, ComposeError> {
    let (n1, n2) = (number_rule(r1), number_rule(r2));
    let mut out = Vec::new();
    for (a, b, sign) in [(r2, r1, 1), (r2, &n1, -1), (&n2, r1, -1), (&n2, &n1, 1)] {
        out.extend(hat_terms(a, b, mode, with_empty)?.into_iter().map(|r| (Rational64::from_integer(sign), r)));
    }
    Ok(out)
}

/// `(Ŵ2 − N2)(Ŵ1 − N1)` with `N` the diagonal rule, collected.
pub fn full_product(r2: &Rule, r1: &Rule, mode: Semantics) -> Result<RuleSum, ComposeError> {
    Ok(collect(full_terms(r2, r1, mode, true)?))
}

pub fn product(r2: &Rule, r1: &Rule, mode: Semantics, kind: OperatorKind) -> Result<RuleSum, ComposeError> {
    match kind {
        OperatorKind::Hat => product_hat(r2, r1, mode),
        OperatorKind::Full => full_product(r2, r1, mode),
    }
}

/// `[X2, X1] = X2 X1 − X1 X2`.
pub fn commutator(r2: &Rule, r1: &Rule, mode: Semantics, kind: OperatorKind) -> Result<RuleSum, ComposeError> {
    commutator_with(r2, r1, mode, kind, true)
}

/// Commutator with the empty-overlap terms either generated (and left to
/// cancel) or skipped on both sides.
pub fn commutator_with(
    r2: &Rule,
    r1: &Rule,
    mode: Semantics,
    kind: OperatorKind,
    with_empty: bool,
) -> Result<RuleSum, ComposeError> {
    let signed = |a: &Rule, b: &Rule| -> Result<Vec<(Rational64, Rule)>, ComposeError> {
        match kind {
            OperatorKind::Hat => Ok(hat_terms(a, b, mode, with_empty)?
                .into_iter()
                .map(|r| (Rational64::one(), r))
                .collect()),
            OperatorKind::Full => full_terms(a, b, mode, with_empty),
        }
    };
    let fwd = signed(r2, r1)?;
    let bwd = signed(r1, r2)?;
    Ok(collect(fwd.into_iter().chain(bwd.into_iter().map(|(w, r)| (-w, r)))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::rules_isomorphic;

    fn g<'a>(nodes: impl IntoIterator<Item = (NodeId, &'a str)>, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> LabelledGraph {
        LabelledGraph::build(nodes, edges).unwrap()
    }

    fn rule<'a>(
        name: &str,
        lhs: (&[(NodeId, &'a str)], &[(NodeId, NodeId)]),
        rhs: (&[(NodeId, &'a str)], &[(NodeId, NodeId)]),
        rate: &str,
    ) -> Rule {
        Rule::new(
            name,
            g(lhs.0.iter().copied(), lhs.1.iter().copied()),
            g(rhs.0.iter().copied(), rhs.1.iter().copied()),
            RateMonomial::symbol(rate),
        )
        .unwrap()
    }

    fn grow() -> Rule {
        rule("grow", (&[(1, "G")], &[]), (&[(1, "I"), (2, "G")], &[(1, 2)]), "rho_grow")
    }

    fn retract() -> Rule {
        rule("retract", (&[(1, "R"), (2, "I")], &[(1, 2)]), (&[(2, "R")], &[]), "rho_retract")
    }

    #[test]
    fn overlap_counts_for_grow_and_retract() {
        assert_eq!(overlap_classes(&grow(), &retract()).len(), 2);
        // the created grow_end can be grown again
        assert_eq!(overlap_classes(&grow(), &grow()).len(), 2);
        let os = overlap_classes(&grow(), &retract());
        assert!(os[0].is_empty());
        assert_eq!(os[1].map, BTreeMap::from([(1, 2)]));
    }

    #[test]
    fn empty_overlap_is_parallel_composition() {
        let c = compose(&grow(), &retract(), &Overlap::default(), Semantics::KeepHanging).unwrap().unwrap();
        assert_eq!(c.lhs().node_count(), 3);
        assert_eq!(c.lhs().edges().len(), 1);
        assert_eq!(c.rhs().node_count(), 3);
        assert_eq!(c.rhs().edges().len(), 1);
        assert_eq!(c.rate().symbols(), ["rho_grow", "rho_retract"]);
    }

    #[test]
    fn rejects_foreign_overlaps() {
        let bad = Overlap { map: BTreeMap::from([(2, 1)]), links: BTreeSet::new() };
        assert!(matches!(
            compose(&grow(), &retract(), &bad, Semantics::KeepHanging),
            Err(ComposeError::NotAnOverlap { .. })
        ));
    }

    #[test]
    fn commutator_of_retract_and_grow_is_relabel_shift() {
        let c = commutator(&retract(), &grow(), Semantics::KeepHanging, OperatorKind::Hat).unwrap();
        assert_eq!(c.len(), 1);
        let t = &c.terms()[0];
        assert_eq!(t.weight, 1);
        let expect = rule(
            "x",
            (&[(0, "R"), (1, "G")], &[(0, 1)]),
            (&[(1, "R"), (2, "G")], &[(1, 2)]),
            "rho_grow",
        );
        assert!(rules_isomorphic(&t.rule, &expect));
    }

    #[test]
    fn identity_product_echoes_rule() {
        let s = product_hat(&grow(), &Rule::empty("I"), Semantics::KeepHanging).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.terms()[0].weight, 1);
        assert!(rules_isomorphic(&s.terms()[0].rule, &grow()));
        assert!(full_product(&Rule::empty("I"), &grow(), Semantics::KeepHanging).unwrap().is_empty());
    }

    #[test]
    fn self_commutators_vanish() {
        for r in [grow(), retract()] {
            for mode in Semantics::ALL {
                for kind in [OperatorKind::Hat, OperatorKind::Full] {
                    assert!(commutator(&r, &r, mode, kind).unwrap().is_empty());
                }
            }
        }
    }

    #[test]
    fn collect_merges_and_cancels() {
        let a = grow();
        let b = rule("b", (&[(5, "G")], &[]), (&[(5, "I"), (9, "G")], &[(5, 9)]), "rho_grow");
        let s = collect([(Rational64::from_integer(2), a.clone()), (Rational64::from_integer(3), b.clone())]);
        assert_eq!(s.len(), 1);
        assert_eq!(s.terms()[0].weight, 5);
        let z = collect([(Rational64::one(), a), (Rational64::from_integer(-1), b)]);
        assert!(z.is_empty());
    }

    #[test]
    fn double_creation_vanishes() {
        // linking twice the same pair of pre-existing nodes is impossible
        let link = rule("link", (&[(1, "A"), (2, "B")], &[]), (&[(1, "A"), (2, "B")], &[(1, 2)]), "k");
        let o = Overlap { map: BTreeMap::from([(1, 1), (2, 2)]), links: BTreeSet::new() };
        assert_eq!(compose(&link, &link, &o, Semantics::KeepHanging).unwrap(), None);
    }

    #[test]
    fn create_then_destroy_edge_leaves_forbidden_edge() {
        let link = rule("link", (&[(1, "A"), (2, "B")], &[]), (&[(1, "A"), (2, "B")], &[(1, 2)]), "k");
        let cut = rule("cut", (&[(1, "A"), (2, "B")], &[(1, 2)]), (&[(1, "A"), (2, "B")], &[]), "q");
        let o = Overlap { map: BTreeMap::from([(1, 1), (2, 2)]), links: BTreeSet::from([(1, 2)]) };
        let c = compose(&link, &cut, &o, Semantics::KeepHanging).unwrap().unwrap();
        assert!(c.lhs().edges().is_empty() && c.rhs().edges().is_empty());
        assert_eq!(c.forbidden(), &BTreeSet::from([(1, 2)]));
    }

    #[test]
    fn transient_node_edges_follow_semantics() {
        // r1 creates B attached to A; r2 deletes B
        let bud = rule("bud", (&[(1, "A")], &[]), (&[(1, "A"), (2, "B")], &[(1, 2)]), "k");
        let kill = rule("kill", (&[(1, "B")], &[]), (&[], &[]), "q");
        let o = Overlap { map: BTreeMap::from([(2, 1)]), links: BTreeSet::new() };
        let keep = compose(&bud, &kill, &o, Semantics::KeepHanging).unwrap().unwrap();
        assert_eq!(keep.rhs().phantoms(), &BTreeSet::from([2]));
        assert_eq!(keep.rhs().edges(), &BTreeSet::from([(1, 2)]));
        let clean = compose(&bud, &kill, &o, Semantics::CleanHanging).unwrap().unwrap();
        assert!(clean.rhs().phantoms().is_empty());
        assert!(clean.rhs().edges().is_empty());
        assert_eq!(clean.rhs().node_count(), 1);
    }
}
