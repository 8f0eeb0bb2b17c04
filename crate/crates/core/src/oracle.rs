//! Concrete semantics over a finite node universe.
//!
//! A host state assigns at most one label to each index `0..U` and carries a
//! set of directed edges between indices. Rules act on states by matching,
//! deleting, relabelling and allocating exactly as their operator would act
//! on a basis vector, so comparing outcome multisets checks operator
//! identities state by state.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use num_rational::Rational64;
use rustc_hash::FxHashMap;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::algebra::{product, OperatorKind, RuleSum, Semantics};
use crate::canon::{BitDigraph, CanonicalForm};
use crate::graph::{Label, LabelledGraph, NodeId};
use crate::rate::RateMonomial;
use crate::rule::{number_rule, Rule};
use crate::algebra::ComposeError;

pub const MAX_UNIVERSE: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("no free index left for rule `{rule}` on match {matched:?} in a universe of {universe}")]
    Capacity { rule: String, matched: Vec<(NodeId, usize)>, universe: usize },
    #[error("universe of {0} indices exceeds the supported maximum of {MAX_UNIVERSE}")]
    UniverseTooLarge(usize),
    #[error("rule `{0}` carries phantoms, which only keep-hanging semantics can realise")]
    PhantomInClean(String),
    #[error("state has a hanging edge but clean-hanging semantics was requested")]
    HangingInClean,
    #[error(transparent)]
    Compose(#[from] ComposeError),
}

/// A pure state: labels per index and adjacency bitmasks.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct HostState {
    labels: Vec<Option<Label>>,
    out: Vec<u64>,
    inn: Vec<u64>,
}

impl HostState {
    pub fn new(universe: usize) -> Result<Self, OracleError> {
        if universe > MAX_UNIVERSE {
            return Err(OracleError::UniverseTooLarge(universe));
        }
        Ok(HostState { labels: vec![None; universe], out: vec![0; universe], inn: vec![0; universe] })
    }

    pub fn universe(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, i: usize) -> Option<&Label> {
        self.labels[i].as_ref()
    }

    pub fn set_label(&mut self, i: usize, label: Option<Label>) {
        self.labels[i] = label;
    }

    pub fn has_edge(&self, s: usize, t: usize) -> bool {
        self.out[s] >> t & 1 == 1
    }

    pub fn add_edge(&mut self, s: usize, t: usize) {
        self.out[s] |= 1 << t;
        self.inn[t] |= 1 << s;
    }

    pub fn remove_edge(&mut self, s: usize, t: usize) {
        self.out[s] &= !(1 << t);
        self.inn[t] &= !(1 << s);
    }

    fn clear_incident(&mut self, i: usize) {
        for t in bits(self.out[i]) {
            self.inn[t] &= !(1 << i);
        }
        for s in bits(self.inn[i]) {
            self.out[s] &= !(1 << i);
        }
        self.out[i] = 0;
        self.inn[i] = 0;
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out.iter().enumerate().flat_map(|(s, &m)| bits(m).map(move |t| (s, t)))
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(|m| m.count_ones() as usize).sum()
    }

    pub fn labelled_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    /// An index with neither a label nor an incident edge.
    pub fn is_free(&self, i: usize) -> bool {
        self.labels[i].is_none() && self.out[i] == 0 && self.inn[i] == 0
    }

    pub fn has_hanging_edge(&self) -> bool {
        (0..self.universe()).any(|i| self.labels[i].is_none() && (self.out[i] | self.inn[i]) != 0)
    }

    fn occupied(&self) -> Vec<usize> {
        (0..self.universe()).filter(|&i| !self.is_free(i)).collect()
    }

    pub fn canonical_form(&self) -> CanonicalForm {
        let mut verts = [0usize; MAX_UNIVERSE];
        let mut n = 0;
        for i in 0..self.universe() {
            if !self.is_free(i) {
                verts[n] = i;
                n += 1;
            }
        }
        let verts = &verts[..n];
        let mut present: Vec<&Label> = verts.iter().filter_map(|&i| self.labels[i].as_ref()).collect();
        present.sort_unstable();
        present.dedup();
        let mut colours = [0u32; MAX_UNIVERSE];
        let mut at = [usize::MAX; MAX_UNIVERSE];
        let mut out = [0u64; MAX_UNIVERSE];
        for (k, &i) in verts.iter().enumerate() {
            colours[k] = match &self.labels[i] {
                Some(l) => 1 + present.binary_search(&l).expect("label present") as u32,
                None => 0,
            };
            at[i] = k;
        }
        for (k, &i) in verts.iter().enumerate() {
            out[k] = bits(self.out[i]).fold(0u64, |m, j| m | 1 << at[j]);
        }
        let colours = &colours[..n];
        let rows = BitDigraph { colours, out: &out[..n] }.canonical_rows();

        let width = n.div_ceil(8);
        let mut bytes = Vec::with_capacity(2 + present.len() * 4 + n * width);
        bytes.push(n as u8);
        bytes.push(colours.iter().filter(|&&c| c == 0).count() as u8);
        for (k, l) in present.iter().enumerate() {
            let count = colours.iter().filter(|&&c| c == k as u32 + 1).count();
            bytes.push(count as u8);
            bytes.push(l.as_str().len() as u8);
            bytes.extend_from_slice(l.as_str().as_bytes());
        }
        for r in rows {
            bytes.extend_from_slice(&r.to_le_bytes()[..width]);
        }
        CanonicalForm::from_bytes(bytes)
    }

    /// The occupied part as a graph: labelled indices become nodes and bare
    /// edge endpoints become phantoms.
    pub fn to_graph(&self) -> LabelledGraph {
        let mut g = LabelledGraph::new();
        for i in self.occupied() {
            match &self.labels[i] {
                Some(l) => g.add_node(i as NodeId, l.clone()),
                None => g.add_phantom(i as NodeId),
            }
            .expect("indices are distinct");
        }
        for (s, t) in self.edges() {
            g.add_edge(s as NodeId, t as NodeId).expect("endpoints occupied");
        }
        g
    }

    /// Places `g` on indices `0..`, in ascending id order.
    pub fn from_graph(g: &LabelledGraph, universe: usize) -> Result<Self, OracleError> {
        let mut s = HostState::new(universe)?;
        let ids: Vec<NodeId> = g.nodes().keys().chain(g.phantoms()).copied().collect::<BTreeSet<_>>().into_iter().collect();
        if ids.len() > universe {
            return Err(OracleError::Capacity { rule: String::new(), matched: Vec::new(), universe });
        }
        let at: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        for (v, l) in g.nodes() {
            s.labels[at[v]] = Some(l.clone());
        }
        for (a, b) in g.edges() {
            s.add_edge(at[a], at[b]);
        }
        Ok(s)
    }
}

impl fmt::Debug for HostState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HostState[{}]({})", self.universe(), self.to_graph())
    }
}

impl fmt::Display for HostState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_graph())
    }
}

fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            return None;
        }
        let t = m.trailing_zeros() as usize;
        m &= m - 1;
        Some(t)
    })
}

/// Polynomial in rate symbols with exact rational coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Weight(BTreeMap<Vec<String>, Rational64>);

impl Weight {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn of(rate: &RateMonomial) -> Self {
        Self::scaled(rate, Rational64::one())
    }

    pub fn scaled(rate: &RateMonomial, k: Rational64) -> Self {
        let mut w = Weight::zero();
        w.add_monomial(rate.symbols().to_vec(), rate.coefficient() * k);
        w
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> &BTreeMap<Vec<String>, Rational64> {
        &self.0
    }

    fn add_monomial(&mut self, symbols: Vec<String>, c: Rational64) {
        if c.is_zero() {
            return;
        }
        let e = self.0.entry(symbols).or_insert_with(Rational64::zero);
        *e += c;
        if e.is_zero() {
            self.0.retain(|_, v| !v.is_zero());
        }
    }

    pub fn add(&mut self, other: &Weight) {
        for (s, c) in &other.0 {
            self.add_monomial(s.clone(), *c);
        }
    }

    pub fn mul(&self, other: &Weight) -> Weight {
        let mut w = Weight::zero();
        for (s1, c1) in &self.0 {
            for (s2, c2) in &other.0 {
                let mut s = s1.clone();
                s.extend(s2.iter().cloned());
                s.sort();
                w.add_monomial(s, c1 * c2);
            }
        }
        w
    }

    pub fn negated(&self) -> Weight {
        Weight(self.0.iter().map(|(s, c)| (s.clone(), -c)).collect())
    }

    /// Sum of all coefficients, i.e. the weight with every rate set to 1.
    pub fn total(&self) -> Rational64 {
        self.0.values().sum()
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(s, c)| RateMonomial::new(*c, s.iter().cloned()).to_string())
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

/// Outcomes up to isomorphism, each with its accumulated weight.
#[derive(Clone, Debug, Default)]
pub struct OutcomeMultiset {
    entries: BTreeMap<CanonicalForm, (HostState, Weight)>,
}

impl PartialEq for OutcomeMultiset {
    fn eq(&self, other: &Self) -> bool {
        self.entries.len() == other.entries.len()
            && self.entries.iter().zip(&other.entries).all(|((f1, (_, w1)), (f2, (_, w2)))| f1 == f2 && w1 == w2)
    }
}

impl Eq for OutcomeMultiset {}

impl OutcomeMultiset {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn weight(&self, form: &CanonicalForm) -> Option<&Weight> {
        self.entries.get(form).map(|(_, w)| w)
    }

    /// `(canonical form, representative state, weight)` in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&CanonicalForm, &HostState, &Weight)> {
        self.entries.iter().map(|(f, (s, w))| (f, s, w))
    }

    fn from_concrete(acc: Concrete) -> Self {
        let mut entries: BTreeMap<CanonicalForm, (HostState, Weight)> = BTreeMap::new();
        for (state, w) in acc.0 {
            let form = state.canonical_form();
            match entries.get_mut(&form) {
                Some((_, total)) => total.add(&w),
                None => {
                    entries.insert(form, (state, w));
                }
            }
        }
        entries.retain(|_, (_, w)| !w.is_zero());
        OutcomeMultiset { entries }
    }
}

impl fmt::Display for OutcomeMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("{}");
        }
        for (i, (_, (s, w))) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "({w}) |{s}>")?;
        }
        Ok(())
    }
}

/// Concrete (not yet canonicalised) outcomes.
#[derive(Default)]
struct Concrete(FxHashMap<HostState, Weight>);

impl Concrete {
    /// Whether the outcomes survive merging isomorphic states. Without any
    /// negative coefficient nothing can cancel, so canonical forms are only
    /// computed when signs are mixed.
    fn is_nontrivial(&self) -> bool {
        let mixed = self.0.values().any(|w| w.terms().values().any(|c| *c < Rational64::zero()));
        if mixed {
            !OutcomeMultiset::from_concrete(Concrete(self.0.clone())).is_empty()
        } else {
            self.0.values().any(|w| !w.is_zero())
        }
    }

    fn add(&mut self, s: HostState, w: &Weight) {
        match self.0.get_mut(&s) {
            Some(total) => total.add(w),
            None => {
                self.0.insert(s, w.clone());
            }
        }
    }
}

/// Where an rhs vertex lands.
#[derive(Clone, Copy, Debug)]
enum End {
    Matched(usize),
    New(usize),
}

/// A rule preprocessed for repeated application.
#[derive(Clone)]
pub(crate) struct Compiled {
    name: String,
    ids: Vec<NodeId>,
    labels: Vec<Label>,
    /// Per lhs position, edges to earlier-or-equal positions as `(other, out, in)`.
    checks: Vec<Vec<(usize, bool, bool)>>,
    lhs_edges: Vec<(usize, usize)>,
    forbidden: Vec<(usize, usize)>,
    deleted: Vec<usize>,
    relabel: Vec<(usize, Label)>,
    created: Vec<Option<Label>>,
    rhs_edges: Vec<(End, End)>,
    has_phantoms: bool,
    weight: Weight,
    /// Label multiset of the lhs, for a cheap rejection before searching.
    need: Vec<(Label, usize)>,
}

/// Label counts and edge count of a state.
struct Profile<'a> {
    labels: Vec<(&'a Label, usize)>,
    edges: usize,
}

impl<'a> Profile<'a> {
    fn of(s: &'a HostState) -> Self {
        let mut labels: Vec<(&Label, usize)> = Vec::new();
        for l in s.labels.iter().flatten() {
            match labels.iter_mut().find(|(k, _)| *k == l) {
                Some((_, c)) => *c += 1,
                None => labels.push((l, 1)),
            }
        }
        Profile { labels, edges: s.edge_count() }
    }
}

impl Compiled {
    pub(crate) fn new(r: &Rule, weight: Weight) -> Self {
        let ids: Vec<NodeId> = r.lhs().nodes().keys().copied().collect();
        let pos: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let labels = ids.iter().map(|v| r.lhs().nodes()[v].clone()).collect();
        let mut checks = vec![Vec::new(); ids.len()];
        for &(s, t) in r.lhs().edges() {
            let (a, b) = (pos[&s], pos[&t]);
            if a >= b {
                checks[a].push((b, true, false));
            } else {
                checks[b].push((a, false, true));
            }
        }
        let lhs_edges = r.lhs().edges().iter().map(|(s, t)| (pos[s], pos[t])).collect();
        let forbidden = r.forbidden().iter().map(|(s, t)| (pos[s], pos[t])).collect();
        let deleted = ids.iter().enumerate().filter(|(_, v)| !r.rhs().contains_node(**v)).map(|(i, _)| i).collect();
        let relabel = ids
            .iter()
            .enumerate()
            .filter_map(|(i, v)| r.rhs().label(*v).map(|l| (i, l.clone())))
            .collect();
        // New rhs vertices: created nodes, then phantoms not naming an lhs node,
        // each group in ascending id order.
        let mut new_ids: BTreeMap<NodeId, usize> = BTreeMap::new();
        let mut created = Vec::new();
        for (v, l) in r.rhs().nodes() {
            if !pos.contains_key(v) {
                new_ids.insert(*v, created.len());
                created.push(Some(l.clone()));
            }
        }
        for v in r.rhs().phantoms() {
            if !pos.contains_key(v) {
                new_ids.insert(*v, created.len());
                created.push(None);
            }
        }
        let mut need: Vec<(Label, usize)> = Vec::new();
        for l in r.lhs().nodes().values() {
            match need.iter_mut().find(|(k, _)| k == l) {
                Some((_, c)) => *c += 1,
                None => need.push((l.clone(), 1)),
            }
        }
        let end = |v: &NodeId| match pos.get(v) {
            Some(&p) => End::Matched(p),
            None => End::New(new_ids[v]),
        };
        let rhs_edges = r.rhs().edges().iter().map(|(s, t)| (end(s), end(t))).collect();
        Compiled {
            name: r.name().to_string(),
            ids,
            labels,
            checks,
            lhs_edges,
            forbidden,
            deleted,
            relabel,
            created,
            rhs_edges,
            has_phantoms: !r.rhs().phantoms().is_empty(),
            weight,
            need,
        }
    }

    fn negated(&self) -> Compiled {
        Compiled { weight: self.weight.negated(), ..self.clone() }
    }

    fn fits(&self, p: &Profile) -> bool {
        self.lhs_edges.len() <= p.edges
            && self.need.iter().all(|(l, c)| p.labels.iter().any(|(k, have)| *k == l && have >= c))
    }

    fn matches(&self, s: &HostState) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut img = Vec::with_capacity(self.ids.len());
        self.search(s, &mut img, 0, &mut out);
        out
    }

    fn search(&self, s: &HostState, img: &mut Vec<usize>, used: u64, out: &mut Vec<Vec<usize>>) {
        let p = img.len();
        if p == self.ids.len() {
            if self.forbidden.iter().all(|&(a, b)| !s.has_edge(img[a], img[b])) {
                out.push(img.clone());
            }
            return;
        }
        for i in 0..s.universe() {
            if used >> i & 1 == 1 || s.labels[i].as_ref() != Some(&self.labels[p]) {
                continue;
            }
            let ok = self.checks[p].iter().all(|&(q, o, n)| {
                let j = if q == p { i } else { img[q] };
                (!o || s.has_edge(i, j)) && (!n || s.has_edge(j, i))
            });
            if ok {
                img.push(i);
                self.search(s, img, used | 1 << i, out);
                img.pop();
            }
        }
    }

    /// Fires on one match; `None` when an edge creation collides.
    fn fire(&self, s: &HostState, img: &[usize], mode: Semantics) -> Result<Option<HostState>, OracleError> {
        let mut t = s.clone();
        for &(a, b) in &self.lhs_edges {
            t.remove_edge(img[a], img[b]);
        }
        for &p in &self.deleted {
            t.labels[img[p]] = None;
        }
        for (p, l) in &self.relabel {
            t.labels[img[*p]] = Some(l.clone());
        }
        let mut taken: u64 = img.iter().fold(0, |m, &i| m | 1 << i);
        let mut fresh = Vec::with_capacity(self.created.len());
        for l in &self.created {
            let Some(i) = (0..t.universe()).find(|&i| taken >> i & 1 == 0 && t.is_free(i)) else {
                return Err(OracleError::Capacity {
                    rule: self.name.clone(),
                    matched: self.ids.iter().copied().zip(img.iter().copied()).collect(),
                    universe: s.universe(),
                });
            };
            taken |= 1 << i;
            t.labels[i] = l.clone();
            fresh.push(i);
        }
        for &(a, b) in &self.rhs_edges {
            let at = |e: End| match e {
                End::Matched(p) => img[p],
                End::New(k) => fresh[k],
            };
            let (i, j) = (at(a), at(b));
            if t.has_edge(i, j) {
                return Ok(None);
            }
            t.add_edge(i, j);
        }
        if mode == Semantics::CleanHanging {
            for &p in &self.deleted {
                t.clear_incident(img[p]);
            }
        }
        Ok(Some(t))
    }

    fn apply_into(
        &self,
        s: &HostState,
        profile: &Profile<'_>,
        mode: Semantics,
        factor: Option<&Weight>,
        acc: &mut Concrete,
    ) -> Result<(), OracleError> {
        if mode == Semantics::CleanHanging && self.has_phantoms {
            return Err(OracleError::PhantomInClean(self.name.clone()));
        }
        if !self.fits(profile) {
            return Ok(());
        }
        let found = self.matches(s);
        if found.is_empty() {
            return Ok(());
        }
        let w = match factor {
            Some(f) => f.mul(&self.weight),
            None => self.weight.clone(),
        };
        if w.is_zero() {
            return Ok(());
        }
        for img in found {
            if let Some(t) = self.fire(s, &img, mode)? {
                acc.add(t, &w);
            }
        }
        Ok(())
    }
}

fn check_state(s: &HostState, mode: Semantics) -> Result<(), OracleError> {
    if mode == Semantics::CleanHanging && s.has_hanging_edge() {
        return Err(OracleError::HangingInClean);
    }
    Ok(())
}

fn compile_sum(sum: &RuleSum) -> Vec<Compiled> {
    sum.terms()
        .iter()
        .map(|t| Compiled::new(&t.rule, Weight::scaled(&t.rate, Rational64::from_integer(t.weight))))
        .collect()
}

/// An injective, label- and edge-preserving embedding of a rule's lhs.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Match(pub BTreeMap<NodeId, usize>);

/// All embeddings of `r.lhs` into `s` that avoid `r`'s forbidden edges.
pub fn find_matches(r: &Rule, s: &HostState) -> Vec<Match> {
    let c = Compiled::new(r, Weight::of(r.rate()));
    c.matches(s)
        .into_iter()
        .map(|img| Match(c.ids.iter().copied().zip(img).collect()))
        .collect()
}

pub fn apply_rule(r: &Rule, s: &HostState, mode: Semantics) -> Result<OutcomeMultiset, OracleError> {
    check_state(s, mode)?;
    let mut acc = Concrete::default();
    Compiled::new(r, Weight::of(r.rate())).apply_into(s, &Profile::of(s), mode, None, &mut acc)?;
    Ok(OutcomeMultiset::from_concrete(acc))
}

pub fn apply_sum(sum: &RuleSum, s: &HostState, mode: Semantics) -> Result<OutcomeMultiset, OracleError> {
    check_state(s, mode)?;
    apply_compiled(&compile_sum(sum), s, mode)
}

fn apply_compiled(terms: &[Compiled], s: &HostState, mode: Semantics) -> Result<OutcomeMultiset, OracleError> {
    Ok(OutcomeMultiset::from_concrete(apply_concrete(terms, s, mode)?))
}

fn apply_concrete(terms: &[Compiled], s: &HostState, mode: Semantics) -> Result<Concrete, OracleError> {
    let mut acc = Concrete::default();
    let profile = Profile::of(s);
    for c in terms {
        c.apply_into(s, &profile, mode, None, &mut acc)?;
    }
    Ok(acc)
}

fn sequential_compiled(seconds: &[Compiled], firsts: &[Compiled], s: &HostState, mode: Semantics) -> Result<OutcomeMultiset, OracleError> {
    Ok(OutcomeMultiset::from_concrete(sequential_concrete(seconds, firsts, s, mode)?))
}

fn sequential_concrete(seconds: &[Compiled], firsts: &[Compiled], s: &HostState, mode: Semantics) -> Result<Concrete, OracleError> {
    let mut mid = Concrete::default();
    let profile = Profile::of(s);
    for c in firsts {
        c.apply_into(s, &profile, mode, None, &mut mid)?;
    }
    let mut acc = Concrete::default();
    for (t, w) in &mid.0 {
        let profile = Profile::of(t);
        for c in seconds {
            c.apply_into(t, &profile, mode, Some(w), &mut acc)?;
        }
    }
    Ok(acc)
}

/// `Ŵ2 Ŵ1 |s>` computed by applying `r1` and then `r2`.
pub fn sequential(r2: &Rule, r1: &Rule, s: &HostState, mode: Semantics) -> Result<OutcomeMultiset, OracleError> {
    check_state(s, mode)?;
    let c1 = [Compiled::new(r1, Weight::of(r1.rate()))];
    let c2 = [Compiled::new(r2, Weight::of(r2.rate()))];
    sequential_compiled(&c2, &c1, s, mode)
}

/// The operator `Ŵ` or `Ŵ − N` of one rule as weighted rules.
fn operator_terms(r: &Rule, kind: OperatorKind) -> Vec<Compiled> {
    let mut out = vec![Compiled::new(r, Weight::of(r.rate()))];
    if kind == OperatorKind::Full {
        let n = number_rule(r);
        out.push(Compiled::new(&n, Weight::scaled(n.rate(), Rational64::from_integer(-1))));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub state: HostState,
    /// Outcomes of applying the two rules one after the other.
    pub sequential: OutcomeMultiset,
    /// Outcomes of applying the rule sum.
    pub summed: OutcomeMultiset,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub pass: bool,
    pub vacuous: bool,
    pub states_checked: usize,
    /// States on which the operators act non-trivially.
    pub states_active: usize,
    pub counterexample: Option<Box<Counterexample>>,
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match (self.pass, self.vacuous) {
            (true, true) => "pass (vacuous)",
            (true, false) => "pass",
            (false, _) => "FAIL",
        };
        write!(f, "{status}: {} states, {} active", self.states_checked, self.states_active)?;
        if let Some(c) = &self.counterexample {
            write!(f, "\n  state:      {}\n  sequential: {}\n  summed:     {}", c.state, c.sequential, c.summed)?;
        }
        Ok(())
    }
}

/// Checks `sum |s> = X2 X1 |s>` on every state of the family, where `X` is
/// the hat or full operator of each rule.
pub fn check_sum_equivalence(
    sum: &RuleSum,
    r2: &Rule,
    r1: &Rule,
    kind: OperatorKind,
    mode: Semantics,
    family: &[HostState],
) -> Result<Report, OracleError> {
    let terms = compile_sum(sum);
    let negated: Vec<Compiled> = terms.iter().map(Compiled::negated).collect();
    let firsts = operator_terms(r1, kind);
    let seconds = operator_terms(r2, kind);
    let mut active = 0;
    for s in family {
        check_state(s, mode)?;
        // Accumulate sequential outcomes minus summed outcomes in one map;
        // concrete states that cancel never need a canonical form.
        let mut acc = sequential_concrete(&seconds, &firsts, s, mode)?;
        let nontrivial = acc.is_nontrivial();
        let profile = Profile::of(s);
        for c in &negated {
            c.apply_into(s, &profile, mode, None, &mut acc)?;
        }
        acc.0.retain(|_, w| !w.is_zero());
        if acc.0.is_empty() || OutcomeMultiset::from_concrete(acc).is_empty() {
            if nontrivial {
                active += 1;
            }
            continue;
        }
        let lhs = sequential_compiled(&seconds, &firsts, s, mode)?;
        let rhs = apply_compiled(&terms, s, mode)?;
        if lhs != rhs {
            return Ok(Report {
                pass: false,
                vacuous: false,
                states_checked: family.len(),
                states_active: active,
                counterexample: Some(Box::new(Counterexample { state: s.clone(), sequential: lhs, summed: rhs })),
            });
        }
        if !lhs.is_empty() {
            active += 1;
        }
    }
    Ok(Report {
        pass: true,
        vacuous: family.is_empty(),
        states_checked: family.len(),
        states_active: active,
        counterexample: None,
    })
}

/// Checks the structural product of `r2` after `r1` against sequential
/// application on every state of the family.
pub fn check_equivalence(r2: &Rule, r1: &Rule, mode: Semantics, family: &[HostState]) -> Result<Report, OracleError> {
    let sum = product(r2, r1, mode, OperatorKind::Hat)?;
    check_sum_equivalence(&sum, r2, r1, OperatorKind::Hat, mode, family)
}

/// Every isomorphism class of states with at most `max_nodes` labelled
/// nodes and `max_edges` edges, ordered by canonical form. In keep mode the
/// family also contains states whose edges end on unlabelled indices.
pub fn enumerate_host_states(
    universe: usize,
    max_nodes: usize,
    alphabet: &[Label],
    max_edges: usize,
    mode: Semantics,
) -> Result<Vec<HostState>, OracleError> {
    let mut alphabet: Vec<Label> = alphabet.to_vec();
    alphabet.sort();
    alphabet.dedup();
    let mut seen: HashSet<CanonicalForm> = HashSet::new();
    let mut all: Vec<(CanonicalForm, HostState)> = Vec::new();

    // edge-free states: label multisets
    let mut layer: Vec<HostState> = Vec::new();
    let mut counts = vec![0usize; alphabet.len()];
    loop {
        let total: usize = counts.iter().sum();
        if total <= max_nodes.min(universe) {
            let mut s = HostState::new(universe)?;
            let mut i = 0;
            for (k, &c) in counts.iter().enumerate() {
                for _ in 0..c {
                    s.labels[i] = Some(alphabet[k].clone());
                    i += 1;
                }
            }
            let f = s.canonical_form();
            seen.insert(f.clone());
            all.push((f, s.clone()));
            layer.push(s);
        }
        // odometer over label counts
        let mut k = 0;
        loop {
            if k == counts.len() {
                break;
            }
            counts[k] += 1;
            if counts.iter().sum::<usize>() <= max_nodes {
                break;
            }
            counts[k] = 0;
            k += 1;
        }
        if k == counts.len() {
            break;
        }
    }

    for _ in 0..max_edges {
        let mut next = Vec::new();
        for s in &layer {
            let labelled: Vec<usize> = (0..universe).filter(|&i| s.labels[i].is_some()).collect();
            let mut ends: Vec<usize> = s.occupied();
            if mode == Semantics::KeepHanging {
                if let Some(i) = (0..universe).find(|&i| s.is_free(i)) {
                    ends.push(i);
                }
            }
            for &a in &ends {
                for &b in &ends {
                    if s.has_edge(a, b) || (!labelled.contains(&a) && !labelled.contains(&b)) {
                        continue;
                    }
                    let mut t = s.clone();
                    t.add_edge(a, b);
                    let f = t.canonical_form();
                    if seen.insert(f.clone()) {
                        all.push((f, t.clone()));
                        next.push(t);
                    }
                }
            }
        }
        layer = next;
    }
    all.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(all.into_iter().map(|(_, s)| s).collect())
}

/// Exact generator matrix over a finite basis. Column `j` holds the
/// outcome weights of the operator applied to basis state `j`; weight
/// landing outside the basis is kept aside so each column knows whether it
/// is complete.
#[derive(Clone, Debug)]
pub struct GeneratorMatrix {
    basis: Vec<HostState>,
    columns: Vec<Column>,
}

#[derive(Clone, Debug, Default)]
pub struct Column {
    pub entries: BTreeMap<usize, Weight>,
    pub off_basis: Weight,
}

impl Column {
    pub fn is_valid(&self) -> bool {
        self.off_basis.is_zero()
    }

    pub fn sum(&self) -> Weight {
        let mut w = self.off_basis.clone();
        for e in self.entries.values() {
            w.add(e);
        }
        w
    }
}

impl GeneratorMatrix {
    pub fn basis(&self) -> &[HostState] {
        &self.basis
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn entry(&self, to: usize, from: usize) -> Weight {
        self.columns[from].entries.get(&to).cloned().unwrap_or_default()
    }

    pub fn valid_columns(&self) -> impl Iterator<Item = (usize, &Column)> {
        self.columns.iter().enumerate().filter(|(_, c)| c.is_valid())
    }
}

/// `Σ_r X_r` over the basis, with `X` the hat or full operator.
pub fn build_generator(rules: &[Rule], family: &[HostState], mode: Semantics, kind: OperatorKind) -> Result<GeneratorMatrix, OracleError> {
    let terms: Vec<Compiled> = rules.iter().flat_map(|r| operator_terms(r, kind)).collect();
    let index: HashMap<CanonicalForm, usize> = family.iter().enumerate().map(|(i, s)| (s.canonical_form(), i)).collect();
    let mut columns = Vec::with_capacity(family.len());
    for s in family {
        check_state(s, mode)?;
        let out = apply_compiled(&terms, s, mode)?;
        let mut col = Column::default();
        for (f, _, w) in out.iter() {
            match index.get(f) {
                Some(&i) => {
                    col.entries.insert(i, w.clone());
                }
                None => col.off_basis.add(w),
            }
        }
        columns.push(col);
    }
    Ok(GeneratorMatrix { basis: family.to_vec(), columns })
}
