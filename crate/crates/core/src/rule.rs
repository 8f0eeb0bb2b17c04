//! Rewrite rules: a left- and right-hand graph over one shared node numbering.
//!
//! Ids present on both sides are the conserved nodes (possibly relabelled);
//! lhs-only ids are destroyed and rhs-only ids are created.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canon::{CanonicalForm, ColouredDigraph};
use crate::graph::{GraphError, Label, LabelledGraph, NodeId};
use crate::rate::RateMonomial;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("rule `{rule}`: {side} edge {src}->{dst} has an endpoint outside the node set")]
    DanglingEdge { rule: String, side: Side, src: NodeId, dst: NodeId },
    #[error("rule `{rule}`: {side} declares node {id} twice")]
    DuplicateNode { rule: String, side: Side, id: NodeId },
    #[error("rule `{rule}`: {side} phantom {id} collides with a labelled node")]
    PhantomCollision { rule: String, side: Side, id: NodeId },
    #[error("rule `{rule}`: left-hand side may not carry phantoms")]
    LhsPhantom { rule: String },
    #[error("rule `{rule}`: forbidden edge {src}->{dst} must join lhs nodes and not be an lhs edge")]
    BadForbidden { rule: String, src: NodeId, dst: NodeId },
    #[error("rule `{rule}`: {source}")]
    Graph { rule: String, source: GraphError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lhs,
    Rhs,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Lhs => "lhs",
            Side::Rhs => "rhs",
        })
    }
}

/// Unvalidated description of one side of a rule, as read from a file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideSpec {
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<[NodeId; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phantoms: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: NodeId,
    pub label: String,
}

/// Unvalidated rule description; [`validate_rule`] turns it into a [`Rule`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleSpec {
    pub name: String,
    pub lhs: SideSpec,
    pub rhs: SideSpec,
    pub forbidden: Vec<[NodeId; 2]>,
    pub rate: RateMonomial,
}

/// A graph rewrite rule. `forbidden` lists lhs node pairs whose edge must be
/// absent for the rule to fire; it is empty for grammar rules and appears on
/// compound rules and diagonal (number) rules.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    name: String,
    lhs: LabelledGraph,
    rhs: LabelledGraph,
    forbidden: BTreeSet<(NodeId, NodeId)>,
    rate: RateMonomial,
}

fn side_graph(rule: &str, side: Side, spec: &SideSpec) -> Result<LabelledGraph, RuleError> {
    let mut g = LabelledGraph::new();
    for n in &spec.nodes {
        let label = Label::new(&n.label).map_err(|source| RuleError::Graph { rule: rule.into(), source })?;
        g.add_node(n.id, label).map_err(|e| match e {
            GraphError::DuplicateNode(id) => RuleError::DuplicateNode { rule: rule.into(), side, id },
            GraphError::PhantomCollision(id) => RuleError::PhantomCollision { rule: rule.into(), side, id },
            source => RuleError::Graph { rule: rule.into(), source },
        })?;
    }
    for &p in &spec.phantoms {
        g.add_phantom(p)
            .map_err(|_| RuleError::PhantomCollision { rule: rule.into(), side, id: p })?;
    }
    for &[src, dst] in &spec.edges {
        g.add_edge(src, dst)
            .map_err(|_| RuleError::DanglingEdge { rule: rule.into(), side, src, dst })?;
    }
    Ok(g)
}

/// Checks the edge-support invariant on both sides (and that the lhs carries
/// no phantoms) and builds the rule.
pub fn validate_rule(spec: &RuleSpec) -> Result<Rule, RuleError> {
    let lhs = side_graph(&spec.name, Side::Lhs, &spec.lhs)?;
    let rhs = side_graph(&spec.name, Side::Rhs, &spec.rhs)?;
    let forbidden = spec.forbidden.iter().map(|&[s, t]| (s, t)).collect();
    Rule::with_forbidden(spec.name.clone(), lhs, rhs, forbidden, spec.rate.clone())
}

impl Rule {
    pub fn new(
        name: impl Into<String>,
        lhs: LabelledGraph,
        rhs: LabelledGraph,
        rate: RateMonomial,
    ) -> Result<Self, RuleError> {
        Self::with_forbidden(name, lhs, rhs, BTreeSet::new(), rate)
    }

    pub fn with_forbidden(
        name: impl Into<String>,
        lhs: LabelledGraph,
        rhs: LabelledGraph,
        forbidden: BTreeSet<(NodeId, NodeId)>,
        rate: RateMonomial,
    ) -> Result<Self, RuleError> {
        let name = name.into();
        if !lhs.phantoms().is_empty() {
            return Err(RuleError::LhsPhantom { rule: name });
        }
        for (side, g) in [(Side::Lhs, &lhs), (Side::Rhs, &rhs)] {
            g.validate().map_err(|e| match e {
                GraphError::DanglingEdge { src, dst } => {
                    RuleError::DanglingEdge { rule: name.clone(), side, src, dst }
                }
                GraphError::PhantomCollision(id) => {
                    RuleError::PhantomCollision { rule: name.clone(), side, id }
                }
                source => RuleError::Graph { rule: name.clone(), source },
            })?;
        }
        if let Some(&(src, dst)) = forbidden
            .iter()
            .find(|(s, t)| !lhs.contains_node(*s) || !lhs.contains_node(*t) || lhs.has_edge(*s, *t))
        {
            return Err(RuleError::BadForbidden { rule: name, src, dst });
        }
        Ok(Rule { name, lhs, rhs, forbidden, rate })
    }

    /// The identity rule `∅ → ∅`.
    pub fn empty(name: impl Into<String>) -> Self {
        Rule {
            name: name.into(),
            lhs: LabelledGraph::new(),
            rhs: LabelledGraph::new(),
            forbidden: BTreeSet::new(),
            rate: RateMonomial::one(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lhs(&self) -> &LabelledGraph {
        &self.lhs
    }

    pub fn rhs(&self) -> &LabelledGraph {
        &self.rhs
    }

    pub fn forbidden(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.forbidden
    }

    pub fn rate(&self) -> &RateMonomial {
        &self.rate
    }

    pub fn renamed(&self, name: impl Into<String>) -> Self {
        Rule { name: name.into(), ..self.clone() }
    }

    pub fn with_rate(&self, rate: RateMonomial) -> Self {
        Rule { rate, ..self.clone() }
    }

    pub fn has_edges(&self) -> bool {
        !self.lhs.edges().is_empty() || !self.rhs.edges().is_empty()
    }

    /// Conserved nodes: ids on both sides.
    pub fn conserved(&self) -> BTreeSet<NodeId> {
        self.lhs.nodes().keys().filter(|v| self.rhs.contains_node(**v)).copied().collect()
    }

    /// Nodes the rule destroys.
    pub fn deleted(&self) -> BTreeSet<NodeId> {
        self.lhs.nodes().keys().filter(|v| !self.rhs.contains_node(**v)).copied().collect()
    }

    /// Nodes the rule creates.
    pub fn created(&self) -> BTreeSet<NodeId> {
        self.rhs.nodes().keys().filter(|v| !self.lhs.contains_node(**v)).copied().collect()
    }

    pub fn to_spec(&self) -> RuleSpec {
        let side = |g: &LabelledGraph| SideSpec {
            nodes: g
                .nodes()
                .iter()
                .map(|(&id, l)| NodeSpec { id, label: l.as_str().to_string() })
                .collect(),
            edges: g.edges().iter().map(|&(s, t)| [s, t]).collect(),
            phantoms: g.phantoms().iter().copied().collect(),
        };
        RuleSpec {
            name: self.name.clone(),
            lhs: side(&self.lhs),
            rhs: side(&self.rhs),
            forbidden: self.forbidden.iter().map(|&(s, t)| [s, t]).collect(),
            rate: self.rate.clone(),
        }
    }

    fn vertex_ids(&self) -> Vec<NodeId> {
        let ids: BTreeSet<NodeId> = self
            .lhs
            .nodes()
            .keys()
            .chain(self.rhs.nodes().keys())
            .chain(self.rhs.phantoms())
            .copied()
            .collect();
        ids.into_iter().collect()
    }

    fn canonicalize(&self) -> (CanonicalForm, Vec<NodeId>) {
        let ids = self.vertex_ids();
        let index: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let keys: Vec<Vec<u8>> = ids
            .iter()
            .map(|v| {
                let mut k = Vec::new();
                push_label(&mut k, self.lhs.label(*v));
                if self.rhs.phantoms().contains(v) {
                    k.push(2);
                } else {
                    push_label(&mut k, self.rhs.label(*v));
                }
                k
            })
            .collect();
        let n = ids.len();
        let mut adj = vec![0u8; n * n];
        for (s, t) in self.lhs.edges() {
            adj[index[s] * n + index[t]] |= 1;
        }
        for (s, t) in self.rhs.edges() {
            adj[index[s] * n + index[t]] |= 2;
        }
        for (s, t) in &self.forbidden {
            adj[index[s] * n + index[t]] |= 4;
        }
        let (form, order) = ColouredDigraph { keys: &keys, adj: &adj }.canonicalize();
        (form, order.into_iter().map(|i| ids[i]).collect())
    }

    /// Isomorphism class of the rule's structure (rate and name excluded).
    /// Two rules share a form iff a node bijection preserves labels, edges,
    /// forbidden edges, phantoms and each id's membership in lhs/rhs.
    pub fn canonical_form(&self) -> CanonicalForm {
        self.canonicalize().0
    }

    /// The same rule renumbered `0..n` in canonical order.
    pub fn canonicalized(&self) -> (CanonicalForm, Rule) {
        let (form, order) = self.canonicalize();
        let map: BTreeMap<NodeId, NodeId> =
            order.iter().enumerate().map(|(pos, &v)| (v, pos as NodeId)).collect();
        (form, self.remapped(&map))
    }

    pub(crate) fn remapped(&self, map: &BTreeMap<NodeId, NodeId>) -> Rule {
        let remap_graph = |g: &LabelledGraph| {
            let restricted: BTreeMap<NodeId, NodeId> = g
                .nodes()
                .keys()
                .chain(g.phantoms())
                .map(|v| (*v, map[v]))
                .collect();
            crate::graph::disjoint_embed(g, &restricted).expect("bijective remap")
        };
        Rule {
            name: self.name.clone(),
            lhs: remap_graph(&self.lhs),
            rhs: remap_graph(&self.rhs),
            forbidden: self.forbidden.iter().map(|(s, t)| (map[s], map[t])).collect(),
            rate: self.rate.clone(),
        }
    }
}

fn push_label(k: &mut Vec<u8>, label: Option<&Label>) {
    match label {
        Some(l) => {
            k.push(1);
            k.extend_from_slice(&(l.as_str().len() as u16).to_be_bytes());
            k.extend_from_slice(l.as_str().as_bytes());
        }
        None => k.push(0),
    }
}

pub fn rules_isomorphic(a: &Rule, b: &Rule) -> bool {
    a.canonical_form() == b.canonical_form()
}

/// The diagonal rule `lhs → lhs` with the same rate.
///
/// Edges the rule would create between pre-existing nodes become forbidden
/// edges, so the diagonal counts exactly the matches on which the rule fires.
pub fn number_rule(r: &Rule) -> Rule {
    let mut forbidden = r.forbidden.clone();
    for &(s, t) in r.rhs.edges() {
        if r.lhs.contains_node(s) && r.lhs.contains_node(t) && !r.lhs.has_edge(s, t) {
            forbidden.insert((s, t));
        }
    }
    Rule {
        name: format!("{}^diag", r.name),
        lhs: r.lhs.clone(),
        rhs: r.lhs.clone(),
        forbidden,
        rate: r.rate.clone(),
    }
}

pub(crate) fn fmt_graph(f: &mut fmt::Formatter<'_>, g: &LabelledGraph, forbidden: &BTreeSet<(NodeId, NodeId)>) -> fmt::Result {
    let mut parts: Vec<String> = Vec::new();
    let mut ids: Vec<(NodeId, String)> = g.nodes().iter().map(|(&v, l)| (v, format!("{v}:{l}"))).collect();
    ids.extend(g.phantoms().iter().map(|&v| (v, format!("{v}:_"))));
    ids.sort();
    parts.extend(ids.into_iter().map(|(_, s)| s));
    parts.extend(g.edges().iter().map(|(s, t)| format!("{s}->{t}")));
    parts.extend(forbidden.iter().map(|(s, t)| format!("!{s}->{t}")));
    if parts.is_empty() {
        f.write_str("∅")
    } else {
        f.write_str(&parts.join(", "))
    }
}

impl fmt::Display for LabelledGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_graph(f, self, &BTreeSet::new())
    }
}

/// `LHS => RHS` with nodes `id:label`, phantoms `id:_`, edges `id->id` and
/// forbidden edges `!id->id` on the left.
impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_graph(f, &self.lhs, &self.forbidden)?;
        f.write_str(" => ")?;
        fmt_graph(f, &self.rhs, &BTreeSet::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g<'a>(nodes: impl IntoIterator<Item = (NodeId, &'a str)>, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> LabelledGraph {
        LabelledGraph::build(nodes, edges).unwrap()
    }

    fn spec(lhs_nodes: &[(NodeId, &str)], lhs_edges: &[[NodeId; 2]], rhs_nodes: &[(NodeId, &str)], rhs_edges: &[[NodeId; 2]]) -> RuleSpec {
        let side = |nodes: &[(NodeId, &str)], edges: &[[NodeId; 2]]| SideSpec {
            nodes: nodes.iter().map(|&(id, l)| NodeSpec { id, label: l.into() }).collect(),
            edges: edges.to_vec(),
            phantoms: vec![],
        };
        RuleSpec {
            name: "r".into(),
            lhs: side(lhs_nodes, lhs_edges),
            rhs: side(rhs_nodes, rhs_edges),
            ..Default::default()
        }
    }

    #[test]
    fn grow_rule_is_valid() {
        let r = validate_rule(&spec(&[(1, "grow_end")], &[], &[(1, "internal"), (2, "grow_end")], &[[1, 2]])).unwrap();
        assert_eq!(r.conserved(), BTreeSet::from([1]));
        assert_eq!(r.created(), BTreeSet::from([2]));
        assert!(r.deleted().is_empty());
    }

    #[test]
    fn dangling_lhs_edge_is_named() {
        let err = validate_rule(&spec(&[(1, "A")], &[[1, 2]], &[], &[])).unwrap_err();
        assert_eq!(err, RuleError::DanglingEdge { rule: "r".into(), side: Side::Lhs, src: 1, dst: 2 });
        assert!(err.to_string().contains("1->2"));
    }

    #[test]
    fn rhs_self_loop_is_valid() {
        assert!(validate_rule(&spec(&[(1, "A")], &[], &[(1, "A")], &[[1, 1]])).is_ok());
    }

    #[test]
    fn duplicate_node_is_rejected() {
        let err = validate_rule(&spec(&[(1, "A"), (1, "B")], &[], &[], &[])).unwrap_err();
        assert!(matches!(err, RuleError::DuplicateNode { id: 1, side: Side::Lhs, .. }));
    }

    #[test]
    fn lhs_phantoms_are_rejected() {
        let mut lhs = LabelledGraph::new();
        lhs.add_phantom(3).unwrap();
        let err = Rule::new("p", lhs, LabelledGraph::new(), RateMonomial::one()).unwrap_err();
        assert!(matches!(err, RuleError::LhsPhantom { .. }));
    }

    #[test]
    fn number_rule_examples() {
        let flip = Rule::new("flip", g([(1, "A")], []), g([(1, "B")], []), RateMonomial::symbol("k")).unwrap();
        let d = number_rule(&flip);
        assert_eq!(d.lhs(), flip.lhs());
        assert_eq!(d.rhs(), flip.lhs());
        assert_eq!(d.rate(), flip.rate());
        assert!(d.forbidden().is_empty());

        let e = number_rule(&Rule::empty("e"));
        assert!(e.lhs().is_empty() && e.rhs().is_empty());

        let link = Rule::new("link", g([(1, "A"), (2, "B")], []), g([(1, "A"), (2, "B")], [(1, 2)]), RateMonomial::one()).unwrap();
        assert_eq!(number_rule(&link).forbidden(), &BTreeSet::from([(1, 2)]));
    }

    #[test]
    fn rule_isomorphism_respects_sides() {
        let a = Rule::new("a", g([(1, "A")], []), g([(2, "A")], []), RateMonomial::one()).unwrap();
        let b = Rule::new("b", g([(7, "A")], []), g([(3, "A")], []), RateMonomial::one()).unwrap();
        let keep = Rule::new("c", g([(1, "A")], []), g([(1, "A")], []), RateMonomial::one()).unwrap();
        assert!(rules_isomorphic(&a, &b));
        assert!(!rules_isomorphic(&a, &keep));
        let (_, canon) = b.canonicalized();
        assert!(rules_isomorphic(&canon, &a));
        assert!(canon.lhs().contains_node(0) || canon.rhs().contains_node(0));
    }

    #[test]
    fn display_format() {
        let r = Rule::new("grow", g([(1, "grow_end")], []), g([(1, "internal"), (2, "grow_end")], [(1, 2)]), RateMonomial::one()).unwrap();
        assert_eq!(r.to_string(), "1:grow_end => 1:internal, 2:grow_end, 1->2");
        assert_eq!(Rule::empty("e").to_string(), "∅ => ∅");
    }
}
