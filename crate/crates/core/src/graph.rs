//! Labelled, numbered directed graphs: the left- and right-hand sides of rules.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::canon::{CanonicalForm, ColouredDigraph};

pub type NodeId = u32;

/// A node label drawn from a grammar's finite alphabet.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(Arc<str>);

impl Label {
    pub fn new(name: &str) -> Result<Self, GraphError> {
        if name.is_empty() {
            return Err(GraphError::EmptyLabel);
        }
        Ok(Label(Arc::from(name)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Label::new(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("label must be non-empty")]
    EmptyLabel,
    #[error("node {0} declared twice")]
    DuplicateNode(NodeId),
    #[error("edge {src}->{dst} has an endpoint outside the node set")]
    DanglingEdge { src: NodeId, dst: NodeId },
    #[error("phantom {0} is also a labelled node")]
    PhantomCollision(NodeId),
    #[error("malformed remap: {0}")]
    MalformedRemap(String),
}

/// Finite directed simple graph with labelled nodes.
///
/// Phantoms are unlabelled nodes that may only carry edges; they stay empty
/// except on the right-hand side of compound rules built without hanging-edge
/// cleanup.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LabelledGraph {
    nodes: BTreeMap<NodeId, Label>,
    edges: BTreeSet<(NodeId, NodeId)>,
    phantoms: BTreeSet<NodeId>,
}

impl LabelledGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(
        nodes: BTreeMap<NodeId, Label>,
        edges: BTreeSet<(NodeId, NodeId)>,
        phantoms: BTreeSet<NodeId>,
    ) -> Result<Self, GraphError> {
        let g = LabelledGraph { nodes, edges, phantoms };
        g.validate()?;
        Ok(g)
    }

    /// Builds a graph from `(id, label)` pairs and edges, with no phantoms.
    pub fn build<'a>(
        nodes: impl IntoIterator<Item = (NodeId, &'a str)>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        let mut g = LabelledGraph::new();
        for (id, label) in nodes {
            g.add_node(id, Label::new(label)?)?;
        }
        for (s, t) in edges {
            g.add_edge(s, t)?;
        }
        Ok(g)
    }

    pub fn add_node(&mut self, id: NodeId, label: Label) -> Result<(), GraphError> {
        if self.phantoms.contains(&id) {
            return Err(GraphError::PhantomCollision(id));
        }
        if self.nodes.insert(id, label).is_some() {
            return Err(GraphError::DuplicateNode(id));
        }
        Ok(())
    }

    pub fn add_phantom(&mut self, id: NodeId) -> Result<(), GraphError> {
        if self.nodes.contains_key(&id) {
            return Err(GraphError::PhantomCollision(id));
        }
        self.phantoms.insert(id);
        Ok(())
    }

    /// Adds an edge; both endpoints must already be nodes or phantoms.
    pub fn add_edge(&mut self, src: NodeId, dst: NodeId) -> Result<(), GraphError> {
        if !self.has_vertex(src) || !self.has_vertex(dst) {
            return Err(GraphError::DanglingEdge { src, dst });
        }
        self.edges.insert((src, dst));
        Ok(())
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if let Some(&id) = self.phantoms.iter().find(|p| self.nodes.contains_key(p)) {
            return Err(GraphError::PhantomCollision(id));
        }
        if let Some(&(src, dst)) = self
            .edges
            .iter()
            .find(|(s, t)| !self.has_vertex(*s) || !self.has_vertex(*t))
        {
            return Err(GraphError::DanglingEdge { src, dst });
        }
        Ok(())
    }

    pub fn nodes(&self) -> &BTreeMap<NodeId, Label> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.edges
    }

    pub fn phantoms(&self) -> &BTreeSet<NodeId> {
        &self.phantoms
    }

    pub fn label(&self, id: NodeId) -> Option<&Label> {
        self.nodes.get(&id)
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn has_edge(&self, src: NodeId, dst: NodeId) -> bool {
        self.edges.contains(&(src, dst))
    }

    fn has_vertex(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id) || self.phantoms.contains(&id)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.phantoms.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Vertices in the order used for canonicalization: labelled nodes by id,
    /// then phantoms by id.
    fn vertices(&self) -> Vec<NodeId> {
        self.nodes.keys().chain(self.phantoms.iter()).copied().collect()
    }

    fn canonicalize(&self) -> (CanonicalForm, Vec<NodeId>) {
        let verts = self.vertices();
        let index: BTreeMap<NodeId, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let keys: Vec<Vec<u8>> = verts
            .iter()
            .map(|v| match self.nodes.get(v) {
                Some(l) => {
                    let mut k = vec![1u8];
                    k.extend_from_slice(l.as_str().as_bytes());
                    k
                }
                None => vec![0u8],
            })
            .collect();
        let n = verts.len();
        let mut adj = vec![0u8; n * n];
        for (s, t) in &self.edges {
            adj[index[s] * n + index[t]] = 1;
        }
        let (form, order) = ColouredDigraph { keys: &keys, adj: &adj }.canonicalize();
        (form, order.into_iter().map(|i| verts[i]).collect())
    }

    pub fn canonical_form(&self) -> CanonicalForm {
        self.canonicalize().0
    }

    /// The renumbering `old id -> position` that puts the graph in canonical order.
    pub fn canonical_numbering(&self) -> BTreeMap<NodeId, NodeId> {
        self.canonicalize()
            .1
            .into_iter()
            .enumerate()
            .map(|(pos, v)| (v, pos as NodeId))
            .collect()
    }
}

pub fn are_isomorphic(a: &LabelledGraph, b: &LabelledGraph) -> bool {
    a.node_count() == b.node_count()
        && a.phantoms.len() == b.phantoms.len()
        && a.edges.len() == b.edges.len()
        && a.canonical_form() == b.canonical_form()
}

/// An injective map from a subset `S` of one graph's nodes into another's.
/// `S` is the key set.
pub type PartialInjection = BTreeMap<NodeId, NodeId>;

/// Every label-preserving partial injection from `src` nodes into `dst` nodes,
/// including the empty one, in depth-first order (skip before map, targets
/// ascending).
pub fn label_partial_injections(src: &LabelledGraph, dst: &LabelledGraph) -> Vec<PartialInjection> {
    fn go(
        srcs: &[(NodeId, &Label)],
        dst: &LabelledGraph,
        used: &mut BTreeSet<NodeId>,
        cur: &mut PartialInjection,
        out: &mut Vec<PartialInjection>,
    ) {
        let Some(((v, label), rest)) = srcs.split_first() else {
            out.push(cur.clone());
            return;
        };
        go(rest, dst, used, cur, out);
        for (&w, l) in dst.nodes() {
            if l == *label && !used.contains(&w) {
                used.insert(w);
                cur.insert(*v, w);
                go(rest, dst, used, cur, out);
                cur.remove(v);
                used.remove(&w);
            }
        }
    }
    let srcs: Vec<(NodeId, &Label)> = src.nodes().iter().map(|(&k, l)| (k, l)).collect();
    let mut out = Vec::new();
    go(&srcs, dst, &mut BTreeSet::new(), &mut BTreeMap::new(), &mut out);
    out
}

/// Renumbers nodes, phantoms and edges of `g` through `id_map`, which must be
/// total and injective on `g`'s vertices.
pub fn disjoint_embed(
    g: &LabelledGraph,
    id_map: &BTreeMap<NodeId, NodeId>,
) -> Result<LabelledGraph, GraphError> {
    let mut seen = BTreeSet::new();
    for v in g.vertices() {
        let Some(&w) = id_map.get(&v) else {
            return Err(GraphError::MalformedRemap(format!("no image for node {v}")));
        };
        if !seen.insert(w) {
            return Err(GraphError::MalformedRemap(format!("image {w} used twice")));
        }
    }
    let nodes = g.nodes.iter().map(|(v, l)| (id_map[v], l.clone())).collect();
    let phantoms = g.phantoms.iter().map(|v| id_map[v]).collect();
    let edges = g.edges.iter().map(|(s, t)| (id_map[s], id_map[t])).collect();
    Ok(LabelledGraph { nodes, edges, phantoms })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(ids: [NodeId; 3]) -> LabelledGraph {
        LabelledGraph::build(
            [(ids[0], "A"), (ids[1], "B"), (ids[2], "C")],
            [(ids[0], ids[1]), (ids[1], ids[2])],
        )
        .unwrap()
    }

    #[test]
    fn empty_graph_has_distinguished_form() {
        assert_eq!(LabelledGraph::new().canonical_form(), CanonicalForm::empty());
        let one = LabelledGraph::build([(0, "A")], []).unwrap();
        assert_ne!(one.canonical_form(), CanonicalForm::empty());
    }

    #[test]
    fn single_node_renumbering() {
        let a = LabelledGraph::build([(7, "A")], []).unwrap();
        let b = LabelledGraph::build([(0, "A")], []).unwrap();
        assert_eq!(a.canonical_form(), b.canonical_form());
    }

    #[test]
    fn path_numberings_agree() {
        assert_eq!(path([1, 2, 3]).canonical_form(), path([9, 4, 6]).canonical_form());
    }

    #[test]
    fn edge_direction_matters() {
        let ab = LabelledGraph::build([(0, "A"), (1, "B")], [(0, 1)]).unwrap();
        let ba = LabelledGraph::build([(0, "A"), (1, "B")], [(1, 0)]).unwrap();
        assert!(!are_isomorphic(&ab, &ba));
        let a5 = LabelledGraph::build([(5, "A")], []).unwrap();
        let a0 = LabelledGraph::build([(0, "A")], []).unwrap();
        assert!(are_isomorphic(&a0, &a5));
    }

    #[test]
    fn self_loops_and_phantoms_are_distinguished() {
        let plain = LabelledGraph::build([(0, "A")], []).unwrap();
        let looped = LabelledGraph::build([(0, "A")], [(0, 0)]).unwrap();
        assert!(!are_isomorphic(&plain, &looped));

        let mut hanging = LabelledGraph::build([(0, "A")], []).unwrap();
        hanging.add_phantom(1).unwrap();
        hanging.add_edge(0, 1).unwrap();
        let mut other = LabelledGraph::build([(3, "A"), (4, "A")], []).unwrap();
        other.add_edge(3, 4).unwrap();
        assert!(!are_isomorphic(&hanging, &other));
    }

    #[test]
    fn dangling_edges_are_rejected() {
        let err = LabelledGraph::build([(1, "A")], [(1, 2)]).unwrap_err();
        assert_eq!(err, GraphError::DanglingEdge { src: 1, dst: 2 });
        assert!(LabelledGraph::build([(1, "A")], [(1, 1)]).is_ok());
        assert_eq!(Label::new("").unwrap_err(), GraphError::EmptyLabel);
    }

    #[test]
    fn partial_injections_small_cases() {
        let a = LabelledGraph::build([(1, "A")], []).unwrap();
        let b = LabelledGraph::build([(1, "B")], []).unwrap();
        assert_eq!(label_partial_injections(&a, &b), vec![BTreeMap::new()]);

        let aa = LabelledGraph::build([(1, "A"), (2, "A")], []).unwrap();
        let got = label_partial_injections(&a, &aa);
        let want: Vec<PartialInjection> =
            vec![BTreeMap::new(), BTreeMap::from([(1, 1)]), BTreeMap::from([(1, 2)])];
        assert_eq!(got, want);

        let three = LabelledGraph::build([(1, "o"), (2, "o"), (3, "o")], []).unwrap();
        assert_eq!(label_partial_injections(&three, &three).len(), 34);
    }

    #[test]
    fn embed_identity_and_shift() {
        let g = path([1, 2, 3]);
        let id: BTreeMap<NodeId, NodeId> = [(1, 1), (2, 2), (3, 3)].into();
        assert_eq!(disjoint_embed(&g, &id).unwrap(), g);

        let a = LabelledGraph::build([(1, "A")], []).unwrap();
        let moved = disjoint_embed(&a, &BTreeMap::from([(1, 10)])).unwrap();
        assert_eq!(moved, LabelledGraph::build([(10, "A")], []).unwrap());
    }

    #[test]
    fn embed_reversal_keeps_class() {
        let p = LabelledGraph::build([(1, "A"), (2, "A")], [(1, 2)]).unwrap();
        let swapped = disjoint_embed(&p, &BTreeMap::from([(1, 2), (2, 1)])).unwrap();
        assert!(swapped.has_edge(2, 1));
        assert_eq!(swapped.canonical_form(), p.canonical_form());
    }

    #[test]
    fn embed_rejects_bad_maps() {
        let p = LabelledGraph::build([(1, "A"), (2, "A")], [(1, 2)]).unwrap();
        assert!(matches!(
            disjoint_embed(&p, &BTreeMap::from([(1, 5)])),
            Err(GraphError::MalformedRemap(_))
        ));
        assert!(matches!(
            disjoint_embed(&p, &BTreeMap::from([(1, 5), (2, 5)])),
            Err(GraphError::MalformedRemap(_))
        ));
    }
}
