//! Symbol relation trees.
//!
//! Each node is one symbol. A node has at most one child per relation, so
//! the children live in a map keyed by [`Relation`]; the `Right` child
//! continues the node's baseline.

use std::collections::BTreeMap;
use std::fmt;

use crate::ink::SymbolId;

/// Spatial relation from a parent symbol to a child.
///
/// The declaration order is the canonical traversal order: scripts first,
/// then limits and radicands, then the baseline continuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    Subscript,
    Superscript,
    Over,
    Under,
    Inside,
    Right,
}

impl Relation {
    pub const ALL: [Relation; 6] = [
        Relation::Subscript,
        Relation::Superscript,
        Relation::Over,
        Relation::Under,
        Relation::Inside,
        Relation::Right,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Relation::Right => "RIGHT",
            Relation::Subscript => "SUBSCRIPT",
            Relation::Superscript => "SUPERSCRIPT",
            Relation::Over => "OVER",
            Relation::Under => "UNDER",
            Relation::Inside => "INSIDE",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s))
    }

    pub fn is_script(self) -> bool {
        matches!(self, Relation::Subscript | Relation::Superscript)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrtNode {
    symbol: SymbolId,
    label: String,
    children: BTreeMap<Relation, SrtNode>,
}

impl SrtNode {
    pub fn new(symbol: SymbolId, label: impl Into<String>) -> Self {
        Self {
            symbol,
            label: label.into(),
            children: BTreeMap::new(),
        }
    }

    /// Builder-style attach. Replaces any existing child for `relation`.
    pub fn with(mut self, relation: Relation, child: SrtNode) -> Self {
        self.children.insert(relation, child);
        self
    }

    pub fn symbol(&self) -> &SymbolId {
        &self.symbol
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn child(&self, relation: Relation) -> Option<&SrtNode> {
        self.children.get(&relation)
    }

    pub fn children(&self) -> impl Iterator<Item = (Relation, &SrtNode)> {
        self.children.iter().map(|(r, n)| (*r, n))
    }

    pub fn has_child(&self, relation: Relation) -> bool {
        self.children.contains_key(&relation)
    }

    pub fn set_child(&mut self, relation: Relation, child: SrtNode) -> Option<SrtNode> {
        self.children.insert(relation, child)
    }

    pub fn take_child(&mut self, relation: Relation) -> Option<SrtNode> {
        self.children.remove(&relation)
    }

    /// Pre-order walk: the node, then its children in [`Relation`] order.
    pub fn walk<'a>(&'a self, out: &mut Vec<&'a SrtNode>) {
        out.push(self);
        for child in self.children.values() {
            child.walk(out);
        }
    }

    /// The node followed by its `Right` successors.
    pub fn baseline(&self) -> Vec<&SrtNode> {
        let mut out = vec![self];
        let mut cur = self;
        while let Some(next) = cur.child(Relation::Right) {
            out.push(next);
            cur = next;
        }
        out
    }

    pub fn len(&self) -> usize {
        1 + self.children.values().map(SrtNode::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Rooted tree of symbols. Acyclic and single-rooted by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolRelationTree {
    root: SrtNode,
}

impl SymbolRelationTree {
    pub fn new(root: SrtNode) -> Self {
        Self { root }
    }

    /// Links `nodes` left to right with `Right` edges.
    pub fn from_baseline(nodes: Vec<SrtNode>) -> Option<Self> {
        chain(nodes).map(Self::new)
    }

    pub fn root(&self) -> &SrtNode {
        &self.root
    }

    pub fn into_root(self) -> SrtNode {
        self.root
    }

    pub fn nodes(&self) -> Vec<&SrtNode> {
        let mut out = Vec::new();
        self.root.walk(&mut out);
        out
    }

    pub fn symbol_ids(&self) -> Vec<&SymbolId> {
        self.nodes().into_iter().map(SrtNode::symbol).collect()
    }

    pub fn len(&self) -> usize {
        self.root.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Every edge as `(parent, relation, child)` in pre-order.
    pub fn edges(&self) -> Vec<(&SymbolId, Relation, &SymbolId)> {
        self.nodes()
            .into_iter()
            .flat_map(|n| n.children().map(move |(r, c)| (n.symbol(), r, c.symbol())))
            .collect()
    }
}

/// Links a sequence of nodes into a `Right` chain, keeping each node's
/// other children. Any existing `Right` child of the last node is kept.
pub(crate) fn chain(nodes: Vec<SrtNode>) -> Option<SrtNode> {
    let mut iter = nodes.into_iter().rev();
    let mut acc = iter.next()?;
    for mut node in iter {
        node.children.insert(Relation::Right, acc);
        acc = node;
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(id: &str, label: &str) -> SrtNode {
        SrtNode::new(SymbolId::new(id), label)
    }

    #[test]
    fn chain_and_baseline() {
        let tree = SymbolRelationTree::from_baseline(vec![
            n("a", "x").with(Relation::Superscript, n("b", "2")),
            n("c", "+"),
            n("d", "1"),
        ])
        .unwrap();
        let labels: Vec<_> = tree.root().baseline().iter().map(|n| n.label()).collect();
        assert_eq!(labels, ["x", "+", "1"]);
        assert_eq!(tree.len(), 4);
        let ids: Vec<_> = tree.symbol_ids().iter().map(|s| s.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c", "d"]);
        assert_eq!(tree.edges().len(), 3);
    }

    #[test]
    fn relation_names_round_trip() {
        for r in Relation::ALL {
            assert_eq!(Relation::from_name(r.name()), Some(r));
        }
        assert_eq!(Relation::from_name("sup"), None);
    }
}
