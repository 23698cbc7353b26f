//! Finite-depth k-homogeneous trees.
//!
//! A [`TreeSpace`] partitions the probability space into `k^depth` leaf
//! cells of equal measure. Every node is a contiguous block of leaves, so
//! father/children arithmetic is index arithmetic and node integrals reduce
//! to sums over leaf blocks.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of leaves a tree may have.
pub const MAX_LEAVES: usize = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreeSpace {
    k: usize,
    depth: u32,
    n_leaves: usize,
}

/// A tree element addressed by its level and its position within the level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId {
    pub level: u32,
    pub index: usize,
}

impl NodeId {
    pub const ROOT: NodeId = NodeId { level: 0, index: 0 };

    pub fn new(level: u32, index: usize) -> Self {
        NodeId { level, index }
    }

    pub fn is_root(&self) -> bool {
        self.level == 0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.level, self.index)
    }
}

impl TreeSpace {
    pub fn new(k: usize, depth: u32) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidTree {
                k,
                depth,
                reason: "k must be at least 2",
            });
        }
        let n_leaves =
            k.checked_pow(depth)
                .filter(|&n| n <= MAX_LEAVES)
                .ok_or(Error::InvalidTree {
                    k,
                    depth,
                    reason: "too many leaves",
                })?;
        Ok(TreeSpace { k, depth, n_leaves })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn leaf_measure(&self) -> f64 {
        1.0 / self.n_leaves as f64
    }

    /// Number of nodes on `level`.
    pub fn level_width(&self, level: u32) -> usize {
        self.k.pow(level)
    }

    /// Number of leaves below a node of `level`.
    pub fn block_len(&self, level: u32) -> usize {
        self.k.pow(self.depth - level)
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.level <= self.depth && node.index < self.level_width(node.level)
    }

    fn check(&self, node: NodeId) -> Result<()> {
        if self.contains(node) {
            Ok(())
        } else {
            Err(Error::InvalidNode(node))
        }
    }

    pub fn node_measure(&self, node: NodeId) -> Result<f64> {
        self.check(node)?;
        Ok(1.0 / self.level_width(node.level) as f64)
    }

    pub fn children(&self, node: NodeId) -> Result<Vec<NodeId>> {
        self.check(node)?;
        if node.level == self.depth {
            return Err(Error::LeafHasNoChildren(node));
        }
        let first = node.index * self.k;
        Ok((first..first + self.k)
            .map(|i| NodeId::new(node.level + 1, i))
            .collect())
    }

    pub fn father(&self, node: NodeId) -> Result<NodeId> {
        self.check(node)?;
        if node.is_root() {
            return Err(Error::RootHasNoFather);
        }
        Ok(NodeId::new(node.level - 1, node.index / self.k))
    }

    /// First leaf and number of leaves covered by `node`.
    pub fn leaf_range(&self, node: NodeId) -> Result<(usize, usize)> {
        self.check(node)?;
        let len = self.block_len(node.level);
        Ok((node.index * len, len))
    }

    /// The leaf node holding leaf `leaf`.
    pub fn leaf(&self, leaf: usize) -> Result<NodeId> {
        let node = NodeId::new(self.depth, leaf);
        self.check(node)?;
        Ok(node)
    }

    /// Ancestor of `node` on `level` (the node itself when the levels agree).
    pub fn ancestor(&self, node: NodeId, level: u32) -> Result<NodeId> {
        self.check(node)?;
        if level > node.level {
            return Err(Error::Precondition(format!(
                "level {level} is below node {node}"
            )));
        }
        let shift = self.k.pow(node.level - level);
        Ok(NodeId::new(level, node.index / shift))
    }

    /// Whether `inner ⊆ outer` as tree elements.
    pub fn is_descendant(&self, inner: NodeId, outer: NodeId) -> bool {
        inner.level >= outer.level
            && inner.index / self.k.pow(inner.level - outer.level) == outer.index
    }

    /// All nodes, level by level, indices ascending.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..=self.depth).flat_map(move |l| (0..self.level_width(l)).map(move |i| NodeId::new(l, i)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(k: usize, depth: u32) -> TreeSpace {
        TreeSpace::new(k, depth).unwrap()
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(TreeSpace::new(1, 3).is_err());
        assert!(TreeSpace::new(2, 40).is_err());
        assert_eq!(space(3, 0).n_leaves(), 1);
    }

    #[test]
    fn node_measures() {
        let s = space(2, 2);
        assert_eq!(s.node_measure(NodeId::ROOT).unwrap(), 1.0);
        assert_eq!(s.node_measure(NodeId::new(1, 0)).unwrap(), 0.5);
        assert_eq!(
            space(4, 3).node_measure(NodeId::new(3, 17)).unwrap(),
            1.0 / 64.0
        );
        assert!(s.node_measure(NodeId::new(1, 2)).is_err());
        assert!(s.node_measure(NodeId::new(3, 0)).is_err());
    }

    #[test]
    fn children_and_fathers() {
        let s = space(2, 2);
        assert_eq!(
            s.children(NodeId::ROOT).unwrap(),
            vec![NodeId::new(1, 0), NodeId::new(1, 1)]
        );
        assert_eq!(
            s.children(NodeId::new(1, 1)).unwrap(),
            vec![NodeId::new(2, 2), NodeId::new(2, 3)]
        );
        assert_eq!(
            space(3, 2).children(NodeId::new(1, 2)).unwrap(),
            vec![NodeId::new(2, 6), NodeId::new(2, 7), NodeId::new(2, 8)]
        );
        assert_eq!(
            s.children(NodeId::new(2, 0)),
            Err(Error::LeafHasNoChildren(NodeId::new(2, 0)))
        );

        assert_eq!(s.father(NodeId::new(2, 3)).unwrap(), NodeId::new(1, 1));
        assert_eq!(s.father(NodeId::new(1, 0)).unwrap(), NodeId::ROOT);
        assert_eq!(
            space(4, 2).father(NodeId::new(2, 13)).unwrap(),
            NodeId::new(1, 3)
        );
        assert_eq!(s.father(NodeId::ROOT), Err(Error::RootHasNoFather));
    }

    #[test]
    fn leaf_ranges() {
        let s = space(2, 3);
        assert_eq!(s.leaf_range(NodeId::ROOT).unwrap(), (0, 8));
        assert_eq!(s.leaf_range(NodeId::new(2, 1)).unwrap(), (2, 2));
        assert_eq!(s.leaf_range(NodeId::new(3, 5)).unwrap(), (5, 1));
    }

    #[test]
    fn tree_axioms_hold_on_every_node() {
        for (k, depth) in [(2, 4), (3, 3), (4, 2), (8, 2)] {
            let s = space(k, depth);
            for l in 0..=depth {
                let total: f64 = (0..s.level_width(l))
                    .map(|i| s.node_measure(NodeId::new(l, i)).unwrap())
                    .sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
            for n in s.nodes().filter(|n| n.level < depth) {
                let (start, len) = s.leaf_range(n).unwrap();
                let mut next = start;
                for c in s.children(n).unwrap() {
                    assert_eq!(s.father(c).unwrap(), n);
                    let (cs, cl) = s.leaf_range(c).unwrap();
                    assert_eq!(cs, next);
                    next += cl;
                    let ratio = s.node_measure(n).unwrap() / s.node_measure(c).unwrap();
                    assert!((ratio - k as f64).abs() < 1e-9);
                    assert!(s.is_descendant(c, n));
                }
                assert_eq!(next, start + len);
            }
        }
    }

    #[test]
    fn ancestors() {
        let s = space(2, 3);
        assert_eq!(s.ancestor(NodeId::new(3, 5), 1).unwrap(), NodeId::new(1, 1));
        assert_eq!(s.ancestor(NodeId::new(3, 5), 3).unwrap(), NodeId::new(3, 5));
        assert!(s.ancestor(NodeId::new(1, 0), 2).is_err());
        assert!(!s.is_descendant(NodeId::new(1, 0), NodeId::new(2, 0)));
    }
}
