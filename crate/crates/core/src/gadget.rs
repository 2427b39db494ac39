//! Vertex-cover reduction gadget.
//!
//! From an undirected graph `G = (V, E)` this builds a 2-regular recommendation
//! graph with one harmful node per edge and per vertex, two harmful sinks
//! `h1, h2` and two neutral nodes `n1, n2`:
//!
//! ```text
//! e = (a, b)  ->  v_a, v_b
//! v           ->  h1, h2
//! h1, h2      ->  n1, n2
//! ```
//!
//! Every transition has probability 0.5, so `z(h) = 1`, `z(v) = 2` and
//! `z(e) = 3`. Rewiring `(v, h1, n1)` for every `v` of a vertex cover drops
//! each edge node to 2.75 (one endpoint covered) or 2.5 (both covered).

use crate::error::{Error, Result};
use crate::graph::{NodeId, NodeLabel, RankDiscount, RecGraph, RelevanceStore, RewiringOp};

pub const H1: NodeId = NodeId(0);
pub const H2: NodeId = NodeId(1);
pub const N1: NodeId = NodeId(2);
pub const N2: NodeId = NodeId(3);

#[derive(Debug, Clone)]
pub struct Gadget {
    pub graph: RecGraph,
    pub relevance: RelevanceStore,
    pub vertex_count: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Gadget {
    pub fn vertex_node(&self, v: usize) -> NodeId {
        NodeId(4 + v)
    }

    pub fn edge_node(&self, e: usize) -> NodeId {
        NodeId(4 + self.vertex_count + e)
    }

    pub fn vertex_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.vertex_count).map(|v| self.vertex_node(v))
    }

    pub fn edge_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.edges.len()).map(|e| self.edge_node(e))
    }

    /// Input vertex behind a gadget node, if it is a vertex node.
    pub fn vertex_of(&self, node: NodeId) -> Option<usize> {
        (4..4 + self.vertex_count).contains(&node.index()).then(|| node.index() - 4)
    }

    /// The rewirings `(v, h1, n1)` for every vertex `v` in `cover`.
    pub fn cover_ops(&self, cover: &[usize]) -> Result<Vec<RewiringOp>> {
        cover.iter().map(|&v| self.graph.make_op(self.vertex_node(v), H1, N1)).collect()
    }
}

/// Builds the gadget for `vertex_count` vertices and the undirected `edges`.
pub fn build_gadget(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Gadget> {
    for (i, &(a, b)) in edges.iter().enumerate() {
        if a >= vertex_count || b >= vertex_count {
            return Err(Error::InvalidGraph(format!("edge ({a}, {b}) references a missing vertex")));
        }
        if a == b {
            return Err(Error::InvalidGraph(format!("self-loop at vertex {a}")));
        }
        let key = (a.min(b), a.max(b));
        if edges[..i].iter().any(|&(x, y)| (x.min(y), x.max(y)) == key) {
            return Err(Error::InvalidGraph(format!("duplicate edge ({a}, {b})")));
        }
    }
    let n = 4 + vertex_count + edges.len();
    let vertex = |v: usize| NodeId(4 + v);

    let mut labels = vec![NodeLabel::Harmful; n];
    labels[N1.index()] = NodeLabel::Neutral;
    labels[N2.index()] = NodeLabel::Neutral;

    let mut lists: Vec<Vec<NodeId>> = Vec::with_capacity(n);
    lists.push(vec![N1, N2]);
    lists.push(vec![N1, N2]);
    // Neutral lists only matter for audits.
    lists.push(vec![N2, H1]);
    lists.push(vec![N1, H1]);
    for _ in 0..vertex_count {
        lists.push(vec![H1, H2]);
    }
    for &(a, b) in edges {
        lists.push(vec![vertex(a), vertex(b)]);
    }

    let mut relevance = RelevanceStore::new(n);
    for (u, list) in lists.iter().enumerate() {
        for &v in list {
            relevance.insert(NodeId(u), v, 1.0)?;
        }
        if u >= 4 {
            relevance.insert(NodeId(u), N1, 1.0)?;
            relevance.insert(NodeId(u), N2, 1.0)?;
        }
    }
    let lists = lists.into_iter().map(|l| l.into_iter().map(|v| (v, 1.0)).collect()).collect();
    let graph = RecGraph::from_lists(labels, lists, RankDiscount::uniform(2)?, &relevance)?;
    Ok(Gadget { graph, relevance, vertex_count, edges: edges.to_vec() })
}

pub fn is_vertex_cover(edges: &[(usize, usize)], cover: &[usize]) -> bool {
    edges.iter().all(|(a, b)| cover.contains(a) || cover.contains(b))
}

/// Smallest vertex cover by exhaustive search; `None` above 24 vertices.
/// Among equal sizes the lexicographically smallest cover is returned.
pub fn min_vertex_cover(vertex_count: usize, edges: &[(usize, usize)]) -> Option<Vec<usize>> {
    if vertex_count > 24 {
        return None;
    }
    let masks: Vec<u32> = edges.iter().map(|&(a, b)| (1u32 << a) | (1u32 << b)).collect();
    for size in 0..=vertex_count {
        let mut best: Option<Vec<usize>> = None;
        for mask in 0u32..(1u32 << vertex_count) {
            if mask.count_ones() as usize != size || !masks.iter().all(|m| m & mask != 0) {
                continue;
            }
            let cover: Vec<usize> = (0..vertex_count).filter(|v| mask & (1 << v) != 0).collect();
            if best.as_ref().is_none_or(|b| cover < *b) {
                best = Some(cover);
            }
        }
        if best.is_some() {
            return best;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate_graph;

    #[test]
    fn gadget_shape() {
        let g = build_gadget(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(g.graph.n(), 4 + 3 + 3);
        assert_eq!(g.graph.d(), 2);
        for u in g.graph.nodes() {
            for (_, p) in g.graph.out_edges(u) {
                assert_eq!(p, 0.5);
            }
        }
        let e0: Vec<_> = g.graph.list(g.edge_node(0)).items().collect();
        assert_eq!(e0, vec![g.vertex_node(0), g.vertex_node(1)]);
        assert!(validate_graph(&g.graph).is_valid());
        assert_eq!(g.vertex_of(g.vertex_node(2)), Some(2));
        assert_eq!(g.vertex_of(g.edge_node(0)), None);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(build_gadget(2, &[(0, 0)]).is_err());
        assert!(build_gadget(2, &[(0, 2)]).is_err());
        assert!(build_gadget(2, &[(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn cover_op_moves_h1_slot_to_n1() {
        let mut g = build_gadget(2, &[(0, 1)]).unwrap();
        let ops = g.cover_ops(&[0]).unwrap();
        assert_eq!(ops[0].rank, 1);
        g.graph.apply_rewiring(&ops[0], &g.relevance).unwrap();
        let items: Vec<_> = g.graph.list(g.vertex_node(0)).items().collect();
        assert_eq!(items, vec![N1, H2]);
        assert_eq!(g.graph.transition_probability(g.vertex_node(0), N1).unwrap(), 0.5);
    }

    #[test]
    fn minimum_covers() {
        assert_eq!(min_vertex_cover(3, &[(0, 1), (1, 2), (0, 2)]), Some(vec![0, 1]));
        assert_eq!(min_vertex_cover(4, &[(0, 1), (0, 2), (0, 3)]), Some(vec![0]));
        assert_eq!(min_vertex_cover(2, &[]), Some(vec![]));
        assert!(is_vertex_cover(&[(0, 1), (1, 2)], &[1]));
        assert!(!is_vertex_cover(&[(0, 1), (1, 2)], &[0]));
    }
}
