//! The d-regular recommendation graph: ranked lists, labels, the rank-to-probability
//! transition model and nDCG quality bookkeeping.
//!
//! Every node owns an ordered list of exactly `d` recommendations. The item at
//! 1-based rank `i` is followed with probability `discount.prob(i)`. A rewiring
//! swaps the item in one slot for a neutral node and leaves the rank (hence the
//! probability) of that slot untouched, so lists may stop being score-sorted.

mod discount;
mod relevance;
mod validate;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use discount::{dcg_discount, DiscountKind, RankDiscount};
pub use relevance::RelevanceStore;
pub use validate::{validate_graph, ValidationReport};

use crate::error::{Error, PreconditionViolation, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeLabel {
    Harmful,
    Neutral,
}

impl NodeLabel {
    pub fn is_harmful(self) -> bool {
        self == NodeLabel::Harmful
    }
}

impl FromStr for NodeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "harmful" => Ok(NodeLabel::Harmful),
            "neutral" => Ok(NodeLabel::Neutral),
            _ => Err(Error::InvalidLabel(s.to_string())),
        }
    }
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeLabel::Harmful => "harmful",
            NodeLabel::Neutral => "neutral",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub item: NodeId,
    pub score: f64,
}

/// Ranked recommendations of one node. Slot `i` (0-based) has rank `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationList {
    owner: NodeId,
    slots: Vec<Slot>,
}

impl RecommendationList {
    pub fn new(owner: NodeId, slots: Vec<Slot>) -> Self {
        RecommendationList { owner, slots }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn items(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.slots.iter().map(|s| s.item)
    }

    /// 1-based rank of `v`, if present.
    pub fn rank_of(&self, v: NodeId) -> Option<usize> {
        self.slots.iter().position(|s| s.item == v).map(|i| i + 1)
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.slots.iter().any(|s| s.item == v)
    }

    /// `sum_v s_uv / (1 + log2(1 + rank(v)))`, with scores read from `relevance`.
    pub fn dcg(&self, relevance: &RelevanceStore) -> f64 {
        self.slots
            .iter()
            .enumerate()
            .map(|(i, s)| relevance.get(self.owner, s.item) * dcg_discount(i + 1))
            .sum()
    }
}

/// DCG of a list; missing relevance reads as zero.
pub fn dcg(list: &RecommendationList, relevance: &RelevanceStore) -> f64 {
    list.dcg(relevance)
}

/// nDCG of `list` against the owner's original list.
pub fn quality_loss(list: &RecommendationList, graph: &RecGraph, relevance: &RelevanceStore) -> Result<f64> {
    let ideal = graph.ideal_dcg(list.owner);
    if ideal <= 0.0 {
        return Err(Error::ZeroIdealDcg(list.owner));
    }
    Ok(list.dcg(relevance) / ideal)
}

/// One rewiring `o = (u, v, w)`: the slot of `v` in `u`'s list is handed to `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewiringOp {
    pub u: NodeId,
    pub v: NodeId,
    pub w: NodeId,
    /// Transferred probability `p_uv`.
    pub p_o: f64,
    /// 1-based rank of the rewired slot.
    pub rank: usize,
}

impl RewiringOp {
    pub fn key(&self) -> (NodeId, NodeId, NodeId) {
        (self.u, self.v, self.w)
    }

    /// Lexicographic `(u, v, w)` order used for deterministic tie-breaking.
    pub fn lex_cmp(&self, other: &RewiringOp) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for RewiringOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})@{}", self.u, self.v, self.w, self.rank)
    }
}

/// Directed probabilistic d-regular recommendation graph.
#[derive(Debug, Clone, PartialEq)]
pub struct RecGraph {
    d: usize,
    labels: Vec<NodeLabel>,
    lists: Vec<RecommendationList>,
    discount: RankDiscount,
    ideal_dcg: Vec<f64>,
}

impl RecGraph {
    /// Assembles a graph from explicit ranked lists. The given lists are taken as
    /// the original lists: their DCG becomes each node's ideal DCG.
    pub fn from_lists(
        labels: Vec<NodeLabel>,
        lists: Vec<Vec<(NodeId, f64)>>,
        discount: RankDiscount,
        relevance: &RelevanceStore,
    ) -> Result<Self> {
        let ideal = lists
            .iter()
            .enumerate()
            .map(|(u, slots)| {
                slots
                    .iter()
                    .enumerate()
                    .map(|(i, &(v, _))| relevance.get(NodeId(u), v) * dcg_discount(i + 1))
                    .sum()
            })
            .collect();
        Self::with_ideal(labels, lists, discount, ideal)
    }

    /// Like [`RecGraph::from_lists`] but with caller-provided ideal DCG values,
    /// e.g. when reloading a graph that has already been rewired.
    pub fn with_ideal(
        labels: Vec<NodeLabel>,
        lists: Vec<Vec<(NodeId, f64)>>,
        discount: RankDiscount,
        ideal_dcg: Vec<f64>,
    ) -> Result<Self> {
        let n = labels.len();
        let d = discount.d();
        if lists.len() != n || ideal_dcg.len() != n {
            return Err(Error::InvalidGraph(format!(
                "{} labels, {} lists, {} ideal values",
                n,
                lists.len(),
                ideal_dcg.len()
            )));
        }
        let mut built = Vec::with_capacity(n);
        for (u, slots) in lists.into_iter().enumerate() {
            if slots.len() != d {
                return Err(Error::InvalidGraph(format!("node {u} has out-degree {} != {d}", slots.len())));
            }
            for (i, &(v, _)) in slots.iter().enumerate() {
                if v.index() >= n {
                    return Err(Error::UnknownNode(v.to_string()));
                }
                if v.index() == u {
                    return Err(Error::InvalidGraph(format!("node {u} recommends itself")));
                }
                if slots[..i].iter().any(|&(x, _)| x == v) {
                    return Err(Error::InvalidGraph(format!("node {u} recommends {v} twice")));
                }
            }
            let slots = slots.into_iter().map(|(item, score)| Slot { item, score }).collect();
            built.push(RecommendationList::new(NodeId(u), slots));
        }
        Ok(RecGraph { d, labels, lists: built, discount, ideal_dcg })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn discount(&self) -> &RankDiscount {
        &self.discount
    }

    pub fn label(&self, u: NodeId) -> NodeLabel {
        self.labels[u.index()]
    }

    pub fn labels(&self) -> &[NodeLabel] {
        &self.labels
    }

    pub fn is_harmful(&self, u: NodeId) -> bool {
        self.labels[u.index()].is_harmful()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.n()).map(NodeId)
    }

    pub fn harmful_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes().filter(|&u| self.is_harmful(u))
    }

    pub fn neutral_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes().filter(|&u| !self.is_harmful(u))
    }

    pub fn list(&self, u: NodeId) -> &RecommendationList {
        &self.lists[u.index()]
    }

    pub fn lists(&self) -> &[RecommendationList] {
        &self.lists
    }

    pub fn ideal_dcg(&self, u: NodeId) -> f64 {
        self.ideal_dcg[u.index()]
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.lists[u.index()].contains(v)
    }

    /// `(target, probability)` pairs of `u`'s out-edges in rank order.
    pub fn out_edges(&self, u: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.lists[u.index()]
            .slots
            .iter()
            .enumerate()
            .map(move |(i, s)| (s.item, self.discount.prob(i + 1)))
    }

    pub fn transition_probability(&self, u: NodeId, v: NodeId) -> Result<f64> {
        self.lists
            .get(u.index())
            .and_then(|l| l.rank_of(v))
            .map(|rank| self.discount.prob(rank))
            .ok_or(Error::EdgeNotFound { u, v })
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n()];
        for list in &self.lists {
            for item in list.items() {
                deg[item.index()] += 1;
            }
        }
        deg
    }

    /// Builds the op replacing `v` by `w` in `u`'s list, without applying it.
    pub fn make_op(&self, u: NodeId, v: NodeId, w: NodeId) -> Result<RewiringOp> {
        let rank = self.list(u).rank_of(v).ok_or(PreconditionViolation::MissingEdge { u, v })?;
        let op = RewiringOp { u, v, w, p_o: self.discount.prob(rank), rank };
        self.check_op(&op)?;
        Ok(op)
    }

    pub fn check_op(&self, op: &RewiringOp) -> Result<(), PreconditionViolation> {
        let RewiringOp { u, v, w, rank, .. } = *op;
        if !self.is_harmful(u) {
            return Err(PreconditionViolation::SourceNotHarmful(u));
        }
        if !self.is_harmful(v) {
            return Err(PreconditionViolation::TargetNotHarmful(v));
        }
        if self.is_harmful(w) {
            return Err(PreconditionViolation::InsertedNotNeutral(w));
        }
        let actual = self.list(u).rank_of(v).ok_or(PreconditionViolation::MissingEdge { u, v })?;
        if self.has_edge(u, w) {
            return Err(PreconditionViolation::EdgeExists { u, w });
        }
        if actual != rank {
            return Err(PreconditionViolation::RankMismatch { rank, actual });
        }
        Ok(())
    }

    /// Applies `op`: the slot of `v` now holds `w` with score `s_uw`, keeping its rank.
    pub fn apply_rewiring(&mut self, op: &RewiringOp, relevance: &RelevanceStore) -> Result<()> {
        self.check_op(op)?;
        let score = relevance.get(op.u, op.w);
        self.lists[op.u.index()].slots[op.rank - 1] = Slot { item: op.w, score };
        Ok(())
    }

    /// Overwrites slot `rank` of `u` without any label checks.
    pub fn replace_slot(&mut self, u: NodeId, rank: usize, item: NodeId, score: f64) -> Result<()> {
        if item == u || (self.has_edge(u, item) && self.list(u).rank_of(item) != Some(rank)) {
            return Err(Error::InvalidGraph(format!("slot replacement would duplicate ({u}, {item})")));
        }
        let slot = self
            .lists
            .get_mut(u.index())
            .and_then(|l| l.slots.get_mut(rank.wrapping_sub(1)))
            .ok_or_else(|| Error::InvalidGraph(format!("no slot {rank} at node {u}")))?;
        *slot = Slot { item, score };
        Ok(())
    }

    /// nDCG of `u`'s list if the item at `rank` were replaced by `w`.
    pub fn quality_after_replacement(
        &self,
        u: NodeId,
        rank: usize,
        w: NodeId,
        relevance: &RelevanceStore,
    ) -> Result<f64> {
        let ideal = self.ideal_dcg(u);
        if ideal <= 0.0 {
            return Err(Error::ZeroIdealDcg(u));
        }
        let list = self.list(u);
        let dcg: f64 = list
            .slots
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let item = if i + 1 == rank { w } else { s.item };
                relevance.get(u, item) * dcg_discount(i + 1)
            })
            .sum();
        Ok(dcg / ideal)
    }
}

/// Builds the top-`d` graph: each node recommends its `d` most relevant items,
/// ranked by descending score with ties going to the lower id.
pub fn build_top_d_graph(
    relevance: &RelevanceStore,
    labels: Vec<NodeLabel>,
    d: usize,
    discount: RankDiscount,
) -> Result<RecGraph> {
    if d == 0 || discount.d() != d {
        return Err(Error::InvalidDiscount(format!("table of length {} for d = {d}", discount.d())));
    }
    if relevance.node_count() != labels.len() {
        return Err(Error::InvalidGraph(format!(
            "relevance covers {} nodes, labels cover {}",
            relevance.node_count(),
            labels.len()
        )));
    }
    let lists = (0..labels.len())
        .map(|u| {
            let u = NodeId(u);
            let top = top_d(relevance, u, d);
            if top.len() < d {
                Err(Error::NodeWithFewerThanDCandidates(u))
            } else {
                Ok(top)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    RecGraph::from_lists(labels, lists, discount, relevance)
}

/// The `d` highest-scored positive-relevance targets of `u`, descending.
pub fn top_d(relevance: &RelevanceStore, u: NodeId, d: usize) -> Vec<(NodeId, f64)> {
    let mut cands: Vec<(NodeId, f64)> = relevance.row(u).iter().copied().filter(|&(_, s)| s > 0.0).collect();
    cands.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    cands.truncate(d);
    cands
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: NodeId = NodeId(0);
    const B: NodeId = NodeId(1);
    const C: NodeId = NodeId(2);
    const X: NodeId = NodeId(3);

    fn small() -> (RelevanceStore, RecGraph) {
        let rel = RelevanceStore::from_entries(
            4,
            [
                (A, B, 0.9),
                (A, C, 0.8),
                (A, X, 0.1),
                (B, A, 0.5),
                (B, C, 0.5),
                (C, A, 0.3),
                (C, X, 0.6),
                (X, A, 0.2),
                (X, B, 0.7),
            ],
        )
        .unwrap();
        let labels = vec![NodeLabel::Harmful, NodeLabel::Harmful, NodeLabel::Harmful, NodeLabel::Neutral];
        let graph = build_top_d_graph(&rel, labels, 2, RankDiscount::uniform(2).unwrap()).unwrap();
        (rel, graph)
    }

    #[test]
    fn top_d_picks_highest_scores() {
        let (_, g) = small();
        let items: Vec<_> = g.list(A).items().collect();
        assert_eq!(items, vec![B, C]);
        assert_eq!(g.list(A).rank_of(C), Some(2));
    }

    #[test]
    fn ties_go_to_lower_id() {
        let (rel, g) = small();
        assert_eq!(g.list(B).items().collect::<Vec<_>>(), vec![A, C]);
        // Swapping the tied pair leaves DCG unchanged.
        let swapped = RecommendationList::new(
            B,
            vec![Slot { item: C, score: 0.5 }, Slot { item: A, score: 0.5 }],
        );
        assert_eq!(g.list(B).dcg(&rel), swapped.dcg(&rel));
    }

    #[test]
    fn too_few_candidates_is_an_error() {
        let rel = RelevanceStore::from_entries(3, [(A, B, 0.5), (B, A, 0.5), (C, A, 0.5), (C, B, 0.0)]).unwrap();
        let err = build_top_d_graph(&rel, vec![NodeLabel::Neutral; 3], 1, RankDiscount::uniform(1).unwrap());
        assert!(err.is_ok());
        let err = build_top_d_graph(&rel, vec![NodeLabel::Neutral; 3], 2, RankDiscount::uniform(2).unwrap());
        assert!(matches!(err, Err(Error::NodeWithFewerThanDCandidates(A))));
    }

    #[test]
    fn transition_probabilities() {
        let (_, g) = small();
        assert_eq!(g.transition_probability(A, B).unwrap(), 0.5);
        assert!(matches!(g.transition_probability(A, X), Err(Error::EdgeNotFound { .. })));
        for u in g.nodes() {
            let total: f64 = g.out_edges(u).map(|(_, p)| p).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dcg_by_hand() {
        let (rel, g) = small();
        let expected = 0.9 / 2.0 + 0.8 / (1.0 + 3f64.log2());
        assert!((dcg(g.list(A), &rel) - expected).abs() < 1e-12);
        assert!((expected - 0.7595).abs() < 1e-4);
        assert_eq!(quality_loss(g.list(A), &g, &rel).unwrap(), 1.0);

        let single = RecommendationList::new(A, vec![Slot { item: B, score: 1.0 }]);
        let one = RelevanceStore::from_entries(2, [(A, B, 1.0)]).unwrap();
        assert_eq!(single.dcg(&one), 0.5);
        assert_eq!(RecommendationList::new(A, vec![Slot { item: X, score: 0.0 }]).dcg(&RelevanceStore::new(4)), 0.0);
    }

    #[test]
    fn quality_loss_after_lower_scored_replacement() {
        let rel = RelevanceStore::from_entries(4, [(A, B, 0.9), (A, C, 0.8), (A, X, 0.6), (B, A, 1.0), (C, A, 1.0), (X, A, 1.0)])
            .unwrap();
        let labels = vec![NodeLabel::Harmful, NodeLabel::Harmful, NodeLabel::Harmful, NodeLabel::Neutral];
        let g = build_top_d_graph(&rel, labels, 2, RankDiscount::uniform(2).unwrap());
        // Every node needs two candidates; B, C, X only have one.
        assert!(g.is_err());

        let g = RecGraph::from_lists(
            vec![NodeLabel::Harmful, NodeLabel::Harmful, NodeLabel::Harmful, NodeLabel::Neutral],
            vec![vec![(B, 0.9), (C, 0.8)], vec![(A, 1.0)], vec![(A, 1.0)], vec![(A, 1.0)]],
            RankDiscount::custom(vec![0.5, 0.5]).unwrap(),
            &rel,
        );
        assert!(g.is_err(), "out-degree 1 with d = 2 must be rejected");

        let (_, g) = small();
        let rel2 = RelevanceStore::from_entries(4, [(A, B, 0.9), (A, C, 0.8), (A, X, 0.6)]).unwrap();
        let l = g.quality_after_replacement(A, 2, X, &rel2).unwrap();
        let numerator = 0.45 + 0.6 / (1.0 + 3f64.log2());
        assert!((numerator - 0.6821).abs() < 1e-4);
        assert!((l - numerator / 0.759482).abs() < 1e-5);
        assert!((l - 0.898).abs() < 1e-3);
    }

    #[test]
    fn equal_score_replacement_keeps_quality() {
        let (_, g) = small();
        let rel = RelevanceStore::from_entries(4, [(A, B, 0.9), (A, C, 0.8), (A, X, 0.8)]).unwrap();
        assert_eq!(g.quality_after_replacement(A, 2, X, &rel).unwrap(), 1.0);
    }

    #[test]
    fn apply_and_reverse() {
        let (rel, mut g) = small();
        let before = g.clone();
        let op = g.make_op(A, C, X).unwrap();
        assert_eq!(op.rank, 2);
        assert_eq!(op.p_o, 0.5);
        g.apply_rewiring(&op, &rel).unwrap();
        assert_eq!(g.list(A).rank_of(X), Some(2));
        assert_eq!(g.list(A).rank_of(B), Some(1));
        assert_eq!(g.transition_probability(A, X).unwrap(), op.p_o);
        assert!(matches!(g.apply_rewiring(&op, &rel), Err(Error::PreconditionViolated(_))));

        g.replace_slot(A, op.rank, C, rel.get(A, C)).unwrap();
        assert_eq!(g, before);
    }

    #[test]
    fn op_preconditions() {
        let (_, g) = small();
        assert!(matches!(g.make_op(A, B, C), Err(Error::PreconditionViolated(PreconditionViolation::InsertedNotNeutral(_)))));
        assert!(matches!(g.make_op(X, A, B), Err(Error::PreconditionViolated(_))));
        assert!(matches!(
            g.make_op(C, X, X),
            Err(Error::PreconditionViolated(PreconditionViolation::TargetNotHarmful(_)))
        ));
        let mut op = g.make_op(A, B, X).unwrap();
        op.rank = 2;
        assert!(matches!(g.check_op(&op), Err(PreconditionViolation::RankMismatch { .. })));
    }

    #[test]
    fn labels_parse_case_insensitively() {
        assert_eq!("HARMFUL".parse::<NodeLabel>().unwrap(), NodeLabel::Harmful);
        assert_eq!(" neutral".parse::<NodeLabel>().unwrap(), NodeLabel::Neutral);
        assert!("other".parse::<NodeLabel>().is_err());
    }
}
