use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{NodeId, RecGraph, RelevanceStore, RewiringOp};

/// The neutral non-neighbor of `u` with the highest positive relevance; ties
/// go to the lower id.
pub fn best_target(graph: &RecGraph, relevance: &RelevanceStore, u: NodeId) -> Result<NodeId> {
    if !graph.is_harmful(u) {
        return Err(Error::NotHarmful(u));
    }
    let mut best: Option<(NodeId, f64)> = None;
    for &(w, s) in relevance.row(u) {
        if s <= 0.0 || graph.is_harmful(w) || graph.has_edge(u, w) {
            continue;
        }
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((w, s));
        }
    }
    best.map(|(w, _)| w).ok_or(Error::NoFeasibleTarget(u))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceCandidates {
    /// Fixed neutral target of every op from this source.
    pub target: NodeId,
    /// Feasible ops, ascending by removed target.
    pub ops: Vec<RewiringOp>,
}

/// Feasible rewirings grouped by source.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateSet {
    by_source: BTreeMap<NodeId, SourceCandidates>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.by_source.values().map(|s| s.ops.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_source.is_empty()
    }

    /// All ops in lexicographic `(u, v, w)` order.
    pub fn ops(&self) -> impl Iterator<Item = &RewiringOp> {
        self.by_source.values().flat_map(|s| s.ops.iter())
    }

    pub fn sources(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.by_source.keys().copied()
    }

    pub fn source(&self, u: NodeId) -> Option<&SourceCandidates> {
        self.by_source.get(&u)
    }

    pub fn remove_source(&mut self, u: NodeId) {
        self.by_source.remove(&u);
    }

    /// Recomputes `u`'s candidates against its current list. The quality floor
    /// is still measured against the original list's DCG.
    pub fn regenerate_source(&mut self, graph: &RecGraph, relevance: &RelevanceStore, tau: f64, u: NodeId) {
        self.by_source.remove(&u);
        if let Some(entry) = source_candidates(graph, relevance, tau, u) {
            self.by_source.insert(u, entry);
        }
    }
}

fn source_candidates(graph: &RecGraph, relevance: &RelevanceStore, tau: f64, u: NodeId) -> Option<SourceCandidates> {
    let w = best_target(graph, relevance, u).ok()?;
    let mut ops: Vec<RewiringOp> = graph
        .list(u)
        .slots()
        .iter()
        .enumerate()
        .filter(|(_, s)| graph.is_harmful(s.item))
        .filter_map(|(i, s)| {
            let rank = i + 1;
            let quality = graph.quality_after_replacement(u, rank, w, relevance).ok()?;
            (quality >= tau).then(|| RewiringOp { u, v: s.item, w, p_o: graph.discount().prob(rank), rank })
        })
        .collect();
    if ops.is_empty() {
        return None;
    }
    ops.sort_by_key(|o| o.v);
    Some(SourceCandidates { target: w, ops })
}

/// For every harmful source, the ops replacing one harmful slot by the
/// source's best neutral target while keeping nDCG at least `tau`.
pub fn generate_candidates(graph: &RecGraph, relevance: &RelevanceStore, tau: f64) -> CandidateSet {
    let by_source = graph
        .harmful_nodes()
        .filter_map(|u| source_candidates(graph, relevance, tau, u).map(|c| (u, c)))
        .collect();
    CandidateSet { by_source }
}
