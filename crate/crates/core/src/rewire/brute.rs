use super::search::select_best;
use crate::absorbing::dense_oracle_z;
use crate::error::Result;
use crate::graph::{RecGraph, RelevanceStore, RewiringOp};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForceResult {
    pub op: RewiringOp,
    pub delta: f64,
    /// Feasible ops scored, one dense solve each.
    pub evaluated: usize,
}

/// Every feasible rewiring: each harmful slot of each harmful source, paired
/// with every neutral non-neighbor `w` with `s_uw > 0` that keeps nDCG at
/// least `tau`.
pub fn all_feasible_ops(graph: &RecGraph, relevance: &RelevanceStore, tau: f64) -> Vec<RewiringOp> {
    let mut ops = Vec::new();
    for u in graph.harmful_nodes() {
        for (i, slot) in graph.list(u).slots().iter().enumerate() {
            if !graph.is_harmful(slot.item) {
                continue;
            }
            let rank = i + 1;
            for w in graph.neutral_nodes() {
                if graph.has_edge(u, w) || relevance.get(u, w) <= 0.0 {
                    continue;
                }
                let ok = graph.quality_after_replacement(u, rank, w, relevance).is_ok_and(|q| q >= tau);
                if ok {
                    ops.push(RewiringOp { u, v: slot.item, w, p_o: graph.discount().prob(rank), rank });
                }
            }
        }
    }
    ops.sort_by(|a, b| a.lex_cmp(b));
    ops
}

/// Exhaustive optimum: applies each feasible op to a copy of the graph and
/// recomputes `Z` with the dense oracle.
pub fn brute_force_one_rewiring(
    graph: &RecGraph,
    relevance: &RelevanceStore,
    tau: f64,
    guard: usize,
) -> Result<Option<BruteForceResult>> {
    let z0 = max_z(&dense_oracle_z(graph, guard)?);
    let ops = all_feasible_ops(graph, relevance, tau);
    let mut scored = Vec::with_capacity(ops.len());
    for op in &ops {
        let mut g = graph.clone();
        g.apply_rewiring(op, relevance)?;
        scored.push((*op, z0 - max_z(&dense_oracle_z(&g, guard)?)));
    }
    Ok(select_best(&scored, z0).map(|(op, delta)| BruteForceResult { op, delta, evaluated: ops.len() }))
}

fn max_z(z: &[f64]) -> f64 {
    z.iter().copied().fold(0.0, f64::max)
}
