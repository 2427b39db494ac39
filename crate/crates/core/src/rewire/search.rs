use std::cmp::Ordering;

use serde::Serialize;

use super::CandidateSet;
use crate::absorbing::{delta_from_entries, fundamental_row, AbsorbingView, SegregationState};
use crate::error::{Error, Result};
use crate::graph::RewiringOp;

/// Two decreases closer than this (times `max(1, Z)`) are treated as equal and
/// resolved by `(u, v, w)` order.
pub const DELTA_TIE_EPS: f64 = 1e-9;

/// Slack on the upper bound, absorbing the fixed-point error of the row solve.
const BOUND_SLACK: f64 = 1e-6;

/// Ops scored per round of the bounded search.
const EVAL_BATCH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaEval {
    /// Decrease of the graph segregation `Z`.
    pub delta: f64,
    /// Number of per-node decreases evaluated.
    pub probes: usize,
}

/// Decrease of `Z` caused by an op whose source column is `col`, probing only
/// the top of `sorted` (local indices by descending `z`).
///
/// After `z'_1` is known, every node whose current score does not exceed it
/// can be skipped: its new score is no larger than its old one.
pub fn pruned_delta(col: &[f64], z: &[f64], sorted: &[usize], v: usize, p_o: f64) -> DeltaEval {
    let Some(&h1) = sorted.first() else {
        return DeltaEval { delta: 0.0, probes: 0 };
    };
    let f_vu = col[v];
    let z_v = z[v];
    let shifted = |h: usize| z[h] - delta_from_entries(col[h], f_vu, z_v, p_o);
    let z1 = shifted(h1);
    if sorted.len() == 1 || z1 > z[sorted[1]] {
        return DeltaEval { delta: z[h1] - z1, probes: 1 };
    }
    let j = sorted.partition_point(|&h| z[h] > z1).max(1);
    let worst = sorted[1..j].iter().map(|&h| shifted(h)).fold(z1, f64::max);
    DeltaEval { delta: (z[h1] - worst).max(0.0), probes: j }
}

/// The same decrease with every harmful node evaluated.
pub fn full_delta(col: &[f64], z: &[f64], v: usize, p_o: f64) -> f64 {
    let top = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let after = z
        .iter()
        .zip(col)
        .map(|(&zh, &f)| zh - delta_from_entries(f, col[v], z[v], p_o))
        .fold(f64::NEG_INFINITY, f64::max);
    if z.is_empty() {
        0.0
    } else {
        (top - after).max(0.0)
    }
}

/// [`pruned_delta`] for `op` against the current state, solving the source
/// column if it is not cached.
pub fn evaluate_delta(
    view: &AbsorbingView,
    state: &mut SegregationState,
    op: &RewiringOp,
    sorted: &[usize],
) -> Result<DeltaEval> {
    let v = state.local_index(op.v).ok_or(Error::NotHarmful(op.v))?;
    let z = state.z().to_vec();
    let col = state.column(view, op.u)?;
    Ok(pruned_delta(col, &z, sorted, v, op.p_o))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchStats {
    pub candidates: usize,
    /// Candidates whose decrease was computed exactly.
    pub evaluated: usize,
    pub probes: usize,
}

impl SearchStats {
    pub fn probes_per_evaluation(&self) -> f64 {
        if self.evaluated == 0 {
            0.0
        } else {
            self.probes as f64 / self.evaluated as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestRewiring {
    pub op: RewiringOp,
    pub delta: f64,
    pub stats: SearchStats,
}

/// Picks the op of largest exact decrease `z_1 - max z'` among `ops`,
/// resolving near-ties (see [`DELTA_TIE_EPS`]) by lexicographic `(u, v, w)`.
pub fn select_best(scored: &[(RewiringOp, f64)], scale: f64) -> Option<(RewiringOp, f64)> {
    let top = scored.iter().map(|&(_, d)| d).fold(f64::NEG_INFINITY, f64::max);
    let eps = DELTA_TIE_EPS * scale.max(1.0);
    scored
        .iter()
        .filter(|&&(_, d)| d >= top - eps)
        .min_by(|a, b| a.0.lex_cmp(&b.0))
        .copied()
}

/// Optimal single rewiring among `candidates`.
///
/// Each op's decrease is bounded above by its effect on the current argmax
/// `h_1`, `p_o * f_{h_1 u} * z_v`, which needs only row `h_1` of the
/// fundamental matrix. Ops are scored exactly in descending bound order until
/// the bound falls below the best exact decrease found so far.
pub fn optimal_one_rewiring(
    view: &AbsorbingView,
    state: &mut SegregationState,
    candidates: &CandidateSet,
) -> Result<Option<BestRewiring>> {
    let total = candidates.len();
    if total == 0 {
        return Ok(None);
    }
    let sorted = state.sorted_desc();
    let Some(&h1) = sorted.first() else {
        return Ok(None);
    };
    let scale = state.value().max(1.0);
    let row = fundamental_row(view, view.node(h1), state.solver())?;
    let z = state.z().to_vec();

    let mut bounded: Vec<(f64, RewiringOp)> = candidates
        .ops()
        .map(|op| {
            let u = state.local_index(op.u).expect("candidate source is harmful");
            let v = state.local_index(op.v).expect("candidate target is harmful");
            (op.p_o * row[u] * z[v], *op)
        })
        .collect();
    bounded.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.lex_cmp(&b.1)));

    let mut stats = SearchStats { candidates: total, evaluated: 0, probes: 0 };
    let mut scored: Vec<(RewiringOp, f64)> = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let cutoff_slack = (DELTA_TIE_EPS + BOUND_SLACK) * scale;
    let mut next = 0;
    while next < bounded.len() {
        // Columns for a fixed-size batch are solved in parallel; the batch size
        // does not depend on the thread count, so neither do the statistics.
        let batch: Vec<(f64, RewiringOp)> = bounded[next..]
            .iter()
            .take(EVAL_BATCH)
            .take_while(|(bound, _)| *bound >= best - cutoff_slack)
            .copied()
            .collect();
        if batch.is_empty() {
            break;
        }
        next += batch.len();
        let sources: Vec<_> = batch.iter().filter(|(b, _)| *b > 0.0).map(|(_, op)| op.u).collect();
        state.ensure_columns(view, &sources)?;
        for (bound, op) in batch {
            let delta = if bound <= 0.0 {
                // h_1 never visits u: its score is unchanged, so Z is too.
                0.0
            } else {
                let eval = evaluate_delta(view, state, &op, &sorted)?;
                stats.evaluated += 1;
                stats.probes += eval.probes;
                eval.delta
            };
            best = best.max(delta);
            scored.push((op, delta));
        }
    }
    Ok(select_best(&scored, scale).map(|(op, delta)| BestRewiring { op, delta, stats }))
}

/// Exact decrease of every candidate, each with the pruned search.
pub fn score_all(
    view: &AbsorbingView,
    state: &mut SegregationState,
    ops: &[RewiringOp],
) -> Result<Vec<(RewiringOp, f64)>> {
    let sources: Vec<_> = ops.iter().map(|o| o.u).collect();
    state.ensure_columns(view, &sources)?;
    let sorted = state.sorted_desc();
    ops.iter().map(|op| Ok((*op, evaluate_delta(view, state, op, &sorted)?.delta))).collect()
}

/// Descending decrease, ties by `(u, v, w)`.
pub fn rank_by_delta(scored: &mut [(RewiringOp, f64)]) {
    scored.sort_by(|a, b| match b.1.total_cmp(&a.1) {
        Ordering::Equal => a.0.lex_cmp(&b.0),
        other => other,
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn early_exit_when_top_node_stays_on_top() {
        // z = [10, 4, 3]; op only touches node 0.
        let z = [10.0, 4.0, 3.0];
        let col = [1.0, 0.0, 0.0];
        let eval = pruned_delta(&col, &z, &[0, 1, 2], 1, 0.5);
        // Delta = 1 * 4 / (2 + 0) = 2, z'_0 = 8 > 4.
        assert_eq!(eval, DeltaEval { delta: 2.0, probes: 1 });
        assert_eq!(full_delta(&col, &z, 1, 0.5), 2.0);
    }

    #[test]
    fn deep_probe_when_top_node_drops_below_others() {
        let z = [10.0, 9.0, 8.5, 2.0];
        let col = [2.0, 0.5, 0.0, 0.0];
        let sorted = [0, 1, 2, 3];
        let eval = pruned_delta(&col, &z, &sorted, 3, 1.0);
        // z'_0 = 10 - 2*2/1 = 6, z'_1 = 9 - 0.5*2 = 8, z'_2 = 8.5.
        assert_eq!(eval.delta, 1.5);
        assert_eq!(eval.probes, 3);
        assert_eq!(full_delta(&col, &z, 3, 1.0), 1.5);
    }

    #[test]
    fn untouched_graph_has_zero_delta() {
        let z = [3.0, 3.0, 2.0];
        let col = [0.0, 0.0, 1.0];
        assert_eq!(pruned_delta(&col, &z, &[0, 1, 2], 2, 0.5).delta, 0.0);
        assert_eq!(full_delta(&col, &z, 2, 0.5), 0.0);
    }

    #[test]
    fn near_ties_resolve_lexicographically() {
        use crate::graph::NodeId;
        let op = |u| RewiringOp { u: NodeId(u), v: NodeId(9), w: NodeId(20), p_o: 0.5, rank: 1 };
        let scored = vec![(op(5), 1.0), (op(3), 1.0 - 1e-12), (op(1), 0.5)];
        assert_eq!(select_best(&scored, 1.0).unwrap().0.u, NodeId(3));
        let mut ranked = vec![(op(5), 1.0), (op(3), 2.0), (op(1), 1.0)];
        rank_by_delta(&mut ranked);
        assert_eq!(ranked.iter().map(|x| x.0.u.index()).collect::<Vec<_>>(), vec![3, 1, 5]);
        assert!(select_best(&[], 1.0).is_none());
    }
}
