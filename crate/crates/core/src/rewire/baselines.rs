//! Baselines that pick their ops without re-optimizing between steps.
//!
//! Ops chosen up front can collide once earlier ones are applied. An op is
//! skipped (and the next one taken) when its `(u, rank)` slot was already
//! rewired, when `w` has meanwhile become a neighbor of `u`, or when the
//! current list of `u` would fall below the nDCG floor.

use std::collections::HashSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::heuristic::{RewireParams, RewireRun, Rewirer};
use super::search::{rank_by_delta, score_all};
use super::trace::{Algorithm, TerminalReason};
use super::generate_candidates;
use crate::error::Result;
use crate::graph::{NodeId, RelevanceStore, RecGraph, RewiringOp};

/// BSL-1: the k ops with the largest decrease against the initial graph.
pub fn baseline_bsl1(graph: &RecGraph, relevance: &RelevanceStore, params: &RewireParams) -> Result<RewireRun> {
    let mut run = Rewirer::new(graph, relevance, Algorithm::Bsl1, *params)?;
    let ops: Vec<RewiringOp> = generate_candidates(&run.graph, relevance, params.tau).ops().copied().collect();
    let mut scored = score_all(&run.view, &mut run.state, &ops)?;
    rank_by_delta(&mut scored);
    apply_in_order(run, scored.into_iter().map(|(op, _)| op))
}

/// BSL-2: among ops leaving the k most segregated nodes, the k with the
/// largest initial decrease.
pub fn baseline_bsl2(graph: &RecGraph, relevance: &RelevanceStore, params: &RewireParams) -> Result<RewireRun> {
    let mut run = Rewirer::new(graph, relevance, Algorithm::Bsl2, *params)?;
    let top: HashSet<NodeId> =
        run.state.sorted_desc().into_iter().take(params.k).map(|i| run.state.harmful()[i]).collect();
    let ops: Vec<RewiringOp> = generate_candidates(&run.graph, relevance, params.tau)
        .ops()
        .filter(|op| top.contains(&op.u))
        .copied()
        .collect();
    let mut scored = score_all(&run.view, &mut run.state, &ops)?;
    rank_by_delta(&mut scored);
    apply_in_order(run, scored.into_iter().map(|(op, _)| op))
}

/// RND: a seeded uniform sample of candidate ops.
pub fn baseline_rnd(graph: &RecGraph, relevance: &RelevanceStore, params: &RewireParams, seed: u64) -> Result<RewireRun> {
    let run = Rewirer::new(graph, relevance, Algorithm::Rnd, *params)?;
    let mut ops: Vec<RewiringOp> = generate_candidates(&run.graph, relevance, params.tau).ops().copied().collect();
    ops.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    apply_in_order(run, ops.into_iter())
}

fn apply_in_order(mut run: Rewirer<'_>, ops: impl Iterator<Item = RewiringOp>) -> Result<RewireRun> {
    let k = run.params.k;
    let tau = run.params.tau;
    let mut used: HashSet<(NodeId, usize)> = HashSet::new();
    for op in ops {
        if run.steps() >= k {
            break;
        }
        let started = Instant::now();
        if used.contains(&(op.u, op.rank)) || run.graph.has_edge(op.u, op.w) {
            continue;
        }
        if !run.graph.quality_after_replacement(op.u, op.rank, op.w, run.relevance).is_ok_and(|q| q >= tau) {
            continue;
        }
        used.insert((op.u, op.rank));
        run.apply(op, None, 0, 0, started)?;
    }
    let terminal = if run.steps() >= k { TerminalReason::KReached } else { TerminalReason::CandidatesExhausted };
    Ok(run.finish(terminal))
}
