//! Rewiring search under the nDCG floor.
//!
//! A rewiring `(u, v, w)` hands the slot of harmful `v` in harmful `u`'s list
//! to neutral `w`. Its effect on every segregation score depends only on `u`,
//! `v` and the slot probability, never on `w`, so each source is paired with
//! its single most relevant neutral non-neighbor.

mod baselines;
mod brute;
mod candidates;
mod heuristic;
mod search;
mod trace;

pub use baselines::{baseline_bsl1, baseline_bsl2, baseline_rnd};
pub use brute::{all_feasible_ops, brute_force_one_rewiring, BruteForceResult};
pub use candidates::{best_target, generate_candidates, CandidateSet, SourceCandidates};
pub use heuristic::{brute_force_k_rewiring, heuristic_k_rewiring, RewireParams, RewireRun};
pub use search::{
    evaluate_delta, full_delta, optimal_one_rewiring, pruned_delta, rank_by_delta, score_all, select_best,
    BestRewiring, DeltaEval, SearchStats, DELTA_TIE_EPS,
};
pub use trace::{Algorithm, OptimizationTrace, StepRecord, TerminalReason};

use crate::error::Result;
use crate::graph::{RecGraph, RelevanceStore};

/// Runs `algorithm`; `seed` only matters for [`Algorithm::Rnd`].
pub fn run_algorithm(
    algorithm: Algorithm,
    graph: &RecGraph,
    relevance: &RelevanceStore,
    params: &RewireParams,
    seed: u64,
) -> Result<RewireRun> {
    match algorithm {
        Algorithm::Heu => heuristic_k_rewiring(graph, relevance, params),
        Algorithm::Bsl1 => baseline_bsl1(graph, relevance, params),
        Algorithm::Bsl2 => baseline_bsl2(graph, relevance, params),
        Algorithm::Rnd => baseline_rnd(graph, relevance, params, seed),
        Algorithm::Brute => brute_force_k_rewiring(graph, relevance, params),
    }
}

#[cfg(test)]
mod tests;
