use std::time::Instant;

use log::{debug, info};

use super::brute::brute_force_one_rewiring;
use super::search::{evaluate_delta, optimal_one_rewiring, DELTA_TIE_EPS};
use super::trace::{ratio, Algorithm, OptimizationTrace, StepRecord, TerminalReason};
use super::{generate_candidates, CandidateSet};
use crate::absorbing::{AbsorbingView, SegregationState, SolverConfig, DEFAULT_DENSE_GUARD};
use crate::error::{Error, Result};
use crate::graph::{validate_graph, RecGraph, RelevanceStore, RewiringOp};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewireParams {
    /// nDCG floor each list must keep.
    pub tau: f64,
    /// Rewiring budget.
    pub k: usize,
    pub solver: SolverConfig,
    /// Bound on cached fundamental-matrix columns; `None` keeps all.
    pub cache_cap: Option<usize>,
    /// When false, step timings are recorded as zero so runs are byte-stable.
    pub record_time: bool,
    /// Dense-oracle size limit for the exhaustive algorithm.
    pub guard: usize,
}

impl Default for RewireParams {
    fn default() -> Self {
        RewireParams {
            tau: 0.9,
            k: 10,
            solver: SolverConfig::default(),
            cache_cap: None,
            record_time: true,
            guard: DEFAULT_DENSE_GUARD,
        }
    }
}

impl RewireParams {
    pub fn new(tau: f64, k: usize) -> Self {
        RewireParams { tau, k, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidConfig(format!("tau = {} is outside (0, 1)", self.tau)));
        }
        if !(self.solver.tol > 0.0 && self.solver.tol.is_finite()) {
            return Err(Error::InvalidConfig(format!("tol = {} must be positive", self.solver.tol)));
        }
        Ok(())
    }
}

/// Result of an optimization run.
#[derive(Debug, Clone)]
pub struct RewireRun {
    pub graph: RecGraph,
    pub view: AbsorbingView,
    /// State before the first op.
    pub initial: SegregationState,
    /// Incrementally maintained state after the last op.
    pub state: SegregationState,
    pub trace: OptimizationTrace,
}

/// Graph, absorbing view and segregation state, kept in step while ops are
/// applied.
pub(crate) struct Rewirer<'a> {
    pub graph: RecGraph,
    pub relevance: &'a RelevanceStore,
    pub view: AbsorbingView,
    pub state: SegregationState,
    pub params: RewireParams,
    initial: SegregationState,
    trace: OptimizationTrace,
}

impl<'a> Rewirer<'a> {
    pub fn new(graph: &RecGraph, relevance: &'a RelevanceStore, algorithm: Algorithm, params: RewireParams) -> Result<Self> {
        params.validate()?;
        let report = validate_graph(graph);
        if !report.unreachable_harmful.is_empty() {
            return Err(Error::UnreachableHarmfulComponent(report.unreachable_harmful));
        }
        if !report.is_valid() {
            return Err(Error::InvalidGraph(report.to_string()));
        }
        let view = AbsorbingView::new(graph)?;
        let state = SegregationState::compute(&view, params.solver)?.with_cache_cap(params.cache_cap);
        let trace = OptimizationTrace::new(algorithm, state.value());
        info!("{algorithm}: Z0 = {:.6} over {} harmful nodes", state.value(), view.len());
        Ok(Rewirer { graph: graph.clone(), relevance, view, initial: state.clone(), state, params, trace })
    }

    pub fn steps(&self) -> usize {
        self.trace.steps.len()
    }

    /// Applies `op`. `expected` is the decrease the caller scored; when absent
    /// it is evaluated against the current state.
    pub fn apply(&mut self, op: RewiringOp, expected: Option<f64>, probes: usize, evaluated: usize, started: Instant) -> Result<()> {
        self.graph.check_op(&op)?;
        let delta = match expected {
            Some(d) => d,
            None => {
                let sorted = self.state.sorted_desc();
                evaluate_delta(&self.view, &mut self.state, &op, &sorted)?.delta
            }
        };
        let z_before = self.state.value();
        self.state.update_after_rewiring(&self.view, &op)?;
        self.graph.apply_rewiring(&op, self.relevance)?;
        self.view.apply(&op)?;
        let top = self.state.segregation();
        let z_after = top.value;
        let step = self.trace.steps.len() + 1;
        let wall_time_ms = if self.params.record_time { started.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
        let zero_progress = z_before - z_after <= DELTA_TIE_EPS * z_before.max(1.0);
        debug!("step {step}: {op} delta = {delta:.6e}, Z = {z_after:.6}");
        self.trace.steps.push(StepRecord {
            step,
            op,
            delta,
            z_before,
            z_after,
            ratio: ratio(z_after, self.trace.z0),
            argmax: top.argmax,
            zero_progress,
            probes,
            evaluated,
            wall_time_ms,
        });
        Ok(())
    }

    pub fn finish(mut self, terminal: TerminalReason) -> RewireRun {
        self.trace.terminal = terminal;
        info!(
            "{}: {} ops, Z = {:.6} (ratio {:.4}, {})",
            self.trace.algorithm,
            self.trace.len(),
            self.trace.final_z(),
            self.trace.final_ratio(),
            terminal
        );
        RewireRun { graph: self.graph, view: self.view, initial: self.initial, state: self.state, trace: self.trace }
    }
}

/// Greedy k-rewiring: repeatedly applies the optimal single rewiring over the
/// maintained candidate set, regenerating the rewired source's candidates
/// after each step.
pub fn heuristic_k_rewiring(graph: &RecGraph, relevance: &RelevanceStore, params: &RewireParams) -> Result<RewireRun> {
    let mut run = Rewirer::new(graph, relevance, Algorithm::Heu, *params)?;
    let mut candidates: CandidateSet = generate_candidates(&run.graph, relevance, params.tau);
    while run.steps() < params.k {
        let started = Instant::now();
        let Some(best) = optimal_one_rewiring(&run.view, &mut run.state, &candidates)? else {
            return Ok(run.finish(TerminalReason::CandidatesExhausted));
        };
        run.apply(best.op, Some(best.delta), best.stats.probes, best.stats.evaluated, started)?;
        candidates.regenerate_source(&run.graph, relevance, params.tau, best.op.u);
    }
    Ok(run.finish(TerminalReason::KReached))
}

/// Greedy k-rewiring where every step is the exhaustive dense optimum.
pub fn brute_force_k_rewiring(graph: &RecGraph, relevance: &RelevanceStore, params: &RewireParams) -> Result<RewireRun> {
    let mut run = Rewirer::new(graph, relevance, Algorithm::Brute, *params)?;
    while run.steps() < params.k {
        let started = Instant::now();
        let Some(best) = brute_force_one_rewiring(&run.graph, relevance, params.tau, params.guard)? else {
            return Ok(run.finish(TerminalReason::CandidatesExhausted));
        };
        run.apply(best.op, Some(best.delta), 0, best.evaluated, started)?;
    }
    Ok(run.finish(TerminalReason::KReached))
}
