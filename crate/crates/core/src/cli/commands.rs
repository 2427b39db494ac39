use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Failure, EXIT_CHECK_FAILED, EXIT_EMPTY_CANDIDATES, EXIT_VALIDATION};
use crate::absorbing::{
    dense_oracle_z, monte_carlo_hitting, segregation_vector, AbsorbingView, SegregationState,
};
use crate::config::RunConfig;
use crate::error::Result;
use crate::gadget::{build_gadget, is_vertex_cover, min_vertex_cover, H1, H2};
use crate::graph::{build_top_d_graph, validate_graph, NodeId, RankDiscount, RecGraph, RewiringOp};
use crate::io::{
    read_edge_list, read_graph, read_labels, read_relevance, read_remap, remap_path, write_graph_bundle, write_labels,
    write_relevance, Remap,
};
use crate::synth::{generate, SynthParams};
use crate::metrics::{
    export_distribution, export_trace, gini_in_degree, quality_audit, snapshot_distribution, NodeSubset,
};
use crate::rewire::{generate_candidates, heuristic_k_rewiring, run_algorithm};

fn emit<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, format!("{text}\n"))?;
    // A closed stdout (e.g. piped into `head`) must not fail the run.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(())
}

fn check_failed(what: &str) -> Failure {
    Failure { code: EXIT_CHECK_FAILED, message: format!("check failed: {what}") }
}

#[derive(Serialize)]
struct BuildReport<'a> {
    graph: &'a Path,
    remap: PathBuf,
    valid: bool,
    validation: crate::graph::ValidationReport,
}

pub fn build(cfg: &RunConfig, relevance: &Path, labels: &Path, output: Option<&Path>) -> Result<(), Failure> {
    let (remap, labs) = read_labels(labels)?;
    let rel = read_relevance(relevance, &remap)?;
    let graph = build_top_d_graph(&rel, labs, cfg.d, RankDiscount::new(cfg.discount, cfg.d)?)?;
    let out = output.map_or_else(|| cfg.out_dir.join("graph.csv"), Path::to_path_buf);
    write_graph_bundle(&graph, &remap, &out)?;
    let validation = validate_graph(&graph);
    fs::write(out.with_extension("validation.txt"), format!("{validation}\n")).map_err(crate::Error::from)?;
    info!("built {} nodes, d = {}", graph.n(), graph.d());
    let valid = validation.is_valid();
    let report = BuildReport { graph: &out, remap: remap_path(&out), valid, validation };
    emit(&report, &out.with_extension("validation.json"))?;
    if !valid {
        return Err(Failure { code: EXIT_VALIDATION, message: "graph failed validation".into() });
    }
    Ok(())
}

#[derive(Serialize)]
struct Gini {
    all: f64,
    harmful: f64,
    neutral: f64,
}

fn gini_all(graph: &RecGraph) -> Gini {
    let g = |s| gini_in_degree(graph, s).unwrap_or(0.0);
    Gini { all: g(NodeSubset::All), harmful: g(NodeSubset::Harmful), neutral: g(NodeSubset::Neutral) }
}

#[derive(Serialize)]
struct OptimizeSummary {
    algorithm: String,
    nodes: usize,
    harmful: usize,
    d: usize,
    tau: f64,
    k: usize,
    seed: u64,
    candidates_at_start: usize,
    z0: f64,
    final_z: f64,
    ratio: f64,
    ops: usize,
    zero_progress_steps: usize,
    terminal: String,
    probes_per_evaluation: f64,
    runtime_ms: f64,
    gini_before: Gini,
    gini_after: Gini,
    min_quality: f64,
    below_tau: usize,
}

pub fn optimize(cfg: &RunConfig, graph_path: &Path, relevance: &Path) -> Result<(), Failure> {
    let (remap, _) = read_remap(&remap_path(graph_path))?;
    let rel = read_relevance(relevance, &remap)?;
    let (graph, _) = read_graph(graph_path, Some(&rel))?;
    let validation = validate_graph(&graph);
    if !validation.is_valid() {
        return Err(Failure { code: EXIT_VALIDATION, message: format!("graph failed validation\n{validation}") });
    }
    let candidates = generate_candidates(&graph, &rel, cfg.tau).len();
    if candidates == 0 && cfg.k > 0 {
        return Err(Failure {
            code: EXIT_EMPTY_CANDIDATES,
            message: format!("no feasible rewiring at tau = {}", cfg.tau),
        });
    }
    let started = Instant::now();
    let run = run_algorithm(cfg.algorithm, &graph, &rel, &cfg.rewire_params(), cfg.seed)?;
    let runtime_ms = if cfg.record_time { started.elapsed().as_secs_f64() * 1e3 } else { 0.0 };

    let dir = &cfg.out_dir;
    let trace = &run.trace;
    let norm = if trace.z0 > 0.0 { trace.z0 } else { 1.0 };
    export_trace(trace, &dir.join("trace.csv"))?;
    export_distribution(&snapshot_distribution(&run.initial, norm)?, &dir.join("before.csv"))?;
    export_distribution(&snapshot_distribution(&run.state, norm)?, &dir.join("after.csv"))?;
    write_graph_bundle(&run.graph, &remap, &dir.join("graph.csv"))?;

    let audit = quality_audit(&run.graph, &rel, cfg.tau);
    let (probes, evaluated) = trace.steps.iter().fold((0, 0), |(p, e), s| (p + s.probes, e + s.evaluated));
    let summary = OptimizeSummary {
        algorithm: trace.algorithm.to_string(),
        nodes: graph.n(),
        harmful: run.initial.harmful().len(),
        d: graph.d(),
        tau: cfg.tau,
        k: cfg.k,
        seed: cfg.seed,
        candidates_at_start: candidates,
        z0: trace.z0,
        final_z: trace.final_z(),
        ratio: trace.final_ratio(),
        ops: trace.len(),
        zero_progress_steps: trace.zero_progress_steps(),
        terminal: trace.terminal.to_string(),
        probes_per_evaluation: if evaluated == 0 { 0.0 } else { probes as f64 / evaluated as f64 },
        runtime_ms,
        gini_before: gini_all(&graph),
        gini_after: gini_all(&run.graph),
        min_quality: audit.min_quality,
        below_tau: audit.below_tau,
    };
    emit(&summary, &dir.join("summary.json"))?;
    Ok(())
}

#[derive(Serialize)]
struct DenseCheck {
    max_abs_error: f64,
    tolerance: f64,
    passed: bool,
}

#[derive(Serialize)]
struct UpdateCheck {
    ops: usize,
    max_abs_error: f64,
    tolerance: f64,
    passed: bool,
}

#[derive(Serialize)]
struct SampleCheck {
    node: NodeId,
    analytic: f64,
    estimate: f64,
    std_error: f64,
    within: bool,
}

#[derive(Serialize)]
struct MonteCarloCheck {
    trials: u64,
    within_4se: usize,
    required: usize,
    samples: Vec<SampleCheck>,
    passed: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    nodes: usize,
    harmful: usize,
    z: f64,
    argmax: Option<NodeId>,
    /// Absent when the harmful count exceeds the dense guard.
    power_vs_dense: Option<DenseCheck>,
    update_vs_recompute: UpdateCheck,
    monte_carlo: MonteCarloCheck,
    passed: bool,
}

/// Ops sampled for the rank-one check: candidate ops when relevance scores
/// are known, otherwise any harmful slot paired with the first neutral
/// non-neighbor.
fn sample_ops(graph: &RecGraph, relevance: Option<&crate::graph::RelevanceStore>, tau: f64, rng: &mut ChaCha8Rng) -> Vec<RewiringOp> {
    let mut ops: Vec<RewiringOp> = match relevance {
        Some(rel) => generate_candidates(graph, rel, tau).ops().copied().collect(),
        None => graph
            .harmful_nodes()
            .filter_map(|u| {
                let w = graph.neutral_nodes().find(|&w| w != u && !graph.has_edge(u, w))?;
                Some(graph.list(u).items().filter(|&v| graph.is_harmful(v)).map(move |v| (u, v, w)).collect::<Vec<_>>())
            })
            .flatten()
            .filter_map(|(u, v, w)| graph.make_op(u, v, w).ok())
            .collect(),
    };
    ops.shuffle(rng);
    ops.truncate(20);
    ops
}

pub fn verify(
    cfg: &RunConfig,
    graph_path: &Path,
    relevance: Option<&Path>,
    samples: usize,
    trials: u64,
) -> Result<(), Failure> {
    let (remap, _) = read_remap(&remap_path(graph_path))?;
    let rel = relevance.map(|p| read_relevance(p, &remap)).transpose()?;
    let (graph, _) = read_graph(graph_path, rel.as_ref())?;
    let validation = validate_graph(&graph);
    if !validation.is_valid() {
        return Err(Failure { code: EXIT_VALIDATION, message: format!("graph failed validation\n{validation}") });
    }
    let solver = cfg.solver();
    let view = AbsorbingView::new(&graph)?;
    let mut state = SegregationState::compute(&view, solver)?;
    let scale = state.value().max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let power_vs_dense = if view.len() <= cfg.guard {
        let dense = dense_oracle_z(&graph, cfg.guard)?;
        let err = dense.iter().zip(state.z()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let tolerance = 1e-6 * scale;
        Some(DenseCheck { max_abs_error: err, tolerance, passed: err <= tolerance })
    } else {
        None
    };

    let ops = sample_ops(&graph, rel.as_ref(), cfg.tau, &mut rng);
    let mut update_err: f64 = 0.0;
    for op in &ops {
        state.column(&view, op.u)?;
        let mut updated = state.clone();
        updated.update_after_rewiring(&view, op)?;
        let mut g = graph.clone();
        g.replace_slot(op.u, op.rank, op.w, 0.0)?;
        let fresh = if view.len() <= cfg.guard {
            dense_oracle_z(&g, cfg.guard)?
        } else {
            segregation_vector(&AbsorbingView::new(&g)?, &solver)?
        };
        update_err = fresh.iter().zip(updated.z()).map(|(a, b)| (a - b).abs()).fold(update_err, f64::max);
    }
    let update_tol = 1e-6 * scale;
    let update_vs_recompute =
        UpdateCheck { ops: ops.len(), max_abs_error: update_err, tolerance: update_tol, passed: update_err <= update_tol };

    let mut nodes: Vec<NodeId> = state.harmful().to_vec();
    nodes.shuffle(&mut rng);
    nodes.truncate(samples);
    nodes.sort();
    let mut sample_checks = Vec::with_capacity(nodes.len());
    for (i, &u) in nodes.iter().enumerate() {
        let est = monte_carlo_hitting(&graph, u, trials, cfg.seed.wrapping_add(i as u64), None)?;
        let analytic = state.z_of(u).unwrap_or(0.0);
        let within = (est.mean - analytic).abs() <= 4.0 * est.std_error.max(f64::EPSILON);
        sample_checks.push(SampleCheck { node: u, analytic, estimate: est.mean, std_error: est.std_error, within });
    }
    let within = sample_checks.iter().filter(|s| s.within).count();
    let required = (nodes.len() * 19).div_ceil(20);
    let monte_carlo = MonteCarloCheck { trials, within_4se: within, required, samples: sample_checks, passed: within >= required };

    let passed = power_vs_dense.as_ref().is_none_or(|c| c.passed) && update_vs_recompute.passed && monte_carlo.passed;
    let top = state.segregation();
    let report = VerifyReport {
        nodes: graph.n(),
        harmful: view.len(),
        z: top.value,
        argmax: top.argmax,
        power_vs_dense,
        update_vs_recompute,
        monte_carlo,
        passed,
    };
    emit(&report, &cfg.out_dir.join("verify.json"))?;
    if !passed {
        return Err(check_failed("oracle agreement"));
    }
    Ok(())
}

#[derive(Serialize)]
struct GadgetReport {
    vertices: usize,
    edges: Vec<(usize, usize)>,
    min_cover: Option<Vec<usize>>,
    k: usize,
    z0: f64,
    final_z: f64,
    final_z_dense: f64,
    ops: Vec<(NodeId, NodeId, NodeId)>,
    /// Input vertices whose gadget node lost a harmful slot.
    rewired_vertices: Vec<usize>,
    rewired_vertices_cover: bool,
    doubly_covered_edges: usize,
    at_most_2_75: bool,
    equals_2_5: bool,
}

pub fn gadget(cfg: &RunConfig, edges_path: &Path) -> Result<(), Failure> {
    let (vertices, edges) = read_edge_list(edges_path)?;
    let gad = build_gadget(vertices, &edges)?;
    let run = heuristic_k_rewiring(&gad.graph, &gad.relevance, &cfg.rewire_params())?;
    let final_z_dense = dense_oracle_z(&run.graph, cfg.guard)?.into_iter().fold(0.0, f64::max);
    let rewired: BTreeSet<usize> = run
        .trace
        .ops()
        .filter(|op| op.v == H1 || op.v == H2)
        .filter_map(|op| gad.vertex_of(op.u))
        .collect();
    let rewired: Vec<usize> = rewired.into_iter().collect();
    let doubly = edges.iter().filter(|(a, b)| rewired.contains(a) && rewired.contains(b)).count();
    let final_z = run.trace.final_z();
    let report = GadgetReport {
        vertices,
        edges: edges.clone(),
        min_cover: min_vertex_cover(vertices, &edges),
        k: cfg.k,
        z0: run.trace.z0,
        final_z,
        final_z_dense,
        ops: run.trace.ops().map(|o| o.key()).collect(),
        rewired_vertices_cover: is_vertex_cover(&edges, &rewired),
        rewired_vertices: rewired,
        doubly_covered_edges: doubly,
        at_most_2_75: final_z <= 2.75 + 1e-9,
        equals_2_5: (final_z - 2.5).abs() <= 1e-9,
    };
    emit(&report, &cfg.out_dir.join("gadget.json"))?;
    if (final_z - final_z_dense).abs() > 1e-6 * final_z_dense.max(1.0) {
        return Err(check_failed("incremental Z disagrees with the dense oracle"));
    }
    Ok(())
}

#[derive(Serialize)]
struct SynthReport {
    labels: PathBuf,
    relevance: PathBuf,
    nodes: usize,
    harmful: usize,
    entries: usize,
}

pub fn synth(
    cfg: &RunConfig,
    n: usize,
    homophily: Option<f64>,
    candidates: Option<usize>,
    harmful_fraction: f64,
) -> Result<(), Failure> {
    let params = SynthParams {
        n,
        d: cfg.d,
        harmful_fraction,
        homophily,
        candidates: candidates.unwrap_or(3 * cfg.d).min(n.saturating_sub(1)),
        discount: cfg.discount,
    };
    let inst = generate(&params, cfg.seed)?;
    let remap = Remap::identity(n);
    let labels = cfg.out_dir.join("labels.csv");
    let relevance = cfg.out_dir.join("relevance.csv");
    write_labels(&remap, inst.graph.labels(), &labels)?;
    write_relevance(&remap, &inst.relevance, &relevance)?;
    let report = SynthReport {
        labels,
        relevance,
        nodes: n,
        harmful: inst.graph.harmful_nodes().count(),
        entries: inst.relevance.len(),
    };
    emit(&report, &cfg.out_dir.join("synth.json"))?;
    Ok(())
}
