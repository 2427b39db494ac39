//! Evaluation quantities and their CSV/JSON exports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::absorbing::SegregationState;
use crate::error::{Error, Result};
use crate::graph::{NodeId, NodeLabel, RecGraph, RelevanceStore};
use crate::rewire::OptimizationTrace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub mean: f64,
    pub median: f64,
    pub p90: f64,
    pub max: f64,
    pub count: usize,
}

/// Segregation scores normalized by the initial graph segregation.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSnapshot {
    pub nodes: Vec<NodeId>,
    pub values: Vec<f64>,
    pub summary: DistributionSummary,
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => 0.0,
        1 => sorted[0],
        n => {
            let pos = q * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

pub fn snapshot_values(harmful: &[NodeId], z: &[f64], z0_max: f64) -> Result<DistributionSnapshot> {
    if !(z0_max > 0.0) {
        return Err(Error::InvalidConfig(format!("normalizer {z0_max} must be positive")));
    }
    let values: Vec<f64> = z.iter().map(|x| x / z0_max).collect();
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let count = values.len();
    let mean = if count == 0 { 0.0 } else { values.iter().sum::<f64>() / count as f64 };
    let summary = DistributionSummary {
        mean,
        median: percentile(&sorted, 0.5),
        p90: percentile(&sorted, 0.9),
        max: sorted.last().copied().unwrap_or(0.0),
        count,
    };
    Ok(DistributionSnapshot { nodes: harmful.to_vec(), values, summary })
}

pub fn snapshot_distribution(state: &SegregationState, z0_max: f64) -> Result<DistributionSnapshot> {
    snapshot_values(state.harmful(), state.z(), z0_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeSubset {
    Harmful,
    Neutral,
    All,
}

/// Gini coefficient of the in-degrees of `subset`, zero-degree nodes included.
pub fn gini_in_degree(graph: &RecGraph, subset: NodeSubset) -> Result<f64> {
    let deg = graph.in_degrees();
    let mut xs: Vec<f64> = graph
        .nodes()
        .filter(|&u| match subset {
            NodeSubset::All => true,
            NodeSubset::Harmful => graph.label(u) == NodeLabel::Harmful,
            NodeSubset::Neutral => graph.label(u) == NodeLabel::Neutral,
        })
        .map(|u| deg[u.index()] as f64)
        .collect();
    gini(&mut xs)
}

/// `2 sum_i i x_(i) / (n sum x) - (n + 1) / n` over ascending `x`, 1-based `i`.
pub fn gini(xs: &mut [f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptySubset);
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let total: f64 = xs.iter().sum();
    if total <= 0.0 {
        return Ok(0.0);
    }
    let weighted: f64 = xs.iter().enumerate().map(|(i, x)| (i + 1) as f64 * x).sum();
    Ok(2.0 * weighted / (n * total) - (n + 1.0) / n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityAudit {
    pub tau: f64,
    /// nDCG of every list against its original ideal.
    pub quality: Vec<f64>,
    pub min_quality: f64,
    pub below_tau: usize,
    pub out_degree_violations: usize,
    pub duplicate_edges: usize,
}

impl QualityAudit {
    pub fn passed(&self) -> bool {
        self.below_tau == 0 && self.out_degree_violations == 0 && self.duplicate_edges == 0
    }
}

/// Slack for lists whose quality sits exactly on the floor.
const AUDIT_EPS: f64 = 1e-12;

pub fn quality_audit(graph: &RecGraph, relevance: &RelevanceStore, tau: f64) -> QualityAudit {
    let quality: Vec<f64> = graph
        .lists()
        .iter()
        .map(|l| {
            let ideal = graph.ideal_dcg(l.owner());
            if ideal > 0.0 {
                l.dcg(relevance) / ideal
            } else {
                1.0
            }
        })
        .collect();
    let min_quality = quality.iter().copied().fold(f64::INFINITY, f64::min);
    let below_tau = quality.iter().filter(|&&q| q < tau - AUDIT_EPS).count();
    let mut out_degree_violations = 0;
    let mut duplicate_edges = 0;
    for list in graph.lists() {
        if list.len() != graph.d() {
            out_degree_violations += 1;
        }
        let mut items: Vec<NodeId> = list.items().collect();
        items.sort();
        let before = items.len();
        items.dedup();
        duplicate_edges += before - items.len();
    }
    QualityAudit { tau, quality, min_quality, below_tau, out_degree_violations, duplicate_edges }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes `step,u,v,w,rank,p_o,delta,Z,ratio,wall_time_ms`, starting with a
/// step-0 row for the initial graph.
pub fn export_trace(trace: &OptimizationTrace, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["step", "u", "v", "w", "rank", "p_o", "delta", "Z", "ratio", "wall_time_ms"])?;
    w.write_record(["0", "", "", "", "", "", "", &trace.z0.to_string(), "1", "0"])?;
    for s in &trace.steps {
        w.write_record([
            s.step.to_string(),
            s.op.u.to_string(),
            s.op.v.to_string(),
            s.op.w.to_string(),
            s.op.rank.to_string(),
            s.op.p_o.to_string(),
            s.delta.to_string(),
            s.z_after.to_string(),
            s.ratio.to_string(),
            s.wall_time_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `node,z_normalized` to `path` and the summary next to it as JSON
/// (`path` with a `.json` extension).
pub fn export_distribution(snapshot: &DistributionSnapshot, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["node", "z_normalized"])?;
    for (node, value) in snapshot.nodes.iter().zip(&snapshot.values) {
        w.write_record([node.to_string(), value.to_string()])?;
    }
    w.flush()?;
    let mut json = create(&path.with_extension("json"))?;
    serde_json::to_writer_pretty(&mut json, &snapshot.summary)?;
    writeln!(json)?;
    json.flush()?;
    Ok(())
}

/// Writes raw `node,z` pairs.
pub fn export_scores(harmful: &[NodeId], z: &[f64], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["node", "z"])?;
    for (node, value) in harmful.iter().zip(z) {
        w.write_record([node.to_string(), value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::absorbing::{AbsorbingView, SolverConfig};
    use crate::gadget::build_gadget;

    #[test]
    fn gini_by_hand() {
        assert_eq!(gini(&mut [0.0, 0.0, 0.0, 10.0]).unwrap(), 0.75);
        assert_eq!(gini(&mut [3.0, 3.0, 3.0]).unwrap(), 0.0);
        assert_eq!(gini(&mut [5.0]).unwrap(), 0.0);
        assert_eq!(gini(&mut [0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(gini(&mut []), Err(Error::EmptySubset)));
    }

    #[test]
    fn gadget_in_degree_gini() {
        let g = build_gadget(2, &[(0, 1)]).unwrap();
        // h1, h2 receive from both vertex nodes and n1/n2; edge node receives nothing.
        let all = gini_in_degree(&g.graph, NodeSubset::All).unwrap();
        assert!(all > 0.0 && all < 1.0);
        // n1 <- h1, h2, n2; n2 <- h1, h2, n1.
        assert_eq!(gini_in_degree(&g.graph, NodeSubset::Neutral).unwrap(), 0.0);
    }

    #[test]
    fn snapshot_moments() {
        let hs = [NodeId(0), NodeId(1), NodeId(2), NodeId(3), NodeId(4)];
        let s = snapshot_values(&hs, &[1.0, 2.0, 3.0, 4.0, 5.0], 5.0).unwrap();
        assert_eq!(s.summary.max, 1.0);
        assert!((s.summary.mean - 0.6).abs() < 1e-15);
        assert!((s.summary.median - 0.6).abs() < 1e-15);
        assert!((s.summary.p90 - 0.92).abs() < 1e-12);
        let flat = snapshot_values(&hs[..3], &[2.0; 3], 2.0).unwrap();
        assert_eq!(flat.summary.p90, flat.summary.median);
        assert!(snapshot_values(&hs, &[1.0; 5], 0.0).is_err());
    }

    #[test]
    fn gadget_snapshot_before_and_after_cover() {
        let mut gad = build_gadget(2, &[(0, 1)]).unwrap();
        let view = AbsorbingView::new(&gad.graph).unwrap();
        let before = SegregationState::compute(&view, SolverConfig::with_tol(1e-13)).unwrap();
        let s0 = snapshot_distribution(&before, before.value()).unwrap();
        assert!((s0.summary.max - 1.0).abs() < 1e-12);
        for op in gad.cover_ops(&[0, 1]).unwrap() {
            gad.graph.apply_rewiring(&op, &gad.relevance).unwrap();
        }
        let view = AbsorbingView::new(&gad.graph).unwrap();
        let after = SegregationState::compute(&view, SolverConfig::with_tol(1e-13)).unwrap();
        let s1 = snapshot_distribution(&after, before.value()).unwrap();
        assert!((s1.summary.max - 2.5 / 3.0).abs() < 1e-9);
        assert!(s1.values.iter().zip(&s0.values).all(|(a, b)| a <= b));
    }

    #[test]
    fn audit_counts_floor_violations() {
        let mut gad = build_gadget(2, &[(0, 1)]).unwrap();
        let audit = quality_audit(&gad.graph, &gad.relevance, 0.9);
        assert!(audit.passed());
        assert_eq!(audit.min_quality, 1.0);
        // A zero-relevance replacement halves the list's DCG share.
        let e = gad.edge_node(0);
        gad.graph.replace_slot(e, 1, NodeId(1), 0.0).unwrap();
        let audit = quality_audit(&gad.graph, &gad.relevance, 0.9);
        assert_eq!(audit.below_tau, 1);
        assert!(!audit.passed());
    }
}
