use std::collections::VecDeque;
use std::fmt;

use serde::Serialize;

use super::{NodeId, RecGraph};

/// Sums of transition probabilities further than this from one are flagged.
pub const PROBABILITY_DRIFT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub nodes: usize,
    pub d: usize,
    pub harmful: usize,
    pub neutral: usize,
    pub out_degree_violations: Vec<NodeId>,
    pub duplicate_edges: Vec<NodeId>,
    pub max_probability_drift: f64,
    pub probability_drift: bool,
    /// Harmful nodes from which no neutral node is reachable.
    pub unreachable_harmful: Vec<NodeId>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.out_degree_violations.is_empty()
            && self.duplicate_edges.is_empty()
            && !self.probability_drift
            && self.unreachable_harmful.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes: {} (harmful {}, neutral {})", self.nodes, self.harmful, self.neutral)?;
        writeln!(f, "out-degree d: {}", self.d)?;
        writeln!(f, "out-degree violations: {}", self.out_degree_violations.len())?;
        writeln!(f, "duplicate edges: {}", self.duplicate_edges.len())?;
        writeln!(
            f,
            "probability drift: {:.3e}{}",
            self.max_probability_drift,
            if self.probability_drift { " (FLAGGED)" } else { "" }
        )?;
        writeln!(f, "harmful nodes without a neutral exit: {}", self.unreachable_harmful.len())?;
        write!(f, "status: {}", if self.is_valid() { "ok" } else { "INVALID" })
    }
}

pub fn validate_graph(graph: &RecGraph) -> ValidationReport {
    let n = graph.n();
    let mut out_degree_violations = Vec::new();
    let mut duplicate_edges = Vec::new();
    let mut max_drift: f64 = 0.0;
    for u in graph.nodes() {
        let list = graph.list(u);
        if list.len() != graph.d() {
            out_degree_violations.push(u);
        }
        let slots = list.slots();
        if slots.iter().enumerate().any(|(i, s)| s.item == u || slots[..i].iter().any(|t| t.item == s.item)) {
            duplicate_edges.push(u);
        }
        let total: f64 = graph.out_edges(u).map(|(_, p)| p).sum();
        max_drift = max_drift.max((total - 1.0).abs());
    }

    // Reverse BFS from the neutral set.
    let mut incoming: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for u in graph.nodes() {
        for (v, p) in graph.out_edges(u) {
            if p > 0.0 {
                incoming[v.index()].push(u);
            }
        }
    }
    let mut reached = vec![false; n];
    let mut queue: VecDeque<NodeId> = graph.neutral_nodes().collect();
    for u in &queue {
        reached[u.index()] = true;
    }
    while let Some(v) = queue.pop_front() {
        for &u in &incoming[v.index()] {
            // Walks stop at neutral nodes, so only harmful predecessors extend the search.
            if !reached[u.index()] && graph.is_harmful(u) {
                reached[u.index()] = true;
                queue.push_back(u);
            }
        }
    }
    let unreachable_harmful = graph.harmful_nodes().filter(|u| !reached[u.index()]).collect();
    let harmful = graph.harmful_nodes().count();

    ValidationReport {
        nodes: n,
        d: graph.d(),
        harmful,
        neutral: n - harmful,
        out_degree_violations,
        duplicate_edges,
        max_probability_drift: max_drift,
        probability_drift: max_drift > PROBABILITY_DRIFT_TOLERANCE,
        unreachable_harmful,
    }
}
