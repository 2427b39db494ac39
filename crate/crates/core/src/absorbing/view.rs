use crate::error::{Error, Result};
use crate::graph::{validate_graph, NodeId, RecGraph, RewiringOp};

const NOT_HARMFUL: usize = usize::MAX;

/// The harmful-to-harmful block `M_hh` of the absorbing transition matrix.
///
/// Harmful nodes are indexed locally in ascending id order. Neutral nodes are
/// absorbing and do not appear.
#[derive(Debug, Clone)]
pub struct AbsorbingView {
    harmful: Vec<NodeId>,
    local: Vec<usize>,
    out: Vec<Vec<(usize, f64)>>,
    inn: Vec<Vec<(usize, f64)>>,
}

impl AbsorbingView {
    /// Builds the view, rejecting graphs with harmful nodes that cannot reach
    /// a neutral node.
    pub fn new(graph: &RecGraph) -> Result<Self> {
        let report = validate_graph(graph);
        if !report.unreachable_harmful.is_empty() {
            return Err(Error::UnreachableHarmfulComponent(report.unreachable_harmful));
        }
        Ok(Self::new_unchecked(graph))
    }

    pub fn new_unchecked(graph: &RecGraph) -> Self {
        let harmful: Vec<NodeId> = graph.harmful_nodes().collect();
        let mut local = vec![NOT_HARMFUL; graph.n()];
        for (i, h) in harmful.iter().enumerate() {
            local[h.index()] = i;
        }
        let mut out = vec![Vec::new(); harmful.len()];
        let mut inn = vec![Vec::new(); harmful.len()];
        for (i, &h) in harmful.iter().enumerate() {
            for (v, p) in graph.out_edges(h) {
                let j = local[v.index()];
                if j != NOT_HARMFUL {
                    out[i].push((j, p));
                    inn[j].push((i, p));
                }
            }
        }
        AbsorbingView { harmful, local, out, inn }
    }

    /// Number of harmful (transient) nodes.
    pub fn len(&self) -> usize {
        self.harmful.len()
    }

    pub fn is_empty(&self) -> bool {
        self.harmful.is_empty()
    }

    pub fn harmful(&self) -> &[NodeId] {
        &self.harmful
    }

    pub fn node(&self, local: usize) -> NodeId {
        self.harmful[local]
    }

    pub fn local_index(&self, node: NodeId) -> Option<usize> {
        self.local.get(node.index()).copied().filter(|&i| i != NOT_HARMFUL)
    }

    /// Harmful successors of a harmful node with their probabilities.
    pub fn row(&self, local: usize) -> &[(usize, f64)] {
        &self.out[local]
    }

    /// Harmful predecessors of a harmful node.
    pub fn column(&self, local: usize) -> &[(usize, f64)] {
        &self.inn[local]
    }

    /// Total harmful-to-harmful probability leaving `local`.
    pub fn row_sum(&self, local: usize) -> f64 {
        self.out[local].iter().map(|&(_, p)| p).sum()
    }

    pub fn nnz(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    /// Dense copy of `M_hh`, row-major. Test and oracle use only.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in self.out.iter().enumerate() {
            for &(j, p) in row {
                m[i][j] += p;
            }
        }
        m
    }

    /// Mirrors a rewiring: the harmful edge `(u, v)` leaves `M_hh`. The new
    /// target is neutral and therefore absorbed.
    pub fn apply(&mut self, op: &RewiringOp) -> Result<()> {
        let (u, v) = match (self.local_index(op.u), self.local_index(op.v)) {
            (Some(u), Some(v)) => (u, v),
            _ => return Err(Error::EdgeNotFound { u: op.u, v: op.v }),
        };
        let pos = self.out[u]
            .iter()
            .position(|&(j, _)| j == v)
            .ok_or(Error::EdgeNotFound { u: op.u, v: op.v })?;
        self.out[u].remove(pos);
        if let Some(pos) = self.inn[v].iter().position(|&(i, _)| i == u) {
            self.inn[v].remove(pos);
        }
        Ok(())
    }
}

/// See [`AbsorbingView::new`].
pub fn absorbing_view(graph: &RecGraph) -> Result<AbsorbingView> {
    AbsorbingView::new(graph)
}
