use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;

use super::solver::{fixed_point, Orientation, SolverConfig};
use super::AbsorbingView;
use crate::error::{Error, Result};
use crate::graph::{NodeId, RewiringOp};

/// Graph segregation: the largest segregation score and where it occurs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segregation {
    pub value: f64,
    /// `None` when there are no harmful nodes.
    pub argmax: Option<NodeId>,
}

/// Maximum of `z` over `harmful` (ascending ids). Ties go to the lower id; an
/// empty harmful set has segregation zero.
pub fn graph_segregation(harmful: &[NodeId], z: &[f64]) -> Segregation {
    let mut best = Segregation { value: 0.0, argmax: None };
    for (&h, &value) in harmful.iter().zip(z) {
        if best.argmax.is_none() || value > best.value {
            best = Segregation { value, argmax: Some(h) };
        }
    }
    best
}

/// Segregation vector of every harmful node, solved by fixed-point iteration.
pub fn segregation_vector(view: &AbsorbingView, cfg: &SolverConfig) -> Result<Vec<f64>> {
    fixed_point(view, &vec![1.0; view.len()], Orientation::Columns, cfg)
}

/// Column `u` of `F = (I - M_hh)^{-1}`: entry `h` is the expected number of
/// visits to `u` by a walk started at `h`.
pub fn fundamental_column(view: &AbsorbingView, u: NodeId, cfg: &SolverConfig) -> Result<Vec<f64>> {
    let local = view.local_index(u).ok_or(Error::NotHarmful(u))?;
    let mut rhs = vec![0.0; view.len()];
    rhs[local] = 1.0;
    fixed_point(view, &rhs, Orientation::Columns, cfg)
}

/// Row `h` of `F`: entry `u` is the expected number of visits to `u` by a walk
/// started at `h`.
pub fn fundamental_row(view: &AbsorbingView, h: NodeId, cfg: &SolverConfig) -> Result<Vec<f64>> {
    let local = view.local_index(h).ok_or(Error::NotHarmful(h))?;
    let mut rhs = vec![0.0; view.len()];
    rhs[local] = 1.0;
    fixed_point(view, &rhs, Orientation::Rows, cfg)
}

/// Decrease of `z_h` caused by a rewiring from `u` whose removed target has
/// segregation `z_v`, given `f_hu` and `f_vu`:
/// `f_hu * z_v / (1 / p_o + f_vu)`.
#[inline]
pub fn delta_from_entries(f_hu: f64, f_vu: f64, z_v: f64, p_o: f64) -> f64 {
    f_hu * z_v / (1.0 / p_o + f_vu)
}

/// Segregation vector, graph segregation and a lazily filled cache of
/// fundamental-matrix columns, kept current across rewirings with
/// Sherman-Morrison rank-one updates.
#[derive(Debug, Clone)]
pub struct SegregationState {
    harmful: Vec<NodeId>,
    local: HashMap<NodeId, usize>,
    z: Vec<f64>,
    top: Segregation,
    columns: HashMap<usize, Vec<f64>>,
    recency: VecDeque<usize>,
    cache_cap: Option<usize>,
    solver: SolverConfig,
}

impl SegregationState {
    pub fn compute(view: &AbsorbingView, solver: SolverConfig) -> Result<Self> {
        let z = segregation_vector(view, &solver)?;
        Ok(Self::from_parts(view, z, solver))
    }

    /// Wraps an externally computed `z` (e.g. from the dense oracle).
    pub fn from_parts(view: &AbsorbingView, z: Vec<f64>, solver: SolverConfig) -> Self {
        assert_eq!(z.len(), view.len());
        let harmful = view.harmful().to_vec();
        let local = harmful.iter().enumerate().map(|(i, &h)| (h, i)).collect();
        let top = graph_segregation(&harmful, &z);
        SegregationState {
            harmful,
            local,
            z,
            top,
            columns: HashMap::new(),
            recency: VecDeque::new(),
            cache_cap: None,
            solver,
        }
    }

    /// Bounds the column cache; least recently used columns are evicted first.
    pub fn with_cache_cap(mut self, cap: Option<usize>) -> Self {
        self.cache_cap = cap.map(|c| c.max(1));
        self.evict();
        self
    }

    pub fn solver(&self) -> &SolverConfig {
        &self.solver
    }

    pub fn harmful(&self) -> &[NodeId] {
        &self.harmful
    }

    pub fn local_index(&self, node: NodeId) -> Option<usize> {
        self.local.get(&node).copied()
    }

    /// Segregation scores indexed like [`SegregationState::harmful`].
    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn z_of(&self, node: NodeId) -> Option<f64> {
        self.local_index(node).map(|i| self.z[i])
    }

    pub fn segregation(&self) -> Segregation {
        self.top
    }

    /// Graph segregation `Z`.
    pub fn value(&self) -> f64 {
        self.top.value
    }

    /// Local indices ordered by descending `z`, ties by ascending id.
    pub fn sorted_desc(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.z.len()).collect();
        order.sort_by(|&a, &b| self.z[b].total_cmp(&self.z[a]).then(a.cmp(&b)));
        order
    }

    pub fn cached_column(&self, u: NodeId) -> Option<&[f64]> {
        self.local_index(u).and_then(|i| self.columns.get(&i)).map(Vec::as_slice)
    }

    pub fn cached_columns(&self) -> impl Iterator<Item = (NodeId, &[f64])> {
        self.columns.iter().map(|(&i, c)| (self.harmful[i], c.as_slice()))
    }

    pub fn cache_len(&self) -> usize {
        self.columns.len()
    }

    /// Column `u` of `F`, solved on first use.
    pub fn column(&mut self, view: &AbsorbingView, u: NodeId) -> Result<&[f64]> {
        let local = self.local_index(u).ok_or(Error::NotHarmful(u))?;
        if !self.columns.contains_key(&local) {
            let col = fundamental_column(view, u, &self.solver)
                .map_err(|e| Error::ColumnUnavailable { node: u, source: Box::new(e) })?;
            self.insert_column(local, col);
        } else {
            self.touch(local);
        }
        Ok(&self.columns[&local])
    }

    /// Solves every missing column among `nodes` in parallel.
    pub fn ensure_columns(&mut self, view: &AbsorbingView, nodes: &[NodeId]) -> Result<()> {
        let mut missing: Vec<NodeId> = nodes
            .iter()
            .copied()
            .filter(|&u| self.local_index(u).is_some_and(|i| !self.columns.contains_key(&i)))
            .collect();
        missing.sort();
        missing.dedup();
        let solver = self.solver;
        let solved: Vec<(NodeId, Result<Vec<f64>>)> =
            missing.par_iter().map(|&u| (u, fundamental_column(view, u, &solver))).collect();
        for (u, col) in solved {
            let col = col.map_err(|e| Error::ColumnUnavailable { node: u, source: Box::new(e) })?;
            let local = self.local[&u];
            self.insert_column(local, col);
        }
        Ok(())
    }

    fn insert_column(&mut self, local: usize, col: Vec<f64>) {
        self.columns.insert(local, col);
        self.touch(local);
        self.evict();
    }

    fn touch(&mut self, local: usize) {
        if self.cache_cap.is_none() {
            return;
        }
        if let Some(pos) = self.recency.iter().position(|&i| i == local) {
            self.recency.remove(pos);
        }
        self.recency.push_back(local);
    }

    fn evict(&mut self) {
        if let Some(cap) = self.cache_cap {
            while self.columns.len() > cap {
                match self.recency.pop_front() {
                    Some(old) => {
                        self.columns.remove(&old);
                    }
                    None => break,
                }
            }
        }
    }

    /// `Delta(h, o) = f_hu * z_v / (1 / p_o + f_vu)` for a rewiring to a neutral node.
    pub fn delta_segregation(&mut self, view: &AbsorbingView, h: NodeId, op: &RewiringOp) -> Result<f64> {
        let h = self.local_index(h).ok_or(Error::NotHarmful(h))?;
        let v = self.local_index(op.v).ok_or(Error::NotHarmful(op.v))?;
        let z_v = self.z[v];
        let col = self.column(view, op.u)?;
        Ok(delta_from_entries(col[h], col[v], z_v, op.p_o))
    }

    /// Rank-one update of `z` and every cached column for `op`. `view` must
    /// still describe the graph *before* the rewiring.
    pub fn update_after_rewiring(&mut self, view: &AbsorbingView, op: &RewiringOp) -> Result<()> {
        let v = self.local_index(op.v).ok_or(Error::NotHarmful(op.v))?;
        let p = op.p_o;
        let col_u = self.column(view, op.u)?.to_vec();
        let f_vu = col_u[v];
        let scale = self.z[v] / (1.0 / p + f_vu);
        // Visit counts are non-negative, so no entry may grow; clamping keeps
        // rounding in entries that should be zero from raising z.
        for (z, f) in self.z.iter_mut().zip(&col_u) {
            *z -= (f * scale).max(0.0);
        }
        let denom = 1.0 + p * f_vu;
        self.columns.par_iter_mut().for_each(|(_, col)| {
            let coef = p * col[v] / denom;
            if coef != 0.0 {
                for (x, f) in col.iter_mut().zip(&col_u) {
                    *x = (*x - f * coef).max(0.0);
                }
            }
        });
        self.top = graph_segregation(&self.harmful, &self.z);
        Ok(())
    }

    /// Replaces `z` by a fresh solve and drops the column cache.
    pub fn recompute(&mut self, view: &AbsorbingView) -> Result<()> {
        self.z = segregation_vector(view, &self.solver)?;
        self.top = graph_segregation(&self.harmful, &self.z);
        self.columns.clear();
        self.recency.clear();
        Ok(())
    }
}
