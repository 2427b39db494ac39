use crate::error::{Error, Result};
use crate::graph::NodeId;

/// Sparse relevance scores `s_uv` in `[0, 1]`. Absent pairs read as zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RelevanceStore {
    // Per source, sorted by target id.
    rows: Vec<Vec<(NodeId, f64)>>,
}

impl RelevanceStore {
    pub fn new(n: usize) -> Self {
        RelevanceStore { rows: vec![Vec::new(); n] }
    }

    /// Builds a store from `(src, dst, score)` triples over `n` nodes.
    pub fn from_entries<I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId, f64)>,
    {
        let mut store = RelevanceStore::new(n);
        for (u, v, s) in entries {
            store.insert(u, v, s)?;
        }
        Ok(store)
    }

    pub fn node_count(&self) -> usize {
        self.rows.len()
    }

    pub fn insert(&mut self, u: NodeId, v: NodeId, score: f64) -> Result<()> {
        let n = self.rows.len();
        for node in [u, v] {
            if node.index() >= n {
                return Err(Error::UnknownNode(node.to_string()));
            }
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidScore { src: u.to_string(), dst: v.to_string(), score });
        }
        if u == v {
            return Err(Error::SelfRelevance(u.to_string()));
        }
        let row = &mut self.rows[u.index()];
        match row.binary_search_by_key(&v, |&(t, _)| t) {
            Ok(_) => Err(Error::DuplicateRelevance(u.to_string(), v.to_string())),
            Err(pos) => {
                row.insert(pos, (v, score));
                Ok(())
            }
        }
    }

    pub fn get(&self, u: NodeId, v: NodeId) -> f64 {
        self.rows
            .get(u.index())
            .and_then(|row| row.binary_search_by_key(&v, |&(t, _)| t).ok().map(|i| row[i].1))
            .unwrap_or(0.0)
    }

    /// Scored targets of `u`, ascending by id.
    pub fn row(&self, u: NodeId) -> &[(NodeId, f64)] {
        self.rows.get(u.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(Vec::is_empty)
    }
}
