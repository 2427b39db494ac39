//! CSV ingestion and graph dumps.
//!
//! External node ids are arbitrary strings. Ingestion numbers them `0..n` in
//! the order of the labels file, and a remap sidecar (`id,node,label`) keeps
//! the mapping next to every graph dump.

use std::collections::HashMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{dcg_discount, top_d, DiscountKind, NodeId, NodeLabel, RankDiscount, RecGraph, RelevanceStore};

/// Dense ids for external node names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Remap {
    names: Vec<String>,
    index: HashMap<String, NodeId>,
}

impl Remap {
    pub fn from_names(names: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), NodeId(i)).is_some() {
                return Err(Error::DuplicateNode(name.clone()));
            }
        }
        Ok(Remap { names, index })
    }

    /// Identity mapping `"0".."n-1"`.
    pub fn identity(n: usize) -> Self {
        Remap::from_names((0..n).map(|i| i.to_string()).collect()).expect("distinct names")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id.index()]
    }
}

#[derive(Debug, Deserialize)]
struct LabelRow {
    node: String,
    label: String,
}

#[derive(Debug, Deserialize)]
struct RelevanceRow {
    src: String,
    dst: String,
    score: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRow {
    src: usize,
    dst: usize,
    rank: usize,
    prob: f64,
    score: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct RemapRow {
    id: usize,
    node: String,
    label: String,
}

fn parse_error(path: &Path, line: Option<u64>, message: impl std::fmt::Display) -> Error {
    let message = match line {
        Some(l) => format!("line {l}: {message}"),
        None => message.to_string(),
    };
    Error::Parse { path: path.to_path_buf(), message }
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| parse_error(path, None, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

/// Reads `node,label`. Node order in the file fixes the dense ids.
pub fn read_labels(path: &Path) -> Result<(Remap, Vec<NodeLabel>)> {
    let mut names = Vec::new();
    let mut labels = Vec::new();
    for row in reader(path)?.deserialize::<LabelRow>() {
        let row = row.map_err(|e| parse_error(path, e.position().map(|p| p.line()), &e))?;
        labels.push(row.label.parse::<NodeLabel>()?);
        names.push(row.node);
    }
    Ok((Remap::from_names(names)?, labels))
}

/// Reads `src,dst,score` against the ids in `remap`.
pub fn read_relevance(path: &Path, remap: &Remap) -> Result<RelevanceStore> {
    let mut store = RelevanceStore::new(remap.len());
    for row in reader(path)?.deserialize::<RelevanceRow>() {
        let row = row.map_err(|e| parse_error(path, e.position().map(|p| p.line()), &e))?;
        let src = remap.id(&row.src).ok_or_else(|| Error::UnknownNode(row.src.clone()))?;
        let dst = remap.id(&row.dst).ok_or_else(|| Error::UnknownNode(row.dst.clone()))?;
        if !(0.0..=1.0).contains(&row.score) {
            return Err(Error::InvalidScore { src: row.src, dst: row.dst, score: row.score });
        }
        if src == dst {
            return Err(Error::SelfRelevance(row.src));
        }
        if store.row(src).iter().any(|&(t, _)| t == dst) {
            return Err(Error::DuplicateRelevance(row.src, row.dst));
        }
        store.insert(src, dst, row.score)?;
    }
    Ok(store)
}

/// Writes `node,label` with the names in `remap`.
pub fn write_labels(remap: &Remap, labels: &[NodeLabel], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["node", "label"])?;
    for (i, label) in labels.iter().enumerate() {
        w.write_record([remap.name(NodeId(i)), &label.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `src,dst,score` rows sorted by `(src, dst)`.
pub fn write_relevance(remap: &Remap, relevance: &RelevanceStore, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["src", "dst", "score"])?;
    for u in 0..relevance.node_count() {
        let u = NodeId(u);
        for &(v, s) in relevance.row(u) {
            w.write_record([remap.name(u), remap.name(v), &s.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Sidecar path for a graph dump: `graph.csv` -> `graph.remap.csv`.
pub fn remap_path(graph_path: &Path) -> PathBuf {
    graph_path.with_extension("remap.csv")
}

/// Writes `src,dst,rank,prob,score` sorted by `(src, rank)`.
pub fn write_graph(graph: &RecGraph, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    for u in graph.nodes() {
        for (i, slot) in graph.list(u).slots().iter().enumerate() {
            let rank = i + 1;
            w.serialize(EdgeRow {
                src: u.index(),
                dst: slot.item.index(),
                rank,
                prob: graph.discount().prob(rank),
                score: slot.score,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_remap(remap: &Remap, labels: &[NodeLabel], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    for (i, label) in labels.iter().enumerate() {
        w.serialize(RemapRow { id: i, node: remap.name(NodeId(i)).to_string(), label: label.to_string() })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_remap(path: &Path) -> Result<(Remap, Vec<NodeLabel>)> {
    let mut names = Vec::new();
    let mut labels = Vec::new();
    for row in reader(path)?.deserialize::<RemapRow>() {
        let row = row.map_err(|e| parse_error(path, e.position().map(|p| p.line()), &e))?;
        if row.id != names.len() {
            return Err(parse_error(path, None, format!("ids must be 0..n in order, found {}", row.id)));
        }
        labels.push(row.label.parse::<NodeLabel>()?);
        names.push(row.node);
    }
    Ok((Remap::from_names(names)?, labels))
}

/// Graph dump plus its sidecar, the graph and remap written together.
pub fn write_graph_bundle(graph: &RecGraph, remap: &Remap, path: &Path) -> Result<()> {
    write_graph(graph, path)?;
    write_remap(remap, graph.labels(), &remap_path(path))
}

/// Reloads a graph dump. Labels come from the remap sidecar, and each node's
/// ideal DCG is recomputed as the DCG of its top-`d` list under `relevance`,
/// so a rewired dump is still measured against the original lists. Without
/// relevance scores the dumped lists themselves are taken as ideal.
pub fn read_graph(path: &Path, relevance: Option<&RelevanceStore>) -> Result<(RecGraph, Remap)> {
    let (remap, labels) = read_remap(&remap_path(path))?;
    let n = labels.len();
    let mut lists: Vec<Vec<(usize, NodeId, f64, f64)>> = vec![Vec::new(); n];
    for row in reader(path)?.deserialize::<EdgeRow>() {
        let row = row.map_err(|e| parse_error(path, e.position().map(|p| p.line()), &e))?;
        if row.src >= n || row.dst >= n {
            return Err(Error::UnknownNode(format!("{}", row.src.max(row.dst))));
        }
        lists[row.src].push((row.rank, NodeId(row.dst), row.prob, row.score));
    }
    let d = lists.first().map_or(0, Vec::len);
    for list in &mut lists {
        list.sort_by_key(|e| e.0);
        if list.iter().enumerate().any(|(i, e)| e.0 != i + 1) {
            return Err(parse_error(path, None, "ranks must run 1..d for every source"));
        }
    }
    let probs: Vec<f64> = lists.first().map(|l| l.iter().map(|e| e.2).collect()).unwrap_or_default();
    let discount = infer_discount(&probs)?;
    if lists.iter().any(|l| l.len() == d && l.iter().zip(&probs).any(|(e, p)| (e.2 - p).abs() > 1e-9)) {
        return Err(parse_error(path, None, "transition probabilities differ between sources"));
    }
    let dcg = |scores: &mut dyn Iterator<Item = f64>| -> f64 {
        scores.enumerate().map(|(i, s)| s * dcg_discount(i + 1)).sum()
    };
    let ideal = (0..n)
        .map(|u| match relevance {
            Some(rel) => dcg(&mut top_d(rel, NodeId(u), d).into_iter().map(|(_, s)| s)),
            None => dcg(&mut lists[u].iter().map(|e| e.3)),
        })
        .collect();
    let lists = lists.into_iter().map(|l| l.into_iter().map(|e| (e.1, e.3)).collect()).collect();
    Ok((RecGraph::with_ideal(labels, lists, discount, ideal)?, remap))
}

/// The named discount whose table matches `probs`, else a custom table.
fn infer_discount(probs: &[f64]) -> Result<RankDiscount> {
    let d = probs.len();
    for kind in [DiscountKind::Uniform, DiscountKind::InverseLog] {
        let named = RankDiscount::new(kind, d)?;
        if named.table().iter().zip(probs).all(|(a, b)| (a - b).abs() <= 1e-9) {
            return Ok(named);
        }
    }
    RankDiscount::custom(probs.to_vec())
}

#[derive(Debug, Deserialize)]
struct UndirectedRow {
    u: usize,
    v: Option<usize>,
}

/// Reads an undirected graph as `u,v` rows; a row with an empty `v` declares
/// an isolated vertex. Vertices are `0..=max id`.
pub fn read_edge_list(path: &Path) -> Result<(usize, Vec<(usize, usize)>)> {
    let mut count = 0;
    let mut edges = Vec::new();
    for row in reader(path)?.deserialize::<UndirectedRow>() {
        let row = row.map_err(|e| parse_error(path, e.position().map(|p| p.line()), &e))?;
        count = count.max(row.u + 1);
        if let Some(v) = row.v {
            count = count.max(v + 1);
            edges.push((row.u, v));
        }
    }
    Ok((count, edges))
}
