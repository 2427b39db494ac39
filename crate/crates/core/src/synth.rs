//! Seeded synthetic instances for experiments and tests.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{build_top_d_graph, validate_graph, DiscountKind, NodeId, NodeLabel, RankDiscount, RecGraph, RelevanceStore};

/// Attempts (with derived seeds) before giving up on a valid instance.
const MAX_ATTEMPTS: u64 = 64;

#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: RecGraph,
    pub relevance: RelevanceStore,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub n: usize,
    pub d: usize,
    pub harmful_fraction: f64,
    /// Probability that a relevance candidate shares its source's label.
    /// `None` samples candidates uniformly.
    pub homophily: Option<f64>,
    /// Scored candidates per node.
    pub candidates: usize,
    pub discount: DiscountKind,
}

impl SynthParams {
    /// Uniformly mixed graph where every node scores every other node.
    pub fn dense(n: usize, d: usize) -> Self {
        SynthParams {
            n,
            d,
            harmful_fraction: 0.5,
            homophily: None,
            candidates: n.saturating_sub(1),
            discount: DiscountKind::Uniform,
        }
    }

    /// Two-block graph; `within` of the candidates share the source's label.
    pub fn homophilous(n: usize, d: usize, within: f64) -> Self {
        SynthParams {
            n,
            d,
            harmful_fraction: 0.5,
            homophily: Some(within),
            candidates: 3 * d,
            discount: DiscountKind::Uniform,
        }
    }
}

/// Generates a graph that passes validation. `seed` fixes the result.
pub fn generate(params: &SynthParams, seed: u64) -> Result<Instance> {
    let SynthParams { n, d, candidates, .. } = *params;
    if d == 0 || n < d + 2 || candidates < d || candidates >= n {
        return Err(Error::InvalidConfig(format!("cannot build n = {n}, d = {d} with {candidates} candidates")));
    }
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(attempt));
        let instance = attempt_instance(params, &mut rng)?;
        if validate_graph(&instance.graph).is_valid() {
            return Ok(instance);
        }
    }
    Err(Error::InvalidConfig(format!("no valid instance after {MAX_ATTEMPTS} attempts")))
}

fn attempt_instance(params: &SynthParams, rng: &mut ChaCha8Rng) -> Result<Instance> {
    let n = params.n;
    let harmful_count = ((n as f64) * params.harmful_fraction).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut labels = vec![NodeLabel::Neutral; n];
    for &u in &order[..harmful_count.min(n)] {
        labels[u] = NodeLabel::Harmful;
    }
    let harmful: Vec<usize> = (0..n).filter(|&u| labels[u].is_harmful()).collect();
    let neutral: Vec<usize> = (0..n).filter(|&u| !labels[u].is_harmful()).collect();

    let mut relevance = RelevanceStore::new(n);
    let mut picked = HashSet::new();
    for u in 0..n {
        picked.clear();
        let targets: Vec<usize> = if params.candidates * 2 >= n || params.homophily.is_none() {
            let mut others: Vec<usize> = (0..n).filter(|&v| v != u).collect();
            others.shuffle(rng);
            others.truncate(params.candidates);
            others
        } else {
            let within = params.homophily.unwrap_or(0.5);
            let (same, other) = if labels[u].is_harmful() { (&harmful, &neutral) } else { (&neutral, &harmful) };
            let mut out = Vec::with_capacity(params.candidates);
            let mut guard = 0;
            while out.len() < params.candidates && guard < 100 * params.candidates {
                guard += 1;
                let pool = if other.is_empty() || (rng.gen::<f64>() < within && same.len() > 1) { same } else { other };
                let v = pool[rng.gen_range(0..pool.len())];
                if v != u && picked.insert(v) {
                    out.push(v);
                }
            }
            out
        };
        for v in targets {
            let score = 1.0 - rng.gen::<f64>();
            relevance.insert(NodeId(u), NodeId(v), score)?;
        }
    }
    let discount = RankDiscount::new(params.discount, params.d)?;
    let graph = build_top_d_graph(&relevance, labels, params.d, discount)?;
    Ok(Instance { graph, relevance })
}
