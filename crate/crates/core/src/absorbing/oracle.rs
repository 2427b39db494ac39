use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::AbsorbingView;
use crate::error::{Error, Result};
use crate::graph::{validate_graph, NodeId, RecGraph};

/// Largest harmful-node count the dense oracles accept by default.
pub const DEFAULT_DENSE_GUARD: usize = 2000;

/// `I - M_hh` as a dense matrix, after the reachability and size checks.
fn dense_system(graph: &RecGraph, guard: usize) -> Result<(AbsorbingView, DMatrix<f64>)> {
    let view = AbsorbingView::new_unchecked(graph);
    let n = view.len();
    if n > guard {
        return Err(Error::TooLargeForDenseOracle { harmful: n, guard });
    }
    if !validate_graph(graph).unreachable_harmful.is_empty() {
        return Err(Error::SingularSystem);
    }
    let mut a = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for &(j, p) in view.row(i) {
            a[(i, j)] -= p;
        }
    }
    Ok((view, a))
}

/// Segregation vector by a dense LU solve of `(I - M_hh) z = 1`, indexed by
/// harmful nodes in ascending id order.
pub fn dense_oracle_z(graph: &RecGraph, guard: usize) -> Result<Vec<f64>> {
    let (view, a) = dense_system(graph, guard)?;
    let n = view.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let z = a.lu().solve(&DVector::from_element(n, 1.0)).ok_or(Error::SingularSystem)?;
    Ok(z.iter().copied().collect())
}

/// The full fundamental matrix `(I - M_hh)^{-1}` by dense inversion.
pub fn dense_fundamental(graph: &RecGraph, guard: usize) -> Result<DMatrix<f64>> {
    let (_, a) = dense_system(graph, guard)?;
    if a.nrows() == 0 {
        return Ok(a);
    }
    a.try_inverse().ok_or(Error::SingularSystem)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HittingEstimate {
    /// Mean number of steps until a neutral node is reached.
    pub mean: f64,
    pub trials: u64,
    pub std_error: f64,
    /// Walks stopped at the step cap; they count as `step_cap` steps.
    pub capped: u64,
}

/// Step cap used when none is given.
pub const DEFAULT_STEP_CAP: u64 = 1_000_000;

/// Simulates `trials` walks from harmful node `u` until each hits a neutral
/// node. Deterministic for a fixed `seed`.
pub fn monte_carlo_hitting(
    graph: &RecGraph,
    u: NodeId,
    trials: u64,
    seed: u64,
    step_cap: Option<u64>,
) -> Result<HittingEstimate> {
    if !graph.is_harmful(u) {
        return Err(Error::NotHarmful(u));
    }
    let cap = step_cap.unwrap_or(DEFAULT_STEP_CAP).max(1);
    let cumulative: Vec<f64> = graph
        .discount()
        .table()
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let total = *cumulative.last().unwrap_or(&1.0);
    let last = cumulative.len() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut capped = 0;
    for t in 1..=trials {
        let mut node = u;
        let mut steps: u64 = 0;
        loop {
            let r: f64 = rng.gen::<f64>() * total;
            let slot = cumulative.partition_point(|&c| c <= r).min(last);
            node = graph.list(node).slots()[slot].item;
            steps += 1;
            if !graph.is_harmful(node) {
                break;
            }
            if steps >= cap {
                capped += 1;
                break;
            }
        }
        let x = steps as f64;
        let delta = x - mean;
        mean += delta / t as f64;
        m2 += delta * (x - mean);
    }
    let std_error = if trials > 1 { (m2 / (trials - 1) as f64).sqrt() / (trials as f64).sqrt() } else { 0.0 };
    Ok(HittingEstimate { mean, trials, std_error, capped })
}
