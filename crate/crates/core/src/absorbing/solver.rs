use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AbsorbingView;
use crate::error::{Error, Result};

/// Iterations spent before the contraction rate is estimated.
const WARMUP_ITERATIONS: usize = 100;
const HARD_ITERATION_CAP: usize = 10_000_000;
/// Below this many rows the sweep runs on one thread.
const PARALLEL_THRESHOLD: usize = 16_384;

/// Stopping rule for the fixed-point solves `x = b + M_hh x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Max-norm step change below which the iteration stops.
    pub tol: f64,
    /// Iteration cap. `None` derives one from the observed contraction rate.
    pub max_iter: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-8, max_iter: None }
    }
}

impl SolverConfig {
    pub fn with_tol(tol: f64) -> Self {
        SolverConfig { tol, max_iter: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Orientation {
    /// `x = b + M_hh x`: segregation vector and fundamental-matrix columns.
    Columns,
    /// `x = b + M_hh^T x`: fundamental-matrix rows.
    Rows,
}

/// Jacobi sweeps from `x_0 = b` until the max-norm step drops below `tol`.
pub(crate) fn fixed_point(
    view: &AbsorbingView,
    rhs: &[f64],
    orientation: Orientation,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    let n = view.len();
    debug_assert_eq!(rhs.len(), n);
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut x = rhs.to_vec();
    let mut next = vec![0.0; n];
    let mut cap = cfg.max_iter.unwrap_or(usize::MAX);
    let mut history: Vec<f64> = Vec::with_capacity(WARMUP_ITERATIONS + 1);

    for iter in 1.. {
        if iter > cap {
            return Err(Error::NotConverged { max_iter: cap });
        }
        let step = sweep(view, rhs, &x, &mut next, orientation);
        std::mem::swap(&mut x, &mut next);
        if step < cfg.tol {
            return Ok(x);
        }
        if cfg.max_iter.is_none() {
            if iter <= WARMUP_ITERATIONS {
                history.push(step);
            }
            if iter == WARMUP_ITERATIONS {
                cap = derived_cap(&history, cfg.tol);
            }
        }
    }
    unreachable!()
}

/// Cap from the warm-up: with contraction rate `r`, the walk-length bound
/// `Z_upper = 1 / (1 - r)` and the iterations still needed to shrink the
/// current step below `tol` is about `Z_upper * ln(step / tol)`. Ten times
/// that, plus the warm-up, is allowed.
fn derived_cap(history: &[f64], tol: f64) -> usize {
    let last = *history.last().unwrap_or(&1.0);
    let half = history.len() / 2;
    let earlier = history[half.saturating_sub(1)];
    let span = (history.len() - half) as f64;
    let rate = if earlier > 0.0 && last > 0.0 { (last / earlier).powf(1.0 / span) } else { 0.0 };
    if !(rate < 1.0 - 1e-12) {
        return HARD_ITERATION_CAP;
    }
    let z_upper = 1.0 / (1.0 - rate);
    let remaining = z_upper * (last / tol).ln().max(1.0);
    let cap = WARMUP_ITERATIONS as f64 + 10.0 * remaining.ceil();
    cap.min(HARD_ITERATION_CAP as f64) as usize
}

fn sweep(view: &AbsorbingView, rhs: &[f64], x: &[f64], next: &mut [f64], orientation: Orientation) -> f64 {
    let update = |i: usize, slot: &mut f64| {
        let entries = match orientation {
            Orientation::Columns => view.row(i),
            Orientation::Rows => view.column(i),
        };
        let value = rhs[i] + entries.iter().map(|&(j, p)| p * x[j]).sum::<f64>();
        let diff = (value - x[i]).abs();
        *slot = value;
        diff
    };
    if next.len() >= PARALLEL_THRESHOLD {
        next.par_iter_mut()
            .enumerate()
            .map(|(i, slot)| update(i, slot))
            .reduce(|| 0.0, f64::max)
    } else {
        next.iter_mut().enumerate().map(|(i, slot)| update(i, slot)).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cap_grows_with_slow_contraction() {
        let fast: Vec<f64> = (0..100).map(|k| 0.5f64.powi(k)).collect();
        let slow: Vec<f64> = (0..100).map(|k| 0.99f64.powi(k)).collect();
        let fast_cap = derived_cap(&fast, 1e-8);
        let slow_cap = derived_cap(&slow, 1e-8);
        assert!(fast_cap < slow_cap);
        // 0.99^k * 0.37 < 1e-8 needs ~1750 more sweeps.
        assert!(slow_cap > 1750 + 100);
    }

    #[test]
    fn stalled_iteration_uses_hard_cap() {
        let flat = vec![1.0; 100];
        assert_eq!(derived_cap(&flat, 1e-8), HARD_ITERATION_CAP);
    }
}
