use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::graph::{NodeId, RewiringOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Greedy optimal single rewirings.
    Heu,
    /// Top-k ops by initial decrease, applied at once.
    Bsl1,
    /// Top-k ops among the k most segregated sources.
    Bsl2,
    /// Uniformly random feasible ops.
    Rnd,
    /// Greedy with exhaustive dense scoring of every op.
    Brute,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [Algorithm::Heu, Algorithm::Bsl1, Algorithm::Bsl2, Algorithm::Rnd, Algorithm::Brute];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Heu => "heu",
            Algorithm::Bsl1 => "bsl1",
            Algorithm::Bsl2 => "bsl2",
            Algorithm::Rnd => "rnd",
            Algorithm::Brute => "brute",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalReason {
    KReached,
    CandidatesExhausted,
}

impl fmt::Display for TerminalReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminalReason::KReached => "k reached",
            TerminalReason::CandidatesExhausted => "candidates exhausted",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    /// 1-based.
    pub step: usize,
    pub op: RewiringOp,
    /// Decrease of `Z` the algorithm expected when it picked the op.
    pub delta: f64,
    pub z_before: f64,
    pub z_after: f64,
    /// `Z^T / Z^0`.
    pub ratio: f64,
    pub argmax: Option<NodeId>,
    /// The op did not lower `Z`.
    pub zero_progress: bool,
    pub probes: usize,
    /// Ops whose decrease was computed exactly this step.
    pub evaluated: usize,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationTrace {
    pub algorithm: Algorithm,
    /// Segregation before the first op.
    pub z0: f64,
    pub steps: Vec<StepRecord>,
    pub terminal: TerminalReason,
}

impl OptimizationTrace {
    pub fn new(algorithm: Algorithm, z0: f64) -> Self {
        OptimizationTrace { algorithm, z0, steps: Vec::new(), terminal: TerminalReason::KReached }
    }

    pub fn final_z(&self) -> f64 {
        self.steps.last().map_or(self.z0, |s| s.z_after)
    }

    pub fn final_ratio(&self) -> f64 {
        ratio(self.final_z(), self.z0)
    }

    pub fn ops(&self) -> impl Iterator<Item = &RewiringOp> {
        self.steps.iter().map(|s| &s.op)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn zero_progress_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.zero_progress).count()
    }

    /// Largest increase of `Z` between consecutive records (0 when monotone).
    pub fn max_increase(&self) -> f64 {
        let mut prev = self.z0;
        let mut worst: f64 = 0.0;
        for s in &self.steps {
            worst = worst.max(s.z_after - prev);
            prev = s.z_after;
        }
        worst
    }
}

pub(crate) fn ratio(z: f64, z0: f64) -> f64 {
    if z0 > 0.0 {
        z / z0
    } else {
        1.0
    }
}
