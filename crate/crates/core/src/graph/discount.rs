use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Position discount used by DCG: `1 / (1 + log2(1 + rank))`, rank 1-based.
pub fn dcg_discount(rank: usize) -> f64 {
    1.0 / (1.0 + (1.0 + rank as f64).log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DiscountKind {
    /// `p = 1/d` for every rank.
    #[default]
    Uniform,
    /// DCG position weights normalized to sum to one.
    #[serde(rename = "invlog")]
    InverseLog,
    /// Caller-supplied table.
    Custom,
}

impl FromStr for DiscountKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(DiscountKind::Uniform),
            "invlog" | "inverselog" | "inverse-log" => Ok(DiscountKind::InverseLog),
            other => Err(Error::InvalidConfig(format!("unknown discount {other:?}"))),
        }
    }
}

impl fmt::Display for DiscountKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiscountKind::Uniform => "uniform",
            DiscountKind::InverseLog => "invlog",
            DiscountKind::Custom => "custom",
        })
    }
}

/// Maps a 1-based list rank to a transition probability.
#[derive(Debug, Clone, PartialEq)]
pub struct RankDiscount {
    kind: DiscountKind,
    probs: Vec<f64>,
}

impl RankDiscount {
    pub fn new(kind: DiscountKind, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDiscount("d must be at least 1".into()));
        }
        let probs = match kind {
            DiscountKind::Uniform => vec![1.0 / d as f64; d],
            DiscountKind::InverseLog => {
                let weights: Vec<f64> = (1..=d).map(dcg_discount).collect();
                let total: f64 = weights.iter().sum();
                weights.into_iter().map(|w| w / total).collect()
            }
            DiscountKind::Custom => {
                return Err(Error::InvalidDiscount(
                    "custom tables go through RankDiscount::custom".into(),
                ))
            }
        };
        Ok(RankDiscount { kind, probs })
    }

    pub fn uniform(d: usize) -> Result<Self> {
        Self::new(DiscountKind::Uniform, d)
    }

    pub fn inverse_log(d: usize) -> Result<Self> {
        Self::new(DiscountKind::InverseLog, d)
    }

    /// A user-supplied table. It must be non-negative and non-increasing;
    /// its sum is not enforced here and is reported by graph validation.
    pub fn custom(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDiscount("empty probability table".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDiscount("negative or non-finite probability".into()));
        }
        if probs.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidDiscount("probabilities must be non-increasing in rank".into()));
        }
        Ok(RankDiscount { kind: DiscountKind::Custom, probs })
    }

    pub fn kind(&self) -> DiscountKind {
        self.kind
    }

    pub fn d(&self) -> usize {
        self.probs.len()
    }

    /// Probability of the slot at 1-based `rank`.
    pub fn prob(&self, rank: usize) -> f64 {
        self.probs[rank - 1]
    }

    pub fn table(&self) -> &[f64] {
        &self.probs
    }

    /// `|sum(p) - 1|`.
    pub fn drift(&self) -> f64 {
        (self.probs.iter().sum::<f64>() - 1.0).abs()
    }
}
