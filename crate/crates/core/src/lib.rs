//! Segregation reduction for recommendation graphs.
//!
//! A recommendation graph links every item to its `d` most relevant items. A
//! random walk over it models a user session. Starting from harmful content,
//! the expected number of steps before the walk first reaches neutral content
//! is the node's segregation score, and the worst score over all harmful nodes
//! is the graph segregation `Z`.
//!
//! The crate rewires up to `k` edges, each replacing a harmful recommendation
//! by a neutral one, to reduce `Z` while every list keeps a fraction `tau` of
//! its original nDCG.

pub mod absorbing;
pub mod cli;
pub mod config;
pub mod error;
pub mod gadget;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod rewire;
pub mod synth;

pub use error::{Error, PreconditionViolation, Result};
