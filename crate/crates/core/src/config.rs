//! Run configuration: flat `key = value` files, overridable per key.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::absorbing::{SolverConfig, DEFAULT_DENSE_GUARD};
use crate::error::{Error, Result};
use crate::graph::DiscountKind;
use crate::rewire::{Algorithm, RewireParams};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub d: usize,
    pub tau: f64,
    pub k: usize,
    pub discount: DiscountKind,
    pub tol: f64,
    /// `None` derives the cap from the observed convergence rate.
    pub max_iter: Option<usize>,
    pub seed: u64,
    pub algorithm: Algorithm,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
    pub guard: usize,
    pub out_dir: PathBuf,
    /// Write measured step times; off gives byte-identical reruns.
    pub record_time: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            d: 10,
            tau: 0.9,
            k: 10,
            discount: DiscountKind::Uniform,
            tol: 1e-8,
            max_iter: None,
            seed: 0,
            algorithm: Algorithm::Heu,
            threads: None,
            guard: DEFAULT_DENSE_GUARD,
            out_dir: PathBuf::from("out"),
            record_time: true,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::InvalidConfig(format!("bad value {value:?} for {key}")))
}

impl RunConfig {
    /// Sets one key. Dashes and underscores are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "d" => self.d = parse(key, value)?,
            "tau" => self.tau = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "discount" => self.discount = value.parse()?,
            "tol" => self.tol = parse(key, value)?,
            "max_iter" => self.max_iter = if value == "auto" { None } else { Some(parse(key, value)?) },
            "seed" => self.seed = parse(key, value)?,
            "algorithm" => self.algorithm = value.parse()?,
            "threads" => self.threads = if value == "auto" { None } else { Some(parse(key, value)?) },
            "guard" => self.guard = parse(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "record_time" => self.record_time = parse(key, value)?,
            other => return Err(Error::InvalidConfig(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`. Blank lines and `#`
    /// comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value", i + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        cfg.apply_text(&text).map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.d == 0 {
            return bad("d must be at least 1".into());
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad(format!("tau = {} is outside (0, 1)", self.tau));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad(format!("tol = {} must be positive", self.tol));
        }
        if self.max_iter == Some(0) {
            return bad("max_iter must be positive".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        if self.guard == 0 {
            return bad("guard must be positive".into());
        }
        Ok(())
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig { tol: self.tol, max_iter: self.max_iter }
    }

    pub fn rewire_params(&self) -> RewireParams {
        RewireParams {
            tau: self.tau,
            k: self.k,
            solver: self.solver(),
            cache_cap: None,
            record_time: self.record_time,
            guard: self.guard,
        }
    }
}
