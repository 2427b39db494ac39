//! Command-line front end.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0  | success |
//! | 1  | other failure (I/O, internal) |
//! | 2  | input or graph validation failure |
//! | 3  | fixed-point iteration did not converge |
//! | 4  | no feasible rewiring at the start |
//! | 5  | a `verify` or `gadget` check failed |
//! | 64 | bad command line or configuration |

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{Error, Result};

pub const EXIT_OTHER: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;
pub const EXIT_EMPTY_CANDIDATES: u8 = 4;
pub const EXIT_CHECK_FAILED: u8 = 5;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(name = "segra", version, about = "Reduce segregation in recommendation graphs by constrained rewiring")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub config: ConfigArgs,
}

/// Every configuration key, as an optional override of the config file.
#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    /// Flat `key = value` file applied before the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Recommendations per node.
    #[arg(long, global = true)]
    pub d: Option<String>,
    /// nDCG floor in (0, 1).
    #[arg(long, global = true)]
    pub tau: Option<String>,
    /// Rewiring budget.
    #[arg(long, global = true)]
    pub k: Option<String>,
    /// uniform or invlog.
    #[arg(long, global = true)]
    pub discount: Option<String>,
    #[arg(long, global = true)]
    pub tol: Option<String>,
    /// Iteration cap, or `auto`.
    #[arg(long, global = true)]
    pub max_iter: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// heu, bsl1, bsl2, rnd or brute.
    #[arg(long, global = true)]
    pub algorithm: Option<String>,
    /// Worker threads, or `auto`.
    #[arg(long, global = true)]
    pub threads: Option<String>,
    /// Largest harmful-node count for dense checks.
    #[arg(long, global = true)]
    pub guard: Option<String>,
    #[arg(long, global = true)]
    pub out_dir: Option<String>,
    /// `false` writes zero step times for byte-identical reruns.
    #[arg(long, global = true)]
    pub record_time: Option<String>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let overrides = [
            ("d", &self.d),
            ("tau", &self.tau),
            ("k", &self.k),
            ("discount", &self.discount),
            ("tol", &self.tol),
            ("max_iter", &self.max_iter),
            ("seed", &self.seed),
            ("algorithm", &self.algorithm),
            ("threads", &self.threads),
            ("guard", &self.guard),
            ("out_dir", &self.out_dir),
            ("record_time", &self.record_time),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the top-d graph from relevance scores and labels.
    Build {
        #[arg(long)]
        relevance: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Graph dump path (default: <out-dir>/graph.csv).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a rewiring algorithm on a built graph.
    Optimize {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        relevance: PathBuf,
    },
    /// Cross-check segregation scores against independent oracles.
    Verify {
        #[arg(long)]
        graph: PathBuf,
        /// Relevance scores; enables the rewiring checks.
        #[arg(long)]
        relevance: Option<PathBuf>,
        /// Harmful nodes sampled for the Monte Carlo check.
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Walks per sampled node.
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
    /// Write a seeded synthetic instance as labels and relevance CSVs.
    Synth {
        #[arg(long)]
        n: usize,
        /// Share of scored candidates with the source's label; omit for uniform.
        #[arg(long)]
        homophily: Option<f64>,
        /// Scored candidates per node (default: 3d).
        #[arg(long)]
        candidates: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        harmful_fraction: f64,
    },
    /// Run k-rewiring on the vertex-cover gadget of an undirected graph.
    Gadget {
        /// CSV with header `u,v`; an empty `v` declares an isolated vertex.
        #[arg(long)]
        edges: PathBuf,
    },
}

/// A command failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: exit_code(&e), message: e.to_string() }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) => EXIT_USAGE,
        Error::NotConverged { .. } => EXIT_NOT_CONVERGED,
        Error::ColumnUnavailable { source, .. } => exit_code(source),
        Error::NodeWithFewerThanDCandidates(_)
        | Error::InvalidScore { .. }
        | Error::SelfRelevance(_)
        | Error::DuplicateRelevance(..)
        | Error::UnknownNode(_)
        | Error::DuplicateNode(_)
        | Error::InvalidLabel(_)
        | Error::ZeroIdealDcg(_)
        | Error::InvalidGraph(_)
        | Error::InvalidDiscount(_)
        | Error::UnreachableHarmfulComponent(_)
        | Error::SingularSystem
        | Error::Parse { .. }
        | Error::Csv(_) => EXIT_VALIDATION,
        _ => EXIT_OTHER,
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("SEGRA_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses `args`, runs the command and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = cli.config.resolve()?;
    if let Some(threads) = cfg.threads {
        // Fails only if a pool already exists, which is harmless here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match &cli.command {
        Command::Build { relevance, labels, output } => commands::build(&cfg, relevance, labels, output.as_deref()),
        Command::Optimize { graph, relevance } => commands::optimize(&cfg, graph, relevance),
        Command::Verify { graph, relevance, samples, trials } => {
            commands::verify(&cfg, graph, relevance.as_deref(), *samples, *trials)
        }
        Command::Gadget { edges } => commands::gadget(&cfg, edges),
        Command::Synth { n, homophily, candidates, harmful_fraction } => {
            commands::synth(&cfg, *n, *homophily, *candidates, *harmful_fraction)
        }
    }
}
