//! Command-line surface: one subcommand per pipeline stage, all parameters
//! resolved into a [`RunConfig`] that is recorded next to every output.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use config::{ConfigArgs, MethodArg, RunConfig};

use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NO_RESULT: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    /// The command ran but every item failed (e.g. no pathway found).
    NoResult,
}

#[derive(Debug, Parser)]
#[command(name = "dfp", version, about = "Diffusion fingerprints over corpus-derived domain graphs")]
pub struct Cli {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    Kfold,
    Split,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the domain graph from documents (.jsonl) or an association matrix (.tsv).
    BuildGraph {
        input: PathBuf,
        /// Also write the aggregated association matrix here.
        #[arg(long)]
        assoc_out: Option<PathBuf>,
        /// Largest strongly connected component measured exactly; larger ones are sampled.
        #[arg(long, default_value_t = 2000)]
        diameter_exact: usize,
    },
    /// Fingerprint every document (or seed set) by diffusion over the graph.
    Diffuse {
        graph: PathBuf,
        input: PathBuf,
        /// Input holds seed node sets instead of documents.
        #[arg(long)]
        seeds: bool,
        /// Diffuse over the reversed graph.
        #[arg(long)]
        reverse: bool,
        /// Emit bag-of-words vectors over the graph vocabulary instead.
        #[arg(long)]
        bow: bool,
        /// With --bow, keep raw counts instead of frequencies.
        #[arg(long, requires = "bow")]
        raw_counts: bool,
        /// Omit values below this threshold from the sparse rows.
        #[arg(long, default_value_t = 0.0)]
        emit_threshold: f64,
    },
    /// Infer pathways between sources and sinks and score them against their annotation.
    InferPathways {
        graph: PathBuf,
        pathways: PathBuf,
        /// Cap on candidate nodes scanned by the selection.
        #[arg(long)]
        n_max: Option<usize>,
        /// Rank by the combined fingerprint without global PageRank boosting.
        #[arg(long)]
        no_boost: bool,
    },
    /// Project fingerprints onto their most central (or random) coordinates.
    Reduce {
        fingerprints: PathBuf,
        /// Centrality is the global PageRank of this graph.
        #[arg(long, group = "centrality_source")]
        graph: Option<PathBuf>,
        /// Centrality read from an `index<TAB>[token<TAB>]value` file.
        #[arg(long, group = "centrality_source")]
        centrality: Option<PathBuf>,
        /// Centrality is the mean of the input rows.
        #[arg(long, group = "centrality_source")]
        centrality_mean: bool,
        /// Write rank correlations of centrality with per-coordinate variance and mean.
        #[arg(long)]
        variance_report: Option<PathBuf>,
    },
    /// Nearest-centroid classification accuracy of a feature file.
    Classify {
        features: PathBuf,
        #[arg(long, value_enum, default_value = "kfold")]
        protocol: ProtocolArg,
        /// Held-out feature file for the split protocol.
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 10)]
        shuffles: usize,
    },
    /// Strong connectivity of the domain graph over a grid of densities.
    DensityScan {
        input: PathBuf,
        /// Ascending comma-separated densities.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        /// Call a density critical once the giant component reaches this fraction.
        #[arg(long)]
        giant_cutoff: Option<f64>,
    },
}

fn configure_threads(cfg: &RunConfig) -> Result<()> {
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<Outcome> {
    use commands::*;
    match &cli.command {
        Command::BuildGraph { input, assoc_out, diameter_exact } => {
            let cfg = RunConfig::resolve(&cli.config, &[input])?;
            configure_threads(&cfg)?;
            build_graph(
                BuildGraphArgs { input, assoc_out: assoc_out.as_deref(), diameter_exact: *diameter_exact },
                &cfg,
            )
        }
        Command::Diffuse { graph, input, seeds, reverse, bow, raw_counts, emit_threshold } => {
            let cfg = RunConfig::resolve(&cli.config, &[graph, input])?;
            configure_threads(&cfg)?;
            diffuse(
                DiffuseArgs {
                    graph,
                    input,
                    seeds: *seeds,
                    reverse: *reverse,
                    bow: *bow,
                    raw_counts: *raw_counts,
                    emit_threshold: *emit_threshold,
                },
                &cfg,
            )
        }
        Command::InferPathways { graph, pathways, n_max, no_boost } => {
            let cfg = RunConfig::resolve(&cli.config, &[graph, pathways])?;
            configure_threads(&cfg)?;
            infer_pathways(InferArgs { graph, pathways, n_max: *n_max, no_boost: *no_boost }, &cfg)
        }
        Command::Reduce { fingerprints, graph, centrality, centrality_mean, variance_report } => {
            let source = match (graph, centrality, centrality_mean) {
                (Some(g), None, false) => CentralitySource::Graph(g),
                (None, Some(c), false) => CentralitySource::File(c),
                (None, None, true) => CentralitySource::Mean,
                _ => return Err(Error::Config("one of --graph, --centrality or --centrality-mean is required".into())),
            };
            let mut inputs = vec![fingerprints.as_path()];
            inputs.extend(graph.as_deref().or(centrality.as_deref()));
            let cfg = RunConfig::resolve(&cli.config, &inputs)?;
            configure_threads(&cfg)?;
            reduce(ReduceArgs { fingerprints, centrality: source, variance_report: variance_report.as_deref() }, &cfg)
        }
        Command::Classify { features, protocol, test, folds, shuffles } => {
            let mut inputs = vec![features.as_path()];
            inputs.extend(test.as_deref());
            let cfg = RunConfig::resolve(&cli.config, &inputs)?;
            configure_threads(&cfg)?;
            let protocol = match protocol {
                ProtocolArg::Kfold => Protocol::KFold { folds: *folds, shuffles: *shuffles },
                ProtocolArg::Split => Protocol::Split {
                    test: test.as_deref().ok_or_else(|| Error::Config("--test is required for the split protocol".into()))?,
                },
            };
            classify(features, protocol, &cfg)
        }
        Command::DensityScan { input, grid, giant_cutoff } => {
            let cfg = RunConfig::resolve(&cli.config, &[input])?;
            configure_threads(&cfg)?;
            density_scan(input, grid, *giant_cutoff, &cfg)
        }
    }
}

/// Runs the parsed command and maps the result to a process exit code.
pub fn main_with(cli: Cli) -> i32 {
    match run(cli) {
        Ok(Outcome::Done) => EXIT_OK,
        Ok(Outcome::NoResult) => {
            eprintln!("error: no result");
            EXIT_NO_RESULT
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_INPUT
            }
        }
    }
}
