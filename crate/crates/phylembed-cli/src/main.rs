//! Batch front end for the phylembed pipeline.
//!
//! Subcommands mirror the pipeline stages: synth, build-graph, embed,
//! represent, train-eval, sweep, compare-omics. Configuration comes from
//! one JSON file (--config) with flag overrides; every command owns its
//! output directory exclusively and leaves a replayable manifest.

mod cache;
mod commands;
mod config;
mod manifest;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::{Overrides, PipelineConfig};
use manifest::{OutputLock, RunContext};

#[derive(Parser)]
#[command(name = "phylembed", version, about = "Phylogenetic-graph patient representations for microbiome multi-omics")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted-signal synthetic dataset (abundance, taxonomy,
    /// labels TSVs).
    Synth,
    /// Build the gene-species-genus graph and export its node and edge
    /// tables.
    BuildGraph,
    /// Compute node embeddings (LPE, RWPE or Node2Vec) for the graph.
    Embed,
    /// Aggregate embeddings into per-patient representation vectors.
    Represent,
    /// Hyperparameter search plus repeated evaluation; writes the report.
    TrainEval,
    /// Evaluate a grid of top-k gene counts and write the AUC curve.
    Sweep,
    /// Evaluate MGX-only against MGX+MTX with a shared seed schedule.
    CompareOmics,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = PipelineConfig::load(&cli.overrides)?;
    if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global().ok();
    }
    let _lock = OutputLock::acquire(&cfg.out_dir)?;
    let ctx = RunContext::new(cfg);
    match cli.command {
        Command::Synth => commands::cmd_synth(ctx),
        Command::BuildGraph => commands::cmd_build_graph(ctx),
        Command::Embed => commands::cmd_embed(ctx),
        Command::Represent => commands::cmd_represent(ctx),
        Command::TrainEval => commands::cmd_train_eval(ctx),
        Command::Sweep => commands::cmd_sweep(ctx),
        Command::CompareOmics => commands::cmd_compare_omics(ctx),
    }
}
