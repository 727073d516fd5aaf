//! `pun`: dataset generation, predictor fitting, view selection and
//! evaluation from the command line.
//!
//! Exit codes: 0 success, 2 usage or data error, 3 external predictor error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{BaselineOpts, EvaluateOpts, GenDatasetOpts, GenMeshesOpts, RenderUmapOpts, RunAvsOpts, TrainKnnOpts};

#[derive(Debug, Parser)]
#[command(name = "pun", version, about = "Uncertainty-map guided active view selection")]
struct Cli {
    /// TOML file with default flag values (keys use underscores).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the built-in procedural meshes as OBJ files.
    GenMeshes(GenMeshesOpts),
    /// Render input views and ground-truth uncertainty maps for a mesh set.
    GenDataset(GenDatasetOpts),
    /// Fit the k-nearest-neighbour predictor on a dataset.
    TrainKnn(TrainKnnOpts),
    /// Run one selection episode and write its trajectory.
    RunAvs(RunAvsOpts),
    /// Select views with an uncertainty-free baseline.
    Baseline(BaselineOpts),
    /// Score selections against ground truth.
    Evaluate(EvaluateOpts),
    /// Draw an uncertainty map file as a polar image.
    RenderUmap(RenderUmapOpts),
}

const EXIT_DATA: u8 = 2;
const EXIT_PEER: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = cli.config.as_deref();
    let result = match &cli.command {
        Command::GenMeshes(o) => commands::gen_meshes(o, cfg),
        Command::GenDataset(o) => commands::gen_dataset(o, cfg),
        Command::TrainKnn(o) => commands::train_knn(o, cfg),
        Command::RunAvs(o) => commands::run_avs(o, cfg),
        Command::Baseline(o) => commands::baseline(o, cfg),
        Command::Evaluate(o) => commands::evaluate(o, cfg),
        Command::RenderUmap(o) => commands::render_umap(o, cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_peer_failure(&e) { EXIT_PEER } else { EXIT_DATA })
        }
    }
}

fn is_peer_failure(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<pun_core::Error>().is_some_and(pun_core::Error::is_peer)
            || c.downcast_ref::<pun_core::avs::EpisodeError>().is_some_and(|ep| ep.source.is_peer())
    })
}
