//! Operator entry point: train, sample, evaluate, validate, fit, generate.
//!
//! Exit codes: 0 success, 1 input/validation failure, 2 relation-graph
//! constraint violation, 3 numerical failure during training or sampling.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "hhoi",
    version,
    about = "Compositional score-based generation of multi-human-plus-object scenes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct CommonArgs {
    /// TOML run-config file (unknown keys are rejected).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Named profile; `toy` shrinks schedules for desk-scale runs.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Seed (falls back to the config file, then $HHOI_SEED, then 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train the 126D↔10D body-pose codec.
    TrainCodec {
        #[command(flatten)]
        common: CommonArgs,
        /// JSONL dataset; human poses are taken from every record.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Draw this many synthetic training poses instead of a dataset.
        #[arg(long)]
        synthetic_poses: Option<usize>,
        /// Output checkpoint path (a .loss.csv lands next to it).
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one relation score network.
    TrainScore {
        #[command(flatten)]
        common: CommonArgs,
        /// `hoi` or `hhi`.
        #[arg(long)]
        mode: String,
        #[arg(long)]
        dataset: PathBuf,
        /// Trained codec checkpoint (poses are embedded through it).
        #[arg(long)]
        codec: PathBuf,
        /// Optional paraphrase table (JSON) for prompt augmentation.
        #[arg(long)]
        prompts: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample one or more scenes from a request file.
    Sample {
        #[command(flatten)]
        common: CommonArgs,
        /// Scene request JSON.
        #[arg(long)]
        request: PathBuf,
        #[arg(long)]
        hoi: PathBuf,
        #[arg(long)]
        hhi: Option<PathBuf>,
        #[arg(long)]
        codec: PathBuf,
        /// Optional fitted radii JSON (24 numbers).
        #[arg(long)]
        radii: Option<PathBuf>,
        /// Optional paraphrase/embedding table for conditioning.
        #[arg(long)]
        prompts: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Run this many independent seeded scenes in parallel.
        #[arg(long, default_value_t = 1)]
        batch: usize,
    },
    /// Compare generated scenes against a reference dataset.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory of scene JSON files.
        #[arg(long)]
        scenes: PathBuf,
        /// Reference JSONL dataset.
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        codec: PathBuf,
        /// Object mesh override (defaults to the reference's mesh).
        #[arg(long)]
        object: Option<PathBuf>,
        /// `hand`, `hip`, `auto` or `none`.
        #[arg(long, default_value = "auto")]
        contact: String,
        /// `vector` (3-D differences) or `norm` (scalar distances).
        #[arg(long, default_value = "vector")]
        variant: String,
        /// Target human count for the success rate (default: first scene).
        #[arg(long)]
        humans: Option<usize>,
        /// Report JSON output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a toy dataset (JSONL + object mesh + prompt table).
    GenToy {
        #[command(flatten)]
        common: CommonArgs,
        /// `bench`, `board` or `carry`.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        frames: usize,
        /// Placement/pose noise level.
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a JSONL dataset, printing per-record diagnostics.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Fit per-capsule radii to reference surface clouds.
    FitRadii {
        #[command(flatten)]
        common: CommonArgs,
        /// XYZ point cloud files, one per pose.
        #[arg(long, required = true)]
        cloud: Vec<PathBuf>,
        /// Dataset whose first humans provide the paired poses
        /// (default: T-pose for every cloud).
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[arg(long, default_value_t = 5000)]
        samples: usize,
        /// Output radii JSON.
        #[arg(long)]
        out: PathBuf,
    },
}

/// Error carrying its process exit code.
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<hhoi::Error> for CliError {
    fn from(e: hhoi::Error) -> Self {
        let code = match &e {
            hhoi::Error::Graph(_) => 2,
            hhoi::Error::NonFiniteTraining { .. }
            | hhoi::Error::NonFiniteSample { .. }
            | hhoi::Error::NonFiniteIntegration { .. } => 3,
            _ => 1,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<String> for CliError {
    fn from(message: String) -> Self {
        CliError { code: 1, message }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError {
            code: 1,
            message: e.to_string(),
        }
    }
}

pub type CliResult = Result<(), CliError>;

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::TrainCodec {
            common,
            dataset,
            synthetic_poses,
            out,
        } => commands::train_codec(&common, dataset.as_deref(), synthetic_poses, &out),
        Command::TrainScore {
            common,
            mode,
            dataset,
            codec,
            prompts,
            out,
        } => commands::train_score(&common, &mode, &dataset, &codec, prompts.as_deref(), &out),
        Command::Sample {
            common,
            request,
            hoi,
            hhi,
            codec,
            radii,
            prompts,
            out,
            batch,
        } => commands::sample(
            &common,
            &request,
            &hoi,
            hhi.as_deref(),
            &codec,
            radii.as_deref(),
            prompts.as_deref(),
            &out,
            batch,
        ),
        Command::Evaluate {
            common,
            scenes,
            reference,
            codec,
            object,
            contact,
            variant,
            humans,
            out,
        } => commands::evaluate(
            &common,
            &scenes,
            &reference,
            &codec,
            object.as_deref(),
            &contact,
            &variant,
            humans,
            out.as_deref(),
        ),
        Command::GenToy {
            common,
            scenario,
            frames,
            noise,
            out,
        } => commands::gen_toy(&common, &scenario, frames, noise, &out),
        Command::Validate { common, dataset } => commands::validate(&common, &dataset),
        Command::FitRadii {
            common,
            cloud,
            dataset,
            steps,
            samples,
            out,
        } => commands::fit_radii(&common, &cloud, dataset.as_deref(), steps, samples, &out),
    };
    if let Err(e) = result {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}
