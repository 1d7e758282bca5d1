//! Command-line surface for residual-rule classification, geometry
//! diagnostics, encoder training, response-surface sweeps, stability
//! verification, and synthetic data generation.

mod cmd;
mod fmt;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cmd::train::TrainOverrides;

#[derive(Parser)]
#[command(
    name = "srcgeo",
    about = "Fixed sparse-residual inference and geometry-shaped representation training",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Predict labels for test points against a labeled dictionary.
    Classify {
        /// Dictionary CSV (label,v1,...,vp with a header row).
        #[arg(long)]
        dictionary: PathBuf,
        /// Test CSV in the same layout.
        #[arg(long)]
        test: PathBuf,
        /// Pursuit budget.
        #[arg(long, default_value_t = 30)]
        sparsity: usize,
        /// Predictions CSV: index, predicted, margin, per-class residuals.
        #[arg(long)]
        output: PathBuf,
    },
    /// Per-class effective rank, worst-case cohesion, pairwise angles.
    Diagnose {
        #[arg(long)]
        embeddings: PathBuf,
        /// Diagnostic subspace dimension (default: smallest centered rank).
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train an encoder on raw features and write a checkpoint.
    Train {
        /// Raw feature CSV (label,v1,...,vD).
        #[arg(long)]
        data: PathBuf,
        /// JSON training config; flags below override individual fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// "geometry" (default) or "ce" for the reference encoder.
        #[arg(long, default_value = "geometry")]
        objective: String,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        steps_per_epoch: Option<usize>,
        #[arg(long)]
        per_class: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        embed_dim: Option<usize>,
        #[arg(long)]
        inner_mu: Option<f64>,
        #[arg(long)]
        inner_lambda: Option<f64>,
        /// Checkpoint JSON output.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Per-step loss trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Grid sweep over the inner (mu, lambda) weights and seeds.
    Sweep {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Comma-separated mu grid, e.g. 0.1,1,10,100.
        #[arg(long, value_delimiter = ',')]
        mu: Vec<f64>,
        /// Comma-separated lambda grid, e.g. 0.001,0.01,0.1.
        #[arg(long, value_delimiter = ',')]
        lambda: Vec<f64>,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 30)]
        sparsity: usize,
        /// Diagnostic subspace dimension (default: smallest centered rank).
        #[arg(long)]
        dim: Option<usize>,
        /// Base training config JSON shared by all cells.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Aggregated CSV, one row per cell per seed.
        #[arg(long)]
        output: PathBuf,
    },
    /// Monte-Carlo verification of the stability results.
    Verify {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON report path (stdout when omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Synthetic union-of-subspaces train/test CSV pair.
    Generate {
        #[arg(long, default_value_t = 16)]
        ambient_dim: usize,
        #[arg(long, default_value_t = 3)]
        classes: usize,
        #[arg(long, default_value_t = 2)]
        span_dim: usize,
        /// Pairwise smallest principal angle between class spans, radians.
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
        angle: f64,
        #[arg(long, default_value_t = 20)]
        train_per_class: usize,
        #[arg(long, default_value_t = 10)]
        test_per_class: usize,
        /// Exact noise norm added to every sample.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output prefix; writes <prefix>_train.csv and <prefix>_test.csv.
        #[arg(long)]
        output_prefix: PathBuf,
    },
}

fn dispatch(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Classify {
            dictionary,
            test,
            sparsity,
            output,
        } => cmd::classify::run(&dictionary, &test, sparsity, &output),
        Command::Diagnose {
            embeddings,
            dim,
            output,
        } => cmd::diagnose::run(&embeddings, dim, &output),
        Command::Train {
            data,
            config,
            objective,
            epochs,
            steps_per_epoch,
            per_class,
            learning_rate,
            seed,
            embed_dim,
            inner_mu,
            inner_lambda,
            checkpoint,
            trace,
        } => {
            let overrides = TrainOverrides {
                epochs,
                steps_per_epoch,
                per_class_batch: per_class,
                learning_rate,
                seed,
                embed_dim,
                inner_mu,
                inner_lambda,
            };
            cmd::train::run(
                &data,
                config.as_deref(),
                &overrides,
                &objective,
                &checkpoint,
                trace.as_deref(),
            )
        }
        Command::Sweep {
            train,
            test,
            mu,
            lambda,
            seeds,
            sparsity,
            dim,
            config,
            output,
        } => {
            let base = cmd::train::load_config(config.as_deref(), &TrainOverrides::default())?;
            cmd::sweep::run(
                &train, &test, &mu, &lambda, &seeds, sparsity, dim, &base, &output,
            )
        }
        Command::Verify {
            trials,
            seed,
            output,
        } => cmd::verify::run(trials, seed, output.as_deref()),
        Command::Generate {
            ambient_dim,
            classes,
            span_dim,
            angle,
            train_per_class,
            test_per_class,
            noise,
            seed,
            output_prefix,
        } => cmd::generate::run(
            ambient_dim,
            classes,
            span_dim,
            angle,
            train_per_class,
            test_per_class,
            noise,
            seed,
            &output_prefix,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
