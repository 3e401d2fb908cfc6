//! `vam`: one entry point for data generation, training, evaluation, the
//! ablation table, the seed gap study, and the gradient-check suite.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "vam",
    version,
    about = "Instruction-following gridworld agent: data, training, evaluation, and studies",
    after_help = "Exit codes: 2 config, 3 data, 4 training, 5 evaluation.\n\
                  Worker count follows RAYON_NUM_THREADS (default: all cores)."
)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Generate the five episode splits into a dataset directory
    GenData {
        /// JSON config file; defaults apply when omitted
        #[arg(long)]
        config: Option<PathBuf>,

        /// Dataset output directory
        #[arg(long)]
        out: PathBuf,

        /// Dotted-key overrides, e.g. model.hidden=768 or seed=3
        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },

    /// Train the configured model on the train split
    Train {
        #[arg(long)]
        config: Option<PathBuf>,

        /// Dataset directory produced by gen-data
        #[arg(long)]
        data: PathBuf,

        /// Run directory for checkpoints and reports
        #[arg(long)]
        out: PathBuf,

        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },

    /// Evaluate a checkpoint on one split with closed-loop rollouts
    Eval {
        #[arg(long)]
        config: Option<PathBuf>,

        #[arg(long)]
        data: PathBuf,

        /// Checkpoint stem (the train run writes <out>/model)
        #[arg(long)]
        checkpoint: PathBuf,

        /// Split name: train, valid_seen, valid_unseen, test_seen, test_unseen
        #[arg(long, default_value = "valid_seen")]
        split: String,

        #[arg(long)]
        out: PathBuf,

        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },

    /// Train and evaluate the four cumulative ablation rows
    Ablate {
        #[arg(long)]
        config: Option<PathBuf>,

        #[arg(long)]
        data: PathBuf,

        #[arg(long)]
        out: PathBuf,

        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },

    /// Train K seeds and report the validation/test selection gap
    GapStudy {
        #[arg(long)]
        config: Option<PathBuf>,

        #[arg(long)]
        data: PathBuf,

        /// Number of seeds (defaults to the config's gap_seeds)
        #[arg(long)]
        seeds: Option<usize>,

        #[arg(long)]
        out: PathBuf,

        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },

    /// Run the finite-difference gradient suite; nonzero exit on failure
    Gradcheck {
        #[arg(long, default_value = "7")]
        seed: u64,

        /// Random instances per primitive
        #[arg(long, default_value = "20")]
        instances: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Commands::GenData { config, out, overrides } => {
            vam_cli::run_gen_data(config.as_deref(), overrides, out)
        }
        Commands::Train { config, data, out, overrides } => {
            vam_cli::run_train(config.as_deref(), overrides, data, out)
        }
        Commands::Eval { config, data, checkpoint, split, out, overrides } => {
            vam_cli::run_eval(config.as_deref(), overrides, data, checkpoint, split, out)
        }
        Commands::Ablate { config, data, out, overrides } => {
            vam_cli::run_ablate(config.as_deref(), overrides, data, out)
        }
        Commands::GapStudy { config, data, seeds, out, overrides } => {
            vam_cli::run_gap_study(config.as_deref(), overrides, data, *seeds, out)
        }
        Commands::Gradcheck { seed, instances } => vam_cli::run_gradcheck(*seed, *instances),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(u8::try_from(err.code).unwrap_or(1))
        }
    }
}
