use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use voxboost::commands::{self, Context};
use voxboost::{CliResult, RunConfig};
use voxboost_core::synth::Fold;

/// Volumetric feature encoder + gradient boosting pipeline on synthetic cohorts.
#[derive(Parser, Debug)]
#[command(name = "voxboost", version)]
struct Cli {
    /// Config file with `section.key = value` lines (defaults: `print-config`).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Work directory holding every artifact; overrides `paths.workdir`.
    #[arg(long, global = true, env = "VOXBOOST_WORKDIR")]
    workdir: Option<PathBuf>,
    /// Worker threads for minibatches and grid configurations.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FoldArg {
    Train,
    Validation,
    Test,
}

impl From<FoldArg> for Fold {
    fn from(f: FoldArg) -> Self {
        match f {
            FoldArg::Train => Fold::Train,
            FoldArg::Validation => Fold::Validation,
            FoldArg::Test => Fold::Test,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the synthetic cohort: volumes, manifest and sealed test answers.
    Synth,
    /// Train the encoder on the cohort's derived covariates.
    TrainEncoder,
    /// Extract encoder features for every subject.
    Extract {
        /// Feature map edge (6 or 3); defaults to `encoder.feature_scale`.
        #[arg(long)]
        scale: Option<usize>,
    },
    /// Two-stage grid search over GBM hyperparameters.
    Gridsearch {
        #[arg(long)]
        scale: Option<usize>,
    },
    /// Fit the GBM with the grid winner on the train fold.
    TrainGbm {
        #[arg(long)]
        scale: Option<usize>,
        /// Use the `gbm.*` config values instead of the grid winner.
        #[arg(long)]
        from_config: bool,
    },
    /// Write `subject_id,prediction` for one fold.
    Predict {
        #[arg(long, value_enum)]
        fold: FoldArg,
        #[arg(long)]
        scale: Option<usize>,
    },
    /// Print the MSE between a predictions file and an answers file.
    Score { predictions: PathBuf, answers: PathBuf },
    /// Derived-covariate GBM vs CNN+GBM; writes the experiment report.
    Ablation {
        /// Also run the GBM on the other feature scale.
        #[arg(long)]
        compare_scales: bool,
    },
    /// Run every stage in order.
    Pipeline {
        #[arg(long)]
        compare_scales: bool,
    },
    /// Print the effective configuration.
    PrintConfig,
}

fn run(cli: Cli) -> CliResult<()> {
    if let Command::Score { predictions, answers } = &cli.command {
        commands::cmd_score(predictions, answers)?;
        return Ok(());
    }
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let ctx = Context::new(config, cli.workdir, cli.workers);
    match cli.command {
        Command::Synth => commands::cmd_synth(&ctx),
        Command::TrainEncoder => commands::cmd_train_encoder(&ctx),
        Command::Extract { scale } => commands::cmd_extract(&ctx, scale),
        Command::Gridsearch { scale } => commands::cmd_gridsearch(&ctx, scale),
        Command::TrainGbm { scale, from_config } => commands::cmd_train_gbm(&ctx, scale, from_config),
        Command::Predict { fold, scale } => commands::cmd_predict(&ctx, fold.into(), scale).map(|_| ()),
        Command::Score { .. } => unreachable!(),
        Command::Ablation { compare_scales } => commands::cmd_ablation(&ctx, compare_scales).map(|_| ()),
        Command::Pipeline { compare_scales } => commands::cmd_pipeline(&ctx, compare_scales).map(|_| ()),
        Command::PrintConfig => {
            commands::cmd_print_config(&ctx);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
