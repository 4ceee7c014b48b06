use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mlm_core::data::Split;
use mlm_core::report::{commands, ColorScale, RunConfig};

#[derive(Parser)]
#[command(name = "mlm", version, about = "Softmax-centroid misclassification likelihood analysis for MNIST")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Directory holding the four IDX files.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fraction of each split to use.
    #[arg(long, global = true)]
    subsample: Option<f64>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Accuracy,
    Likelihood,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the IDX files and print a summary.
    IngestCheck,
    /// Train the CNN and write model.ckpt and train_log.csv.
    Train {
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        train_seed: Option<u64>,
    },
    /// Write prediction records for one split.
    Predict {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
    },
    /// Fit per-level severities and write schedule.toml.
    Calibrate {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        subset_size: Option<usize>,
    },
    /// Predict every (family, level) slice of the perturbed test set.
    PerturbSweep {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    /// Class centroids and misclustered examples from training records.
    Cluster {
        #[arg(long)]
        records: PathBuf,
    },
    /// Distance and likelihood matrices of a record file.
    Mlm {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        centroids: PathBuf,
        /// Group perturbed records by level.
        #[arg(long)]
        by_level: bool,
    },
    /// Per-level likelihood matrices with their mean and spread.
    Stability {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        centroids: PathBuf,
    },
    /// Render a matrix CSV as an SVG heatmap.
    Render {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, value_enum, default_value = "likelihood")]
        scale: ScaleArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage end to end.
    Pipeline {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
    },
}

fn run(cli: Cli) -> mlm_core::Result<String> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(d) = cli.output_dir {
        cfg.output_dir = d;
    }
    if let Some(d) = cli.data_dir {
        cfg.data.dir = d;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(f) = cli.subsample {
        cfg.subsample = f;
    }
    match cli.command {
        Command::IngestCheck => commands::cmd_ingest_check(&cfg),
        Command::Train { epochs, learning_rate, batch_size, train_seed } => {
            cfg.train.epochs = epochs.unwrap_or(cfg.train.epochs);
            cfg.train.learning_rate = learning_rate.unwrap_or(cfg.train.learning_rate);
            cfg.train.batch_size = batch_size.unwrap_or(cfg.train.batch_size);
            cfg.train.seed = train_seed.unwrap_or(cfg.train.seed);
            cfg.validate()?;
            commands::cmd_train(&cfg)
        }
        Command::Predict { checkpoint, split } => {
            cfg.validate()?;
            let split = match split {
                SplitArg::Train => Split::Train,
                SplitArg::Test => Split::Test,
            };
            commands::cmd_predict(&cfg, checkpoint.as_deref(), split)
        }
        Command::Calibrate { checkpoint, subset_size } => {
            cfg.calibration.targets.subset_size = subset_size.unwrap_or(cfg.calibration.targets.subset_size);
            cfg.validate()?;
            commands::cmd_calibrate(&cfg, checkpoint.as_deref())
        }
        Command::PerturbSweep { checkpoint, schedule } => {
            cfg.validate()?;
            commands::cmd_perturb_sweep(&cfg, checkpoint.as_deref(), schedule.as_deref())
        }
        Command::Cluster { records } => commands::cmd_cluster(&cfg, &records),
        Command::Mlm { records, centroids, by_level } => commands::cmd_mlm(&cfg, &records, &centroids, by_level),
        Command::Stability { records, centroids } => commands::cmd_stability(&cfg, &records, &centroids),
        Command::Render { matrix, scale, out } => {
            let scale = match scale {
                ScaleArg::Accuracy => ColorScale::Accuracy,
                ScaleArg::Likelihood => ColorScale::Likelihood,
            };
            commands::cmd_render(&matrix, scale, &out)
        }
        Command::Pipeline { checkpoint, schedule, epochs } => {
            cfg.checkpoint = checkpoint.or(cfg.checkpoint);
            cfg.calibration.schedule = schedule.or(cfg.calibration.schedule);
            cfg.train.epochs = epochs.unwrap_or(cfg.train.epochs);
            let s = commands::cmd_pipeline(&cfg)?;
            Ok(format!(
                "{} predictions ({} perturbed) into {}; test accuracy {:.4}; manifest sha256 {}",
                s.predictions,
                s.perturbed_predictions,
                s.output_dir.display(),
                s.test_accuracy,
                s.manifest_sha256
            ))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).format_timestamp_secs().init();
    match run(cli) {
        Ok(summary) => {
            println!("{}", summary.trim_end());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
