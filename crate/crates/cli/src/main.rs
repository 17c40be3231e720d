//! `upcall`: synthesize, featurize, detect, train, classify, evaluate and render.
//!
//! Exit status: 0 success, 1 usage error, 2 data error, 3 internal error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use upcall_core::FeatureMode;

#[derive(Parser, Debug)]
#[command(name = "upcall", version, about = "Right whale up-call detector")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Pipeline settings file (`key=value` lines); flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for training, or for generation under `synth`.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Feature set: diagonal5, mask15 or combined20.
    #[arg(long, global = true, value_name = "MODE")]
    pub features: Option<FeatureMode>,
    /// Worker threads for per-clip work (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a labeled synthetic dataset (WAV files plus manifest.csv).
    Synth {
        /// Synthetic dataset spec (`key=value` lines); defaults when omitted.
        #[arg(long, value_name = "PATH")]
        spec: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Write per-clip feature vectors as CSV.
    Featurize {
        #[arg(long, value_name = "PATH")]
        manifest: PathBuf,
        /// Output file; standard output when omitted.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Write the measured regions of every clip as CSV.
    Detect {
        #[command(flatten)]
        input: Inputs,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Train a model on a labeled manifest.
    Train {
        #[arg(long, value_name = "PATH")]
        manifest: PathBuf,
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        /// Per-epoch loss CSV; defaults to `<model>.loss.csv`.
        #[arg(long, value_name = "PATH")]
        loss: Option<PathBuf>,
        /// Decision threshold stored in the model for `classify`.
        #[arg(long, value_name = "SCORE")]
        threshold: Option<f64>,
    },
    /// Score clips with a trained model.
    Classify {
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        #[command(flatten)]
        input: Inputs,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Evaluate one or more models on a labeled manifest.
    Eval {
        #[arg(long = "model", value_name = "PATH", required = true)]
        models: Vec<PathBuf>,
        #[arg(long, value_name = "PATH")]
        manifest: PathBuf,
        /// Report directory (scores, ROC curves, summary).
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Render one pipeline stage of a clip as a PGM image.
    Render {
        audio: PathBuf,
        /// raw, preprocessed, binary, regions or roi.
        #[arg(long)]
        stage: String,
        /// Clip start within the file, seconds.
        #[arg(long, default_value_t = 0.0)]
        offset: f64,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
}

/// Audio given either as files (every 2 s slice) or through a manifest.
#[derive(Args, Debug)]
pub struct Inputs {
    #[arg(long, value_name = "PATH", conflicts_with = "files")]
    pub manifest: Option<PathBuf>,
    #[arg(value_name = "AUDIO", required_unless_present = "manifest")]
    pub files: Vec<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = std::panic::catch_unwind(|| commands::run(&cli));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        // the panic message is already on stderr
        Err(_) => ExitCode::from(3),
    }
}
