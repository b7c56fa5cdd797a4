//! `conation`: extract features, train word models, recognise utterances.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conation_core::evaluator::{
    ReportFormat, DEFAULT_SEPARATION, DEFAULT_SYNTH_DIM, DEFAULT_SYNTH_SEED, DEFAULT_SYNTH_STATES,
};
use conation_core::features::{DEFAULT_DIM, NUM_MEL_FILTERS};
use conation_core::registry::DEFAULT_PROFILE;
use conation_core::trainer::DEFAULT_MAX_ITERATIONS;

#[derive(Debug, Parser)]
#[command(name = "conation", version, about = "Isolated-word command recognizer built on continuous-density HMMs")]
pub struct Cli {
    /// Profile whose model registry is used (under $CONATION_HOME, default ./profiles).
    #[arg(long, global = true, default_value = DEFAULT_PROFILE)]
    pub profile: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert 16 kHz mono PCM WAV files into .mfcc feature files.
    ExtractFeature {
        #[arg(required = true)]
        wavs: Vec<PathBuf>,
        /// Cepstral coefficients per frame.
        #[arg(long, default_value_t = DEFAULT_DIM, value_parser = cepstral_dim)]
        dim: usize,
        /// Write outputs here instead of beside each input.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Train one word model: `train N D files...`.
    Train {
        /// Number of states.
        #[arg(value_parser = positive)]
        n_states: usize,
        /// Feature vector size.
        #[arg(value_parser = positive)]
        dim: usize,
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Register the model under this word instead of printing XML.
        #[arg(long)]
        word: Option<String>,
        #[command(flatten)]
        training: TrainingFlags,
    },
    /// Recognise each .mfcc file against the profile's models.
    #[command(alias = "recognize")]
    Recognise {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Minimum log-likelihood per frame (nats) to accept a word.
        #[arg(long, allow_negative_numbers = true)]
        threshold: Option<f64>,
        /// Feed results through the command interpreter and print action events.
        #[arg(long)]
        interpret: bool,
        /// word<TAB>action file replacing the default command vocabulary.
        #[arg(long, requires = "interpret")]
        dispatch: Option<PathBuf>,
        /// Treat a missing or empty registry as "reject everything".
        #[arg(long)]
        allow_empty: bool,
    },
    /// Score a labelled test manifest (CSV: path,word,user,known[,hours]).
    Eval {
        manifest: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        threshold: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
    },
    /// Closed-loop benchmark on synthetic data from known ground-truth models.
    Synth {
        #[arg(long, default_value_t = 10, value_parser = at_least_two)]
        words: usize,
        #[arg(long = "train", default_value_t = 20, value_parser = positive)]
        n_train: usize,
        #[arg(long = "test", default_value_t = 20, value_parser = positive)]
        n_test: usize,
        #[arg(long, default_value_t = DEFAULT_SYNTH_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_SYNTH_STATES, value_parser = positive)]
        states: usize,
        #[arg(long, default_value_t = DEFAULT_SYNTH_DIM, value_parser = positive)]
        dim: usize,
        /// Minimum distance between state means, in standard deviations.
        #[arg(long, default_value_t = DEFAULT_SEPARATION)]
        separation: f64,
        /// Give every word the same ground truth (chance-level control).
        #[arg(long)]
        identical_models: bool,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
        #[command(flatten)]
        training: TrainingFlags,
    },
    /// Inspect the profile's model registry.
    Registry {
        #[command(subcommand)]
        action: RegistryCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum RegistryCommand {
    /// Print `word<TAB>path` for every registered model.
    List,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct TrainingFlags {
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS, value_parser = positive)]
    pub max_iterations: usize,
    /// Probability assigned to unseen transitions before renormalising.
    #[arg(long, default_value_t = 0.0)]
    pub transition_floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Markdown,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Markdown => ReportFormat::Markdown,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

fn bounded(s: &str, lo: usize, hi: usize) -> Result<usize, String> {
    let v = s.parse::<usize>().map_err(|e| e.to_string())?;
    if v < lo {
        Err(format!("must be at least {lo}"))
    } else if v > hi {
        Err(format!("must be at most {hi}"))
    } else {
        Ok(v)
    }
}

fn positive(s: &str) -> Result<usize, String> {
    bounded(s, 1, usize::MAX)
}

fn at_least_two(s: &str) -> Result<usize, String> {
    bounded(s, 2, usize::MAX)
}

fn cepstral_dim(s: &str) -> Result<usize, String> {
    bounded(s, 1, NUM_MEL_FILTERS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {}", commands::describe(&e));
            ExitCode::FAILURE
        }
    }
}
