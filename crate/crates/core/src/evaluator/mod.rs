//! Accuracy reporting over labelled test sets.
//!
//! Every trial lands in exactly one of three buckets: correct (accepted and
//! the best word matches the label), incorrect (accepted, wrong word) or no
//! decision (rejected by the threshold or unscorable).

mod manifest;
mod report;
mod synth;

use std::path::PathBuf;

use thiserror::Error;

use crate::features::{read_mfcc, FeatureError, ObservationSequence};
use crate::hmm::HmmModel;
use crate::recognizer::{recognize, RecognizeError};
use crate::registry::{ModelRegistry, RegistryError};
use crate::trainer::TrainError;

pub use manifest::{ManifestEntry, TestManifest};
pub use report::{format_percent, render_report, ReportFormat};
pub use synth::{
    synth_benchmark, synth_ground_truth, synth_word, SynthParams, DEFAULT_SEPARATION, DEFAULT_SYNTH_DIM,
    DEFAULT_SYNTH_SEED, DEFAULT_SYNTH_STATES, SYNTH_USER,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("manifest has no entries")]
    EmptyManifest,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Feature {
        path: PathBuf,
        #[source]
        source: FeatureError,
    },
    #[error("{path}: {source}")]
    Recognize {
        path: PathBuf,
        #[source]
        source: RecognizeError,
    },
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("training '{word}': {source}")]
    Train {
        word: String,
        #[source]
        source: TrainError,
    },
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Correct,
    Incorrect,
    NoDecision,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandRow {
    pub word: String,
    pub n_tests: usize,
    pub n_correct: usize,
}

impl CommandRow {
    pub fn recognition_probability(&self) -> f64 {
        ratio(self.n_correct, self.n_tests)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserRow {
    pub user: String,
    pub n_tests: usize,
    pub n_correct: usize,
}

impl UserRow {
    pub fn percentage(&self) -> f64 {
        100.0 * ratio(self.n_correct, self.n_tests)
    }
}

/// One row of the known/unknown user summary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SummaryRow {
    pub n: usize,
    pub correct: usize,
    pub incorrect: usize,
    pub no_decision: usize,
}

impl SummaryRow {
    fn add(&mut self, outcome: Outcome) {
        self.n += 1;
        match outcome {
            Outcome::Correct => self.correct += 1,
            Outcome::Incorrect => self.incorrect += 1,
            Outcome::NoDecision => self.no_decision += 1,
        }
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.correct, self.n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeRow {
    pub user: String,
    pub hours: f64,
    pub accuracy_percent: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvaluationReport {
    pub known: SummaryRow,
    pub unknown: SummaryRow,
    /// In order of first appearance.
    pub commands: Vec<CommandRow>,
    pub users: Vec<UserRow>,
    pub time_to_accuracy: Vec<TimeRow>,
}

impl EvaluationReport {
    pub fn total(&self) -> SummaryRow {
        SummaryRow {
            n: self.known.n + self.unknown.n,
            correct: self.known.correct + self.unknown.correct,
            incorrect: self.known.incorrect + self.unknown.incorrect,
            no_decision: self.known.no_decision + self.unknown.no_decision,
        }
    }

    pub fn accuracy(&self) -> f64 {
        self.total().accuracy()
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// A labelled utterance ready for scoring.
#[derive(Debug, Clone)]
pub struct Trial {
    pub sequence: ObservationSequence,
    pub word: String,
    pub user: String,
    pub known: bool,
    pub hours: Option<f64>,
}

pub fn classify(models: &[HmmModel], trial: &Trial, threshold: Option<f64>) -> Result<Outcome, RecognizeError> {
    let result = recognize(models, &trial.sequence, threshold)?;
    Ok(match result.word() {
        None => Outcome::NoDecision,
        Some(w) if w == trial.word => Outcome::Correct,
        Some(_) => Outcome::Incorrect,
    })
}

/// Folds per-trial outcomes into a report, preserving first-appearance order.
pub fn build_report<'a>(trials: impl IntoIterator<Item = (&'a Trial, Outcome)>) -> EvaluationReport {
    let mut report = EvaluationReport::default();
    let mut hours: Vec<(String, f64)> = Vec::new();
    for (trial, outcome) in trials {
        let correct = usize::from(outcome == Outcome::Correct);
        if trial.known {
            report.known.add(outcome);
        } else {
            report.unknown.add(outcome);
        }
        match report.commands.iter_mut().find(|r| r.word == trial.word) {
            Some(r) => {
                r.n_tests += 1;
                r.n_correct += correct;
            }
            None => report.commands.push(CommandRow { word: trial.word.clone(), n_tests: 1, n_correct: correct }),
        }
        match report.users.iter_mut().find(|r| r.user == trial.user) {
            Some(r) => {
                r.n_tests += 1;
                r.n_correct += correct;
            }
            None => report.users.push(UserRow { user: trial.user.clone(), n_tests: 1, n_correct: correct }),
        }
        if let Some(h) = trial.hours {
            if !hours.iter().any(|(u, _)| *u == trial.user) {
                hours.push((trial.user.clone(), h));
            }
        }
    }
    report.time_to_accuracy = hours
        .into_iter()
        .map(|(user, hours)| {
            let accuracy_percent = report.users.iter().find(|r| r.user == user).map_or(0.0, UserRow::percentage);
            TimeRow { user, hours, accuracy_percent }
        })
        .collect();
    report
}

pub fn evaluate_trials(
    models: &[HmmModel],
    trials: &[Trial],
    threshold: Option<f64>,
) -> Result<EvaluationReport, RecognizeError> {
    let outcomes = trials.iter().map(|t| classify(models, t, threshold)).collect::<Result<Vec<_>, _>>()?;
    Ok(build_report(trials.iter().zip(outcomes)))
}

/// Scores every manifest entry against the registry's models.
pub fn evaluate(manifest: &TestManifest, registry: &ModelRegistry, threshold: Option<f64>) -> Result<EvaluationReport> {
    if manifest.is_empty() {
        return Err(EvalError::EmptyManifest);
    }
    let models = registry.load_models()?;
    let mut trials = Vec::with_capacity(manifest.len());
    for e in &manifest.entries {
        let sequence = read_mfcc(&e.path).map_err(|source| EvalError::Feature { path: e.path.clone(), source })?;
        trials.push(Trial { sequence, word: e.word.clone(), user: e.user.clone(), known: e.known, hours: e.hours });
    }
    let mut outcomes = Vec::with_capacity(trials.len());
    for (t, e) in trials.iter().zip(&manifest.entries) {
        outcomes.push(
            classify(&models, t, threshold).map_err(|source| EvalError::Recognize { path: e.path.clone(), source })?,
        );
    }
    Ok(build_report(trials.iter().zip(outcomes)))
}
