//! Scoring an utterance against every registered word model, and turning
//! accepted words into command events.

mod dispatch;
mod interpreter;

use serde::Serialize;
use thiserror::Error;

use crate::features::ObservationSequence;
use crate::hmm::{forward_log_likelihood, HmmError, HmmModel};

pub use dispatch::{DispatchError, DispatchMap, COMMAND_VOCABULARY, UNMAPPED_ACTION};
pub use interpreter::{interpret, ActionEvent, ControlWord, InterpreterState, Session, SubMode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecognizeError {
    #[error("model '{word}' has dimension {expected}, observation sequence has {found}")]
    DimensionMismatch { word: String, expected: usize, found: usize },
    #[error("observation sequence is empty")]
    EmptySequence,
    #[error(transparent)]
    Hmm(#[from] HmmError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordScore {
    pub word: String,
    /// `log P(O | model) / T`, nats per frame.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecognitionResult {
    /// One entry per model, in registry order.
    pub scores: Vec<WordScore>,
    pub best_word: Option<String>,
    pub best_score: Option<f64>,
    pub accepted: bool,
    pub threshold: Option<f64>,
    /// Models left unscored because their dimension differs (permissive mode only).
    pub skipped: Vec<String>,
}

impl RecognitionResult {
    /// The recognized word, if accepted.
    pub fn word(&self) -> Option<&str> {
        if self.accepted {
            self.best_word.as_deref()
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RecognizeOptions {
    /// Minimum per-frame log-likelihood for acceptance; `None` accepts the best model.
    pub threshold: Option<f64>,
    /// Score mismatched models as `-inf` instead of failing.
    pub permissive: bool,
}

impl RecognizeOptions {
    pub fn with_threshold(threshold: Option<f64>) -> Self {
        Self { threshold, permissive: false }
    }
}

/// Scores `seq` against every model and picks the best, with ties going to
/// the earlier model.
pub fn recognize(
    models: &[HmmModel],
    seq: &ObservationSequence,
    threshold: Option<f64>,
) -> Result<RecognitionResult, RecognizeError> {
    recognize_with(models, seq, RecognizeOptions::with_threshold(threshold))
}

pub fn recognize_with(
    models: &[HmmModel],
    seq: &ObservationSequence,
    options: RecognizeOptions,
) -> Result<RecognitionResult, RecognizeError> {
    if seq.is_empty() {
        return Err(RecognizeError::EmptySequence);
    }
    let frames = seq.len() as f64;
    let mut scores = Vec::with_capacity(models.len());
    let mut skipped = Vec::new();
    for m in models {
        if m.dim() != seq.dim() {
            if !options.permissive {
                return Err(RecognizeError::DimensionMismatch {
                    word: m.word().to_string(),
                    expected: m.dim(),
                    found: seq.dim(),
                });
            }
            skipped.push(m.word().to_string());
            scores.push(WordScore { word: m.word().to_string(), score: f64::NEG_INFINITY });
            continue;
        }
        let ll = forward_log_likelihood(m, seq)?.log_likelihood;
        scores.push(WordScore { word: m.word().to_string(), score: ll / frames });
    }

    let best = scores.iter().enumerate().fold(None::<(usize, f64)>, |best, (i, s)| match best {
        Some((_, b)) if s.score <= b => best,
        _ => Some((i, s.score)),
    });
    let (best_word, best_score) = match best {
        Some((i, s)) => (Some(scores[i].word.clone()), Some(s)),
        None => (None, None),
    };
    let accepted = match best_score {
        Some(s) if s > f64::NEG_INFINITY => options.threshold.is_none_or(|tau| s >= tau),
        _ => false,
    };
    Ok(RecognitionResult { scores, best_word, best_score, accepted, threshold: options.threshold, skipped })
}
