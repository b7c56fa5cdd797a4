//! Speaker-trainable isolated-word command recognition with continuous-density
//! hidden Markov models.
//!
//! The pipeline runs from 16 kHz PCM audio through MFCC extraction
//! ([`features`]), segmental K-means training ([`trainer`]), a file-backed
//! model store ([`registry`]), forward-likelihood recognition with optional
//! rejection plus a mode-aware command interpreter ([`recognizer`]), and an
//! evaluation harness that produces accuracy tables ([`evaluator`]).

mod atomic;
pub mod evaluator;
pub mod features;
pub mod hmm;
pub mod recognizer;
pub mod registry;
pub mod trainer;
