//! Continuous-density HMMs with one full-covariance Gaussian per state.
//!
//! Everything is computed in the log domain (nats). Zero initial or
//! transition probabilities become `-inf` and propagate as such; no NaN is
//! produced for unreachable states.

mod estimate;
mod forward;
mod gaussian;
mod sample;
mod viterbi;

use thiserror::Error;

use crate::features::ObservationSequence;

pub use estimate::{estimate_covariance, estimate_mean, regularize, DEFAULT_REGULARIZER};
pub use forward::{forward_log_likelihood, forward_trellis, forward_with_emissions, ForwardResult};
pub use gaussian::{log_occurrence_probability, GaussianState};
pub use sample::{sample_sequence, sample_with_rng, SampledSequence};
pub use viterbi::{path_log_joint, viterbi, viterbi_with_emissions, PathResult};

/// Tolerance for "sums to one".
pub const STOCHASTIC_TOL: f64 = 1e-9;
/// Tolerance for covariance symmetry.
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HmmError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("observation sequence is empty")]
    EmptySequence,
    #[error("no admissible path: every state sequence has zero probability")]
    NoAdmissiblePath,
    #[error("cannot estimate parameters from an empty assignment")]
    EmptyAssignment,
    #[error("model must have at least one state")]
    NoStates,
    #[error("covariance is not a {dim}x{dim} matrix")]
    CovarianceShape { dim: usize },
    #[error("covariance is not symmetric (|v[{row}][{col}] - v[{col}][{row}]| = {diff:e})")]
    NotSymmetric { row: usize, col: usize, diff: f64 },
    #[error("covariance is not positive definite")]
    NotPositiveDefinite,
    #[error("{what} contains a non-finite value")]
    NonFinite { what: &'static str },
    #[error("{what} must sum to 1 (sum is {sum})")]
    NotStochastic { what: String, sum: f64 },
    #[error("{what} has probability {value} outside [0, 1]")]
    ProbabilityRange { what: String, value: f64 },
    #[error("expected {expected} {what}, found {found}")]
    Count { what: &'static str, expected: usize, found: usize },
}

pub type Result<T, E = HmmError> = std::result::Result<T, E>;

/// `log(sum(exp(xs)))`, returning `-inf` when every term is `-inf`.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.into_iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// One word's model: initial distribution, transition matrix and per-state
/// Gaussians. Immutable once built; the log-domain copies of `initial` and
/// `transitions` are cached at construction.
#[derive(Debug, Clone)]
pub struct HmmModel {
    word: String,
    dim: usize,
    initial: Vec<f64>,
    transitions: Vec<Vec<f64>>,
    states: Vec<GaussianState>,
    log_initial: Vec<f64>,
    log_transitions: Vec<Vec<f64>>,
}

fn check_distribution(what: impl Fn() -> String, p: &[f64]) -> Result<()> {
    for &v in p {
        if !v.is_finite() {
            return Err(HmmError::NonFinite { what: "probability vector" });
        }
        if !(0.0..=1.0).contains(&v) {
            return Err(HmmError::ProbabilityRange { what: what(), value: v });
        }
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(HmmError::NotStochastic { what: what(), sum });
    }
    Ok(())
}

impl HmmModel {
    pub fn new(
        word: impl Into<String>,
        initial: Vec<f64>,
        transitions: Vec<Vec<f64>>,
        states: Vec<GaussianState>,
    ) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return Err(HmmError::NoStates);
        }
        if initial.len() != n {
            return Err(HmmError::Count { what: "initial probabilities", expected: n, found: initial.len() });
        }
        if transitions.len() != n {
            return Err(HmmError::Count { what: "transition rows", expected: n, found: transitions.len() });
        }
        check_distribution(|| "initial distribution".into(), &initial)?;
        for (i, row) in transitions.iter().enumerate() {
            if row.len() != n {
                return Err(HmmError::Count { what: "transition columns", expected: n, found: row.len() });
            }
            check_distribution(|| format!("transition row {i}"), row)?;
        }
        let dim = states[0].dim();
        for s in &states {
            if s.dim() != dim {
                return Err(HmmError::DimensionMismatch { expected: dim, found: s.dim() });
            }
        }
        let log_initial = initial.iter().map(|p| p.ln()).collect();
        let log_transitions = transitions.iter().map(|row| row.iter().map(|p| p.ln()).collect()).collect();
        Ok(Self { word: word.into(), dim, initial, transitions, states, log_initial, log_transitions })
    }

    pub fn word(&self) -> &str {
        &self.word
    }

    pub fn with_word(mut self, word: impl Into<String>) -> Self {
        self.word = word.into();
        self
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transitions(&self) -> &[Vec<f64>] {
        &self.transitions
    }

    pub fn states(&self) -> &[GaussianState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &GaussianState {
        &self.states[i]
    }

    pub fn log_initial(&self) -> &[f64] {
        &self.log_initial
    }

    pub fn log_transition(&self, from: usize, to: usize) -> f64 {
        self.log_transitions[from][to]
    }

    pub(crate) fn check_sequence(&self, seq: &ObservationSequence) -> Result<()> {
        if seq.dim() != self.dim {
            return Err(HmmError::DimensionMismatch { expected: self.dim, found: seq.dim() });
        }
        if seq.is_empty() {
            return Err(HmmError::EmptySequence);
        }
        Ok(())
    }

    /// Log occurrence probabilities `log b_i(O_t)` for every frame and state.
    pub fn emissions(&self, seq: &ObservationSequence) -> Result<EmissionTable> {
        self.check_sequence(seq)?;
        let n = self.n_states();
        let mut values = Vec::with_capacity(seq.len() * n);
        let mut obs = vec![0.0; self.dim];
        for frame in seq.frames() {
            for (o, &v) in obs.iter_mut().zip(frame) {
                *o = v as f64;
            }
            values.extend(self.states.iter().map(|s| s.log_density_unchecked(&obs)));
        }
        Ok(EmissionTable { n_states: n, values })
    }
}

/// `T x N` table of log emission densities.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionTable {
    n_states: usize,
    values: Vec<f64>,
}

impl EmissionTable {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_states = rows.first().map(Vec::len).ok_or(HmmError::EmptySequence)?;
        let mut values = Vec::with_capacity(rows.len() * n_states);
        for r in rows {
            if r.len() != n_states {
                return Err(HmmError::Count { what: "emission columns", expected: n_states, found: r.len() });
            }
            values.extend_from_slice(r);
        }
        Ok(Self { n_states, values })
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.n_states.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.n_states..(t + 1) * self.n_states]
    }

    pub fn get(&self, t: usize, state: usize) -> f64 {
        self.values[t * self.n_states + state]
    }

    /// Adds `c` to every entry.
    pub fn shifted(&self, c: f64) -> Self {
        Self { n_states: self.n_states, values: self.values.iter().map(|v| v + c).collect() }
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / s).collect()
    }

    /// A random valid model with full-covariance states.
    pub(crate) fn random_model(seed: u64, n: usize, dim: usize) -> HmmModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let initial = random_distribution(&mut rng, n);
        let transitions = (0..n).map(|_| random_distribution(&mut rng, n)).collect();
        let states = (0..n)
            .map(|_| {
                let mean: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
                let a = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
                let cov = &a * a.transpose() + DMatrix::identity(dim, dim) * 0.5;
                GaussianState::new(mean, cov).unwrap()
            })
            .collect();
        HmmModel::new("random", initial, transitions, states).unwrap()
    }

    pub(crate) fn random_sequence(seed: u64, t: usize, dim: usize) -> ObservationSequence {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let frames: Vec<Vec<f32>> =
            (0..t).map(|_| (0..dim).map(|_| rng.random_range(-3.0f32..3.0)).collect()).collect();
        ObservationSequence::from_frames(dim, &frames).unwrap()
    }

    pub(crate) fn unit_state(mean: Vec<f64>) -> GaussianState {
        let d = mean.len();
        GaussianState::new(mean, DMatrix::identity(d, d)).unwrap()
    }
}
