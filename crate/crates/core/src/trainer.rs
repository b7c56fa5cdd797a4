//! Segmental K-means training.
//!
//! An initial model is seeded from `N` equally spaced frames of the first
//! training sequence; every other frame goes to the nearest seed. Each sweep
//! then re-segments every sequence with Viterbi, moves frames to the state
//! on their best path, and re-estimates all parameters from the new
//! assignment. Training stops when a sweep moves nothing or the sweep cap is
//! reached.

use thiserror::Error;

use crate::features::ObservationSequence;
use crate::hmm::{
    estimate_covariance, estimate_mean, regularize, viterbi, GaussianState, HmmError, HmmModel, DEFAULT_REGULARIZER,
};

pub const DEFAULT_MAX_ITERATIONS: usize = 100;

/// Slack allowed when checking that the training objective does not decrease.
pub const OBJECTIVE_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("no training sequences")]
    EmptyTrainingSet,
    #[error("first training sequence has {found} frames, need at least {needed} to seed the states")]
    TooFewFrames { needed: usize, found: usize },
    #[error("training sequence {set} has dimension {found}, expected {expected}")]
    DimensionMismatch { set: usize, expected: usize, found: usize },
    #[error("only {observations} observations for {states} states")]
    TooFewObservations { observations: usize, states: usize },
    #[error("no admissible Viterbi path for training sequence {set}")]
    NoAdmissiblePath { set: usize },
    #[error(transparent)]
    Hmm(#[from] HmmError),
}

pub type Result<T, E = TrainError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub n_states: usize,
    pub dim: usize,
    pub max_iterations: usize,
    /// Diagonal loading added to every covariance estimate.
    pub regularizer: f64,
    /// Probability given to unseen transitions (and start states) before
    /// renormalizing; 0 keeps hard zeros.
    pub transition_floor: f64,
}

impl TrainingConfig {
    pub fn new(n_states: usize, dim: usize) -> Self {
        Self {
            n_states,
            dim,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            regularizer: DEFAULT_REGULARIZER,
            transition_floor: 0.0,
        }
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_transition_floor(mut self, p: f64) -> Self {
        self.transition_floor = p;
        self
    }

    pub fn with_regularizer(mut self, eps: f64) -> Self {
        self.regularizer = eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(TrainError::Config(msg.to_string()));
        if self.n_states == 0 {
            return bad("number of states must be at least 1");
        }
        if self.dim == 0 {
            return bad("feature dimension must be at least 1");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.regularizer > 0.0 && self.regularizer.is_finite()) {
            return bad("regularizer must be positive and finite");
        }
        if !(0.0..1.0).contains(&self.transition_floor) {
            return bad("transition floor must lie in [0, 1)");
        }
        Ok(())
    }
}

/// State index per frame, per training sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub states: Vec<Vec<usize>>,
    pub iteration: usize,
    /// Frames that changed state in the most recent sweep.
    pub changed: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub sweep: usize,
    /// `sum over sets of log P(O, I* | model)` under the model entering the sweep.
    pub objective: f64,
    pub changed: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// A sweep reassigned no observations.
    Converged,
    IterationCap,
    /// The re-estimated model scored below its predecessor; the predecessor is kept.
    ObjectiveDecreased,
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub model: HmmModel,
    pub assignment: Assignment,
    pub history: Vec<SweepRecord>,
    pub stop: StopReason,
}

impl TrainingOutcome {
    pub fn sweeps(&self) -> usize {
        self.history.len()
    }
}

fn check_inputs(config: &TrainingConfig, sets: &[ObservationSequence]) -> Result<()> {
    config.validate()?;
    let first = sets.first().ok_or(TrainError::EmptyTrainingSet)?;
    for (i, s) in sets.iter().enumerate() {
        if s.dim() != config.dim {
            return Err(TrainError::DimensionMismatch { set: i, expected: config.dim, found: s.dim() });
        }
    }
    if first.len() < config.n_states {
        return Err(TrainError::TooFewFrames { needed: config.n_states, found: first.len() });
    }
    Ok(())
}

/// Frame index of each state's seed in the first training sequence.
pub fn seed_indices(n_states: usize, frames: usize) -> Vec<usize> {
    if n_states == 1 {
        return vec![0];
    }
    (0..n_states).map(|i| (i as f64 * (frames - 1) as f64 / (n_states - 1) as f64).round() as usize).collect()
}

fn squared_distance(a: &[f32], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, y)| (x as f64 - y).powi(2)).sum()
}

fn nearest(frame: &[f32], means: &[Vec<f64>]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, m) in means.iter().enumerate() {
        let d = squared_distance(frame, m);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// Seeds states from equally spaced frames, assigns every frame to the
/// nearest seed and estimates the first model from that assignment.
pub fn initialize_model(config: &TrainingConfig, sets: &[ObservationSequence]) -> Result<(HmmModel, Assignment)> {
    check_inputs(config, sets)?;
    let first = &sets[0];
    let seeds = seed_indices(config.n_states, first.len());
    let seed_means: Vec<Vec<f64>> = seeds.iter().map(|&t| first.frame_f64(t)).collect();

    let states = sets
        .iter()
        .enumerate()
        .map(|(s, seq)| {
            seq.frames()
                .enumerate()
                .map(|(t, frame)| match seeds.iter().position(|&k| s == 0 && k == t) {
                    Some(state) => state,
                    None => nearest(frame, &seed_means),
                })
                .collect()
        })
        .collect();
    let assignment = Assignment { states, iteration: 0, changed: 0 };
    let model = estimate_model(config, sets, &assignment.states)?;
    Ok((model, assignment))
}

/// Re-estimates `pi`, `A` and every state's Gaussian from a hard assignment.
pub fn estimate_model(
    config: &TrainingConfig,
    sets: &[ObservationSequence],
    assignment: &[Vec<usize>],
) -> Result<HmmModel> {
    let n = config.n_states;
    let mut members: Vec<Vec<Vec<f64>>> = vec![Vec::new(); n];
    let mut start_counts = vec![0.0; n];
    let mut trans_counts = vec![vec![0.0; n]; n];
    for (seq, path) in sets.iter().zip(assignment) {
        start_counts[path[0]] += 1.0;
        for w in path.windows(2) {
            trans_counts[w[0]][w[1]] += 1.0;
        }
        for (t, &s) in path.iter().enumerate() {
            members[s].push(seq.frame_f64(t));
        }
    }

    let states = members
        .iter()
        .map(|m| {
            let mean = estimate_mean(m)?;
            let cov = regularize(estimate_covariance(m, &mean)?, config.regularizer);
            GaussianState::new(mean, cov)
        })
        .collect::<Result<Vec<_>, HmmError>>()?;

    let initial = normalize_counts(&start_counts, config.transition_floor, None);
    let transitions = trans_counts
        .iter()
        .enumerate()
        .map(|(i, row)| normalize_counts(row, config.transition_floor, Some(i)))
        .collect();
    Ok(HmmModel::new("", initial, transitions, states)?)
}

/// Count vector to distribution. Zero counts become `floor` before
/// normalizing. A row with no counts at all falls back to a self-loop
/// (`self_index`) or, for the initial distribution, to uniform.
fn normalize_counts(counts: &[f64], floor: f64, self_index: Option<usize>) -> Vec<f64> {
    let total: f64 = counts.iter().sum();
    let mut p: Vec<f64> = if total > 0.0 {
        counts.iter().map(|c| c / total).collect()
    } else {
        match self_index {
            Some(i) => (0..counts.len()).map(|j| if i == j { 1.0 } else { 0.0 }).collect(),
            None => vec![1.0 / counts.len() as f64; counts.len()],
        }
    };
    if floor > 0.0 {
        for v in p.iter_mut() {
            if *v == 0.0 {
                *v = floor;
            }
        }
    }
    // divide by the exact sum so rows are stochastic to rounding
    let sum: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= sum);
    p
}

/// Gives every empty state one observation: the member of the most
/// populous state lying farthest from that state's mean.
fn repair_empty_states(
    config: &TrainingConfig,
    sets: &[ObservationSequence],
    assignment: &mut [Vec<usize>],
) -> Result<()> {
    let n = config.n_states;
    let total: usize = assignment.iter().map(Vec::len).sum();
    loop {
        let mut counts = vec![0usize; n];
        for &s in assignment.iter().flatten() {
            counts[s] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return Ok(());
        };
        if total < n {
            return Err(TrainError::TooFewObservations { observations: total, states: n });
        }
        let donor = (0..n).fold(0, |best, i| if counts[i] > counts[best] { i } else { best });
        let donor_frames: Vec<Vec<f64>> = sets
            .iter()
            .zip(assignment.iter())
            .flat_map(|(seq, path)| {
                path.iter().enumerate().filter(|&(_, &s)| s == donor).map(move |(t, _)| seq.frame_f64(t))
            })
            .collect();
        let mean = estimate_mean(&donor_frames)?;

        let mut farthest: Option<(usize, usize, f64)> = None;
        for (si, (seq, path)) in sets.iter().zip(assignment.iter()).enumerate() {
            for (t, &s) in path.iter().enumerate() {
                if s != donor {
                    continue;
                }
                let d = squared_distance(seq.frame(t), &mean);
                if farthest.is_none_or(|(_, _, best)| d > best) {
                    farthest = Some((si, t, d));
                }
            }
        }
        let (si, t, _) = farthest.expect("donor state has members");
        assignment[si][t] = empty;
    }
}

/// Full segmental K-means run, with the per-sweep objective trace.
pub fn train(config: &TrainingConfig, sets: &[ObservationSequence]) -> Result<TrainingOutcome> {
    let (mut model, mut assignment) = initialize_model(config, sets)?;
    let mut history: Vec<SweepRecord> = Vec::new();
    let mut previous: Option<(HmmModel, Assignment)> = None;
    let mut stop = StopReason::IterationCap;

    for sweep in 1..=config.max_iterations {
        let mut objective = 0.0;
        let mut paths = Vec::with_capacity(sets.len());
        for (set, seq) in sets.iter().enumerate() {
            let best = viterbi(&model, seq).map_err(|e| match e {
                HmmError::NoAdmissiblePath => TrainError::NoAdmissiblePath { set },
                other => other.into(),
            })?;
            objective += best.log_joint;
            paths.push(best.path);
        }

        if let Some(last) = history.last() {
            if objective < last.objective - OBJECTIVE_SLACK {
                let (m, a) = previous.take().expect("a previous model exists after the first sweep");
                model = m;
                assignment = a;
                stop = StopReason::ObjectiveDecreased;
                break;
            }
        }

        let changed =
            paths.iter().zip(&assignment.states).map(|(p, a)| p.iter().zip(a).filter(|(x, y)| x != y).count()).sum();
        history.push(SweepRecord { sweep, objective, changed });
        if changed == 0 {
            assignment.iteration = sweep;
            assignment.changed = 0;
            stop = StopReason::Converged;
            break;
        }

        let mut states = paths;
        repair_empty_states(config, sets, &mut states)?;
        let next_model = estimate_model(config, sets, &states)?;
        let next_assignment = Assignment { states, iteration: sweep, changed };
        previous =
            Some((std::mem::replace(&mut model, next_model), std::mem::replace(&mut assignment, next_assignment)));
    }

    Ok(TrainingOutcome { model, assignment, history, stop })
}

/// Trains a model with segmental K-means and returns it.
pub fn segmental_kmeans(config: &TrainingConfig, sets: &[ObservationSequence]) -> Result<HmmModel> {
    Ok(train(config, sets)?.model)
}
