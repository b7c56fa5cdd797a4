//! Closed-loop benchmark: sample from known HMMs, train on the samples,
//! recognize fresh samples, and report how often the generator is recovered.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{evaluate_trials, EvalError, EvaluationReport, Result, Trial};
use crate::features::ObservationSequence;
use crate::hmm::{sample_with_rng, GaussianState, HmmModel};
use crate::trainer::{segmental_kmeans, TrainingConfig};

pub const DEFAULT_SYNTH_SEED: u64 = 7;
pub const DEFAULT_SYNTH_STATES: usize = 3;
pub const DEFAULT_SYNTH_DIM: usize = 4;
pub const DEFAULT_SEPARATION: f64 = 8.0;
pub const SYNTH_USER: &str = "synthetic";

const MIN_LEN: usize = 20;
const MAX_LEN: usize = 40;
const SELF_LOOP: (f64, f64) = (0.6, 0.85);
const PLACEMENT_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub n_words: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    /// Minimum distance between any two state means, in emission standard deviations.
    pub separation: f64,
    /// Give every word the same ground-truth model (a chance-level control).
    pub identical_models: bool,
}

impl SynthParams {
    pub fn new(n_words: usize, n_train: usize, n_test: usize) -> Self {
        Self {
            n_words,
            n_train,
            n_test,
            seed: DEFAULT_SYNTH_SEED,
            separation: DEFAULT_SEPARATION,
            identical_models: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_separation(mut self, separation: f64) -> Self {
        self.separation = separation;
        self
    }

    pub fn with_identical_models(mut self, identical: bool) -> Self {
        self.identical_models = identical;
        self
    }

    fn validate(&self, config: &TrainingConfig) -> Result<()> {
        let bad = |m: String| Err(EvalError::Config(m));
        if self.n_words < 2 {
            return bad(format!("need at least 2 words, got {}", self.n_words));
        }
        if self.n_train == 0 || self.n_test == 0 {
            return bad("need at least one training and one test sequence per word".into());
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return bad(format!("separation must be positive, got {}", self.separation));
        }
        if config.n_states > MIN_LEN {
            return bad(format!("{} states exceed the shortest sequence length {MIN_LEN}", config.n_states));
        }
        config.validate().map_err(|e| EvalError::Config(e.to_string()))
    }
}

/// Word labels used for the synthetic vocabulary.
pub fn synth_word(i: usize) -> String {
    format!("w{i:02}")
}

/// Points with pairwise distance at least 1, by rejection sampling in a cube
/// sized to hold them comfortably. Scaling the result scales the separation.
fn unit_separated_points(rng: &mut ChaCha8Rng, count: usize, dim: usize) -> Result<Vec<Vec<f64>>> {
    let side = 2.0 * (count as f64).powf(1.0 / dim as f64);
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut attempts = 0;
    while points.len() < count {
        attempts += 1;
        if attempts > PLACEMENT_ATTEMPTS {
            return Err(EvalError::Config(format!("could not place {count} separated means in {dim} dimensions")));
        }
        let p: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..side)).collect();
        let far = points.iter().all(|q| q.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>() >= 1.0);
        if far {
            points.push(p);
        }
    }
    Ok(points)
}

/// Left-to-right model with unit-covariance states.
fn ground_truth(word: String, means: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Result<HmmModel> {
    let n = means.len();
    let dim = means[0].len();
    let mut initial = vec![0.0; n];
    initial[0] = 1.0;
    let transitions = (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            if i + 1 == n {
                row[i] = 1.0;
            } else {
                let stay = rng.random_range(SELF_LOOP.0..SELF_LOOP.1);
                row[i] = stay;
                row[i + 1] = 1.0 - stay;
            }
            row
        })
        .collect();
    let states = means
        .iter()
        .map(|m| GaussianState::new(m.clone(), DMatrix::identity(dim, dim)))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| EvalError::Config(e.to_string()))?;
    HmmModel::new(word, initial, transitions, states).map_err(|e| EvalError::Config(e.to_string()))
}

fn draw(model: &HmmModel, rng: &mut ChaCha8Rng) -> Result<ObservationSequence> {
    let len = rng.random_range(MIN_LEN..=MAX_LEN);
    sample_with_rng(model, len, rng).map(|s| s.observations).map_err(|e| EvalError::Config(e.to_string()))
}

/// The ground-truth models a benchmark run would use.
pub fn synth_ground_truth(params: &SynthParams, config: &TrainingConfig) -> Result<Vec<HmmModel>> {
    params.validate(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    generate_models(params, config, &mut rng)
}

fn generate_models(params: &SynthParams, config: &TrainingConfig, rng: &mut ChaCha8Rng) -> Result<Vec<HmmModel>> {
    let n = config.n_states;
    let distinct = if params.identical_models { 1 } else { params.n_words };
    let points = unit_separated_points(rng, distinct * n, config.dim)?;
    let scaled: Vec<Vec<f64>> =
        points.into_iter().map(|p| p.into_iter().map(|x| x * params.separation).collect()).collect();
    let mut shapes = Vec::with_capacity(distinct);
    for k in 0..distinct {
        shapes.push(ground_truth(String::new(), &scaled[k * n..(k + 1) * n], rng)?);
    }
    Ok((0..params.n_words).map(|w| shapes[w % distinct].clone().with_word(synth_word(w))).collect())
}

/// Generates ground truth, trains one model per word, and scores held-out
/// samples. Deterministic in `params.seed`.
pub fn synth_benchmark(params: &SynthParams, config: &TrainingConfig) -> Result<EvaluationReport> {
    params.validate(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let truth = generate_models(params, config, &mut rng)?;

    let mut trained = Vec::with_capacity(truth.len());
    let mut trials = Vec::with_capacity(truth.len() * params.n_test);
    for gt in &truth {
        let train = (0..params.n_train).map(|_| draw(gt, &mut rng)).collect::<Result<Vec<_>>>()?;
        let model = segmental_kmeans(config, &train)
            .map_err(|source| EvalError::Train { word: gt.word().to_string(), source })?
            .with_word(gt.word());
        trained.push(model);
        for _ in 0..params.n_test {
            trials.push(Trial {
                sequence: draw(gt, &mut rng)?,
                word: gt.word().to_string(),
                user: SYNTH_USER.to_string(),
                known: true,
                hours: None,
            });
        }
    }
    evaluate_trials(&trained, &trials, None)
        .map_err(|source| EvalError::Recognize { path: "<synthetic>".into(), source })
}
