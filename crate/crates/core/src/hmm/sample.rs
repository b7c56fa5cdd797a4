use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::features::ObservationSequence;

use super::{HmmError, HmmModel, Result};

#[derive(Debug, Clone)]
pub struct SampledSequence {
    pub observations: ObservationSequence,
    pub states: Vec<usize>,
}

/// Draws a `length`-frame sequence from `model`, seeded deterministically.
pub fn sample_sequence(model: &HmmModel, length: usize, seed: u64) -> Result<ObservationSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_with_rng(model, length, &mut rng)?.observations)
}

/// Draws `i_1 ~ pi`, `i_{t+1} ~ A[i_t]`, `O_t ~ N(mu_{i_t}, V_{i_t})`.
pub fn sample_with_rng<R: Rng + ?Sized>(model: &HmmModel, length: usize, rng: &mut R) -> Result<SampledSequence> {
    if length == 0 {
        return Err(HmmError::EmptySequence);
    }
    let invalid = |_| HmmError::NotStochastic { what: "sampling distribution".into(), sum: 0.0 };
    let start = WeightedIndex::new(model.initial()).map_err(invalid)?;
    let rows =
        model.transitions().iter().map(|r| WeightedIndex::new(r).map_err(invalid)).collect::<Result<Vec<_>>>()?;

    let dim = model.dim();
    let mut states = Vec::with_capacity(length);
    let mut data = Vec::with_capacity(length * dim);
    let mut z = vec![0.0f64; dim];
    let mut state = start.sample(rng);
    for t in 0..length {
        if t > 0 {
            state = rows[state].sample(rng);
        }
        states.push(state);
        let g = model.state(state);
        let l = g.cholesky_lower();
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        for r in 0..dim {
            let mut x = g.mean()[r];
            for c in 0..=r {
                x += l[(r, c)] * z[c];
            }
            data.push(x as f32);
        }
    }
    let observations =
        ObservationSequence::from_flat(dim, data).map_err(|_| HmmError::NonFinite { what: "sampled observation" })?;
    Ok(SampledSequence { observations, states })
}
