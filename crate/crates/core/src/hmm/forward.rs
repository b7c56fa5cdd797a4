use crate::features::ObservationSequence;

use super::{log_sum_exp, EmissionTable, HmmModel, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardResult {
    /// `log P(O | model)` in nats; `-inf` when no path has support.
    pub log_likelihood: f64,
    /// `log alpha_t(i)`, one row per frame, when retained.
    pub trellis: Option<Vec<Vec<f64>>>,
}

pub fn forward_log_likelihood(model: &HmmModel, seq: &ObservationSequence) -> Result<ForwardResult> {
    let table = model.emissions(seq)?;
    Ok(forward_with_emissions(model, &table, false))
}

/// Like [`forward_log_likelihood`] but keeps the full `T x N` trellis.
pub fn forward_trellis(model: &HmmModel, seq: &ObservationSequence) -> Result<ForwardResult> {
    let table = model.emissions(seq)?;
    Ok(forward_with_emissions(model, &table, true))
}

/// Forward recursion over precomputed log emissions.
///
/// `alpha_1(i) = pi_i b_i(O_1)`,
/// `alpha_{t+1}(j) = [sum_i alpha_t(i) a_ij] b_j(O_{t+1})`.
pub fn forward_with_emissions(model: &HmmModel, table: &EmissionTable, keep_trellis: bool) -> ForwardResult {
    let n = model.n_states();
    debug_assert_eq!(table.n_states(), n);
    let mut alpha: Vec<f64> = (0..n).map(|i| model.log_initial()[i] + table.get(0, i)).collect();
    let mut trellis = keep_trellis.then(|| vec![alpha.clone()]);
    let mut next = vec![0.0; n];
    for t in 1..table.len() {
        for (j, slot) in next.iter_mut().enumerate() {
            let into_j = log_sum_exp((0..n).map(|i| alpha[i] + model.log_transition(i, j)));
            *slot = into_j + table.get(t, j);
        }
        std::mem::swap(&mut alpha, &mut next);
        if let Some(tr) = trellis.as_mut() {
            tr.push(alpha.clone());
        }
    }
    ForwardResult { log_likelihood: log_sum_exp(alpha.iter().copied()), trellis }
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::super::{log_occurrence_probability, HmmError};
    use super::*;

    /// Sum over every state path, in the linear domain.
    fn brute_force_linear(model: &HmmModel, seq: &ObservationSequence) -> f64 {
        let (n, t_len) = (model.n_states(), seq.len());
        let b = |t: usize, i: usize| log_occurrence_probability(model.state(i), &seq.frame_f64(t)).unwrap().exp();
        let mut total = 0.0;
        for code in 0..n.pow(t_len as u32) {
            let path: Vec<usize> = (0..t_len).map(|t| (code / n.pow(t as u32)) % n).collect();
            let mut p = model.initial()[path[0]] * b(0, path[0]);
            for t in 1..t_len {
                p *= model.transitions()[path[t - 1]][path[t]] * b(t, path[t]);
            }
            total += p;
        }
        total
    }

    #[test]
    fn single_state_collapses_to_sum_of_emissions() {
        let m = HmmModel::new("w", vec![1.0], vec![vec![1.0]], vec![unit_state(vec![0.5, -0.5])]).unwrap();
        let seq = random_sequence(11, 6, 2);
        let expected: f64 = (0..6).map(|t| log_occurrence_probability(m.state(0), &seq.frame_f64(t)).unwrap()).sum();
        let got = forward_log_likelihood(&m, &seq).unwrap().log_likelihood;
        assert!((got - expected).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn matches_linear_brute_force() {
        for seed in 0..20 {
            let m = random_model(seed, 2, 2);
            let seq = random_sequence(seed, 3, 2);
            let oracle = brute_force_linear(&m, &seq).ln();
            let got = forward_log_likelihood(&m, &seq).unwrap().log_likelihood;
            assert!((got - oracle).abs() <= 1e-9 * oracle.abs(), "seed {seed}: {got} vs {oracle}");
        }
    }

    #[test]
    fn zero_initial_mass_is_neg_infinity_in_trellis() {
        let m = HmmModel::new(
            "w",
            vec![1.0, 0.0],
            vec![vec![1.0, 0.0], vec![0.5, 0.5]],
            vec![unit_state(vec![0.0]), unit_state(vec![3.0])],
        )
        .unwrap();
        let seq = random_sequence(1, 4, 1);
        let res = forward_trellis(&m, &seq).unwrap();
        let trellis = res.trellis.unwrap();
        assert!(trellis[0][0].is_finite());
        assert_eq!(trellis[0][1], f64::NEG_INFINITY);
        // state 1 is never reachable
        assert!(trellis.iter().all(|row| row[1] == f64::NEG_INFINITY));
        assert!(res.log_likelihood.is_finite());
        assert!(!res.log_likelihood.is_nan());
    }

    #[test]
    fn trellis_final_row_gives_likelihood() {
        let m = random_model(5, 3, 2);
        let seq = random_sequence(5, 5, 2);
        let res = forward_trellis(&m, &seq).unwrap();
        let tr = res.trellis.as_ref().unwrap();
        assert_eq!(tr.len(), 5);
        assert_eq!(res.log_likelihood, log_sum_exp(tr[4].iter().copied()));
        assert_eq!(forward_log_likelihood(&m, &seq).unwrap().log_likelihood, res.log_likelihood);
    }

    #[test]
    fn long_sequences_do_not_underflow() {
        let m = random_model(9, 3, 2);
        let seq = random_sequence(9, 5000, 2);
        let ll = forward_log_likelihood(&m, &seq).unwrap().log_likelihood;
        assert!(ll.is_finite() && ll < -1000.0);
    }

    #[test]
    fn dimension_mismatch() {
        let m = random_model(1, 2, 2);
        let seq = random_sequence(1, 3, 3);
        assert!(matches!(forward_log_likelihood(&m, &seq), Err(HmmError::DimensionMismatch { .. })));
    }
}
