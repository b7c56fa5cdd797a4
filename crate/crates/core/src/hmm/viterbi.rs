use crate::features::ObservationSequence;

use super::{EmissionTable, HmmError, HmmModel, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    /// Most probable state sequence, one index per frame.
    pub path: Vec<usize>,
    /// `log P(O, path | model)`.
    pub log_joint: f64,
}

pub fn viterbi(model: &HmmModel, seq: &ObservationSequence) -> Result<PathResult> {
    let table = model.emissions(seq)?;
    viterbi_with_emissions(model, &table)
}

/// Best-path dynamic program over precomputed log emissions. Among equally
/// good predecessors (and final states) the lowest index wins.
pub fn viterbi_with_emissions(model: &HmmModel, table: &EmissionTable) -> Result<PathResult> {
    let n = model.n_states();
    let t_len = table.len();
    if t_len == 0 {
        return Err(HmmError::EmptySequence);
    }
    let mut delta: Vec<f64> = (0..n).map(|i| model.log_initial()[i] + table.get(0, i)).collect();
    let mut next = vec![f64::NEG_INFINITY; n];
    let mut backptr = vec![0usize; t_len * n];

    for t in 1..t_len {
        for j in 0..n {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for (i, &d) in delta.iter().enumerate() {
                let cand = d + model.log_transition(i, j);
                if cand > best {
                    best = cand;
                    arg = i;
                }
            }
            next[j] = best + table.get(t, j);
            backptr[t * n + j] = arg;
        }
        std::mem::swap(&mut delta, &mut next);
    }

    let mut last = 0;
    let mut log_joint = f64::NEG_INFINITY;
    for (i, &d) in delta.iter().enumerate() {
        if d > log_joint {
            log_joint = d;
            last = i;
        }
    }
    if log_joint == f64::NEG_INFINITY || log_joint.is_nan() {
        return Err(HmmError::NoAdmissiblePath);
    }

    let mut path = vec![0; t_len];
    path[t_len - 1] = last;
    for t in (1..t_len).rev() {
        path[t - 1] = backptr[t * n + path[t]];
    }
    Ok(PathResult { path, log_joint })
}

/// `log P(O, path | model)` for an explicit state sequence.
pub fn path_log_joint(model: &HmmModel, table: &EmissionTable, path: &[usize]) -> f64 {
    let Some(&first) = path.first() else {
        return f64::NEG_INFINITY;
    };
    let mut total = model.log_initial()[first] + table.get(0, first);
    for t in 1..path.len() {
        total += model.log_transition(path[t - 1], path[t]) + table.get(t, path[t]);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::super::{forward_with_emissions, log_occurrence_probability};
    use super::*;

    fn enumerate_best(model: &HmmModel, seq: &ObservationSequence) -> (Vec<usize>, f64) {
        let (n, t_len) = (model.n_states(), seq.len());
        let lb = |t: usize, i: usize| log_occurrence_probability(model.state(i), &seq.frame_f64(t)).unwrap();
        let mut best = (vec![], f64::NEG_INFINITY);
        for code in 0..n.pow(t_len as u32) {
            let path: Vec<usize> = (0..t_len).map(|t| (code / n.pow(t as u32)) % n).collect();
            let mut lp = model.initial()[path[0]].ln() + lb(0, path[0]);
            for t in 1..t_len {
                lp += model.transitions()[path[t - 1]][path[t]].ln() + lb(t, path[t]);
            }
            if lp > best.1 {
                best = (path, lp);
            }
        }
        best
    }

    #[test]
    fn only_admissible_path_is_taken() {
        let m = HmmModel::new(
            "w",
            vec![1.0, 0.0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![unit_state(vec![10.0]), unit_state(vec![0.0])],
        )
        .unwrap();
        // emissions favour state 1 everywhere
        let seq = ObservationSequence::from_frames(1, &[[0.0f32], [0.0], [0.0], [0.0]]).unwrap();
        assert_eq!(viterbi(&m, &seq).unwrap().path, vec![0, 0, 0, 0]);
    }

    #[test]
    fn matches_enumeration() {
        for seed in 0..25 {
            let m = random_model(100 + seed, 3, 2);
            let seq = random_sequence(100 + seed, 5, 2);
            let (path, lp) = enumerate_best(&m, &seq);
            let res = viterbi(&m, &seq).unwrap();
            assert_eq!(res.path, path);
            assert!((res.log_joint - lp).abs() <= 1e-9 * lp.abs().max(1.0));
        }
    }

    #[test]
    fn bounded_by_forward() {
        for seed in 0..25 {
            let m = random_model(seed, 3, 2);
            let seq = random_sequence(seed, 7, 2);
            let table = m.emissions(&seq).unwrap();
            let fw = forward_with_emissions(&m, &table, false).log_likelihood;
            let vit = viterbi_with_emissions(&m, &table).unwrap();
            assert!(vit.log_joint <= fw + 1e-9);
            assert!((path_log_joint(&m, &table, &vit.path) - vit.log_joint).abs() < 1e-9);
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let m = HmmModel::new(
            "w",
            vec![0.5, 0.5],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            vec![unit_state(vec![0.0]), unit_state(vec![0.0])],
        )
        .unwrap();
        let seq = ObservationSequence::from_frames(1, &[[0.3f32], [0.1], [-0.2]]).unwrap();
        assert_eq!(viterbi(&m, &seq).unwrap().path, vec![0, 0, 0]);
    }

    #[test]
    fn no_admissible_path() {
        let m = random_model(1, 2, 1);
        let table = EmissionTable::from_rows(&[vec![f64::NEG_INFINITY; 2], vec![0.0, 0.0]]).unwrap();
        assert_eq!(viterbi_with_emissions(&m, &table), Err(HmmError::NoAdmissiblePath));
    }

    #[test]
    fn constant_shift_moves_scores_by_t_times_c() {
        let m = random_model(42, 3, 2);
        let seq = random_sequence(42, 6, 2);
        let table = m.emissions(&seq).unwrap();
        let c = -3.25;
        let shifted = table.shifted(c);
        let (a, b) = (viterbi_with_emissions(&m, &table).unwrap(), viterbi_with_emissions(&m, &shifted).unwrap());
        assert_eq!(a.path, b.path);
        assert!((b.log_joint - a.log_joint - 6.0 * c).abs() < 1e-9);
        let (fa, fb) = (
            forward_with_emissions(&m, &table, false).log_likelihood,
            forward_with_emissions(&m, &shifted, false).log_likelihood,
        );
        assert!((fb - fa - 6.0 * c).abs() < 1e-9);
    }
}
