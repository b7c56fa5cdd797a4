use nalgebra::DMatrix;

use super::{HmmError, Result};

/// Diagonal loading added to every estimated covariance.
pub const DEFAULT_REGULARIZER: f64 = 1e-4;

/// Componentwise sample mean.
pub fn estimate_mean<V: AsRef<[f64]>>(assigned: &[V]) -> Result<Vec<f64>> {
    let first = assigned.first().ok_or(HmmError::EmptyAssignment)?.as_ref();
    let dim = first.len();
    let mut sum = vec![0.0; dim];
    for v in assigned {
        let v = v.as_ref();
        if v.len() != dim {
            return Err(HmmError::DimensionMismatch { expected: dim, found: v.len() });
        }
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
    }
    let m = assigned.len() as f64;
    Ok(sum.into_iter().map(|s| s / m).collect())
}

/// `(1/M) sum (x - mean)(x - mean)^T`, without regularization.
pub fn estimate_covariance<V: AsRef<[f64]>>(assigned: &[V], mean: &[f64]) -> Result<DMatrix<f64>> {
    if assigned.is_empty() {
        return Err(HmmError::EmptyAssignment);
    }
    let dim = mean.len();
    let mut cov = DMatrix::zeros(dim, dim);
    let mut diff = vec![0.0; dim];
    for v in assigned {
        let v = v.as_ref();
        if v.len() != dim {
            return Err(HmmError::DimensionMismatch { expected: dim, found: v.len() });
        }
        for ((d, x), m) in diff.iter_mut().zip(v).zip(mean) {
            *d = x - m;
        }
        for r in 0..dim {
            for c in r..dim {
                cov[(r, c)] += diff[r] * diff[c];
            }
        }
    }
    let m = assigned.len() as f64;
    for r in 0..dim {
        for c in r..dim {
            let v = cov[(r, c)] / m;
            cov[(r, c)] = v;
            cov[(c, r)] = v;
        }
    }
    Ok(cov)
}

/// Returns `cov + eps * I`.
pub fn regularize(mut cov: DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    for i in 0..cov.nrows().min(cov.ncols()) {
        cov[(i, i)] += eps;
    }
    cov
}
