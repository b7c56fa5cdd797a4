use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{HmmError, Result, SYMMETRY_TOL};

/// A multivariate normal emission density with cached Cholesky factor,
/// inverse and log-determinant.
#[derive(Debug, Clone)]
pub struct GaussianState {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    chol_lower: DMatrix<f64>,
    inverse: DMatrix<f64>,
    log_det: f64,
    /// `-(D/2) log(2 pi) - (1/2) log|V|`
    log_norm: f64,
}

impl GaussianState {
    /// Fails unless `covariance` is a symmetric positive definite `D x D`
    /// matrix. No regularization is applied here.
    pub fn new(mean: impl Into<Vec<f64>>, covariance: DMatrix<f64>) -> Result<Self> {
        let mean: Vec<f64> = mean.into();
        let dim = mean.len();
        if dim == 0 {
            return Err(HmmError::CovarianceShape { dim });
        }
        if covariance.nrows() != dim || covariance.ncols() != dim {
            return Err(HmmError::CovarianceShape { dim });
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(HmmError::NonFinite { what: "mean" });
        }
        if covariance.iter().any(|v| !v.is_finite()) {
            return Err(HmmError::NonFinite { what: "covariance" });
        }
        for r in 0..dim {
            for c in (r + 1)..dim {
                let (a, b) = (covariance[(r, c)], covariance[(c, r)]);
                let diff = (a - b).abs();
                if diff > SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0) {
                    return Err(HmmError::NotSymmetric { row: r, col: c, diff });
                }
            }
        }
        let chol = covariance.clone().cholesky().ok_or(HmmError::NotPositiveDefinite)?;
        let chol_lower = chol.l();
        let log_det = 2.0 * chol_lower.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        if !log_det.is_finite() {
            return Err(HmmError::NotPositiveDefinite);
        }
        let inverse = chol.inverse();
        let log_norm = -0.5 * dim as f64 * (2.0 * PI).ln() - 0.5 * log_det;
        Ok(Self { mean: DVector::from_vec(mean), covariance, chol_lower, inverse, log_det, log_norm })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn inverse_covariance(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// Lower-triangular `L` with `L L^T = V`.
    pub fn cholesky_lower(&self) -> &DMatrix<f64> {
        &self.chol_lower
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Caller guarantees `obs.len() == self.dim()`.
    pub(crate) fn log_density_unchecked(&self, obs: &[f64]) -> f64 {
        // Mahalanobis term via forward substitution on L: |L^-1 (x - mu)|^2
        let dim = self.dim();
        let mut z = [0.0f64; 32];
        let mut heap;
        let z: &mut [f64] = if dim <= z.len() {
            &mut z[..dim]
        } else {
            heap = vec![0.0; dim];
            &mut heap
        };
        let mut quad = 0.0;
        for i in 0..dim {
            let mut acc = obs[i] - self.mean[i];
            for (j, zj) in z[..i].iter().enumerate() {
                acc -= self.chol_lower[(i, j)] * zj;
            }
            z[i] = acc / self.chol_lower[(i, i)];
            quad += z[i] * z[i];
        }
        self.log_norm - 0.5 * quad
    }

    pub fn log_density(&self, obs: &[f64]) -> Result<f64> {
        if obs.len() != self.dim() {
            return Err(HmmError::DimensionMismatch { expected: self.dim(), found: obs.len() });
        }
        Ok(self.log_density_unchecked(obs))
    }
}

/// Log of the multivariate normal density of `obs` under `state`, in nats.
pub fn log_occurrence_probability(state: &GaussianState, obs: &[f64]) -> Result<f64> {
    state.log_density(obs)
}
