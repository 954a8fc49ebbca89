//! Robust estimation oracles: trimmed regression with clean covariates,
//! influence-filtered regression with corrupted covariates, spectral
//! filtering for means, and the non-robust ridge baseline.

mod filter;
mod rls;
mod scram;

pub use filter::{filter_mean, filter_mean_sparse, SparseSample, FILTER_CONSTANT};
pub use rls::rls_fit;
pub use scram::{scram_fit, MAX_SCRAM_EPSILON, SCRAM_MAX_ITERATIONS};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("contamination level {0} is too large for this oracle")]
    EpsilonTooLarge(f64),
    #[error("empirical covariance has smallest eigenvalue {observed:.3e} < kappa/2 = {required:.3e}")]
    CoverageTooWeak { observed: f64, required: f64 },
    #[error("{n} samples are too few for dimension {d}")]
    TooFewSamples { n: usize, d: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("normal equations are singular")]
    SingularSystem,
}

/// How an iterative estimator finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitStatus {
    Converged,
    /// Iteration cap hit; the estimate is the best iterate seen.
    NotConverged,
    /// The filter hit its removal cap with the top eigenvalue still large.
    FilterStalled,
}

/// Estimate plus diagnostics. `estimate` is a weight vector for regression
/// oracles and a mean vector for [`filter_mean`].
#[derive(Debug, Clone, PartialEq)]
pub struct RobustFit {
    pub estimate: DVector<f64>,
    pub iterations: usize,
    pub removed_count: usize,
    pub residual_sigma_estimate: f64,
    pub status: FitStatus,
}

/// Linear regression `y ≈ Xω` with an assumed contamination level.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionProblem {
    /// `n × d` covariates, rows of norm at most 1.
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub epsilon: f64,
    /// Noise scale of the targets.
    pub gamma: f64,
    /// Norm bound on the true weights; estimates are projected onto this ball.
    pub radius: f64,
    pub delta: f64,
    /// Ridge penalty used inside the fits (0 for plain least squares).
    pub ridge: f64,
    pub seed: u64,
}

impl RegressionProblem {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Self {
        Self {
            x,
            y,
            epsilon: 0.0,
            gamma: 1.0,
            radius: f64::INFINITY,
            delta: 0.1,
            ridge: 0.0,
            seed: 0,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn with_ridge(mut self, ridge: f64) -> Self {
        self.ridge = ridge;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub(crate) fn validate(&self) -> Result<(), EstimatorError> {
        let bad = |m: String| Err(EstimatorError::InvalidInput(m));
        if self.x.nrows() != self.y.len() {
            return bad(format!("{} rows but {} targets", self.x.nrows(), self.y.len()));
        }
        if self.x.ncols() == 0 || self.x.nrows() == 0 {
            return bad("empty design".into());
        }
        if self.x.iter().chain(self.y.iter()).any(|v| !v.is_finite()) {
            return bad("non-finite covariate or target".into());
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return bad(format!("epsilon {} outside [0, 1)", self.epsilon));
        }
        if !(self.ridge >= 0.0) || !(self.radius > 0.0) {
            return bad("ridge must be >= 0 and radius > 0".into());
        }
        for (i, row) in self.x.row_iter().enumerate() {
            if row.norm() > 1.0 + 1e-12 {
                return bad(format!("covariate row {i} has norm {} > 1", row.norm()));
            }
        }
        Ok(())
    }
}

/// `(XᵀX + λI)⁻¹ Xᵀy`. `λ = 0` gives least squares when `XᵀX` is invertible.
pub fn ridge_fit(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<RobustFit, EstimatorError> {
    if x.nrows() != y.len() {
        return Err(EstimatorError::InvalidInput(format!(
            "{} rows but {} targets",
            x.nrows(),
            y.len()
        )));
    }
    if !(lambda >= 0.0) {
        return Err(EstimatorError::InvalidInput(format!("ridge penalty {lambda} < 0")));
    }
    let omega = weighted_ridge(x, y, None, lambda)?;
    let residuals = y - x * &omega;
    Ok(RobustFit {
        residual_sigma_estimate: rms(residuals.as_slice()),
        estimate: omega,
        iterations: 1,
        removed_count: 0,
        status: FitStatus::Converged,
    })
}

/// Solves `(Xᵀ W X + λI) ω = Xᵀ W y`, `W = diag(weights)` (identity if `None`).
pub(crate) fn weighted_ridge(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    weights: Option<&DVector<f64>>,
    lambda: f64,
) -> Result<DVector<f64>, EstimatorError> {
    let (gram, rhs) = match weights {
        None => (x.tr_mul(x), x.tr_mul(y)),
        Some(w) => {
            let mut wx = x.clone();
            for mut col in wx.column_iter_mut() {
                col.component_mul_assign(w);
            }
            (x.tr_mul(&wx), wx.tr_mul(y))
        }
    };
    solve_spd(gram, &rhs, lambda)
}

/// Solves `(A + λI) z = b` for symmetric PSD `A`, falling back to a
/// pseudo-inverse when the system is singular.
pub(crate) fn solve_spd(
    mut a: DMatrix<f64>,
    b: &DVector<f64>,
    lambda: f64,
) -> Result<DVector<f64>, EstimatorError> {
    for i in 0..a.nrows() {
        a[(i, i)] += lambda;
    }
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    a.svd(true, true)
        .solve(b, 1e-12)
        .map_err(|_| EstimatorError::SingularSystem)
}

/// `‖v‖_Σ = sqrt(vᵀ Σ v)` with `Σ = XᵀX / n`.
pub fn sigma_norm(x: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    let xv = x * v;
    (xv.norm_squared() / x.nrows() as f64).sqrt()
}

pub(crate) fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().map(|r| r * r).sum::<f64>() / v.len() as f64).sqrt()
}

/// Indices of the `m` largest scores; ties go to the lower index.
pub(crate) fn top_indices(scores: &[f64], m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    let m = m.min(idx.len());
    if m == 0 {
        return Vec::new();
    }
    let cmp = |a: &usize, b: &usize| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b));
    if m < idx.len() {
        idx.select_nth_unstable_by(m - 1, cmp);
        idx.truncate(m);
    }
    idx.sort_unstable_by(cmp);
    idx
}
