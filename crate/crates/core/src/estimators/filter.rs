//! Spectral filtering for robust mean estimation under bounded covariance.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use super::{top_indices, EstimatorError, FitStatus, RobustFit};
use crate::rng::{stream_rng, ESTIMATOR_STREAM};

/// `C_f` in the stopping rule.
pub const FILTER_CONSTANT: f64 = 10.0;

/// A vector with at most one nonzero coordinate: `value` at `index`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseSample {
    pub index: usize,
    pub value: f64,
}

/// Filtered mean of the rows of `samples` (`n × d`).
///
/// Each round computes the mean and covariance of the surviving points and
/// stops once `λ_max ≤ σ²(1 + C_f(ε log(1/ε) + √(d/n)))`. Otherwise every
/// survivor is removed independently with probability `τ_i / max τ`, where
/// `τ_i` is its squared deviation along the top eigenvector. At most `2εn`
/// points are ever removed; hitting that cap returns the current mean
/// flagged [`FitStatus::FilterStalled`]. With `ε = 0` the empirical mean is
/// returned directly.
pub fn filter_mean(
    samples: &DMatrix<f64>,
    epsilon: f64,
    sigma2_bound: f64,
    seed: u64,
) -> Result<RobustFit, EstimatorError> {
    run_filter(&Dense(samples), samples.ncols() + 1, epsilon, sigma2_bound, seed)
}

/// [`filter_mean`] for samples with at most one nonzero coordinate each.
/// Moments cost `O(n + d²)` per round instead of `O(n d²)`, and only two
/// samples are required since the dimension may exceed the sample count.
pub fn filter_mean_sparse(
    samples: &[SparseSample],
    dim: usize,
    epsilon: f64,
    sigma2_bound: f64,
    seed: u64,
) -> Result<RobustFit, EstimatorError> {
    if let Some(s) = samples.iter().find(|s| s.index >= dim || !s.value.is_finite()) {
        return Err(EstimatorError::InvalidInput(format!(
            "sparse sample {s:?} invalid for dimension {dim}"
        )));
    }
    run_filter(&Sparse { samples, dim }, 2, epsilon, sigma2_bound, seed)
}

trait SampleSet {
    fn len(&self) -> usize;
    fn dim(&self) -> usize;
    fn mean(&self, active: &[usize]) -> DVector<f64>;
    fn covariance(&self, active: &[usize], mean: &DVector<f64>) -> DMatrix<f64>;
    fn dot(&self, i: usize, v: &DVector<f64>) -> f64;
}

struct Dense<'a>(&'a DMatrix<f64>);

impl SampleSet for Dense<'_> {
    fn len(&self) -> usize {
        self.0.nrows()
    }

    fn dim(&self) -> usize {
        self.0.ncols()
    }

    fn mean(&self, active: &[usize]) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim());
        for &i in active {
            m += self.0.row(i).transpose();
        }
        m / active.len() as f64
    }

    fn covariance(&self, active: &[usize], mean: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim();
        let mut centered = DMatrix::zeros(active.len(), d);
        for (r, &i) in active.iter().enumerate() {
            for j in 0..d {
                centered[(r, j)] = self.0[(i, j)] - mean[j];
            }
        }
        centered.tr_mul(&centered) / active.len() as f64
    }

    fn dot(&self, i: usize, v: &DVector<f64>) -> f64 {
        self.0.row(i).iter().zip(v.iter()).map(|(a, b)| a * b).sum()
    }
}

struct Sparse<'a> {
    samples: &'a [SparseSample],
    dim: usize,
}

impl SampleSet for Sparse<'_> {
    fn len(&self) -> usize {
        self.samples.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn mean(&self, active: &[usize]) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim);
        for &i in active {
            let s = self.samples[i];
            m[s.index] += s.value;
        }
        m / active.len() as f64
    }

    fn covariance(&self, active: &[usize], mean: &DVector<f64>) -> DMatrix<f64> {
        let mut second = DVector::zeros(self.dim);
        for &i in active {
            let s = self.samples[i];
            second[s.index] += s.value * s.value;
        }
        second /= active.len() as f64;
        DMatrix::from_diagonal(&second) - mean * mean.transpose()
    }

    fn dot(&self, i: usize, v: &DVector<f64>) -> f64 {
        let s = self.samples[i];
        s.value * v[s.index]
    }
}

fn run_filter<S: SampleSet>(
    set: &S,
    min_samples: usize,
    epsilon: f64,
    sigma2_bound: f64,
    seed: u64,
) -> Result<RobustFit, EstimatorError> {
    let n = set.len();
    let d = set.dim();
    if n < min_samples {
        return Err(EstimatorError::TooFewSamples { n, d });
    }
    if !(0.0..0.5).contains(&epsilon) {
        return Err(EstimatorError::EpsilonTooLarge(epsilon));
    }
    if !(sigma2_bound > 0.0) {
        return Err(EstimatorError::InvalidInput(format!(
            "covariance bound {sigma2_bound} must be positive"
        )));
    }
    let mut active: Vec<usize> = (0..n).collect();
    if epsilon == 0.0 {
        let mean = set.mean(&active);
        let cov = set.covariance(&active, &mean);
        return Ok(RobustFit {
            estimate: mean,
            iterations: 0,
            removed_count: 0,
            residual_sigma_estimate: top_eigen(cov).0.max(0.0).sqrt(),
            status: FitStatus::Converged,
        });
    }

    let cap = (2.0 * epsilon * n as f64).floor() as usize;
    let threshold = sigma2_bound
        * (1.0 + FILTER_CONSTANT * (epsilon * (1.0 / epsilon).ln() + (d as f64 / n as f64).sqrt()));
    let mut rng = stream_rng(seed, ESTIMATOR_STREAM);
    let mut rounds = 0;
    loop {
        rounds += 1;
        let mean = set.mean(&active);
        let (lambda, v) = top_eigen(set.covariance(&active, &mean));
        let removed = n - active.len();
        let done = |status| RobustFit {
            estimate: mean.clone(),
            iterations: rounds,
            removed_count: removed,
            residual_sigma_estimate: lambda.max(0.0).sqrt(),
            status,
        };
        if lambda <= threshold {
            return Ok(done(FitStatus::Converged));
        }
        if removed >= cap {
            return Ok(done(FitStatus::FilterStalled));
        }
        let center = mean.dot(&v);
        let scores: Vec<f64> = active
            .iter()
            .map(|&i| {
                let t = set.dot(i, &v) - center;
                t * t
            })
            .collect();
        let top = scores.iter().copied().fold(0.0, f64::max);
        if top <= 0.0 {
            return Ok(done(FitStatus::FilterStalled));
        }
        let mut drop: Vec<usize> = scores
            .iter()
            .enumerate()
            .filter(|(_, t)| rng.random::<f64>() < **t / top)
            .map(|(k, _)| k)
            .collect();
        let room = cap - removed;
        if drop.len() > room {
            let candidate_scores: Vec<f64> = drop.iter().map(|&k| scores[k]).collect();
            drop = top_indices(&candidate_scores, room)
                .into_iter()
                .map(|j| drop[j])
                .collect();
        }
        let mut remove = vec![false; active.len()];
        for k in drop {
            remove[k] = true;
        }
        let mut k = 0;
        active.retain(|_| {
            let keep = !remove[k];
            k += 1;
            keep
        });
    }
}

/// Largest eigenvalue and a unit eigenvector of a symmetric matrix.
fn top_eigen(cov: DMatrix<f64>) -> (f64, DVector<f64>) {
    let eig = SymmetricEigen::new(cov);
    let (idx, lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &l)| if l > acc.1 { (i, l) } else { acc });
    (lambda, eig.eigenvectors.column(idx).into_owned())
}
