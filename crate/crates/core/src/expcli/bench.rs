use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ExpError;
use crate::datagen::contamination_budget;
use crate::estimators::{filter_mean, ridge_fit, rls_fit, scram_fit, sigma_norm, RegressionProblem};
use crate::rng::{stream_rng, ADVERSARY_STREAM, TRAJECTORY_STREAM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchEstimator {
    Scram,
    Rls,
    Filter,
}

impl BenchEstimator {
    pub fn name(&self) -> &'static str {
        match self {
            BenchEstimator::Scram => "scram",
            BenchEstimator::Rls => "rls",
            BenchEstimator::Filter => "filter",
        }
    }
}

/// How corrupted points are placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchAdversary {
    /// Regression: targets set to `magnitude` (and, with corrupted
    /// covariates, covariates set to `e₁`). Mean: points at `μ + magnitude·e₁`.
    Outlier,
    /// Regression: targets follow `ω* + Δ` with `‖Δ‖ = magnitude`, so the
    /// corrupted residuals look like noise. Mean: clean draws shifted by
    /// `magnitude·e₁`.
    Tilt,
}

/// A regression instance with a known regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedRegression {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    /// Covariates before corruption; the error metric's `Σ` comes from these.
    pub clean_x: DMatrix<f64>,
    pub truth: DVector<f64>,
    pub corrupted: Vec<bool>,
}

/// Covariates uniform on the unit sphere (so `E[xxᵀ] = I/d`), regressor
/// with uniform `[-1, 1]` entries and Gaussian noise of scale `gamma`;
/// `⌊εn⌋` points are corrupted.
#[allow(clippy::too_many_arguments)]
pub fn planted_regression(
    d: usize,
    n: usize,
    epsilon: f64,
    magnitude: f64,
    gamma: f64,
    adversary: BenchAdversary,
    corrupt_covariates: bool,
    seed: u64,
) -> PlantedRegression {
    let mut rng = stream_rng(seed, TRAJECTORY_STREAM);
    let truth = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
    let mut clean_x = DMatrix::zeros(n, d);
    for i in 0..n {
        let g = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        clean_x.set_row(i, &(g.normalize()).transpose());
    }
    let noise = DVector::from_fn(n, |_, _| gamma * rng.sample::<f64, _>(StandardNormal));
    let mut y = &clean_x * &truth + &noise;
    let mut x = clean_x.clone();

    let mut adv = stream_rng(seed, ADVERSARY_STREAM);
    let direction = DVector::from_fn(d, |_, _| adv.sample::<f64, _>(StandardNormal)).normalize();
    let tilted = &truth + direction * magnitude;
    let mut corrupted = vec![false; n];
    for i in index::sample(&mut adv, n, contamination_budget(epsilon, n)) {
        corrupted[i] = true;
        match adversary {
            BenchAdversary::Outlier => {
                if corrupt_covariates {
                    x.row_mut(i).fill(0.0);
                    x[(i, 0)] = 1.0;
                }
                y[i] = magnitude;
            }
            BenchAdversary::Tilt => y[i] = x.row(i).dot(&tilted.transpose()) + noise[i],
        }
    }
    PlantedRegression { x, y, clean_x, truth, corrupted }
}

/// Samples from `N(μ, I)` with `μ` uniform in `[-1, 1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedMean {
    pub samples: DMatrix<f64>,
    pub truth: DVector<f64>,
    pub corrupted: Vec<bool>,
}

pub fn planted_mean(d: usize, n: usize, epsilon: f64, magnitude: f64, adversary: BenchAdversary, seed: u64) -> PlantedMean {
    let mut rng = stream_rng(seed, TRAJECTORY_STREAM);
    let truth = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
    let mut samples = DMatrix::from_fn(n, d, |_, j| truth[j] + rng.sample::<f64, _>(StandardNormal));
    let mut adv = stream_rng(seed, ADVERSARY_STREAM);
    let mut corrupted = vec![false; n];
    for i in index::sample(&mut adv, n, contamination_budget(epsilon, n)) {
        corrupted[i] = true;
        match adversary {
            BenchAdversary::Outlier => {
                samples.set_row(i, &truth.transpose());
                samples[(i, 0)] += magnitude;
            }
            BenchAdversary::Tilt => samples[(i, 0)] += magnitude,
        }
    }
    PlantedMean { samples, truth, corrupted }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub estimators: Vec<BenchEstimator>,
    pub d: usize,
    pub n: usize,
    pub epsilons: Vec<f64>,
    pub magnitude: f64,
    /// Regression noise scale.
    pub gamma: f64,
    pub adversary: BenchAdversary,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub estimator: String,
    pub d: usize,
    pub n: usize,
    pub epsilon: f64,
    pub magnitude: f64,
    pub seed: u64,
    pub err_l2: f64,
    /// `‖ω − ω*‖_Σ` over clean covariates; equals `err_l2` for means.
    pub err_sigma: f64,
    /// Error of least squares or of the empirical mean.
    pub naive_err: f64,
}

fn bench_one(cfg: &BenchConfig, est: BenchEstimator, epsilon: f64, seed: u64) -> Result<BenchRow, ExpError> {
    let (err_l2, err_sigma, naive_err) = match est {
        BenchEstimator::Filter => {
            let p = planted_mean(cfg.d, cfg.n, epsilon, cfg.magnitude, cfg.adversary, seed);
            let fit = filter_mean(&p.samples, epsilon, 1.0, seed)?;
            let naive = p.samples.row_mean().transpose();
            let err = (fit.estimate - &p.truth).norm();
            (err, err, (naive - &p.truth).norm())
        }
        BenchEstimator::Scram | BenchEstimator::Rls => {
            let rls = est == BenchEstimator::Rls;
            let p = planted_regression(cfg.d, cfg.n, epsilon, cfg.magnitude, cfg.gamma, cfg.adversary, rls, seed);
            let problem = RegressionProblem::new(p.x.clone(), p.y.clone())
                .with_epsilon(epsilon)
                .with_gamma(cfg.gamma.max(1e-12))
                .with_seed(seed);
            let fit = if rls {
                rls_fit(&problem, 1.0 / cfg.d as f64)?
            } else {
                scram_fit(&problem.with_radius(2.0 * (cfg.d as f64).sqrt()))?
            };
            let naive = ridge_fit(&p.x, &p.y, 0.0)?;
            let diff = &fit.estimate - &p.truth;
            (diff.norm(), sigma_norm(&p.clean_x, &diff), (naive.estimate - &p.truth).norm())
        }
    };
    Ok(BenchRow {
        estimator: est.name().into(),
        d: cfg.d,
        n: cfg.n,
        epsilon,
        magnitude: cfg.magnitude,
        seed,
        err_l2,
        err_sigma,
        naive_err,
    })
}

/// Runs every `(estimator, ε, seed)` combination in parallel; rows come
/// back in that nested order.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>, ExpError> {
    if cfg.d == 0 || cfg.n == 0 || cfg.estimators.is_empty() || cfg.epsilons.is_empty() || cfg.seeds.is_empty() {
        return Err(ExpError::Config("bench needs d, n, estimators, epsilons and seeds".into()));
    }
    let jobs: Vec<(BenchEstimator, f64, u64)> = cfg
        .estimators
        .iter()
        .flat_map(|&e| cfg.epsilons.iter().flat_map(move |&eps| cfg.seeds.iter().map(move |&s| (e, eps, s))))
        .collect();
    jobs.par_iter().map(|&(e, eps, s)| bench_one(cfg, e, eps, s)).collect()
}

pub fn write_bench_csv(out: impl Write, rows: &[BenchRow]) -> Result<(), ExpError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["estimator", "d", "n", "epsilon", "magnitude", "seed", "err_l2", "err_sigma", "naive_err"])?;
    for r in rows {
        w.write_record([
            r.estimator.clone(),
            r.d.to_string(),
            r.n.to_string(),
            r.epsilon.to_string(),
            r.magnitude.to_string(),
            r.seed.to_string(),
            r.err_l2.to_string(),
            r.err_sigma.to_string(),
            r.naive_err.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
