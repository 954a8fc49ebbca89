//! Coverage of offline data: occupancy measures, the LRU constant, and the
//! single-policy / unilateral / uniform coverage checks for tabular games.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datagen::{BehaviorPolicy, DataError, Observations, Transition};
use crate::game::{
    subopt_gap_at_start, Features, GameError, GameShape, Policy, StageQ, StrategyPair, TabularMG,
};

/// Gap below which a pair counts as a Nash equilibrium.
pub const NE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CoverageError {
    #[error("strategy pair is not an NE: gap {0:.3e}")]
    NeRequired(f64),
    #[error("covariance matrix is not positive definite")]
    SingularCovariance,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// `d_h(s, a, b)` under a product policy pair, by forward recursion from
/// the game's initial distribution. Each step sums to 1.
pub fn occupancy_measure(mg: &TabularMG, pair: &StrategyPair) -> Result<Vec<StageQ>, CoverageError> {
    let shape = mg.shape();
    pair.check_shape(shape)?;
    forward_occupancy(mg, |h, s, a, b| pair.max.row(h, s)[a] * pair.min.row(h, s)[b])
}

/// `d^ρ_h(s, a, b)` under a joint behavior policy.
pub fn behavior_occupancy(mg: &TabularMG, rho: &BehaviorPolicy) -> Result<Vec<StageQ>, CoverageError> {
    if rho.shape() != mg.shape() {
        return Err(CoverageError::DimensionMismatch(format!(
            "behavior policy shape {:?} vs game {:?}",
            rho.shape(),
            mg.shape()
        )));
    }
    forward_occupancy(mg, |h, s, a, b| rho.prob(h, s, a, b))
}

fn forward_occupancy(
    mg: &TabularMG,
    joint: impl Fn(usize, usize, usize, usize) -> f64,
) -> Result<Vec<StageQ>, CoverageError> {
    let shape = mg.shape();
    let mut state = mg.start_distribution();
    let mut out = Vec::with_capacity(shape.horizon);
    for h in 0..shape.horizon {
        let mut d = vec![0.0; shape.tuples()];
        let mut next = vec![0.0; shape.states];
        for s in 0..shape.states {
            if state[s] == 0.0 {
                continue;
            }
            for a in 0..shape.max_actions {
                for b in 0..shape.min_actions {
                    let t = shape.tuple_index(s, a, b);
                    d[t] = state[s] * joint(h, s, a, b);
                    if d[t] > 0.0 {
                        for (n, p) in next.iter_mut().zip(mg.next_state_dist(h, s, a, b)) {
                            *n += d[t] * p;
                        }
                    }
                }
            }
        }
        out.push(StageQ::from_flat(shape, d)?);
        state = next;
    }
    Ok(out)
}

/// `Σ_h Σ_{s,a,b} d_h(s,a,b) f_h(s,a,b)` split per step.
pub fn expectation_per_step(occupancy: &[StageQ], values: &[StageQ]) -> Vec<f64> {
    occupancy
        .iter()
        .zip(values)
        .map(|(d, f)| d.flat().iter().zip(f.flat()).map(|(x, y)| x * y).sum())
        .collect()
}

/// `Λ_h = Σ φφᵀ + I` over one step's tuples.
pub fn sample_covariance(slice: &[Transition], features: &Features) -> DMatrix<f64> {
    let shape = features.shape();
    let d = features.dim();
    let mut lambda = DMatrix::identity(d, d);
    for t in slice {
        let phi = features.phi(shape.tuple_index(t.s, t.a, t.b));
        for i in 0..d {
            if phi[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                lambda[(i, j)] += phi[i] * phi[j];
            }
        }
    }
    lambda
}

/// `min_h λ_min(Σ_τ φφᵀ / K)` without the regularizer.
pub fn kappa_hat(obs: &Observations, features: &Features) -> Result<f64, CoverageError> {
    obs.check_shape(features.shape())?;
    let d = features.dim();
    let k = obs.k.max(1) as f64;
    let mut kappa = f64::INFINITY;
    for slice in obs.slices() {
        let sigma = (sample_covariance(&slice, features) - DMatrix::identity(d, d)) / k;
        let min = SymmetricEigen::new(sigma).eigenvalues.min();
        kappa = kappa.min(min.max(0.0));
    }
    Ok(if kappa.is_finite() { kappa } else { 0.0 })
}

/// Which player moves freely while the other is held at its NE strategy.
#[derive(Debug, Clone, Copy)]
enum Free<'a> {
    Max { fixed_min: &'a Policy },
    Min { fixed_max: &'a Policy },
}

/// `sup` over the free player's policies of the probability of visiting
/// `(s*, a*, b*)` at step `target_h`, for every target tuple at that step.
/// Deterministic Markov policies attain the sup since the visit probability
/// is linear in each decision rule.
fn max_visit(mg: &TabularMG, free: Free<'_>, target_h: usize) -> Vec<f64> {
    let shape = mg.shape();
    let start = mg.start_distribution();
    (0..shape.tuples())
        .map(|target| {
            let (ts, ta, tb) = shape.tuple_coords(target);
            let mut w: Vec<f64> = (0..shape.states)
                .map(|s| {
                    if s != ts {
                        return 0.0;
                    }
                    match free {
                        Free::Max { fixed_min } => fixed_min.row(target_h, s)[tb],
                        Free::Min { fixed_max } => fixed_max.row(target_h, s)[ta],
                    }
                })
                .collect();
            for h in (0..target_h).rev() {
                w = (0..shape.states)
                    .map(|s| {
                        let value = |a: usize, b: usize| -> f64 {
                            mg.next_state_dist(h, s, a, b).iter().zip(&w).map(|(p, v)| p * v).sum()
                        };
                        match free {
                            Free::Max { fixed_min } => (0..shape.max_actions)
                                .map(|a| {
                                    (0..shape.min_actions).map(|b| fixed_min.row(h, s)[b] * value(a, b)).sum()
                                })
                                .fold(0.0, f64::max),
                            Free::Min { fixed_max } => (0..shape.min_actions)
                                .map(|b| {
                                    (0..shape.max_actions).map(|a| fixed_max.row(h, s)[a] * value(a, b)).sum()
                                })
                                .fold(0.0, f64::max),
                        }
                    })
                    .collect();
            }
            start.iter().zip(&w).map(|(p, v)| p * v).sum()
        })
        .collect()
}

/// `m_h(s,a,b) = max(sup_ν d^{π*,ν}_h, sup_π d^{π,ν*}_h)` for every step.
pub fn unilateral_occupancy(mg: &TabularMG, ne: &StrategyPair) -> Result<Vec<StageQ>, CoverageError> {
    let shape = mg.shape();
    ne.check_shape(shape)?;
    (0..shape.horizon)
        .map(|h| {
            let vs_min = max_visit(mg, Free::Max { fixed_min: &ne.min }, h);
            let vs_max = max_visit(mg, Free::Min { fixed_max: &ne.max }, h);
            let m = vs_min.iter().zip(&vs_max).map(|(x, y)| x.max(*y)).collect();
            Ok(StageQ::from_flat(shape, m)?)
        })
        .collect()
}

fn require_ne(mg: &TabularMG, ne: &StrategyPair) -> Result<(), CoverageError> {
    let gap = subopt_gap_at_start(mg, ne)?;
    if gap > NE_TOLERANCE {
        return Err(CoverageError::NeRequired(gap));
    }
    Ok(())
}

/// Relative coverage `mass_h / m_h` minimized over tuples with `m_h > 0`,
/// clamped to `[0, 1]`. `mass` is `count / K` or an exact occupancy.
fn c1_from_mass(mass: &[StageQ], unilateral: &[StageQ]) -> (f64, Vec<f64>) {
    let per_h: Vec<f64> = mass
        .iter()
        .zip(unilateral)
        .map(|(d, m)| {
            d.flat()
                .iter()
                .zip(m.flat())
                .filter(|(_, m)| **m > 0.0)
                .map(|(d, m)| d / m)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let c1 = per_h.iter().copied().fold(f64::INFINITY, f64::min);
    (if c1.is_finite() { c1.clamp(0.0, 1.0) } else { 1.0 }, per_h)
}

fn empirical_mass(obs: &Observations, shape: GameShape) -> Result<Vec<StageQ>, CoverageError> {
    let k = obs.k.max(1) as f64;
    obs.counts(shape)
        .into_iter()
        .map(|c| Ok(StageQ::from_flat(shape, c.into_iter().map(|n| n as f64 / k).collect())?))
        .collect()
}

/// Empirical LRU constant `c₁`: the largest value in `[0, 1]` with
/// `count_h(s,a,b) ≥ c₁ K m_h(s,a,b)` at every tuple.
pub fn lru_constant(obs: &Observations, mg: &TabularMG, ne: &StrategyPair) -> Result<f64, CoverageError> {
    obs.check_shape(mg.shape())?;
    require_ne(mg, ne)?;
    let mass = empirical_mass(obs, mg.shape())?;
    Ok(c1_from_mass(&mass, &unilateral_occupancy(mg, ne)?).0)
}

/// Per-step detail of a [`CoverageReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCoverage {
    pub h: usize,
    /// Smallest data mass over all tuples.
    pub min_mass: f64,
    /// `λ_min(Σ φφᵀ / K)` at this step.
    pub kappa: f64,
    /// Step-wise relative coverage; `null` when no tuple has `m_h > 0`.
    pub c1: Option<f64>,
    pub uncovered_ne_tuples: usize,
    pub uncovered_unilateral_tuples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub kappa_hat: f64,
    /// LRU constant in `[0, 1]`; larger is better coverage.
    pub c1_hat: f64,
    /// `1 / c₁`, the reading in which smaller is better.
    pub c1_reciprocal: f64,
    pub single_ok: bool,
    pub unilateral_ok: bool,
    pub uniform_ok: bool,
    pub per_h: Vec<StepCoverage>,
}

/// Coverage flags and constants from data counts.
pub fn check_assumptions(
    obs: &Observations,
    mg: &TabularMG,
    ne: &StrategyPair,
) -> Result<CoverageReport, CoverageError> {
    obs.check_shape(mg.shape())?;
    let mass = empirical_mass(obs, mg.shape())?;
    report(&mass, mg, ne)
}

/// [`check_assumptions`] with the exact behavior occupancy `d^ρ` in place
/// of empirical frequencies, i.e. the infinite-data limit.
pub fn check_assumptions_exact(
    rho: &BehaviorPolicy,
    mg: &TabularMG,
    ne: &StrategyPair,
) -> Result<CoverageReport, CoverageError> {
    let mass = behavior_occupancy(mg, rho)?;
    report(&mass, mg, ne)
}

fn report(mass: &[StageQ], mg: &TabularMG, ne: &StrategyPair) -> Result<CoverageReport, CoverageError> {
    require_ne(mg, ne)?;
    let shape = mg.shape();
    let on_path = occupancy_measure(mg, ne)?;
    let unilateral = unilateral_occupancy(mg, ne)?;
    let (c1_hat, c1_per_h) = c1_from_mass(mass, &unilateral);
    let uncovered = |need: &StageQ, have: &StageQ| {
        need.flat().iter().zip(have.flat()).filter(|(n, h)| **n > 0.0 && **h <= 0.0).count()
    };
    let per_h: Vec<StepCoverage> = (0..shape.horizon)
        .map(|h| {
            let min_mass = mass[h].flat().iter().copied().fold(f64::INFINITY, f64::min);
            StepCoverage {
                h,
                min_mass,
                // One-hot features make the covariance diagonal.
                kappa: min_mass.max(0.0),
                c1: c1_per_h[h].is_finite().then(|| c1_per_h[h].clamp(0.0, 1.0)),
                uncovered_ne_tuples: uncovered(&on_path[h], &mass[h]),
                uncovered_unilateral_tuples: uncovered(&unilateral[h], &mass[h]),
            }
        })
        .collect();
    let kappa_hat = per_h.iter().map(|p| p.kappa).fold(f64::INFINITY, f64::min);
    Ok(CoverageReport {
        kappa_hat: if kappa_hat.is_finite() { kappa_hat } else { 0.0 },
        c1_hat,
        c1_reciprocal: 1.0 / c1_hat,
        single_ok: per_h.iter().all(|p| p.uncovered_ne_tuples == 0),
        unilateral_ok: per_h.iter().all(|p| p.uncovered_unilateral_tuples == 0),
        uniform_ok: per_h.iter().all(|p| p.min_mass > 0.0),
        per_h,
    })
}

/// `E_{pair}[‖φ‖_{Λ_h⁻¹}]` for each step, from exact occupancies.
pub fn expected_feature_norm(
    mg: &TabularMG,
    pair: &StrategyPair,
    lambdas: &[DMatrix<f64>],
    features: &Features,
) -> Result<Vec<f64>, CoverageError> {
    let shape = mg.shape();
    if features.shape() != shape || lambdas.len() != shape.horizon {
        return Err(CoverageError::DimensionMismatch(format!(
            "need {} covariances over features of shape {:?}",
            shape.horizon, shape
        )));
    }
    let occupancy = occupancy_measure(mg, pair)?;
    let d = features.dim();
    let mut norms = Vec::with_capacity(shape.horizon);
    for (lambda, occ) in lambdas.iter().zip(&occupancy) {
        if lambda.nrows() != d || lambda.ncols() != d {
            return Err(CoverageError::DimensionMismatch(format!(
                "covariance is {}x{}, features have dimension {d}",
                lambda.nrows(),
                lambda.ncols()
            )));
        }
        let chol = Cholesky::new(lambda.clone()).ok_or(CoverageError::SingularCovariance)?;
        let values: Vec<f64> = (0..shape.tuples())
            .map(|t| {
                let phi = nalgebra::DVector::from_column_slice(features.phi(t));
                phi.dot(&chol.solve(&phi)).max(0.0).sqrt()
            })
            .collect();
        norms.push(occ.flat().iter().zip(&values).map(|(p, v)| p * v).sum());
    }
    Ok(norms)
}

/// `E_{π*,ν′}[‖φ‖_{Λ_h⁻¹}] + E_{π′,ν*}[‖φ‖_{Λ_h⁻¹}]` for each step.
pub fn expected_bonus_norm(
    mg: &TabularMG,
    ne: &StrategyPair,
    lower_min: &Policy,
    upper_max: &Policy,
    lambdas: &[DMatrix<f64>],
    features: &Features,
) -> Result<Vec<f64>, CoverageError> {
    let vs_lower = StrategyPair { max: ne.max.clone(), min: lower_min.clone() };
    let vs_upper = StrategyPair { max: upper_max.clone(), min: ne.min.clone() };
    let a = expected_feature_norm(mg, &vs_lower, lambdas, features)?;
    let b = expected_feature_norm(mg, &vs_upper, lambdas, features)?;
    Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect())
}
