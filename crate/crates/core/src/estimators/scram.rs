//! Trimmed alternating minimization for regression with clean covariates.

use nalgebra::DVector;

use super::{
    rms, top_indices, weighted_ridge, EstimatorError, FitStatus, RegressionProblem, RobustFit,
};

/// Largest contamination level the trimmed fit accepts.
pub const MAX_SCRAM_EPSILON: f64 = 0.499;
pub const SCRAM_MAX_ITERATIONS: usize = 200;
const RELATIVE_TOL: f64 = 1e-8;

/// Alternates a weighted ridge fit, projected onto the `radius` ball, with a
/// weight update that removes total mass `εn` from the largest squared
/// residuals: the `⌊εn⌋` largest get weight 0 and the next one keeps the
/// fractional remainder.
///
/// With `ε = 0` this is the projected ridge fit.
pub fn scram_fit(prob: &RegressionProblem) -> Result<RobustFit, EstimatorError> {
    prob.validate()?;
    if prob.epsilon >= MAX_SCRAM_EPSILON {
        return Err(EstimatorError::EpsilonTooLarge(prob.epsilon));
    }
    let n = prob.n();
    let lambda = prob.ridge;
    let mut omega = project(weighted_ridge(&prob.x, &prob.y, None, lambda)?, prob.radius);
    let trim_mass = prob.epsilon * n as f64;
    if trim_mass == 0.0 {
        let residuals = &prob.y - &prob.x * &omega;
        return Ok(RobustFit {
            residual_sigma_estimate: rms(residuals.as_slice()),
            estimate: omega,
            iterations: 0,
            removed_count: 0,
            status: FitStatus::Converged,
        });
    }
    let full = trim_mass.floor() as usize;
    let partial = 1.0 - (trim_mass - full as f64);

    let mut weights = DVector::from_element(n, 1.0);
    let mut best: Option<(f64, DVector<f64>, DVector<f64>)> = None;
    let mut status = FitStatus::NotConverged;
    let mut iterations = 0;
    for it in 1..=SCRAM_MAX_ITERATIONS {
        iterations = it;
        let residuals = &prob.y - &prob.x * &omega;
        let sq: Vec<f64> = residuals.iter().map(|r| r * r).collect();
        let ranked = top_indices(&sq, full + 1);
        let mut next = DVector::from_element(n, 1.0);
        for (rank, &i) in ranked.iter().enumerate() {
            next[i] = if rank < full { 0.0 } else { partial };
        }
        let loss: f64 = sq.iter().zip(next.iter()).map(|(r, w)| r * w).sum();
        if best.as_ref().is_none_or(|(l, _, _)| loss < *l) {
            best = Some((loss, omega.clone(), next.clone()));
        }
        if it > 1 && next == weights {
            status = FitStatus::Converged;
            break;
        }
        weights = next;
        let updated = project(
            weighted_ridge(&prob.x, &prob.y, Some(&weights), lambda)?,
            prob.radius,
        );
        let step = (&updated - &omega).norm();
        omega = updated;
        if step <= RELATIVE_TOL * omega.norm().max(f64::MIN_POSITIVE) {
            status = FitStatus::Converged;
            break;
        }
    }
    if status == FitStatus::NotConverged {
        if let Some((_, w, wts)) = best {
            omega = w;
            weights = wts;
        }
    }
    let residuals = &prob.y - &prob.x * &omega;
    let kept: f64 = weights.sum();
    let sigma = (residuals
        .iter()
        .zip(weights.iter())
        .map(|(r, w)| w * r * r)
        .sum::<f64>()
        / kept.max(1.0))
    .sqrt();
    Ok(RobustFit {
        estimate: omega,
        iterations,
        removed_count: weights.iter().filter(|w| **w < 1.0).count(),
        residual_sigma_estimate: sigma,
        status,
    })
}

fn project(mut omega: DVector<f64>, radius: f64) -> DVector<f64> {
    let norm = omega.norm();
    if norm > radius {
        omega *= radius / norm;
        while omega.norm() > radius {
            omega *= 1.0 - 4.0 * f64::EPSILON;
        }
    }
    omega
}
