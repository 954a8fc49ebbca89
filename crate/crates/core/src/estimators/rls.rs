//! Influence-filtered least squares for data with corrupted covariates.

use nalgebra::{DMatrix, DVector};

use super::{
    rms, solve_spd, top_indices, weighted_ridge, EstimatorError, FitStatus, RegressionProblem,
    RobustFit,
};

const PASSES: usize = 2;

/// Two passes of: ridge fit on the current survivors, then drop the `⌈εn⌉`
/// points with the largest influence `|r_i| · ‖x_i‖_{Σ̂⁻¹}` (residual times
/// leverage under the survivors' covariance). Ends with an unregularized
/// refit on the final survivors.
///
/// Fails with [`EstimatorError::CoverageTooWeak`] when `λ_min(XᵀX/n) < κ/2`.
pub fn rls_fit(prob: &RegressionProblem, kappa: f64) -> Result<RobustFit, EstimatorError> {
    prob.validate()?;
    if prob.epsilon >= 0.5 {
        return Err(EstimatorError::EpsilonTooLarge(prob.epsilon));
    }
    let n = prob.n();
    let d = prob.d();
    let gram = prob.x.tr_mul(&prob.x) / n as f64;
    let lambda_min = gram.clone().symmetric_eigenvalues().min();
    if lambda_min < kappa / 2.0 {
        return Err(EstimatorError::CoverageTooWeak {
            observed: lambda_min,
            required: kappa / 2.0,
        });
    }
    if prob.epsilon == 0.0 {
        let omega = weighted_ridge(&prob.x, &prob.y, None, 0.0)?;
        let residuals = &prob.y - &prob.x * &omega;
        return Ok(RobustFit {
            residual_sigma_estimate: rms(residuals.as_slice()),
            estimate: omega,
            iterations: 0,
            removed_count: 0,
            status: FitStatus::Converged,
        });
    }

    let drop = ((prob.epsilon * n as f64).ceil() as usize).min(n.saturating_sub(d + 1));
    let stabilizer = prob.ridge.max(1e-9 * n as f64);
    let mut keep = DVector::from_element(n, 1.0);
    let mut previous: Option<Vec<usize>> = None;
    let mut status = FitStatus::NotConverged;
    for _ in 0..PASSES {
        let omega = weighted_ridge(&prob.x, &prob.y, Some(&keep), stabilizer)?;
        let scores = influence_scores(&prob.x, &prob.y, &keep, &omega, stabilizer)?;
        let mut removed = top_indices(&scores, drop);
        removed.sort_unstable();
        keep.fill(1.0);
        for &i in &removed {
            keep[i] = 0.0;
        }
        if previous.as_ref() == Some(&removed) {
            status = FitStatus::Converged;
        }
        previous = Some(removed);
    }
    let omega = weighted_ridge(&prob.x, &prob.y, Some(&keep), 0.0)?;
    let residuals = &prob.y - &prob.x * &omega;
    let survivors: Vec<f64> = residuals
        .iter()
        .zip(keep.iter())
        .filter(|(_, k)| **k > 0.0)
        .map(|(r, _)| *r)
        .collect();
    Ok(RobustFit {
        estimate: omega,
        iterations: PASSES,
        removed_count: drop,
        residual_sigma_estimate: rms(&survivors),
        status,
    })
}

fn influence_scores(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    keep: &DVector<f64>,
    omega: &DVector<f64>,
    stabilizer: f64,
) -> Result<Vec<f64>, EstimatorError> {
    let d = x.ncols();
    let count = keep.sum().max(1.0);
    let mut wx = x.clone();
    for mut col in wx.column_iter_mut() {
        col.component_mul_assign(keep);
    }
    let mut cov = x.tr_mul(&wx) / count;
    for i in 0..d {
        cov[(i, i)] += stabilizer / count;
    }
    let cov_inv = match cov.clone().cholesky() {
        Some(c) => c.inverse(),
        None => {
            let identity = DMatrix::identity(d, d);
            let cols: Vec<DVector<f64>> = (0..d)
                .map(|j| solve_spd(cov.clone(), &identity.column(j).into_owned(), 0.0))
                .collect::<Result<_, _>>()?;
            DMatrix::from_columns(&cols)
        }
    };
    let residuals = y - x * omega;
    let leverage = (x * &cov_inv).component_mul(x);
    Ok((0..x.nrows())
        .map(|i| residuals[i].abs() * leverage.row(i).sum().max(0.0).sqrt())
        .collect())
}
