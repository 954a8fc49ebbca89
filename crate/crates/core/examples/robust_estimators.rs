//! Filtered mean and trimmed regressions against planted corruption.

use mgx::estimators::{filter_mean, ridge_fit, rls_fit, scram_fit, RegressionProblem};
use mgx::expcli::{planted_mean, planted_regression, BenchAdversary};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let eps = 0.1;
    let mean = planted_mean(20, 5000, eps, 50.0, BenchAdversary::Outlier, 0);
    let fit = filter_mean(&mean.samples, eps, 1.0, 0)?;
    let naive = mean.samples.row_mean().transpose();
    println!(
        "mean: filter error {:.3} ({} removed), empirical mean error {:.3}",
        (fit.estimate - &mean.truth).norm(),
        fit.removed_count,
        (naive - &mean.truth).norm()
    );

    let reg = planted_regression(5, 4000, eps, 100.0, 1.0, BenchAdversary::Outlier, false, 0);
    let problem = RegressionProblem::new(reg.x.clone(), reg.y.clone()).with_epsilon(eps).with_gamma(1.0);
    let scram = scram_fit(&problem.clone().with_radius(2.0 * 5f64.sqrt()))?;
    let ls = ridge_fit(&reg.x, &reg.y, 0.0)?;
    println!(
        "regression: trimmed error {:.3}, least squares error {:.3}",
        (scram.estimate - &reg.truth).norm(),
        (ls.estimate - &reg.truth).norm()
    );

    let reg = planted_regression(5, 4000, eps, 100.0, 1.0, BenchAdversary::Outlier, true, 1);
    let problem = RegressionProblem::new(reg.x.clone(), reg.y.clone()).with_epsilon(eps).with_gamma(1.0);
    let rls = rls_fit(&problem, 0.2)?;
    println!("corrupted covariates: filtered regression error {:.3}", (rls.estimate - &reg.truth).norm());
    Ok(())
}
