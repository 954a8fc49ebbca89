use mgx::estimators::{
    filter_mean, filter_mean_sparse, ridge_fit, rls_fit, scram_fit, sigma_norm, EstimatorError, FitStatus,
    RegressionProblem, SparseSample,
};
use mgx::expcli::{planted_mean, planted_regression, BenchAdversary};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

#[test]
fn ridge_satisfies_normal_equations() {
    let p = planted_regression(4, 200, 0.0, 0.0, 0.3, BenchAdversary::Outlier, false, 1);
    for lambda in [0.0, 1.0, 7.5] {
        let fit = ridge_fit(&p.x, &p.y, lambda).unwrap();
        let grad = p.x.tr_mul(&(&p.x * &fit.estimate - &p.y)) + &fit.estimate * lambda;
        assert!(grad.norm() < 1e-9, "lambda {lambda}: gradient {}", grad.norm());
    }
}

#[test]
fn one_dimensional_ridge_closed_form() {
    let x = DMatrix::from_column_slice(3, 1, &[0.5, -0.2, 1.0]);
    let y = DVector::from_column_slice(&[1.0, 0.0, 2.0]);
    let fit = ridge_fit(&x, &y, 2.0).unwrap();
    // (0.5 + 2.0) / (0.25 + 0.04 + 1.0 + 2.0)
    assert!((fit.estimate[0] - 2.5 / 3.29).abs() < 1e-14);
}

#[test]
fn scram_without_contamination_is_projected_ridge() {
    let p = planted_regression(5, 300, 0.0, 0.0, 0.5, BenchAdversary::Outlier, false, 2);
    let prob = RegressionProblem::new(p.x.clone(), p.y.clone()).with_ridge(1.0);
    let fit = scram_fit(&prob).unwrap();
    let ridge = ridge_fit(&p.x, &p.y, 1.0).unwrap();
    assert_eq!(fit.estimate, ridge.estimate);

    let tight = scram_fit(&prob.clone().with_radius(0.1)).unwrap();
    assert!((tight.estimate.norm() - 0.1).abs() < 1e-12);
    assert!((tight.estimate.normalize() - ridge.estimate.normalize()).norm() < 1e-12);
}

#[test]
fn scram_resists_target_outliers() {
    let p = planted_regression(5, 4000, 0.1, 100.0, 0.1, BenchAdversary::Outlier, false, 3);
    let prob = RegressionProblem::new(p.x.clone(), p.y.clone()).with_epsilon(0.1).with_gamma(0.1);
    let fit = scram_fit(&prob).unwrap();
    let naive = ridge_fit(&p.x, &p.y, 0.0).unwrap();
    let err = sigma_norm(&p.clean_x, &(&fit.estimate - &p.truth));
    let naive_err = sigma_norm(&p.clean_x, &(&naive.estimate - &p.truth));
    assert!(err < 0.05, "scram error {err}");
    assert!(naive_err > 20.0 * err, "naive {naive_err} vs scram {err}");
    assert!(fit.status == FitStatus::Converged);
}

#[test]
fn scram_rejects_half_contamination() {
    let p = planted_regression(2, 50, 0.0, 0.0, 0.1, BenchAdversary::Outlier, false, 0);
    let prob = RegressionProblem::new(p.x, p.y).with_epsilon(0.5);
    assert!(matches!(scram_fit(&prob), Err(EstimatorError::EpsilonTooLarge(_))));
}

#[test]
fn rls_resists_covariate_outliers() {
    let p = planted_regression(4, 4000, 0.05, 50.0, 0.1, BenchAdversary::Outlier, true, 4);
    let prob = RegressionProblem::new(p.x.clone(), p.y.clone()).with_epsilon(0.05);
    let fit = rls_fit(&prob, 0.25 / 2.0).unwrap();
    let naive = ridge_fit(&p.x, &p.y, 0.0).unwrap();
    let err = sigma_norm(&p.clean_x, &(&fit.estimate - &p.truth));
    let naive_err = sigma_norm(&p.clean_x, &(&naive.estimate - &p.truth));
    assert!(err < 0.1 * naive_err, "rls {err} vs naive {naive_err}");
}

#[test]
fn rls_reports_weak_coverage() {
    let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.01]);
    let y = DVector::from_element(4, 1.0);
    let prob = RegressionProblem::new(x, y).with_epsilon(0.1);
    assert!(matches!(rls_fit(&prob, 0.1), Err(EstimatorError::CoverageTooWeak { .. })));
}

#[test]
fn filter_without_contamination_is_the_mean() {
    let m = planted_mean(3, 100, 0.0, 0.0, BenchAdversary::Outlier, 5);
    let fit = filter_mean(&m.samples, 0.0, 1.0, 0).unwrap();
    let mean = m.samples.row_mean().transpose();
    assert!((fit.estimate - mean).norm() < 1e-12);
    assert_eq!(fit.removed_count, 0);
}

#[test]
fn filter_removes_planted_outliers() {
    let m = planted_mean(10, 5000, 0.1, 30.0, BenchAdversary::Outlier, 6);
    let fit = filter_mean(&m.samples, 0.1, 1.0, 1).unwrap();
    let naive = (m.samples.row_mean().transpose() - &m.truth).norm();
    let err = (&fit.estimate - &m.truth).norm();
    assert!(err < 0.3, "filter error {err}");
    assert!(naive > 2.5, "naive error {naive}");
    assert!(fit.removed_count <= 1000);
}

#[test]
fn dense_filter_needs_more_rows_than_columns() {
    let samples = DMatrix::zeros(3, 3);
    assert!(matches!(filter_mean(&samples, 0.1, 1.0, 0), Err(EstimatorError::TooFewSamples { .. })));
}

fn to_sparse(samples: &DMatrix<f64>) -> Vec<SparseSample> {
    samples
        .row_iter()
        .map(|row| {
            let index = row.iter().position(|v| *v != 0.0).unwrap_or(0);
            SparseSample {
                index,
                value: row[index],
            }
        })
        .collect()
}

fn one_hot_rows(rows: &[(usize, f64)], dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows.len(), dim);
    for (i, (j, v)) in rows.iter().enumerate() {
        m[(i, *j)] = *v;
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sparse_and_dense_filters_agree(
        rows in prop::collection::vec((0..4usize, -3.0..3.0f64), 12..80),
        outliers in prop::collection::vec(20.0..40.0f64, 0..6),
        eps in 0.0..0.2f64,
        seed in any::<u64>(),
    ) {
        let mut all = rows.clone();
        all.extend(outliers.iter().map(|v| (0, *v)));
        let dense = one_hot_rows(&all, 4);
        let a = filter_mean(&dense, eps, 1.0, seed).unwrap();
        let b = filter_mean_sparse(&to_sparse(&dense), 4, eps, 1.0, seed).unwrap();
        prop_assert!((&a.estimate - &b.estimate).norm() < 1e-9);
        prop_assert_eq!(a.removed_count, b.removed_count);
        prop_assert_eq!(a.status, b.status);
    }

    #[test]
    fn filter_removal_is_capped(
        n in 20..200usize, eps in 0.01..0.3f64, magnitude in 0.0..100.0f64, seed in any::<u64>()
    ) {
        let m = planted_mean(3, n, eps, magnitude, BenchAdversary::Outlier, seed);
        let fit = filter_mean(&m.samples, eps, 1.0, seed).unwrap();
        prop_assert!(fit.removed_count as f64 <= 2.0 * eps * n as f64 + 1e-9);
    }

    #[test]
    fn scram_stays_in_the_ball(eps in 0.0..0.3f64, radius in 0.1..3.0f64, seed in any::<u64>()) {
        let p = planted_regression(3, 120, eps, 20.0, 0.2, BenchAdversary::Outlier, false, seed);
        let prob = RegressionProblem::new(p.x, p.y).with_epsilon(eps).with_radius(radius);
        let fit = scram_fit(&prob).unwrap();
        prop_assert!(fit.estimate.norm() <= radius + 1e-9);
        prop_assert!(fit.estimate.iter().all(|v| v.is_finite()));
    }
}
