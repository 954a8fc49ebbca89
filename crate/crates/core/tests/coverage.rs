use mgx::coverage::{
    behavior_occupancy, check_assumptions, check_assumptions_exact, expected_feature_norm, kappa_hat, lru_constant,
    occupancy_measure, unilateral_occupancy, CoverageError,
};
use mgx::datagen::{sample_dataset, BehaviorPolicy};
use mgx::game::{ne_backward_induction, Features, InitialState, Policy, StrategyPair};
use mgx::instances::random_tabular;
use nalgebra::DMatrix;

fn deterministic_policies(horizon: usize, states: usize, actions: usize) -> Vec<Policy> {
    let cells = horizon * states;
    (0..actions.pow(cells as u32))
        .map(|mut code| {
            let choice: Vec<usize> = (0..cells)
                .map(|_| {
                    let a = code % actions;
                    code /= actions;
                    a
                })
                .collect();
            Policy::deterministic(horizon, states, actions, &choice).unwrap()
        })
        .collect()
}

#[test]
fn occupancy_is_a_distribution_per_step() {
    let mg = random_tabular(3, 2, 3, 4, 0.0, 2).unwrap();
    let occ = occupancy_measure(&mg, &StrategyPair::uniform(mg.shape())).unwrap();
    for d in occ {
        assert!((d.flat().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn behavior_occupancy_matches_sampled_frequencies() {
    let mg = random_tabular(3, 2, 2, 3, 0.0, 8).unwrap();
    let rho = BehaviorPolicy::uniform(mg.shape());
    let k = 40_000;
    let d = sample_dataset(&mg, &rho, k, 1).unwrap();
    let exact = behavior_occupancy(&mg, &rho).unwrap();
    let counts = d.observations().counts(mg.shape());
    for (h, per_h) in counts.iter().enumerate() {
        for (t, &c) in per_h.iter().enumerate() {
            let p = exact[h].flat()[t];
            let sd = (p * (1.0 - p) / k as f64).sqrt();
            assert!((c as f64 / k as f64 - p).abs() <= 5.0 * sd + 1e-12, "h {h} tuple {t}");
        }
    }
}

#[test]
fn unilateral_occupancy_matches_enumeration() {
    let mg = random_tabular(2, 2, 2, 3, 0.0, 13).unwrap();
    let mg = mg.with_initial(InitialState::Distribution(vec![0.3, 0.7])).unwrap();
    let shape = mg.shape();
    let ne = ne_backward_induction(&mg).unwrap().pair;
    let m = unilateral_occupancy(&mg, &ne).unwrap();

    let mut brute = vec![vec![0.0f64; shape.tuples()]; shape.horizon];
    let mut absorb = |pair: StrategyPair| {
        for (h, d) in occupancy_measure(&mg, &pair).unwrap().iter().enumerate() {
            for (b, x) in brute[h].iter_mut().zip(d.flat()) {
                *b = b.max(*x);
            }
        }
    };
    for pi in deterministic_policies(shape.horizon, shape.states, shape.max_actions) {
        absorb(StrategyPair { max: pi, min: ne.min.clone() });
    }
    for nu in deterministic_policies(shape.horizon, shape.states, shape.min_actions) {
        absorb(StrategyPair { max: ne.max.clone(), min: nu });
    }
    for h in 0..shape.horizon {
        for (x, y) in m[h].flat().iter().zip(&brute[h]) {
            assert!((x - y).abs() < 1e-12, "h {h}: {x} vs {y}");
        }
    }
}

#[test]
fn kappa_of_one_hot_features_is_the_smallest_frequency() {
    let mg = random_tabular(2, 2, 2, 2, 0.0, 3).unwrap();
    let mg = mg.with_initial(InitialState::Distribution(vec![0.5, 0.5])).unwrap();
    let k = 500;
    let d = sample_dataset(&mg, &BehaviorPolicy::uniform(mg.shape()), k, 4).unwrap();
    let counts = d.observations().counts(mg.shape());
    let oracle = counts.iter().flatten().copied().min().unwrap() as f64 / k as f64;
    let got = kappa_hat(d.observations(), &Features::one_hot(mg.shape())).unwrap();
    assert!((got - oracle).abs() < 1e-12);
    assert!(got > 0.0);
}

#[test]
fn coverage_requires_an_equilibrium() {
    let mg = random_tabular(3, 2, 2, 3, 0.0, 1).unwrap();
    let d = sample_dataset(&mg, &BehaviorPolicy::uniform(mg.shape()), 50, 0).unwrap();
    let uniform = StrategyPair::uniform(mg.shape());
    assert!(matches!(lru_constant(d.observations(), &mg, &uniform), Err(CoverageError::NeRequired(_))));
}

#[test]
fn full_support_behavior_covers_everything() {
    let mg = random_tabular(3, 2, 2, 3, 0.0, 6).unwrap();
    let mg = mg.with_initial(InitialState::Distribution(vec![0.2, 0.3, 0.5])).unwrap();
    let ne = ne_backward_induction(&mg).unwrap().pair;
    let rho = BehaviorPolicy::uniform(mg.shape());
    let exact = check_assumptions_exact(&rho, &mg, &ne).unwrap();
    assert!(exact.uniform_ok && exact.unilateral_ok && exact.single_ok);
    assert!(exact.c1_hat > 0.0 && exact.c1_hat <= 1.0);
    assert!((exact.c1_reciprocal * exact.c1_hat - 1.0).abs() < 1e-12);

    let d = sample_dataset(&mg, &rho, 2000, 2).unwrap();
    let empirical = check_assumptions(d.observations(), &mg, &ne).unwrap();
    assert!(empirical.uniform_ok);
    assert!((empirical.c1_hat - lru_constant(d.observations(), &mg, &ne).unwrap()).abs() < 1e-15);
}

#[test]
fn one_hot_feature_norm_under_identity_is_one() {
    let mg = random_tabular(2, 3, 2, 2, 0.0, 9).unwrap();
    let shape = mg.shape();
    let lambdas = vec![DMatrix::identity(shape.tuples(), shape.tuples()); shape.horizon];
    let norms =
        expected_feature_norm(&mg, &StrategyPair::uniform(shape), &lambdas, &Features::one_hot(shape)).unwrap();
    assert!(norms.iter().all(|n| (n - 1.0).abs() < 1e-12));
    let scaled = vec![DMatrix::identity(shape.tuples(), shape.tuples()) * 4.0; shape.horizon];
    let norms =
        expected_feature_norm(&mg, &StrategyPair::uniform(shape), &scaled, &Features::one_hot(shape)).unwrap();
    assert!(norms.iter().all(|n| (n - 0.5).abs() < 1e-12));
}
