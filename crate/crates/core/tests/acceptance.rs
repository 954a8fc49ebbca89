//! Acceptance gate. Each test prints one `C<n> PASS|FAIL ...` line to
//! stderr (uncaptured) before asserting.

use std::io::Write;
use std::time::Instant;

use mgx::coverage::check_assumptions_exact;
use mgx::datagen::{
    corrupt, least_covered_attack, sample_dataset, Adversary, BehaviorPolicy, ContaminationModel, CorruptionSpec,
    TupleTarget,
};
use mgx::estimators::filter_mean;
use mgx::expcli::{planted_mean, run_bench, BenchAdversary, BenchConfig, BenchEstimator};
use mgx::game::{
    ne_backward_induction, solve_matrix_game, subopt_gap_at_start, Features, GameShape, InitialState, TabularMG,
    DEFAULT_TOL,
};
use mgx::instances::{build_agnostic_pair, build_tree_pair, indistinguishable, random_tabular};
use mgx::pmvi::{
    bellman_error_diagnostics, f_pmvi, pessimism_holds, robust_pmvi, BonusKind, BonusSpec, EstimatorConfig,
    EstimatorKind, FilterPmviConfig,
};
use mgx::rng::stream_rng;
use nalgebra::DMatrix;
use rand::Rng;

fn report(id: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "{id} {verdict} {detail}");
}

/// Least-squares slope of `ln y` against `ln x`.
fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `max_a (Q y)_a − min_b (xᵀ Q)_b`, computed from the strategies alone.
fn independent_gap(q: &DMatrix<f64>, x: &[f64], y: &[f64]) -> f64 {
    let (rows, cols) = q.shape();
    let best_row = (0..rows)
        .map(|a| (0..cols).map(|b| q[(a, b)] * y[b]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let best_col = (0..cols)
        .map(|b| (0..rows).map(|a| q[(a, b)] * x[a]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    best_row - best_col
}

fn is_simplex(p: &[f64]) -> bool {
    p.iter().all(|v| *v >= -1e-12) && (p.iter().sum::<f64>() - 1.0).abs() <= 1e-9
}

#[test]
fn c01_ne_oracle() {
    let start = Instant::now();
    let mut rng = stream_rng(2024, 0);
    let mut worst_matrix: f64 = 0.0;
    let mut simplex_ok = true;
    for _ in 0..1000 {
        let rows = rng.random_range(1..=8);
        let cols = rng.random_range(1..=8);
        let q = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-5.0..=5.0));
        let sol = solve_matrix_game(&q, DEFAULT_TOL).unwrap();
        simplex_ok &= is_simplex(&sol.x) && is_simplex(&sol.y);
        worst_matrix = worst_matrix.max(independent_gap(&q, &sol.x, &sol.y));
    }
    let mut worst_game: f64 = 0.0;
    for seed in 0..200u64 {
        let states = rng.random_range(1..=3);
        let a = rng.random_range(1..=3);
        let b = rng.random_range(1..=3);
        let horizon = rng.random_range(1..=3);
        let mg = random_tabular(states, a, b, horizon, 0.0, seed).unwrap();
        let ne = ne_backward_induction(&mg).unwrap();
        worst_game = worst_game.max(subopt_gap_at_start(&mg, &ne.pair).unwrap().abs());
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = simplex_ok && worst_matrix <= 1e-9 && worst_game <= 1e-8 && secs < 60.0;
    report(
        "C1",
        pass,
        format!("matrix gap {worst_matrix:.2e}, game subopt {worst_game:.2e}, {secs:.1}s"),
    );
    assert!(pass);
}

#[test]
fn c02_tree_values() {
    let mut details = Vec::new();
    let mut pass = true;
    for (states, a, b, horizon, alpha) in [(3, 2, 2, 4, 0.1), (7, 2, 2, 6, 0.05)] {
        let pair = build_tree_pair(states, a, b, horizon, alpha).unwrap();
        let h = horizon as f64;
        let q = pair.q as f64;
        let ne = ne_backward_induction(&pair.g).unwrap();
        let ne_prime = ne_backward_induction(&pair.g_prime).unwrap();
        let v = ne.start_value(&pair.g);
        let v_prime = ne_prime.start_value(&pair.g_prime);
        let cross = subopt_gap_at_start(&pair.g, &ne_prime.pair).unwrap();
        pass &= (v - h * alpha).abs() <= 1e-9
            && (v_prime - (2.0 * h - q) * alpha).abs() <= 1e-9
            && cross >= (h - q) * alpha - 1e-9;
        details.push(format!("S={states} H={horizon} q={} V={v:.6} V'={v_prime:.6} cross={cross:.6}", pair.q));
    }
    report("C2", pass, details.join("; "));
    assert!(pass);
}

#[test]
fn c03_lower_bound_phenomenon() {
    let pair = build_tree_pair(3, 2, 2, 4, 0.1).unwrap();
    let shape = pair.g.shape();
    let eps = 2.0 * pair.alpha / shape.tuples() as f64;
    let threshold = 0.5 * (shape.horizon - pair.q) as f64 * pair.alpha;
    let features = Features::one_hot(shape);
    let cfg = |seed| EstimatorConfig {
        kind: EstimatorKind::Ridge,
        epsilon: 0.0,
        gamma: 0.0,
        seed,
    };
    let seeds = 200u64;
    let mut hits = 0;
    for seed in 0..seeds {
        let clean = sample_dataset(&pair.g, &pair.rho, 2000, seed).unwrap();
        let attacked = least_covered_attack(&clean, &pair, eps).unwrap();
        let out = robust_pmvi(attacked.observations(), &features, &cfg(seed), &BonusSpec::zero(), 0.1).unwrap();
        if subopt_gap_at_start(&pair.g, &out.pair).unwrap() >= threshold {
            hits += 1;
        }
    }
    let freq = hits as f64 / seeds as f64;
    let pass = freq >= 0.25;
    report("C3", pass, format!("gap >= {threshold:.3} on {hits}/{seeds} seeds ({freq:.3})"));
    assert!(pass);
}

#[test]
fn c04_filter_contract() {
    let start = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for eps in [0.02, 0.05, 0.1] {
        let mut good = 0;
        let mut naive_ok = 0;
        for seed in 0..100u64 {
            let p = planted_mean(20, 20_000, eps, 50.0, BenchAdversary::Outlier, seed);
            let fit = filter_mean(&p.samples, eps, 1.0, seed).unwrap();
            if (fit.estimate - &p.truth).norm() <= 5.0 * eps.sqrt() {
                good += 1;
            }
            let naive = p.samples.row_mean().transpose();
            if (naive - &p.truth).norm() >= 0.8 * 50.0 * eps {
                naive_ok += 1;
            }
        }
        pass &= good >= 95 && naive_ok == 100;
        details.push(format!("eps={eps}: filter {good}/100, naive {naive_ok}/100"));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 120.0;
    report("C4", pass, format!("{}; {secs:.1}s", details.join(", ")));
    assert!(pass);
}

#[test]
fn c05_regression_slopes() {
    let epsilons = vec![0.02, 0.05, 0.1, 0.15, 0.2];
    let cfg = BenchConfig {
        estimators: vec![BenchEstimator::Scram, BenchEstimator::Rls],
        d: 3,
        n: 40_000,
        epsilons: epsilons.clone(),
        magnitude: 1.5,
        gamma: 1.0,
        adversary: BenchAdversary::Tilt,
        seeds: (0..50).collect(),
    };
    let rows = run_bench(&cfg).unwrap();
    let mut pass = true;
    let mut details = Vec::new();
    for est in ["scram", "rls"] {
        let curve: Vec<f64> = epsilons
            .iter()
            .map(|e| {
                let errs: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.estimator == est && r.epsilon == *e)
                    .map(|r| r.err_sigma)
                    .collect();
                mean(&errs)
            })
            .collect();
        let slope = log_log_slope(&epsilons, &curve);
        pass &= (0.8..=1.2).contains(&slope);
        details.push(format!("{est} slope {slope:.3}"));
    }
    report("C5", pass, details.join(", "));
    assert!(pass);
}

#[test]
fn c06_sandwich_and_pessimism() {
    let (k, eps, delta, gamma) = (2000, 0.05, 0.1, 0.1);
    let seeds = 100u64;
    let mut sandwich = 0;
    let mut pessimistic = 0;
    for seed in 0..seeds {
        let states = 1 + (seed % 3) as usize;
        let a = 1 + ((seed / 3) % 3) as usize;
        let b = 2 + ((seed / 9) % 2) as usize;
        let horizon = 2 + ((seed / 18) % 2) as usize;
        let mg = random_tabular(states, a, b, horizon, gamma, 1000 + seed).unwrap();
        let shape = mg.shape();
        let rho = BehaviorPolicy::uniform(shape);
        let clean = sample_dataset(&mg, &rho, k, seed).unwrap();
        let spec = CorruptionSpec {
            epsilon: eps,
            model: ContaminationModel::ObservationsOnly,
            adversary: Adversary::RandomReplace,
            seed,
            replacements: None,
            space: None,
        };
        let data = corrupt(&clean, &spec).unwrap();
        let features = Features::one_hot(shape);
        let bonus =
            BonusSpec::calibrated(BonusKind::ScramLru, shape, features.dim(), k, eps, gamma, delta, 1.0).unwrap();
        let cfg = EstimatorConfig {
            kind: EstimatorKind::Scram,
            epsilon: eps,
            gamma,
            seed,
        };
        let out = robust_pmvi(data.observations(), &features, &cfg, &bonus, delta).unwrap();
        if bellman_error_diagnostics(&out, &mg).unwrap().sandwich_holds(1e-9) {
            sandwich += 1;
        }
        if pessimism_holds(&out, &mg, 1e-9).unwrap() {
            pessimistic += 1;
        }
    }
    let pass = sandwich >= 90 && pessimistic >= 90;
    report("C6", pass, format!("sandwich {sandwich}/{seeds}, pessimism {pessimistic}/{seeds}"));
    assert!(pass);
}

fn scram_clean_subopt(mg: &TabularMG, rho: &BehaviorPolicy, k: usize, seed: u64) -> f64 {
    let cfg = EstimatorConfig {
        kind: EstimatorKind::Scram,
        epsilon: 0.0,
        gamma: mg.gamma(),
        seed,
    };
    let data = sample_dataset(mg, rho, k, seed).unwrap();
    let out = robust_pmvi(data.observations(), &Features::one_hot(mg.shape()), &cfg, &BonusSpec::zero(), 0.1).unwrap();
    subopt_gap_at_start(mg, &out.pair).unwrap()
}

/// One state; the behavior policy favors `(a₁, b₁)`.
fn bandit_instance() -> (TabularMG, BehaviorPolicy) {
    let mg = random_tabular(1, 2, 2, 2, 0.1, 3).unwrap().with_initial(InitialState::Distribution(vec![1.0])).unwrap();
    let rho = BehaviorPolicy::stationary(mg.shape(), &[0.4, 0.2, 0.2, 0.2]).unwrap();
    (mg, rho)
}

fn f_pmvi_subopt(mg: &TabularMG, rho: &BehaviorPolicy, spec: &CorruptionSpec, use_filter: bool) -> f64 {
    let data = sample_dataset(mg, rho, 10_000, spec.seed).unwrap();
    let data = corrupt(&data, spec).unwrap();
    let cfg = FilterPmviConfig {
        epsilon: spec.epsilon,
        gamma: mg.gamma(),
        c_bonus: 0.1,
        use_filter,
        seed: spec.seed,
    };
    let out = f_pmvi(data.observations(), mg.shape(), &cfg).unwrap();
    subopt_gap_at_start(mg, &out.pair).unwrap()
}

#[test]
fn c07_rate_trends() {
    let mg = random_tabular(3, 2, 2, 3, 0.1, 5)
        .unwrap()
        .with_initial(InitialState::Distribution(vec![1.0 / 3.0; 3]))
        .unwrap();
    let rho = BehaviorPolicy::uniform(mg.shape());
    let small: Vec<f64> = (0..30).map(|s| scram_clean_subopt(&mg, &rho, 2000, s)).collect();
    let large: Vec<f64> = (0..30).map(|s| scram_clean_subopt(&mg, &rho, 8000, s)).collect();
    let ratio = mean(&small) / mean(&large);
    let k_ok = (1.6..=2.6).contains(&ratio);

    let (bandit, bandit_rho) = bandit_instance();
    let epsilons = [0.01, 0.02, 0.04, 0.08, 0.16];
    let curve: Vec<f64> = epsilons
        .iter()
        .map(|&eps| {
            let runs: Vec<f64> = (0..30u64)
                .map(|seed| {
                    let spec = CorruptionSpec {
                        epsilon: eps,
                        model: ContaminationModel::RewardOnly,
                        adversary: Adversary::DriftShift {
                            target: TupleTarget::new(0, 0, 0),
                            strength: 0.05,
                        },
                        seed,
                        replacements: None,
                        space: None,
                    };
                    f_pmvi_subopt(&bandit, &bandit_rho, &spec, true)
                })
                .collect();
            mean(&runs)
        })
        .collect();
    let slope = log_log_slope(&epsilons, &curve);
    let eps_ok = (0.35..=0.7).contains(&slope);
    let pass = k_ok && eps_ok;
    report("C7", pass, format!("K x4 shrink ratio {ratio:.3}, F-PMVI eps slope {slope:.3}"));
    assert!(pass);
}

#[test]
fn c08_robust_vs_naive() {
    let (mg, rho) = bandit_instance();
    let (mut robust, mut naive) = (Vec::new(), Vec::new());
    for seed in 0..30u64 {
        let spec = CorruptionSpec {
            epsilon: 0.1,
            model: ContaminationModel::RewardOnly,
            adversary: Adversary::TargetedReward {
                target: TupleTarget::new(0, 0, 0),
                value: 5.0,
            },
            seed,
            replacements: None,
            space: None,
        };
        robust.push(f_pmvi_subopt(&mg, &rho, &spec, true));
        naive.push(f_pmvi_subopt(&mg, &rho, &spec, false));
    }
    let (r, n) = (mean(&robust), mean(&naive));
    let pass = r <= 0.5 * n;
    report("C8", pass, format!("filtered {r:.4} vs sample-mean {n:.4} (ratio {:.3})", r / n));
    assert!(pass);
}

#[test]
fn c09_epsilon_zero_reduction() {
    let mg = random_tabular(3, 2, 2, 3, 0.1, 11).unwrap();
    let shape = mg.shape();
    let features = Features::one_hot(shape);
    let rho = BehaviorPolicy::uniform(shape);
    let mut identical = 0;
    for seed in 0..20u64 {
        let data = sample_dataset(&mg, &rho, 1000, seed).unwrap();
        let bonus = if seed % 2 == 0 {
            BonusSpec::zero()
        } else {
            BonusSpec::calibrated(BonusKind::ScramLru, shape, features.dim(), 1000, 0.0, 0.1, 0.1, 0.05).unwrap()
        };
        let run = |kind| {
            let cfg = EstimatorConfig {
                kind,
                epsilon: 0.0,
                gamma: 0.1,
                seed,
            };
            robust_pmvi(data.observations(), &features, &cfg, &bonus, 0.1).unwrap()
        };
        if run(EstimatorKind::Scram).pair == run(EstimatorKind::Ridge).pair {
            identical += 1;
        }
    }
    let pass = identical == 20;
    report("C9", pass, format!("identical pairs on {identical}/20 seeds"));
    assert!(pass);
}

/// Random game with a behavior policy whose rows have some zeroed entries.
fn sparse_behavior_instance(seed: u64) -> (TabularMG, BehaviorPolicy) {
    let mut rng = stream_rng(seed, 7);
    let horizon = rng.random_range(2..=3);
    let mg = random_tabular(2, 2, 2, horizon, 0.0, seed)
        .unwrap()
        .with_initial(InitialState::Distribution(vec![0.5, 0.5]))
        .unwrap();
    let shape = mg.shape();
    let joint = shape.max_actions * shape.min_actions;
    let zero_prob = if rng.random_bool(0.4) { 0.0 } else { rng.random_range(0.05..0.4) };
    let mut probs = Vec::with_capacity(horizon * shape.states * joint);
    for _ in 0..horizon * shape.states {
        let mut row: Vec<f64> = (0..joint)
            .map(|_| if rng.random::<f64>() < zero_prob { 0.0 } else { rng.random_range(0.05..1.0) })
            .collect();
        if row.iter().all(|v| *v == 0.0) {
            row[rng.random_range(0..joint)] = 1.0;
        }
        let total: f64 = row.iter().sum();
        probs.extend(row.iter().map(|v| v / total));
    }
    (mg, BehaviorPolicy::new(shape, probs).unwrap())
}

/// Smallest eigenvalue of `Σ_t d_h(t) φ(t)φ(t)ᵀ` over all steps.
fn covariance_floor(occupancy: &[Vec<f64>], features: &Features) -> f64 {
    let d = features.dim();
    occupancy
        .iter()
        .map(|mass| {
            let mut cov = DMatrix::zeros(d, d);
            for (t, m) in mass.iter().enumerate() {
                let phi = nalgebra::DVector::from_column_slice(features.phi(t));
                cov += &phi * phi.transpose() * *m;
            }
            cov.symmetric_eigen().eigenvalues.min()
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn c10_coverage_propositions() {
    let mut equivalence = 0;
    let mut chain = 0;
    for seed in 0..100u64 {
        let (mg, rho) = sparse_behavior_instance(seed);
        let shape: GameShape = mg.shape();
        let ne = ne_backward_induction(&mg).unwrap();
        let cov = check_assumptions_exact(&rho, &mg, &ne.pair).unwrap();
        if seed < 50 {
            let occupancy: Vec<Vec<f64>> = mgx::coverage::behavior_occupancy(&mg, &rho)
                .unwrap()
                .iter()
                .map(|q| q.flat().to_vec())
                .collect();
            let floor = covariance_floor(&occupancy, &Features::one_hot(shape));
            let unilateral_matches_c1 = cov.unilateral_ok == (cov.c1_hat > 0.0);
            let uniform_matches_eigen = cov.uniform_ok == (floor > 1e-12);
            if unilateral_matches_c1 && uniform_matches_eigen {
                equivalence += 1;
            }
        }
        let implies = |p: bool, q: bool| !p || q;
        if implies(cov.kappa_hat > 0.0, cov.uniform_ok)
            && implies(cov.uniform_ok, cov.unilateral_ok)
            && implies(cov.unilateral_ok, cov.c1_hat > 0.0)
            && implies(cov.c1_hat > 0.0, cov.single_ok)
        {
            chain += 1;
        }
    }
    let pass = equivalence == 50 && chain == 100;
    report("C10", pass, format!("equivalences {equivalence}/50, implication chain {chain}/100"));
    assert!(pass);
}

#[test]
fn c11_coupling_frequency() {
    let pair = build_agnostic_pair(0.2, 0.5, 200).unwrap();
    let trials = 2000u64;
    let same = (0..trials)
        .filter(|&seed| {
            let (d1, d2) = pair.sample_coupled(seed).unwrap();
            indistinguishable(&d1, &d2)
        })
        .count();
    let freq = same as f64 / trials as f64;
    let pass = freq >= 0.25 - 0.03;
    report("C11", pass, format!("indistinguishable on {same}/{trials} coupled pairs ({freq:.3})"));
    assert!(pass);
}
