use mgx::game::{ne_backward_induction, subopt_gap_at_start, GameShape};
use mgx::instances::{build_agnostic_pair, build_tree_pair, random_linear, random_tabular};

#[test]
fn tree_pair_values_small() {
    let pair = build_tree_pair(3, 2, 2, 4, 0.1).unwrap();
    assert_eq!(pair.q, 1);
    let g = ne_backward_induction(&pair.g).unwrap();
    let gp = ne_backward_induction(&pair.g_prime).unwrap();
    assert!((g.values[0][0] - 0.4).abs() < 1e-9, "{}", g.values[0][0]);
    assert!((gp.values[0][0] - 0.7).abs() < 1e-9, "{}", gp.values[0][0]);
    let gap = subopt_gap_at_start(&pair.g, &gp.pair).unwrap();
    assert!(gap >= 3.0 * 0.1 - 1e-9, "{gap}");
}

#[test]
fn tree_pair_values_deeper() {
    let pair = build_tree_pair(7, 2, 2, 6, 0.05).unwrap();
    assert_eq!(pair.q, 2);
    assert_eq!(pair.ne_path.len(), 3);
    let g = ne_backward_induction(&pair.g).unwrap();
    let gp = ne_backward_induction(&pair.g_prime).unwrap();
    assert!((g.values[0][0] - 6.0 * 0.05).abs() < 1e-9);
    assert!((gp.values[0][0] - 10.0 * 0.05).abs() < 1e-9);
}

#[test]
fn tree_pairs_differ_only_at_target() {
    let pair = build_tree_pair(7, 2, 3, 6, 0.1).unwrap();
    let shape = pair.g.shape();
    let target = shape.tuple_index(pair.target.state, 0, 0);
    for h in 0..shape.horizon {
        for t in 0..shape.tuples() {
            let same = pair.g.reward_table(h)[t] == pair.g_prime.reward_table(h)[t]
                && pair.g.bernoulli_law(h, t) == pair.g_prime.bernoulli_law(h, t);
            assert_eq!(same, t != target, "h={h} t={t}");
        }
    }
    assert_eq!(pair.g.transitions_flat(), pair.g_prime.transitions_flat());
}

#[test]
fn tree_rejects_oversized_state_space() {
    assert!(build_tree_pair(5, 2, 2, 2, 0.1).is_err());
    assert!(build_tree_pair(3, 2, 2, 4, 0.4).is_err());
}

#[test]
fn agnostic_zero_epsilon_coincides() {
    let pair = build_agnostic_pair(0.3, 0.0, 100).unwrap();
    assert_eq!(pair.g1, pair.g2);
}

#[test]
fn agnostic_coupling_law_sums_to_one() {
    let pair = build_agnostic_pair(0.2, 0.5, 200).unwrap();
    let law = pair.coupling_law();
    let total: f64 = law.iter().flatten().sum();
    assert!((total - 1.0).abs() < 1e-15);
    assert!((law[1][0] - 0.5 / (2.0 * 0.2 * 200.0)).abs() < 1e-15);
}

#[test]
fn random_tabular_is_deterministic() {
    let a = random_tabular(3, 2, 2, 3, 0.1, 7).unwrap();
    let b = random_tabular(3, 2, 2, 3, 0.1, 7).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.shape(), GameShape::new(3, 2, 2, 3));
}

#[test]
fn random_linear_full_rank_is_one_hot() {
    let lin = random_linear(2, 2, 2, 2, 8, 0.0, 3).unwrap();
    let tab = random_tabular(2, 2, 2, 2, 0.0, 3).unwrap();
    assert!(lin.features().is_one_hot());
    assert_eq!(lin.induced(), &tab);
}

#[test]
fn random_linear_rows_are_distributions() {
    for seed in 0..20 {
        let lin = random_linear(3, 2, 2, 2, 4, 0.0, seed).unwrap();
        for row in lin.induced().transitions_flat().chunks(3) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
