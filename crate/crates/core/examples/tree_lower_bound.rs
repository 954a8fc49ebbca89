//! Twin tree games: data from `G` attacked into data from `G′` mislead a
//! non-robust learner.

use mgx::datagen::least_covered_attack;
use mgx::datagen::sample_dataset;
use mgx::game::{ne_backward_induction, subopt_gap_at_start, Features};
use mgx::instances::build_tree_pair;
use mgx::pmvi::{robust_pmvi, BonusSpec, EstimatorConfig, EstimatorKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pair = build_tree_pair(3, 2, 2, 4, 0.1)?;
    let shape = pair.g.shape();
    let v = ne_backward_induction(&pair.g)?.start_value(&pair.g);
    let twin = ne_backward_induction(&pair.g_prime)?;
    println!("q = {}, V(G) = {v:.3}, V(G') = {:.3}", pair.q, twin.start_value(&pair.g_prime));
    println!("G' equilibrium played in G: gap {:.3}", subopt_gap_at_start(&pair.g, &twin.pair)?);

    let epsilon = 2.0 * pair.alpha / shape.tuples() as f64;
    let clean = sample_dataset(&pair.g, &pair.rho, 2000, 0)?;
    let attacked = least_covered_attack(&clean, &pair, epsilon)?;
    println!("attack touched {} of {} tuples", attacked.corrupted_count(), attacked.observations().len());
    let cfg = EstimatorConfig { kind: EstimatorKind::Ridge, epsilon: 0.0, gamma: 0.0, seed: 0 };
    let out = robust_pmvi(attacked.observations(), &Features::one_hot(shape), &cfg, &BonusSpec::zero(), 0.1)?;
    println!("ridge learner on attacked data: gap in G {:.3}", subopt_gap_at_start(&pair.g, &out.pair)?);
    Ok(())
}
