//! Tabular PMVI with filtered rewards and transitions versus plain sample
//! means under a targeted reward attack.

use mgx::datagen::{corrupt, sample_dataset, Adversary, BehaviorPolicy, ContaminationModel, CorruptionSpec, TupleTarget};
use mgx::game::{subopt_gap_at_start, InitialState};
use mgx::instances::random_tabular;
use mgx::pmvi::{f_pmvi, FilterPmviConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mg = random_tabular(1, 2, 2, 2, 0.1, 3)?.with_initial(InitialState::Distribution(vec![1.0]))?;
    let rho = BehaviorPolicy::stationary(mg.shape(), &[0.4, 0.2, 0.2, 0.2])?;
    let clean = sample_dataset(&mg, &rho, 10_000, 0)?;
    let spec = CorruptionSpec {
        epsilon: 0.1,
        model: ContaminationModel::RewardOnly,
        adversary: Adversary::TargetedReward { target: TupleTarget::new(0, 0, 0), value: 5.0 },
        seed: 0,
        replacements: None,
        space: None,
    };
    let data = corrupt(&clean, &spec)?;
    for use_filter in [true, false] {
        let cfg = FilterPmviConfig { epsilon: 0.1, gamma: 0.1, c_bonus: 0.1, use_filter, seed: 0 };
        let out = f_pmvi(data.observations(), mg.shape(), &cfg)?;
        let label = if use_filter { "filtered" } else { "sample mean" };
        println!("{label}: gap {:.4}", subopt_gap_at_start(&mg, &out.pair)?);
    }
    Ok(())
}
