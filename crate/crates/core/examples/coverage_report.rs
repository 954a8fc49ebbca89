//! Coverage constants of a dataset and of its behavior policy.

use mgx::coverage::{check_assumptions, check_assumptions_exact};
use mgx::datagen::{sample_dataset, BehaviorPolicy};
use mgx::game::ne_backward_induction;
use mgx::instances::random_tabular;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mg = random_tabular(3, 2, 2, 3, 0.0, 4)?;
    let ne = ne_backward_induction(&mg)?;
    let rho = BehaviorPolicy::uniform(mg.shape());
    let exact = check_assumptions_exact(&rho, &mg, &ne.pair)?;
    println!(
        "exact: kappa {:.4}, c1 {:.4}, single {}, unilateral {}, uniform {}",
        exact.kappa_hat, exact.c1_hat, exact.single_ok, exact.unilateral_ok, exact.uniform_ok
    );
    let data = sample_dataset(&mg, &rho, 1000, 0)?;
    let empirical = check_assumptions(data.observations(), &mg, &ne.pair)?;
    println!("from 1000 episodes:\n{}", serde_json::to_string_pretty(&empirical)?);
    Ok(())
}
