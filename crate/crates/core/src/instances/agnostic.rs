use super::InstanceError;
use crate::datagen::{sample_dataset, BehaviorPolicy, Dataset};
use crate::game::{BernoulliCell, GameShape, TabularMG};

/// Two one-step bandit games whose `(a₁, b₁)` reward means differ by
/// `ε / (2pN)`, observed under the same behavior distribution.
///
/// Rewards are Bernoulli draws `u > 1 − mean` from per-tuple uniform
/// streams, so datasets drawn from `g1` and `g2` with the same seed are
/// coupled: they agree except where `u` falls between the two thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct AgnosticBanditPair {
    pub g1: TabularMG,
    pub g2: TabularMG,
    pub p: f64,
    pub epsilon: f64,
    /// Dataset size `N = KH`; here `H = 1`.
    pub n: usize,
    pub rho: BehaviorPolicy,
}

pub fn build_agnostic_pair(p: f64, epsilon: f64, n: usize) -> Result<AgnosticBanditPair, InstanceError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(InstanceError::InvalidParameter(format!("p = {p} outside (0, 1)")));
    }
    if !(0.0..=0.5).contains(&epsilon) {
        return Err(InstanceError::InvalidParameter(format!("epsilon = {epsilon} outside [0, 1/2]")));
    }
    if n == 0 {
        return Err(InstanceError::InvalidParameter("N must be positive".into()));
    }
    let shift = epsilon / (4.0 * p * n as f64);
    let shape = GameShape::new(1, 2, 2, 1);
    let game = |mean: f64| -> Result<TabularMG, InstanceError> {
        // Tuple order (a₁,b₁), (a₁,b₂), (a₂,b₁), (a₂,b₂).
        let rewards = vec![mean, 0.0, 0.5, 0.0];
        let cells = vec![
            BernoulliCell { step: None, state: 0, max_action: 0, min_action: 0, base: 0.0, prob: mean },
            BernoulliCell { step: None, state: 0, max_action: 1, min_action: 0, base: 0.0, prob: 0.5 },
        ];
        Ok(TabularMG::new(shape, vec![1.0; 4], rewards, 0.0)?.with_bernoulli_cells(cells)?)
    };
    let rho = BehaviorPolicy::new(shape, vec![p / 2.0, p / 2.0, (1.0 - p) / 2.0, (1.0 - p) / 2.0])?;
    Ok(AgnosticBanditPair {
        g1: game(0.5 + shift)?,
        g2: game(0.5 - shift)?,
        p,
        epsilon,
        n,
        rho,
    })
}

impl AgnosticBanditPair {
    /// `ε / (4pN)`, half the gap between the two `(a₁, b₁)` means.
    pub fn mean_shift(&self) -> f64 {
        self.epsilon / (4.0 * self.p * self.n as f64)
    }

    /// Joint law of the coupled `(a₁, b₁)` rewards `(X, Y)`, indexed `[x][y]`.
    pub fn coupling_law(&self) -> [[f64; 2]; 2] {
        let c = self.mean_shift();
        [[0.5 - c, 0.0], [2.0 * c, 0.5 - c]]
    }

    /// Datasets of size `N` from `g1` and `g2` sharing every random draw.
    pub fn sample_coupled(&self, seed: u64) -> Result<(Dataset, Dataset), InstanceError> {
        Ok((
            sample_dataset(&self.g1, &self.rho, self.n, seed)?,
            sample_dataset(&self.g2, &self.rho, self.n, seed)?,
        ))
    }
}

/// Whether two datasets contain the same tuples in the same order.
pub fn indistinguishable(d1: &Dataset, d2: &Dataset) -> bool {
    d1.observations().tuples == d2.observations().tuples
}
