use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::InstanceError;
use crate::game::{Features, GameShape, InitialState, LinearMG, TabularMG};
use crate::rng::{stream_rng, TRAJECTORY_STREAM};

/// Rejection cap for [`random_linear`].
pub const MAX_LINEAR_ATTEMPTS: usize = 100;

fn dirichlet_ones(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}

/// Dirichlet(1) transition rows and uniform `[0, 1]` reward means, started
/// from state 0.
pub fn random_tabular(
    states: usize,
    max_actions: usize,
    min_actions: usize,
    horizon: usize,
    gamma: f64,
    seed: u64,
) -> Result<TabularMG, InstanceError> {
    let shape = GameShape::new(states, max_actions, min_actions, horizon);
    shape.validate()?;
    let mut rng = stream_rng(seed, TRAJECTORY_STREAM);
    let n = horizon * shape.tuples();
    let mut transitions = Vec::with_capacity(n * states);
    let mut rewards = Vec::with_capacity(n);
    for _ in 0..n {
        transitions.extend(dirichlet_ones(states, &mut rng));
        rewards.push(rng.random::<f64>());
    }
    Ok(TabularMG::new(shape, transitions, rewards, gamma)?)
}

/// Random linear game of feature dimension `d`.
///
/// Features are Dirichlet(1) points of the `d`-simplex, each `θ_h` has
/// uniform `[0, 1]` entries and each row of `μ_h` is a Dirichlet(1)
/// distribution over next states, so rewards lie in `[0, 1]` and
/// transitions are mixtures of distributions. Draws whose feature matrix
/// is rank deficient are rejected. `d = S·A·B` gives the one-hot embedding
/// of [`random_tabular`] with the same seed.
pub fn random_linear(
    states: usize,
    max_actions: usize,
    min_actions: usize,
    horizon: usize,
    d: usize,
    gamma: f64,
    seed: u64,
) -> Result<LinearMG, InstanceError> {
    let shape = GameShape::new(states, max_actions, min_actions, horizon);
    shape.validate()?;
    let tuples = shape.tuples();
    if d == 0 || d > tuples {
        return Err(InstanceError::InvalidParameter(format!("d = {d} must lie in 1..={tuples}")));
    }
    if d == tuples {
        let mg = random_tabular(states, max_actions, min_actions, horizon, gamma, seed)?;
        return Ok(LinearMG::one_hot(&mg));
    }
    let mut rng = stream_rng(seed, TRAJECTORY_STREAM);
    for _ in 0..MAX_LINEAR_ATTEMPTS {
        let table: Vec<f64> = (0..tuples).flat_map(|_| dirichlet_ones(d, &mut rng)).collect();
        let rank = DMatrix::from_row_slice(tuples, d, &table).rank(1e-8);
        let theta: Vec<Vec<f64>> = (0..horizon).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
        let mu: Vec<Vec<f64>> = (0..horizon)
            .map(|_| (0..d).flat_map(|_| dirichlet_ones(states, &mut rng)).collect())
            .collect();
        if rank < d {
            continue;
        }
        let features = Features::new(shape, d, table)?;
        if let Ok(mg) = LinearMG::new(features, theta, mu, gamma, None, InitialState::State(0)) {
            return Ok(mg);
        }
    }
    Err(InstanceError::ConstructionFailed(MAX_LINEAR_ATTEMPTS))
}
