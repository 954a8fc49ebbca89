use serde::{Deserialize, Serialize};

use super::{clip, solve_stage, BonusConstants, BonusKind, BonusSpec, PmviError, PmviOutput, StepDiagnostics};
use crate::datagen::{Observations, SliceMode};
use crate::estimators::{filter_mean_sparse, FitStatus, SparseSample};
use crate::game::{bellman_apply, BellmanModel, GameShape, StageQ};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterPmviConfig {
    pub epsilon: f64,
    /// Reward noise scale γ.
    pub gamma: f64,
    pub c_bonus: f64,
    /// `false` replaces both filters by plain sample means.
    pub use_filter: bool,
    pub seed: u64,
}

impl FilterPmviConfig {
    pub fn bonus(&self, shape: GameShape) -> Result<BonusSpec, PmviError> {
        BonusSpec::new(
            BonusKind::FilterTabular,
            BonusConstants {
                epsilon: self.epsilon,
                horizon: shape.horizon,
                gamma: self.gamma,
                states: shape.states,
                c_bonus: self.c_bonus,
                ..BonusConstants::default()
            },
        )
    }
}

/// Per-step reward and transition estimates over the tabular index space.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalModel {
    shape: GameShape,
    rewards: Vec<f64>,
    transitions: Vec<f64>,
    /// `n_h(s, a, b)` before the `1 ∨` floor.
    counts: Vec<Vec<usize>>,
    filters: Vec<[(usize, FitStatus); 2]>,
    samples: Vec<usize>,
}

impl EmpiricalModel {
    pub fn counts(&self, h: usize) -> &[usize] {
        &self.counts[h]
    }

    pub fn reward_table(&self, h: usize) -> &[f64] {
        let t = self.shape.tuples();
        &self.rewards[h * t..(h + 1) * t]
    }
}

impl BellmanModel for EmpiricalModel {
    fn shape(&self) -> GameShape {
        self.shape
    }

    fn reward(&self, h: usize, tuple: usize) -> f64 {
        self.rewards[h * self.shape.tuples() + tuple]
    }

    fn transition(&self, h: usize, tuple: usize) -> &[f64] {
        let s = self.shape.states;
        let start = (h * self.shape.tuples() + tuple) * s;
        &self.transitions[start..start + s]
    }
}

/// Robust per-step model estimates.
///
/// With `w(s,a,b) = (1 ∨ n_h(s,a,b)) / n`, each tuple at step `h` becomes
/// the one-hot vectors `r·e_{(s,a,b)} / √w` and `e_{(s,a,b,s')} / √w`,
/// whose covariances are bounded by `1 + γ²` and `1`. Their filtered means
/// divided by `√w` give `r̂_h` and `p̂_h`. Negative transition entries are
/// clipped and each row renormalized; an all-zero row becomes uniform.
pub fn estimate_model(
    obs: &Observations,
    shape: GameShape,
    cfg: &FilterPmviConfig,
) -> Result<EmpiricalModel, PmviError> {
    obs.check_shape(shape)?;
    let tuples = shape.tuples();
    let s_count = shape.states;
    let slices = obs.slices();
    let eps = if cfg.use_filter { cfg.epsilon } else { 0.0 };
    let mut rewards = Vec::with_capacity(shape.horizon * tuples);
    let mut transitions = Vec::with_capacity(shape.horizon * tuples * s_count);
    let mut counts = Vec::with_capacity(shape.horizon);
    let mut filters = Vec::with_capacity(shape.horizon);
    let mut samples = Vec::with_capacity(shape.horizon);

    for (h, slice) in slices.iter().enumerate() {
        if slice.is_empty() {
            return Err(PmviError::EmptySlice(h));
        }
        let n = slice.len() as f64;
        let mut count = vec![0usize; tuples];
        for t in slice {
            count[shape.tuple_index(t.s, t.a, t.b)] += 1;
        }
        let scale: Vec<f64> = count.iter().map(|&c| (c.max(1) as f64 / n).sqrt()).collect();

        let mut reward_samples = Vec::with_capacity(slice.len());
        let mut next_samples = Vec::with_capacity(slice.len());
        for t in slice {
            let idx = shape.tuple_index(t.s, t.a, t.b);
            reward_samples.push(SparseSample { index: idx, value: t.r / scale[idx] });
            next_samples.push(SparseSample { index: idx * s_count + t.s_next, value: 1.0 / scale[idx] });
        }
        let seed = derive_seed(cfg.seed, h as u64);
        let r_fit = filter_mean_sparse(&reward_samples, tuples, eps, 1.0 + cfg.gamma * cfg.gamma, seed)?;
        let p_fit = filter_mean_sparse(&next_samples, tuples * s_count, eps, 1.0, derive_seed(seed, 1))?;

        for idx in 0..tuples {
            rewards.push(r_fit.estimate[idx] / scale[idx]);
            let mut row: Vec<f64> = (0..s_count)
                .map(|s| (p_fit.estimate[idx * s_count + s] / scale[idx]).max(0.0))
                .collect();
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.iter_mut().for_each(|p| *p /= total);
            } else {
                row.fill(1.0 / s_count as f64);
            }
            transitions.extend(row);
        }
        counts.push(count);
        filters.push([(r_fit.removed_count, r_fit.status), (p_fit.removed_count, p_fit.status)]);
        samples.push(slice.len());
    }
    Ok(EmpiricalModel { shape, rewards, transitions, counts, filters, samples })
}

/// Pessimistic and optimistic value iteration on a model with a constant
/// bonus: `Q̲_h = Π(𝔹̂_h V̲_{h+1} − Γ)`, `Q̄_h = Π(𝔹̂_h V̄_{h+1} + Γ)`.
pub fn plan_pessimistic<M: BellmanModel + ?Sized>(
    model: &M,
    bonus: f64,
) -> Result<PmviOutput, PmviError> {
    if !(bonus.is_finite() && bonus >= 0.0) {
        return Err(PmviError::InvalidConfig(format!("bonus {bonus} must be finite and nonnegative")));
    }
    let shape = model.shape();
    let mut out = PmviOutput::empty(shape, SliceMode::Timestep);
    for h in (0..shape.horizon).rev() {
        let cap = shape.remaining(h);
        let mut q_lower = bellman_apply(model, h, &out.v_lower[h + 1])?;
        let mut q_upper = bellman_apply(model, h, &out.v_upper[h + 1])?;
        q_lower.flat_mut().iter_mut().for_each(|q| *q = clip(*q - bonus, cap));
        q_upper.flat_mut().iter_mut().for_each(|q| *q = clip(*q + bonus, cap));
        solve_stage(&mut out, h, &q_lower, &q_upper)?;
        out.q_lower[h] = q_lower;
        out.q_upper[h] = q_upper;
        out.bonus[h] = StageQ::from_flat(shape, vec![bonus; shape.tuples()])?;
    }
    Ok(out)
}

/// Filtering PMVI: [`estimate_model`] followed by [`plan_pessimistic`] with
/// the constant bonus `c_bonus (H√S + γ) √ε`.
pub fn f_pmvi(obs: &Observations, shape: GameShape, cfg: &FilterPmviConfig) -> Result<PmviOutput, PmviError> {
    let bonus = cfg.bonus(shape)?.scale();
    let model = estimate_model(obs, shape, cfg)?;
    let mut out = plan_pessimistic(&model, bonus)?;
    out.mode = obs.mode;
    out.steps = (0..shape.horizon)
        .map(|h| {
            let [(removed_r, status_r), (removed_p, status_p)] = model.filters[h];
            StepDiagnostics {
                h,
                samples: model.samples[h],
                weights_lower: Vec::new(),
                weights_upper: Vec::new(),
                removed_lower: removed_r,
                removed_upper: removed_p,
                status_lower: status_r,
                status_upper: status_p,
                bonus_max: bonus,
                bonus_mean: bonus,
            }
        })
        .collect();
    Ok(out)
}
