use serde::{Deserialize, Serialize};

use super::matrix::{solve_matrix_game, DEFAULT_TOL};
use super::strategy::check_policy;
use super::{BellmanModel, GameError, GameShape, Policy, StageQ, StrategyPair, TabularMG};

/// An exact Nash equilibrium together with its value and action-value
/// tables. `values[h][s]` runs over `h = 0..=H` with `values[H] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub pair: StrategyPair,
    pub values: Vec<Vec<f64>>,
    pub q: Vec<StageQ>,
}

impl Equilibrium {
    /// Game value from the initial state (or initial distribution).
    pub fn start_value(&self, mg: &TabularMG) -> f64 {
        dot(&mg.start_distribution(), &self.values[0])
    }
}

/// Which player's strategy is held fixed in a best-response computation.
#[derive(Debug, Clone, Copy)]
pub enum FixedSide<'a> {
    /// The max player's strategy is fixed; the min player best-responds.
    Max(&'a Policy),
    /// The min player's strategy is fixed; the max player best-responds.
    Min(&'a Policy),
}

/// `Q(s,a,b) = r_h(s,a,b) + Σ_{s'} p_h(s'|s,a,b) V_next(s')`.
pub fn bellman_apply<M: BellmanModel + ?Sized>(
    model: &M,
    h: usize,
    v_next: &[f64],
) -> Result<StageQ, GameError> {
    let shape = model.shape();
    if h >= shape.horizon {
        return Err(GameError::DimensionMismatch(format!(
            "step {h} beyond horizon {}",
            shape.horizon
        )));
    }
    if v_next.len() != shape.states {
        return Err(GameError::DimensionMismatch(format!(
            "next-step values have length {}, expected {}",
            v_next.len(),
            shape.states
        )));
    }
    let values = (0..shape.tuples())
        .map(|t| model.reward(h, t) + dot(model.transition(h, t), v_next))
        .collect();
    StageQ::from_flat(shape, values)
}

/// Exact NE by stage-wise matrix-game solving, backwards from `V_{H} = 0`.
pub fn ne_backward_induction<G: AsRef<TabularMG> + ?Sized>(
    mg: &G,
) -> Result<Equilibrium, GameError> {
    let mg = mg.as_ref();
    let shape = mg.shape();
    let mut pair = StrategyPair::uniform(shape);
    let mut values = vec![vec![0.0; shape.states]; shape.horizon + 1];
    let mut qs = Vec::with_capacity(shape.horizon);
    for h in (0..shape.horizon).rev() {
        let q = bellman_apply(mg, h, &values[h + 1])?;
        for s in 0..shape.states {
            let sol = solve_matrix_game(&q.matrix(s), DEFAULT_TOL)?;
            pair.max.row_mut(h, s).copy_from_slice(&sol.x);
            pair.min.row_mut(h, s).copy_from_slice(&sol.y);
            values[h][s] = sol.value;
        }
        qs.push(q);
    }
    qs.reverse();
    Ok(Equilibrium {
        pair,
        values,
        q: qs,
    })
}

/// Best-response values `[h][s]` (with `h = 0..=H`) against a fixed
/// strategy, by backward DP on the induced single-agent MDP.
pub fn best_response_values<G: AsRef<TabularMG> + ?Sized>(
    mg: &G,
    fixed: FixedSide<'_>,
) -> Result<Vec<Vec<f64>>, GameError> {
    let mg = mg.as_ref();
    let shape = mg.shape();
    match fixed {
        FixedSide::Max(p) => check_policy(p, shape, shape.max_actions)?,
        FixedSide::Min(p) => check_policy(p, shape, shape.min_actions)?,
    }
    let mut values = vec![vec![0.0; shape.states]; shape.horizon + 1];
    for h in (0..shape.horizon).rev() {
        let q = bellman_apply(mg, h, &values[h + 1])?;
        for s in 0..shape.states {
            values[h][s] = match fixed {
                FixedSide::Max(pi) => {
                    let x = pi.row(h, s);
                    (0..shape.min_actions)
                        .map(|b| (0..shape.max_actions).map(|a| x[a] * q.get(s, a, b)).sum::<f64>())
                        .fold(f64::INFINITY, f64::min)
                }
                FixedSide::Min(nu) => {
                    let y = nu.row(h, s);
                    (0..shape.max_actions)
                        .map(|a| (0..shape.min_actions).map(|b| y[b] * q.get(s, a, b)).sum::<f64>())
                        .fold(f64::NEG_INFINITY, f64::max)
                }
            };
        }
    }
    Ok(values)
}

/// `V^{π,*}_1(s)` when the max side is fixed, `V^{*,ν}_1(s)` when the min
/// side is fixed.
pub fn best_response_value<G: AsRef<TabularMG> + ?Sized>(
    mg: &G,
    fixed: FixedSide<'_>,
    s: usize,
) -> Result<f64, GameError> {
    let mg = mg.as_ref();
    check_state(mg.shape(), s)?;
    Ok(best_response_values(mg, fixed)?[0][s])
}

/// Values `V^{π,ν}_h(s)` of a strategy pair, `h = 0..=H`.
pub fn pair_values<G: AsRef<TabularMG> + ?Sized>(
    mg: &G,
    pair: &StrategyPair,
) -> Result<Vec<Vec<f64>>, GameError> {
    let mg = mg.as_ref();
    let shape = mg.shape();
    pair.check_shape(shape)?;
    let mut values = vec![vec![0.0; shape.states]; shape.horizon + 1];
    for h in (0..shape.horizon).rev() {
        let q = bellman_apply(mg, h, &values[h + 1])?;
        for s in 0..shape.states {
            values[h][s] = q.bilinear(s, pair.max.row(h, s), pair.min.row(h, s));
        }
    }
    Ok(values)
}

/// `V^{*,ν}_1(s) - V^{π,*}_1(s)`; nonnegative up to rounding.
pub fn subopt_gap<G: AsRef<TabularMG> + ?Sized>(
    mg: &G,
    pair: &StrategyPair,
    s: usize,
) -> Result<f64, GameError> {
    let mg = mg.as_ref();
    check_state(mg.shape(), s)?;
    pair.check_shape(mg.shape())?;
    let upper = best_response_values(mg, FixedSide::Min(&pair.min))?;
    let lower = best_response_values(mg, FixedSide::Max(&pair.max))?;
    Ok(upper[0][s] - lower[0][s])
}

/// Suboptimality gap averaged over the game's initial distribution.
pub fn subopt_gap_at_start<G: AsRef<TabularMG> + ?Sized>(
    mg: &G,
    pair: &StrategyPair,
) -> Result<f64, GameError> {
    let mg = mg.as_ref();
    pair.check_shape(mg.shape())?;
    let upper = best_response_values(mg, FixedSide::Min(&pair.min))?;
    let lower = best_response_values(mg, FixedSide::Max(&pair.max))?;
    let start = mg.start_distribution();
    Ok(dot(&start, &upper[0]) - dot(&start, &lower[0]))
}

fn check_state(shape: GameShape, s: usize) -> Result<(), GameError> {
    if s >= shape.states {
        return Err(GameError::DimensionMismatch(format!(
            "state {s} out of range for {} states",
            shape.states
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl AsRef<TabularMG> for TabularMG {
    fn as_ref(&self) -> &TabularMG {
        self
    }
}
