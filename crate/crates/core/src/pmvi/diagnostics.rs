use super::{PmviError, PmviOutput};
use crate::coverage::{expectation_per_step, occupancy_measure};
use crate::game::{bellman_apply, best_response_values, FixedSide, StageQ, StrategyPair, TabularMG};

/// Model-evaluation errors of a PMVI run against the true game:
/// `ι̲_h = 𝔹_h V̲_{h+1} − Q̲_h` and `ῑ_h = 𝔹_h V̄_{h+1} − Q̄_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct BellmanErrors {
    pub lower: Vec<StageQ>,
    pub upper: Vec<StageQ>,
    pub bonus: Vec<StageQ>,
}

impl BellmanErrors {
    /// `0 ≤ ι̲ ≤ 2Γ` and `−2Γ ≤ ῑ ≤ 0` everywhere, up to `tol`.
    pub fn sandwich_holds(&self, tol: f64) -> bool {
        self.lower.iter().zip(&self.upper).zip(&self.bonus).all(|((lo, up), g)| {
            lo.flat().iter().zip(up.flat()).zip(g.flat()).all(|((l, u), g)| {
                *l >= -tol && *l <= 2.0 * g + tol && *u <= tol && *u >= -2.0 * g - tol
            })
        })
    }

    /// Largest violation of the sandwich over all entries; 0 when it holds.
    pub fn worst_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for ((lo, up), g) in self.lower.iter().zip(&self.upper).zip(&self.bonus) {
            for ((l, u), g) in lo.flat().iter().zip(up.flat()).zip(g.flat()) {
                worst = worst.max(-l).max(l - 2.0 * g).max(*u).max(-2.0 * g - u);
            }
        }
        worst
    }
}

pub fn bellman_error_diagnostics(output: &PmviOutput, mg: &TabularMG) -> Result<BellmanErrors, PmviError> {
    let shape = mg.shape();
    if output.shape != shape {
        return Err(PmviError::InvalidConfig(format!(
            "output shape {:?} differs from game shape {:?}",
            output.shape, shape
        )));
    }
    let mut lower = Vec::with_capacity(shape.horizon);
    let mut upper = Vec::with_capacity(shape.horizon);
    for h in 0..shape.horizon {
        let mut lo = bellman_apply(mg, h, &output.v_lower[h + 1])?;
        let mut up = bellman_apply(mg, h, &output.v_upper[h + 1])?;
        for (x, q) in lo.flat_mut().iter_mut().zip(output.q_lower[h].flat()) {
            *x -= q;
        }
        for (x, q) in up.flat_mut().iter_mut().zip(output.q_upper[h].flat()) {
            *x -= q;
        }
        lower.push(lo);
        upper.push(up);
    }
    Ok(BellmanErrors { lower, upper, bonus: output.bonus.clone() })
}

/// `V̲_1(s) ≤ V^{π̂,*}_1(s) + tol` and `V^{*,ν̂}_1(s) ≤ V̄_1(s) + tol` at every state.
pub fn pessimism_holds(output: &PmviOutput, mg: &TabularMG, tol: f64) -> Result<bool, PmviError> {
    let vs_best_min = best_response_values(mg, FixedSide::Max(&output.pair.max))?;
    let vs_best_max = best_response_values(mg, FixedSide::Min(&output.pair.min))?;
    Ok((0..mg.shape().states).all(|s| {
        output.v_lower[0][s] <= vs_best_min[0][s] + tol && vs_best_max[0][s] <= output.v_upper[0][s] + tol
    }))
}

/// `2 Σ_h (E_{π′,ν*}[Γ_h] + E_{π*,ν′}[Γ_h])` from the game's start
/// distribution, with `(π*, ν*)` the supplied equilibrium.
pub fn bonus_gap_bound(output: &PmviOutput, mg: &TabularMG, ne: &StrategyPair) -> Result<f64, PmviError> {
    let vs_upper = StrategyPair { max: output.upper_max.clone(), min: ne.min.clone() };
    let vs_lower = StrategyPair { max: ne.max.clone(), min: output.lower_min.clone() };
    let a: f64 = expectation_per_step(&occupancy_measure(mg, &vs_upper)?, &output.bonus).iter().sum();
    let b: f64 = expectation_per_step(&occupancy_measure(mg, &vs_lower)?, &output.bonus).iter().sum();
    Ok(2.0 * (a + b))
}
