use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::PmviError;
use crate::game::GameShape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BonusKind {
    Zero,
    /// `(√K ℰ + 2H√d) ‖φ‖_{Λ⁻¹}`, for clean covariates under low relative uncertainty.
    ScramLru,
    /// `(√((1−ε)K) ℰ + (√(εK) + 2) H√d) ‖φ‖_{Λ⁻¹}`.
    CleanCoverage,
    /// `(2(1−ε)K ℰ + εKH√d + H√(Kd)) ‖Λ⁻¹φ‖₂`.
    CleanCoverageImproved,
    /// `c_bonus (H√S + γ) √ε`, constant over tuples.
    FilterTabular,
}

impl std::str::FromStr for BonusKind {
    type Err = PmviError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "zero" => BonusKind::Zero,
            "scram-lru" => BonusKind::ScramLru,
            "clean-cov" => BonusKind::CleanCoverage,
            "clean-cov-improved" => BonusKind::CleanCoverageImproved,
            "filter-tabular" => BonusKind::FilterTabular,
            other => return Err(PmviError::InvalidConfig(format!("unknown bonus '{other}'"))),
        })
    }
}

/// Constants the bonus formulas read. `e_hat` is the regression error
/// bound ℰ; see [`scram_error_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BonusConstants {
    pub e_hat: f64,
    pub epsilon: f64,
    pub k: usize,
    pub horizon: usize,
    pub d: usize,
    pub gamma: f64,
    pub states: usize,
    pub c_bonus: f64,
}

impl Default for BonusConstants {
    fn default() -> Self {
        Self {
            e_hat: 0.0,
            epsilon: 0.0,
            k: 0,
            horizon: 1,
            d: 1,
            gamma: 0.0,
            states: 1,
            c_bonus: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BonusSpec {
    pub kind: BonusKind,
    pub constants: BonusConstants,
}

impl BonusSpec {
    pub fn zero() -> Self {
        Self {
            kind: BonusKind::Zero,
            constants: BonusConstants::default(),
        }
    }

    pub fn new(kind: BonusKind, constants: BonusConstants) -> Result<Self, PmviError> {
        let spec = Self { kind, constants };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), PmviError> {
        let c = &self.constants;
        let reals = [c.e_hat, c.epsilon, c.gamma, c.c_bonus];
        if reals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(PmviError::InvalidConfig(format!(
                "bonus constants must be finite and nonnegative: {c:?}"
            )));
        }
        if self.kind != BonusKind::Zero && c.horizon == 0 {
            return Err(PmviError::InvalidConfig("bonus needs the horizon".into()));
        }
        match self.kind {
            BonusKind::CleanCoverage | BonusKind::CleanCoverageImproved if c.epsilon >= 1.0 => {
                Err(PmviError::InvalidConfig("clean-coverage bonuses need epsilon < 1".into()))
            }
            BonusKind::FilterTabular if c.states == 0 => {
                Err(PmviError::InvalidConfig("filter bonus needs the state count".into()))
            }
            _ => Ok(()),
        }
    }

    /// Constants for a run on `k` episodes with feature dimension `d` and
    /// reward noise `gamma`. ℰ is [`scram_error_bound`] at target scale
    /// `H + γ`.
    #[allow(clippy::too_many_arguments)]
    pub fn calibrated(
        kind: BonusKind,
        shape: GameShape,
        d: usize,
        k: usize,
        epsilon: f64,
        gamma: f64,
        delta: f64,
        c_bonus: f64,
    ) -> Result<Self, PmviError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(PmviError::InvalidConfig(format!("delta {delta} outside (0, 1)")));
        }
        let sigma = shape.horizon as f64 + gamma;
        Self::new(
            kind,
            BonusConstants {
                e_hat: scram_error_bound(epsilon, sigma, k, shape.horizon, d, delta, c_bonus),
                epsilon,
                k,
                horizon: shape.horizon,
                d,
                gamma,
                states: shape.states,
                c_bonus,
            },
        )
    }

    /// Multiplier in front of the feature-dependent norm, or the constant
    /// bonus itself for [`BonusKind::FilterTabular`].
    pub fn scale(&self) -> f64 {
        let c = &self.constants;
        let k = c.k as f64;
        let h = c.horizon as f64;
        let sqrt_d = (c.d as f64).sqrt();
        match self.kind {
            BonusKind::Zero => 0.0,
            BonusKind::ScramLru => k.sqrt() * c.e_hat + 2.0 * h * sqrt_d,
            BonusKind::CleanCoverage => {
                ((1.0 - c.epsilon) * k).sqrt() * c.e_hat + ((c.epsilon * k).sqrt() + 2.0) * h * sqrt_d
            }
            BonusKind::CleanCoverageImproved => {
                2.0 * (1.0 - c.epsilon) * k * c.e_hat
                    + c.epsilon * k * h * sqrt_d
                    + h * (k * c.d as f64).sqrt()
            }
            BonusKind::FilterTabular => {
                c.c_bonus * (h * (c.states as f64).sqrt() + c.gamma) * c.epsilon.sqrt()
            }
        }
    }
}

/// Regression error bound used inside the linear bonuses:
/// `c (σ ε log(1/ε) + min{σ √((d + log(8H/δ))/K), √(Hσ) (d log(8H/δ)/K)^{1/4}})`.
pub fn scram_error_bound(
    epsilon: f64,
    sigma: f64,
    k: usize,
    horizon: usize,
    d: usize,
    delta: f64,
    c_bonus: f64,
) -> f64 {
    let k = k.max(1) as f64;
    let h = horizon as f64;
    let d = d as f64;
    let log_term = (8.0 * h / delta).ln();
    let contamination = if epsilon > 0.0 {
        sigma * epsilon * (1.0 / epsilon).ln()
    } else {
        0.0
    };
    let sampling = (sigma * ((d + log_term) / k).sqrt())
        .min((h * sigma).sqrt() * (d * log_term / k).powf(0.25));
    c_bonus * (contamination + sampling)
}

/// A bonus bound to one step's covariance `Λ_h`, factorized once.
pub struct BonusEvaluator {
    spec: BonusSpec,
    scale: f64,
    chol: Option<Cholesky<f64, Dyn>>,
}

impl BonusEvaluator {
    pub fn new(spec: &BonusSpec, lambda: &DMatrix<f64>) -> Result<Self, PmviError> {
        spec.validate()?;
        let needs_factor = matches!(
            spec.kind,
            BonusKind::ScramLru | BonusKind::CleanCoverage | BonusKind::CleanCoverageImproved
        );
        let chol = if needs_factor {
            if !lambda.is_square() || lambda.iter().any(|v| !v.is_finite()) {
                return Err(PmviError::SingularCovariance);
            }
            Some(lambda.clone().cholesky().ok_or(PmviError::SingularCovariance)?)
        } else {
            None
        };
        Ok(Self {
            spec: *spec,
            scale: spec.scale(),
            chol,
        })
    }

    pub fn eval(&self, phi: &[f64]) -> f64 {
        match (&self.chol, self.spec.kind) {
            (_, BonusKind::Zero) => 0.0,
            (_, BonusKind::FilterTabular) => self.scale,
            (Some(chol), BonusKind::CleanCoverageImproved) => {
                let z = chol.solve(&DVector::from_column_slice(phi));
                self.scale * z.norm()
            }
            (Some(chol), _) => {
                let v = DVector::from_column_slice(phi);
                let z = chol.solve(&v);
                self.scale * v.dot(&z).max(0.0).sqrt()
            }
            (None, _) => unreachable!("linear bonuses are always factorized"),
        }
    }
}

/// `Γ_h(φ)` for one feature vector.
pub fn compute_bonus(
    spec: &BonusSpec,
    lambda: &DMatrix<f64>,
    phi: &[f64],
) -> Result<f64, PmviError> {
    if lambda.nrows() != phi.len() && spec.kind != BonusKind::Zero && spec.kind != BonusKind::FilterTabular {
        return Err(PmviError::InvalidConfig(format!(
            "covariance is {}x{} but the feature has length {}",
            lambda.nrows(),
            lambda.ncols(),
            phi.len()
        )));
    }
    Ok(BonusEvaluator::new(spec, lambda)?.eval(phi))
}
