use serde::{Deserialize, Serialize};

use crate::datagen::Observations;
use crate::game::Features;
use crate::pmvi::{f_pmvi, robust_pmvi, BonusKind, BonusSpec, EstimatorConfig, EstimatorKind, FilterPmviConfig, PmviError, PmviOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerKind {
    Ridge,
    Scram,
    Rls,
    /// Tabular filtering PMVI; ignores the features.
    Filter,
}

impl std::str::FromStr for LearnerKind {
    type Err = PmviError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "ridge" => LearnerKind::Ridge,
            "scram" => LearnerKind::Scram,
            "rls" => LearnerKind::Rls,
            "filter" => LearnerKind::Filter,
            other => return Err(PmviError::InvalidConfig(format!("unknown estimator '{other}'"))),
        })
    }
}

/// One PMVI variant with its tuning knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Learner {
    pub kind: LearnerKind,
    /// Ignored by [`LearnerKind::Filter`], which always uses the constant
    /// filtering bonus.
    pub bonus: BonusKind,
    /// Covariance floor handed to the RLS oracle.
    pub kappa: f64,
    pub c_bonus: f64,
    /// `false` turns filtering PMVI into the sample-mean baseline.
    pub use_filter: bool,
}

impl Default for Learner {
    fn default() -> Self {
        Self {
            kind: LearnerKind::Ridge,
            bonus: BonusKind::Zero,
            kappa: 0.0,
            c_bonus: 1.0,
            use_filter: true,
        }
    }
}

impl Learner {
    /// Runs the learner with known contamination level `epsilon` and reward
    /// noise `gamma`.
    pub fn learn(
        &self,
        obs: &Observations,
        features: &Features,
        epsilon: f64,
        gamma: f64,
        delta: f64,
        seed: u64,
    ) -> Result<PmviOutput, PmviError> {
        let shape = features.shape();
        let estimator = match self.kind {
            LearnerKind::Filter => {
                let cfg = FilterPmviConfig {
                    epsilon,
                    gamma,
                    c_bonus: self.c_bonus,
                    use_filter: self.use_filter,
                    seed,
                };
                return f_pmvi(obs, shape, &cfg);
            }
            LearnerKind::Ridge => EstimatorKind::Ridge,
            LearnerKind::Scram => EstimatorKind::Scram,
            LearnerKind::Rls => EstimatorKind::Rls { kappa: self.kappa },
        };
        let bonus = BonusSpec::calibrated(self.bonus, shape, features.dim(), obs.k, epsilon, gamma, delta, self.c_bonus)?;
        let cfg = EstimatorConfig { kind: estimator, epsilon, gamma, seed };
        robust_pmvi(obs, features, &cfg, &bonus, delta)
    }
}
