use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExpError, Learner, LearnerKind};
use crate::datagen::{Adversary, ContaminationModel, SliceMode};
use crate::pmvi::BonusKind;

/// A sweep over `(K, ε, seed, algorithm)` on one instance, read from TOML.
///
/// ```toml
/// name = "scram-vs-ridge"
/// k_grid = [1000, 4000]
/// epsilon_grid = [0.0, 0.05]
/// seeds = [0, 1, 2]
///
/// [instance]
/// kind = "random-tabular"
/// states = 3
/// max_actions = 2
/// min_actions = 2
/// horizon = 3
/// seed = 7
///
/// [attack]
/// model = "observations-only"
/// adversary = { kind = "random-replace" }
///
/// [[algorithms]]
/// name = "ridge"
/// estimator = "ridge"
///
/// [[algorithms]]
/// name = "scram-lru"
/// estimator = "scram"
/// bonus = "scram-lru"
/// c_bonus = 0.1
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub instance: InstanceSpec,
    pub algorithms: Vec<AlgorithmSpec>,
    pub k_grid: Vec<usize>,
    pub epsilon_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub attack: AttackSpec,
    #[serde(default)]
    pub behavior: BehaviorSpec,
    #[serde(default)]
    pub slice_mode: SliceMode,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_delta() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InstanceSpec {
    RandomTabular {
        states: usize,
        max_actions: usize,
        min_actions: usize,
        horizon: usize,
        #[serde(default)]
        gamma: f64,
        seed: u64,
    },
    RandomLinear {
        states: usize,
        max_actions: usize,
        min_actions: usize,
        horizon: usize,
        dim: usize,
        #[serde(default)]
        gamma: f64,
        seed: u64,
    },
    /// Data come from `G`; gaps are measured in `G`.
    Tree {
        states: usize,
        max_actions: usize,
        min_actions: usize,
        horizon: usize,
        alpha: f64,
    },
    /// Data come from `g1`; gaps are measured in `g1`.
    Agnostic { p: f64, epsilon: f64, n: usize },
    /// A game JSON document; relative paths resolve against the config file.
    File { path: String },
}

/// Behavior policy for data collection.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BehaviorSpec {
    /// The instance's own behavior policy if it has one, else uniform.
    #[default]
    Auto,
    Uniform,
    /// One joint distribution over `(a, b)`, row-major, used everywhere.
    Stationary { joint: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSpec {
    #[serde(default)]
    pub model: ContaminationModel,
    /// No corruption when absent and `least_covered` is false.
    #[serde(default)]
    pub adversary: Option<Adversary>,
    /// Use the instance's least-covered reward attack instead.
    #[serde(default)]
    pub least_covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub name: String,
    pub estimator: LearnerKind,
    #[serde(default = "default_bonus")]
    pub bonus: BonusKind,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default = "default_c_bonus")]
    pub c_bonus: f64,
    #[serde(default = "default_true")]
    pub use_filter: bool,
}

fn default_bonus() -> BonusKind {
    BonusKind::Zero
}

fn default_c_bonus() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

impl AlgorithmSpec {
    pub fn learner(&self) -> Learner {
        Learner {
            kind: self.estimator,
            bonus: self.bonus,
            kappa: self.kappa,
            c_bonus: self.c_bonus,
            use_filter: self.use_filter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// File name of the results CSV inside the output directory.
    #[serde(default)]
    pub csv: Option<String>,
    /// Subdirectory for charts.
    #[serde(default)]
    pub figures: Option<String>,
}

impl OutputSpec {
    pub fn csv_name(&self) -> &str {
        self.csv.as_deref().unwrap_or("results.csv")
    }

    pub fn figures_name(&self) -> &str {
        self.figures.as_deref().unwrap_or("figs")
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExpError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ExpError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file; a relative instance path is
    /// rewritten against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ExpError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExpError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let InstanceSpec::File { path: game } = &mut cfg.instance {
            let p = Path::new(game.as_str());
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *game = dir.join(p).to_string_lossy().into_owned();
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExpError> {
        let fail = |msg: String| Err(ExpError::Config(msg));
        if self.algorithms.is_empty() || self.k_grid.is_empty() || self.epsilon_grid.is_empty() || self.seeds.is_empty()
        {
            return fail("algorithms, k_grid, epsilon_grid and seeds must be nonempty".into());
        }
        let mut names = HashSet::new();
        for a in &self.algorithms {
            if a.name.is_empty() || a.name.contains(',') || a.name.contains('"') {
                return fail(format!("algorithm name '{}' must be nonempty without commas or quotes", a.name));
            }
            if !names.insert(a.name.as_str()) {
                return fail(format!("duplicate algorithm name '{}'", a.name));
            }
            if !(a.c_bonus.is_finite() && a.c_bonus >= 0.0) || !(a.kappa.is_finite() && a.kappa >= 0.0) {
                return fail(format!("algorithm '{}' has invalid constants", a.name));
            }
        }
        let mut seeds = HashSet::new();
        if let Some(s) = self.seeds.iter().find(|s| !seeds.insert(**s)) {
            return fail(format!("seed {s} listed twice"));
        }
        if self.k_grid.contains(&0) {
            return fail("K must be positive".into());
        }
        if let Some(e) = self.epsilon_grid.iter().find(|e| !(0.0..0.5).contains(*e)) {
            return fail(format!("epsilon {e} outside [0, 0.5)"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("delta {} outside (0, 1)", self.delta));
        }
        if self.attack.least_covered && self.attack.adversary.is_some() {
            return fail("choose either an adversary or least_covered, not both".into());
        }
        if self.attack.least_covered && !matches!(self.instance, InstanceSpec::Tree { .. }) {
            return fail("least_covered needs a tree instance".into());
        }
        Ok(())
    }
}
