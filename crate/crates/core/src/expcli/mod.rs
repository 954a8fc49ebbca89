//! Experiment runner: config-driven sweeps with exact gap evaluation, CSV
//! results with resume, SVG charts and the estimator benchmark harness.

mod bench;
mod config;
mod learner;
mod plot;
mod sweep;

pub use bench::{
    planted_mean, planted_regression, run_bench, write_bench_csv, BenchAdversary, BenchConfig, BenchEstimator,
    BenchRow, PlantedMean, PlantedRegression,
};
pub use config::{AlgorithmSpec, AttackSpec, BehaviorSpec, ExperimentConfig, InstanceSpec, OutputSpec};
pub use learner::{Learner, LearnerKind};
pub use plot::{emit_plots, read_results};
pub use sweep::{pair_digest, prepare_instance, run_sweep, PreparedInstance, ResultRow, SweepOutcome, CSV_HEADER};

use thiserror::Error;

use crate::coverage::CoverageError;
use crate::datagen::DataError;
use crate::estimators::EstimatorError;
use crate::game::GameError;
use crate::instances::InstanceError;
use crate::pmvi::PmviError;

#[derive(Debug, Error)]
pub enum ExpError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("no rows to plot")]
    EmptySelection,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Pmvi(#[from] PmviError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
}

impl ExpError {
    /// Short code recorded in result rows for failed cells.
    pub fn code(&self) -> &'static str {
        match self {
            ExpError::Config(_) => "config",
            ExpError::EmptySelection => "empty",
            ExpError::Io(_) | ExpError::Csv(_) => "io",
            ExpError::Game(_) => "game",
            ExpError::Data(_) => "data",
            ExpError::Instance(_) => "instance",
            ExpError::Pmvi(PmviError::Estimator(_)) | ExpError::Estimator(_) => "estimator",
            ExpError::Pmvi(_) => "pmvi",
            ExpError::Coverage(_) => "coverage",
        }
    }
}
