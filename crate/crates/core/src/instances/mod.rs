//! Hard instances from the lower-bound constructions and seeded random
//! test games.

mod agnostic;
mod random;
mod tree;

pub use agnostic::{build_agnostic_pair, indistinguishable, AgnosticBanditPair};
pub use random::{random_linear, random_tabular, MAX_LINEAR_ATTEMPTS};
pub use tree::{build_tree_pair, TreeInstancePair};

use thiserror::Error;

use crate::datagen::DataError;
use crate::game::GameError;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no valid construction after {0} attempts")]
    ConstructionFailed(usize),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Data(#[from] DataError),
}
