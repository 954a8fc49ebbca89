pub mod coverage;
pub mod datagen;
pub mod estimators;
pub mod expcli;
pub mod game;
pub mod instances;
pub mod pmvi;
pub mod rng;
