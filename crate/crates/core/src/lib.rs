//! Evolutionary optimizers behind an ask–tell interface, fitness shaping,
//! gradient-descent updates, a small task suite, a deterministic parallel
//! evaluator and a tuning/benchmark protocol.

pub mod asktell;
pub mod error;
pub mod evaluator;
pub mod gradopt;
pub mod networks;
pub mod protocol;
pub mod report;
pub mod rng;
pub mod shaping;
pub mod strategies;
pub mod tasks;

pub use asktell::{Candidate, Elite, FitnessDirection, Population, SearchDistribution, Strategy, StrategyState};
pub use error::{Error, Result};
pub use rng::RngStream;
pub use shaping::{Shaper, ShapingKind};
pub use strategies::{StrategyConfig, StrategyKind};
pub use tasks::{Task, TaskConfig};
