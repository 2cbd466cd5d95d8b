//! Simulation of offloading and caching decisions for sub-tasks relayed
//! through a low-earth-orbit satellite edge server, with an exhaustive
//! search oracle, heuristic baselines and an imitation-learned policy.

pub mod caching;
pub mod channel;
pub mod config;
pub mod dil;
pub mod error;
pub mod evaluator;
pub mod experiment;
pub mod geometry;
pub mod neural;
pub mod oracle;
pub mod policies;
pub mod scenario;
pub mod workload;

pub use caching::{CacheState, Eviction, OutputLibrary};
pub use channel::LinkState;
pub use config::{CacheMode, CompareCache, Config, CoverageMode};
pub use dil::{AccuracyReport, LossCurve, SchemeMetrics, TrainConfig};
pub use error::{Error, Result};
pub use evaluator::{ActionMatrix, ActionPair, EpisodeState, PriceVector};
pub use experiment::{Comparison, Pipeline, SweepKind, SweepPoint};
pub use geometry::OrbitParams;
pub use neural::{MlpModel, RangeTable};
pub use oracle::{Demonstration, LabeledEpisode};
pub use policies::{OffloadBaseline, Scheme};
pub use scenario::Scenario;
pub use workload::{Category, SubTask, TaskGraph};
