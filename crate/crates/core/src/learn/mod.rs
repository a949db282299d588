//! Training: variant presets, acting, the learner and the single-process loop
//! that ties them together.

mod actor;
mod learner;
mod run_config;
mod schedule;
mod training;
mod variant;

pub use actor::{actor_episode, eval_episode, eval_planner, ModelKind, Planner};
pub use learner::{muzero_loss, Learner};
pub use run_config::{EnvConfig, EnvFactory, EnvKind, MazeChoice, NetConfig, RunConfig, TrainConfig};
pub use schedule::{temperature, TemperatureSchedule};
pub use training::{
    evaluate, metrics_csv, run_training, MetricsRow, Snapshot, TrainOutcome, METRICS_HEADER,
};
pub use variant::{ActSource, VariantPreset};

use thiserror::Error;

use crate::config::ConfigError;
use crate::env::EnvError;
use crate::model::ModelError;
use crate::replay::ReplayError;
use crate::search::SearchError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
}
