//! Planning with a learned value-equivalent model: environments, replay, the
//! model backends, pUCT/BFS planners and the training loop.
//!
//! Everything numeric is generic over [`scalar::Scalar`] (`f32` or `f64`). The
//! aliases below fix the scalar to `f64`, which the command-line runner uses.

pub mod config;
pub mod env;
pub mod learn;
pub mod model;
pub mod replay;
pub mod scalar;
pub mod search;
pub mod targets;

pub type Real = f64;
pub type Network = model::Network<Real>;
pub type HiddenState = model::HiddenState<Real>;
pub type SearchTree = search::SearchTree<Real>;
pub type SearchParams = search::SearchParams<Real>;
pub type SearchResult = search::SearchResult<Real>;
pub type ReplayBuffer = replay::ReplayBuffer<Real>;
pub type Episode = replay::Episode<Real>;
pub type TrainingBatch = replay::TrainingBatch<Real>;
pub type TrainOutcome = learn::TrainOutcome<Real>;
