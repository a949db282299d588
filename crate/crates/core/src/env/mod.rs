//! Environments behind a single stepping interface that also supports cloning,
//! which is what the simulator model needs.

mod chain;
mod maze;
mod minipacman;
mod tree_mdp;

pub use chain::ChainWorld;
pub use maze::{generate_maze, Cell, Maze, MazeError, Pos};
pub use minipacman::{
    sample_ghost_schedule, Action, GhostSchedule, MazeSource, Minipacman, MinipacmanConfig,
    NUM_PLANES,
};
pub use tree_mdp::TreeMdp;

use rand::RngCore;
use thiserror::Error;

/// Flattened observation tensor.
pub type Observation = Vec<f32>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnvError {
    #[error("action {action} out of range (environment has {num_actions} actions)")]
    InvalidAction { action: usize, num_actions: usize },
    #[error("episode is over; reset before stepping")]
    EpisodeOver,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub terminal: bool,
}

pub trait Environment: Send + Sync {
    fn name(&self) -> &'static str;

    fn num_actions(&self) -> usize;

    fn observation_len(&self) -> usize;

    /// Starts a new episode. Layout randomness comes from `rng`; the environment
    /// also reseeds its own step stream from it.
    fn reset(&mut self, rng: &mut dyn RngCore) -> Observation;

    fn step(&mut self, action: usize) -> Result<StepResult, EnvError>;

    fn observation(&self) -> Observation;

    fn is_terminal(&self) -> bool;

    /// Replaces the stream used for stochastic dynamics.
    fn reseed(&mut self, seed: u64);

    /// Independent deep copy, including the dynamics RNG state. `None` when the
    /// environment cannot be cloned.
    fn try_clone(&self) -> Option<Box<dyn Environment>>;
}

pub(crate) fn check_action(action: usize, num_actions: usize) -> Result<(), EnvError> {
    if action < num_actions {
        Ok(())
    } else {
        Err(EnvError::InvalidAction {
            action,
            num_actions,
        })
    }
}
