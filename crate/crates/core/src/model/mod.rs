//! The value-equivalent model: encoder, dynamics and prior functions behind one
//! trait, with a learned network backend and a perfect-simulator backend.

mod checkpoint;
mod network;
mod optim;
mod simulator;
mod support;
mod tape;

pub use checkpoint::CheckpointError;
pub use network::{
    bce_from_probs, cross_entropy, Dense, ForwardBackward, Gradients, LossBreakdown, Network,
    NetworkShape, Params, LAYER_NAMES,
};
pub use optim::Adam;
pub use simulator::{PriorSource, SimHandle, SimulatorModel, UniformPrior};
pub use support::CategoricalSupport;

use thiserror::Error;

use crate::env::{EnvError, Environment};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("observation has {got} values, model expects {expected}")]
    ShapeMismatch { got: usize, expected: usize },
    #[error("action {action} out of range ({num_actions} actions)")]
    InvalidAction { action: usize, num_actions: usize },
    #[error("{0} backend cannot handle this hidden state")]
    WrongStateKind(&'static str),
    #[error("simulator backend needs the live environment at the root")]
    NoEnvironment,
    #[error("environment `{0}` cannot be cloned for simulation")]
    NotClonable(&'static str),
    #[error("reconstruction is only available on the learned backend")]
    NoReconstruction,
    #[error("non-finite {term} loss at unroll step {step}")]
    NonFinite { term: &'static str, step: usize },
    #[error("batch unroll length {got} does not match the configured {expected}")]
    UnrollMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// State a model plans in.
#[derive(Clone, Debug)]
pub enum HiddenState<T> {
    Latent(Vec<T>),
    Simulator(SimHandle),
}

impl<T> HiddenState<T> {
    pub fn as_latent(&self) -> Option<&[T]> {
        match self {
            HiddenState::Latent(v) => Some(v),
            HiddenState::Simulator(_) => None,
        }
    }
}

/// What a root inference sees: the current observation and, for simulation, the
/// live environment plus a seed for the copy's dynamics stream.
#[derive(Clone, Copy)]
pub struct RootInput<'a> {
    pub observation: &'a [f32],
    pub env: Option<&'a dyn Environment>,
    pub seed: u64,
}

impl<'a> RootInput<'a> {
    pub fn observation_only(observation: &'a [f32]) -> Self {
        Self {
            observation,
            env: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RootInference<T> {
    pub state: HiddenState<T>,
    pub policy: Vec<T>,
    pub value: T,
}

#[derive(Clone, Debug)]
pub struct ModelOutput<T> {
    pub reward: T,
    pub next_state: HiddenState<T>,
    pub policy: Vec<T>,
    pub value: T,
    /// Only the simulator backend can report episode ends.
    pub terminal: bool,
}

pub trait Model<T: Scalar>: Sync {
    fn num_actions(&self) -> usize;

    /// `h` followed by `f` on the root.
    fn initial_inference(&self, root: &RootInput<'_>) -> Result<RootInference<T>, ModelError>;

    /// `g` followed by `f` on the successor.
    fn recurrent_inference(
        &self,
        state: &HiddenState<T>,
        action: usize,
    ) -> Result<ModelOutput<T>, ModelError>;

    fn reconstruct(&self, _state: &HiddenState<T>) -> Result<Vec<T>, ModelError> {
        Err(ModelError::NoReconstruction)
    }
}

impl<T: Scalar, M: Model<T> + ?Sized> Model<T> for &M {
    fn num_actions(&self) -> usize {
        (**self).num_actions()
    }

    fn initial_inference(&self, root: &RootInput<'_>) -> Result<RootInference<T>, ModelError> {
        (**self).initial_inference(root)
    }

    fn recurrent_inference(
        &self,
        state: &HiddenState<T>,
        action: usize,
    ) -> Result<ModelOutput<T>, ModelError> {
        (**self).recurrent_inference(state, action)
    }

    fn reconstruct(&self, state: &HiddenState<T>) -> Result<Vec<T>, ModelError> {
        (**self).reconstruct(state)
    }
}
