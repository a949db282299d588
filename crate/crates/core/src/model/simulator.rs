//! Model backed by copies of the real environment: dynamics and rewards are
//! exact, priors and values come from a [`PriorSource`].

use std::fmt;
use std::sync::Arc;

use super::{HiddenState, Model, ModelError, ModelOutput, Network, RootInference, RootInput};
use crate::env::Environment;
use crate::scalar::Scalar;

/// Frozen environment copy. Stepping clones it, so a handle can be expanded
/// along several actions.
#[derive(Clone)]
pub struct SimHandle {
    env: Arc<dyn Environment>,
    observation: Vec<f32>,
    terminal: bool,
}

impl SimHandle {
    pub fn observation(&self) -> &[f32] {
        &self.observation
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }
}

impl fmt::Debug for SimHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimHandle")
            .field("env", &self.env.name())
            .field("terminal", &self.terminal)
            .finish()
    }
}

/// Supplies the policy prior and value estimate for a real observation.
pub trait PriorSource<T: Scalar>: Sync {
    fn prior(&self, observation: &[f32]) -> Result<(Vec<T>, T), ModelError>;
}

/// Uniform policy and a constant value.
#[derive(Clone, Debug)]
pub struct UniformPrior<T> {
    pub num_actions: usize,
    pub value: T,
}

impl<T: Scalar> PriorSource<T> for UniformPrior<T> {
    fn prior(&self, _observation: &[f32]) -> Result<(Vec<T>, T), ModelError> {
        Ok((uniform(self.num_actions), self.value))
    }
}

impl<T: Scalar> PriorSource<T> for Network<T> {
    fn prior(&self, observation: &[f32]) -> Result<(Vec<T>, T), ModelError> {
        let latent = self.encode(observation)?;
        Ok(self.predict(&latent))
    }
}

impl<T: Scalar, P: PriorSource<T> + ?Sized> PriorSource<T> for &P {
    fn prior(&self, observation: &[f32]) -> Result<(Vec<T>, T), ModelError> {
        (**self).prior(observation)
    }
}

impl<T: Scalar, P: PriorSource<T> + Send + ?Sized> PriorSource<T> for Arc<P> {
    fn prior(&self, observation: &[f32]) -> Result<(Vec<T>, T), ModelError> {
        (**self).prior(observation)
    }
}

fn uniform<T: Scalar>(n: usize) -> Vec<T> {
    vec![T::one() / T::lit(n as f64); n]
}

#[derive(Clone, Debug)]
pub struct SimulatorModel<P> {
    prior: P,
    num_actions: usize,
}

impl<P> SimulatorModel<P> {
    pub fn new(prior: P, num_actions: usize) -> Self {
        Self { prior, num_actions }
    }
}

impl<T: Scalar, P: PriorSource<T>> Model<T> for SimulatorModel<P> {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn initial_inference(&self, root: &RootInput<'_>) -> Result<RootInference<T>, ModelError> {
        let env = root.env.ok_or(ModelError::NoEnvironment)?;
        let mut copy = env
            .try_clone()
            .ok_or(ModelError::NotClonable(env.name()))?;
        copy.reseed(root.seed);
        let terminal = copy.is_terminal();
        let observation = copy.observation();
        let (policy, value) = if terminal {
            (uniform(self.num_actions), T::zero())
        } else {
            self.prior.prior(&observation)?
        };
        Ok(RootInference {
            state: HiddenState::Simulator(SimHandle {
                env: Arc::from(copy),
                observation,
                terminal,
            }),
            policy,
            value,
        })
    }

    fn recurrent_inference(
        &self,
        state: &HiddenState<T>,
        action: usize,
    ) -> Result<ModelOutput<T>, ModelError> {
        let HiddenState::Simulator(handle) = state else {
            return Err(ModelError::WrongStateKind("simulator"));
        };
        if action >= self.num_actions {
            return Err(ModelError::InvalidAction {
                action,
                num_actions: self.num_actions,
            });
        }
        if handle.terminal {
            return Ok(ModelOutput {
                reward: T::zero(),
                next_state: state.clone(),
                policy: uniform(self.num_actions),
                value: T::zero(),
                terminal: true,
            });
        }
        let mut copy = handle
            .env
            .try_clone()
            .ok_or(ModelError::NotClonable(handle.env.name()))?;
        let step = copy.step(action)?;
        let (policy, value) = if step.terminal {
            (uniform(self.num_actions), T::zero())
        } else {
            self.prior.prior(&step.observation)?
        };
        Ok(ModelOutput {
            reward: T::lit(step.reward),
            next_state: HiddenState::Simulator(SimHandle {
                env: Arc::from(copy),
                observation: step.observation,
                terminal: step.terminal,
            }),
            policy,
            value,
            terminal: step.terminal,
        })
    }
}
