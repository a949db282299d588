use rand::Rng;

use super::LearnError;
use crate::config::LossWeights;
use crate::model::{Adam, LossBreakdown, Network};
use crate::replay::{ReplayBuffer, TrainingBatch};
use crate::scalar::Scalar;

/// Weighted training loss of `network` on `batch`, without gradients.
pub fn muzero_loss<T: Scalar>(
    batch: &TrainingBatch<T>,
    network: &Network<T>,
    weights: &LossWeights,
) -> Result<LossBreakdown<T>, LearnError> {
    Ok(network.forward_backward(batch, weights, false)?.loss)
}

/// Owns the mutable parameters and the optimizer state.
pub struct Learner<T> {
    network: Network<T>,
    optimizer: Adam<T>,
    weights: LossWeights,
    batch_size: usize,
    steps: u64,
}

impl<T: Scalar> Learner<T> {
    pub fn new(
        network: Network<T>,
        learning_rate: f64,
        grad_clip: Option<f64>,
        weights: LossWeights,
        batch_size: usize,
    ) -> Self {
        Self {
            network,
            optimizer: Adam::new(T::lit(learning_rate), grad_clip.map(T::lit)),
            weights,
            batch_size,
            steps: 0,
        }
    }

    pub fn network(&self) -> &Network<T> {
        &self.network
    }

    pub fn into_network(self) -> Network<T> {
        self.network
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    /// Gradient step on an explicit batch.
    pub fn step_on(&mut self, batch: &TrainingBatch<T>) -> Result<LossBreakdown<T>, LearnError> {
        let out = self.network.forward_backward(batch, &self.weights, true)?;
        let grads = out.gradients.expect("gradients were requested");
        self.optimizer.step(self.network.params_mut(), &grads);
        self.steps += 1;
        Ok(out.loss)
    }

    /// Samples a batch from replay and takes one gradient step.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        replay: &ReplayBuffer<T>,
        rng: &mut R,
    ) -> Result<LossBreakdown<T>, LearnError> {
        let batch = replay.sample(self.batch_size, rng)?;
        self.step_on(&batch)
    }
}
