//! Small perceptron model: encoder, dynamics with reward head, prediction heads
//! and an optional observation-reconstruction head.

use rand::Rng;
use rayon::prelude::*;

use super::support::CategoricalSupport;
use super::tape::{Tape, Var};
use super::{HiddenState, Model, ModelError, ModelOutput, RootInference, RootInput};
use crate::config::LossWeights;
use crate::replay::{BatchSample, TrainingBatch};
use crate::scalar::{softmax, Scalar};

pub(crate) const ENC0: usize = 0;
pub(crate) const ENC1: usize = 1;
pub(crate) const DYN0: usize = 2;
pub(crate) const DYN1: usize = 3;
pub(crate) const REWARD: usize = 4;
pub(crate) const PRED0: usize = 5;
pub(crate) const POLICY: usize = 6;
pub(crate) const VALUE: usize = 7;
pub(crate) const REC0: usize = 8;
pub(crate) const REC1: usize = 9;

pub const LAYER_NAMES: [&str; 10] = [
    "encoder.0",
    "encoder.1",
    "dynamics.0",
    "dynamics.1",
    "dynamics.reward",
    "prediction.0",
    "prediction.policy",
    "prediction.value",
    "reconstruction.0",
    "reconstruction.1",
];

/// Fully connected layer, weights stored row-major as `outputs x inputs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![T::zero(); inputs * outputs],
            bias: vec![T::zero(); outputs],
        }
    }

    /// Weights uniform in `+-1/sqrt(fan_in)`, zero bias.
    pub fn uniform<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| T::lit(rng.random_range(-bound..bound)))
            .collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![T::zero(); outputs],
        }
    }

    pub fn forward(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.inputs);
        if let Some(nz) = sparse_support(x) {
            return self
                .weights
                .chunks_exact(self.inputs)
                .zip(&self.bias)
                .map(|(row, &b)| nz.iter().fold(b, |acc, &i| acc + row[i] * x[i]))
                .collect();
        }
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, &b)| row.iter().zip(x).fold(b, |acc, (&w, &xi)| acc + w * xi))
            .collect()
    }
}

/// Indices of the non-zero entries when fewer than a quarter of `x` is non-zero.
/// Observation planes are mostly zero, so skipping them pays off.
pub(crate) fn sparse_support<T: Scalar>(x: &[T]) -> Option<Vec<usize>> {
    if x.len() < 32 {
        return None;
    }
    let nz: Vec<usize> = (0..x.len()).filter(|&i| x[i] != T::zero()).collect();
    (nz.len() * 4 < x.len()).then_some(nz)
}

/// All trainable arrays. Also used as the gradient and optimizer-moment container.
#[derive(Clone, Debug, PartialEq)]
pub struct Params<T> {
    pub layers: Vec<Dense<T>>,
}

pub type Gradients<T> = Params<T>;

impl<T: Scalar> Params<T> {
    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> impl Iterator<Item = &T> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    /// Element `i` in [`Params::values`] order.
    pub fn get(&self, i: usize) -> T {
        *self.values().nth(i).expect("parameter index")
    }

    pub fn set(&mut self, i: usize, v: T) {
        *self.values_mut().nth(i).expect("parameter index") = v;
    }

    pub fn norm(&self) -> T {
        self.values().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.values_mut()
            .zip(other.values())
            .for_each(|(a, &b)| *a += b);
    }

    pub fn scale(&mut self, s: T) {
        self.values_mut().for_each(|v| *v *= s);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkShape {
    pub observation_len: usize,
    pub num_actions: usize,
    pub hidden: usize,
    pub latent: usize,
    pub support_min: f64,
    pub support_max: f64,
    pub support_bins: usize,
}

/// Weighted loss terms, averaged over the batch. `total` is their sum.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown<T> {
    pub total: T,
    pub reward: T,
    pub value: T,
    pub policy: T,
    pub reconstruction: T,
    pub l2: T,
}

impl<T: Scalar> LossBreakdown<T> {
    fn add(&mut self, o: &Self) {
        self.reward += o.reward;
        self.value += o.value;
        self.policy += o.policy;
        self.reconstruction += o.reconstruction;
    }

    fn finish(&mut self) {
        self.total = self.reward + self.value + self.policy + self.reconstruction + self.l2;
    }
}

pub struct ForwardBackward<T> {
    pub loss: LossBreakdown<T>,
    pub gradients: Option<Gradients<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network<T> {
    shape: NetworkShape,
    support: CategoricalSupport<T>,
    params: Params<T>,
}

const CHUNK: usize = 8;

type ChunkResult<T> = Result<(LossBreakdown<T>, Option<Gradients<T>>), ModelError>;

impl<T: Scalar> Network<T> {
    pub fn new<R: Rng + ?Sized>(shape: NetworkShape, rng: &mut R) -> Self {
        let zero_init = [REWARD, POLICY, VALUE];
        let layers = layer_dims(&shape)
            .into_iter()
            .enumerate()
            .map(|(i, (inp, out))| {
                if zero_init.contains(&i) {
                    Dense::zeros(inp, out)
                } else {
                    Dense::uniform(inp, out, rng)
                }
            })
            .collect();
        Self {
            support: make_support(&shape),
            shape,
            params: Params { layers },
        }
    }

    /// Rebuilds a network around existing parameters; shapes must match.
    pub fn from_params(shape: NetworkShape, params: Params<T>) -> Result<Self, String> {
        let dims = layer_dims(&shape);
        if dims.len() != params.layers.len() {
            return Err(format!(
                "expected {} layers, found {}",
                dims.len(),
                params.layers.len()
            ));
        }
        for (i, (&(inp, out), l)) in dims.iter().zip(&params.layers).enumerate() {
            if (l.inputs, l.outputs) != (inp, out)
                || l.weights.len() != inp * out
                || l.bias.len() != out
            {
                return Err(format!(
                    "layer {} is {}x{}, expected {}x{}",
                    LAYER_NAMES[i], l.outputs, l.inputs, out, inp
                ));
            }
        }
        Ok(Self {
            support: make_support(&shape),
            shape,
            params,
        })
    }

    pub fn shape(&self) -> &NetworkShape {
        &self.shape
    }

    pub fn support(&self) -> &CategoricalSupport<T> {
        &self.support
    }

    pub fn params(&self) -> &Params<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params<T> {
        &mut self.params
    }

    fn layer(&self, i: usize) -> &Dense<T> {
        &self.params.layers[i]
    }

    fn check_obs(&self, obs: &[f32]) -> Result<(), ModelError> {
        if obs.len() != self.shape.observation_len {
            return Err(ModelError::ShapeMismatch {
                got: obs.len(),
                expected: self.shape.observation_len,
            });
        }
        Ok(())
    }

    fn check_action(&self, action: usize) -> Result<(), ModelError> {
        if action >= self.shape.num_actions {
            return Err(ModelError::InvalidAction {
                action,
                num_actions: self.shape.num_actions,
            });
        }
        Ok(())
    }

    pub fn encode(&self, obs: &[f32]) -> Result<Vec<T>, ModelError> {
        self.check_obs(obs)?;
        let x: Vec<T> = obs.iter().map(|&v| T::of_f32(v)).collect();
        let h = tanh(self.layer(ENC0).forward(&x));
        Ok(tanh(self.layer(ENC1).forward(&h)))
    }

    /// Policy probabilities and scalar value for a latent state.
    pub fn predict(&self, latent: &[T]) -> (Vec<T>, T) {
        let h = tanh(self.layer(PRED0).forward(latent));
        let policy = softmax(&self.layer(POLICY).forward(&h));
        let value = self
            .support
            .decode(&softmax(&self.layer(VALUE).forward(&h)));
        (policy, value)
    }

    /// Next latent state and scalar reward.
    pub fn dynamics(&self, latent: &[T], action: usize) -> Result<(Vec<T>, T), ModelError> {
        self.check_action(action)?;
        let mut x = latent.to_vec();
        x.extend((0..self.shape.num_actions).map(|a| if a == action { T::one() } else { T::zero() }));
        let h = tanh(self.layer(DYN0).forward(&x));
        let next = tanh(self.layer(DYN1).forward(&h));
        let reward = self
            .support
            .decode(&softmax(&self.layer(REWARD).forward(&h)));
        Ok((next, reward))
    }

    /// Per-cell probabilities of the observation predicted from a latent state.
    pub fn reconstruct_latent(&self, latent: &[T]) -> Vec<T> {
        let h = tanh(self.layer(REC0).forward(latent));
        self.layer(REC1)
            .forward(&h)
            .into_iter()
            .map(|z| T::one() / (T::one() + (-z).exp()))
            .collect()
    }

    /// Loss over the batch and, when asked, its gradient with respect to every
    /// parameter. Hidden states are produced by unrolling the dynamics through
    /// the stored actions.
    pub fn forward_backward(
        &self,
        batch: &TrainingBatch<T>,
        weights: &LossWeights,
        with_gradients: bool,
    ) -> Result<ForwardBackward<T>, ModelError> {
        let n = batch.samples.len();
        assert!(n > 0, "empty batch");
        for s in &batch.samples {
            if s.actions.len() != batch.unroll_k {
                return Err(ModelError::UnrollMismatch {
                    got: s.actions.len(),
                    expected: batch.unroll_k,
                });
            }
        }
        let w = SampleWeights {
            reward: T::lit(weights.reward),
            value: T::lit(weights.value),
            policy: T::lit(weights.policy),
            recon: T::lit(weights.reconstruction),
        };
        let parts: Vec<ChunkResult<T>> = batch
            .samples
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut loss = LossBreakdown::default();
                let mut grads = with_gradients.then(|| self.params.zeros_like());
                for s in chunk {
                    let l = self.sample_loss(s, &w, grads.as_mut())?;
                    loss.add(&l);
                }
                Ok((loss, grads))
            })
            .collect();

        let scale = T::one() / T::lit(n as f64);
        let mut loss = LossBreakdown::default();
        let mut grads: Option<Gradients<T>> = with_gradients.then(|| self.params.zeros_like());
        for part in parts {
            let (l, g) = part?;
            loss.add(&l);
            if let (Some(acc), Some(g)) = (grads.as_mut(), g) {
                acc.add_assign(&g);
            }
        }
        loss.reward *= scale;
        loss.value *= scale;
        loss.policy *= scale;
        loss.reconstruction *= scale;
        if let Some(g) = grads.as_mut() {
            g.scale(scale);
        }

        let c = T::lit(weights.l2);
        let recon_on = weights.reconstruction > 0.0;
        let mut l2 = T::zero();
        for (i, layer) in self.params.layers.iter().enumerate() {
            if !recon_on && (i == REC0 || i == REC1) {
                continue;
            }
            let sq: T = layer
                .weights
                .iter()
                .chain(&layer.bias)
                .map(|&v| v * v)
                .sum();
            l2 += sq;
            if let Some(g) = grads.as_mut() {
                if c != T::zero() {
                    let gl = &mut g.layers[i];
                    for (gv, &pv) in gl
                        .weights
                        .iter_mut()
                        .chain(gl.bias.iter_mut())
                        .zip(layer.weights.iter().chain(&layer.bias))
                    {
                        *gv += T::lit(2.0) * c * pv;
                    }
                }
            }
        }
        loss.l2 = c * l2;
        if !loss.l2.is_finite() {
            return Err(ModelError::NonFinite {
                term: "l2",
                step: 0,
            });
        }
        loss.finish();
        Ok(ForwardBackward {
            loss,
            gradients: grads,
        })
    }

    fn sample_loss(
        &self,
        s: &BatchSample<T>,
        w: &SampleWeights<T>,
        grads: Option<&mut Gradients<T>>,
    ) -> Result<LossBreakdown<T>, ModelError> {
        self.check_obs(&s.observation)?;
        let k_max = s.actions.len();
        let mut tape = Tape::new(&self.params);
        let mut seeds: Vec<(Var, T)> = Vec::new();
        let mut out = LossBreakdown::default();
        let check = |v: T, term: &'static str, step: usize| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(ModelError::NonFinite { term, step })
            }
        };

        let x = tape.input(s.observation.iter().map(|&v| T::of_f32(v)).collect());
        let h = tape.linear(ENC0, x);
        let h = tape.tanh(h);
        let z = tape.linear(ENC1, h);
        let mut state = tape.tanh(z);

        for k in 0..=k_max {
            if k > 0 {
                self.check_action(s.actions[k - 1])?;
                let onehot = tape.input(
                    (0..self.shape.num_actions)
                        .map(|a| if a == s.actions[k - 1] { T::one() } else { T::zero() })
                        .collect(),
                );
                let x = tape.concat(state, onehot);
                let h = tape.linear(DYN0, x);
                let h = tape.tanh(h);
                let z = tape.linear(DYN1, h);
                state = tape.tanh(z);
                if w.reward != T::zero() {
                    let logits = tape.linear(REWARD, h);
                    let l = tape.softmax_xent(logits, self.support.encode(s.reward_targets[k]));
                    out.reward += w.reward * check(tape.scalar(l), "reward", k)?;
                    seeds.push((l, w.reward));
                }
            }
            let ph = tape.linear(PRED0, state);
            let ph = tape.tanh(ph);
            if w.value != T::zero() {
                let logits = tape.linear(VALUE, ph);
                let l = tape.softmax_xent(logits, self.support.encode(s.value_targets[k]));
                out.value += w.value * check(tape.scalar(l), "value", k)?;
                seeds.push((l, w.value));
            }
            if w.policy != T::zero() {
                let logits = tape.linear(POLICY, ph);
                let l = tape.softmax_xent(logits, s.policy_targets[k].clone());
                out.policy += w.policy * check(tape.scalar(l), "policy", k)?;
                seeds.push((l, w.policy));
            }
            if w.recon != T::zero() {
                let target = &s.observation_targets[k];
                self.check_obs(target)?;
                let rh = tape.linear(REC0, state);
                let rh = tape.tanh(rh);
                let logits = tape.linear(REC1, rh);
                let l = tape.sigmoid_bce(logits, target.iter().map(|&v| T::of_f32(v)).collect());
                out.reconstruction += w.recon * check(tape.scalar(l), "reconstruction", k)?;
                seeds.push((l, w.recon));
            }
        }
        if let Some(g) = grads {
            tape.backward(&seeds, g);
        }
        Ok(out)
    }
}

/// `(inputs, outputs)` of every layer, in [`LAYER_NAMES`] order.
pub(crate) fn layer_dims(shape: &NetworkShape) -> Vec<(usize, usize)> {
    let (o, a, h, l, b) = (
        shape.observation_len,
        shape.num_actions,
        shape.hidden,
        shape.latent,
        shape.support_bins,
    );
    vec![
        (o, h),
        (h, l),
        (l + a, h),
        (h, l),
        (h, b),
        (l, h),
        (h, a),
        (h, b),
        (l, h),
        (h, o),
    ]
}

fn make_support<T: Scalar>(shape: &NetworkShape) -> CategoricalSupport<T> {
    CategoricalSupport::new(
        T::lit(shape.support_min),
        T::lit(shape.support_max),
        shape.support_bins,
    )
    .expect("valid support")
}

struct SampleWeights<T> {
    reward: T,
    value: T,
    policy: T,
    recon: T,
}

fn tanh<T: Scalar>(v: Vec<T>) -> Vec<T> {
    v.into_iter().map(|x| x.tanh()).collect()
}

/// `-sum t log p` with `0 log 0 = 0`.
pub fn cross_entropy<T: Scalar>(target: &[T], probs: &[T]) -> T {
    target
        .iter()
        .zip(probs)
        .map(|(&t, &p)| if t == T::zero() { T::zero() } else { -t * p.ln() })
        .sum()
}

/// Mean binary cross-entropy between per-cell targets and probabilities.
pub fn bce_from_probs<T: Scalar>(target: &[T], probs: &[T]) -> T {
    let term = |t: T, p: T| if t == T::zero() { T::zero() } else { -t * p.ln() };
    let total: T = target
        .iter()
        .zip(probs)
        .map(|(&t, &p)| term(t, p) + term(T::one() - t, T::one() - p))
        .sum();
    total / T::lit(target.len() as f64)
}

impl<T: Scalar> Model<T> for Network<T> {
    fn num_actions(&self) -> usize {
        self.shape.num_actions
    }

    fn initial_inference(&self, root: &RootInput<'_>) -> Result<RootInference<T>, ModelError> {
        let state = self.encode(root.observation)?;
        let (policy, value) = self.predict(&state);
        Ok(RootInference {
            state: HiddenState::Latent(state),
            policy,
            value,
        })
    }

    fn recurrent_inference(
        &self,
        state: &HiddenState<T>,
        action: usize,
    ) -> Result<ModelOutput<T>, ModelError> {
        let latent = state
            .as_latent()
            .ok_or(ModelError::WrongStateKind("learned"))?;
        let (next, reward) = self.dynamics(latent, action)?;
        let (policy, value) = self.predict(&next);
        Ok(ModelOutput {
            reward,
            next_state: HiddenState::Latent(next),
            policy,
            value,
            terminal: false,
        })
    }

    fn reconstruct(&self, state: &HiddenState<T>) -> Result<Vec<T>, ModelError> {
        match state {
            HiddenState::Latent(l) => Ok(self.reconstruct_latent(l)),
            HiddenState::Simulator(_) => Err(ModelError::NoReconstruction),
        }
    }
}
