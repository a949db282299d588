use super::network::Params;
use crate::scalar::Scalar;

/// Adam with bias correction and optional global-norm gradient clipping.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    /// Clip threshold on the global gradient norm; `None` disables clipping.
    pub clip_norm: Option<T>,
    m: Option<Params<T>>,
    v: Option<Params<T>>,
    steps: u64,
}

impl<T: Scalar> Adam<T> {
    pub fn new(learning_rate: T, clip_norm: Option<T>) -> Self {
        Self {
            learning_rate,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            epsilon: T::lit(1e-8),
            clip_norm,
            m: None,
            v: None,
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Applies one update in place. Returns the gradient norm before clipping.
    pub fn step(&mut self, params: &mut Params<T>, grads: &Params<T>) -> T {
        let norm = grads.norm();
        let scale = match self.clip_norm {
            Some(c) if norm > c => c / norm,
            _ => T::one(),
        };
        let m = self.m.get_or_insert_with(|| params.zeros_like());
        let v = self.v.get_or_insert_with(|| params.zeros_like());
        self.steps += 1;
        let t = self.steps as i32;
        let bc1 = T::one() - self.beta1.powi(t);
        let bc2 = T::one() - self.beta2.powi(t);
        for (((p, &g), mi), vi) in params
            .values_mut()
            .zip(grads.values())
            .zip(m.values_mut())
            .zip(v.values_mut())
        {
            let g = g * scale;
            *mi = self.beta1 * *mi + (T::one() - self.beta1) * g;
            *vi = self.beta2 * *vi + (T::one() - self.beta2) * g * g;
            let mhat = *mi / bc1;
            let vhat = *vi / bc2;
            *p -= self.learning_rate * mhat / (vhat.sqrt() + self.epsilon);
        }
        norm
    }
}
