//! Minimal reverse-mode tape over vector-valued nodes, specialised to the dense
//! layers of [`Params`].

use super::network::{sparse_support, Dense, Params};
use crate::scalar::{softmax, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Var(usize);

enum Op<T> {
    Input,
    Linear { layer: usize, x: Var },
    Tanh { x: Var },
    Concat { a: Var, b: Var },
    /// Scalar `-sum_i t_i log softmax(z)_i`; caches the softmax.
    SoftmaxXent { logits: Var, target: Vec<T>, probs: Vec<T> },
    /// Scalar mean binary cross-entropy of `sigmoid(z)` against `t`.
    SigmoidBce { logits: Var, target: Vec<T>, probs: Vec<T> },
}

pub(crate) struct Tape<'p, T> {
    params: &'p Params<T>,
    values: Vec<Vec<T>>,
    ops: Vec<Op<T>>,
}

impl<'p, T: Scalar> Tape<'p, T> {
    pub fn new(params: &'p Params<T>) -> Self {
        Self {
            params,
            values: Vec::with_capacity(64),
            ops: Vec::with_capacity(64),
        }
    }

    fn push(&mut self, value: Vec<T>, op: Op<T>) -> Var {
        self.values.push(value);
        self.ops.push(op);
        Var(self.values.len() - 1)
    }

    pub fn scalar(&self, v: Var) -> T {
        self.values[v.0][0]
    }

    pub fn input(&mut self, x: Vec<T>) -> Var {
        self.push(x, Op::Input)
    }

    pub fn linear(&mut self, layer: usize, x: Var) -> Var {
        let y = self.params.layers[layer].forward(&self.values[x.0]);
        self.push(y, Op::Linear { layer, x })
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let y = self.values[x.0].iter().map(|v| v.tanh()).collect();
        self.push(y, Op::Tanh { x })
    }

    pub fn concat(&mut self, a: Var, b: Var) -> Var {
        let mut y = self.values[a.0].clone();
        y.extend_from_slice(&self.values[b.0]);
        self.push(y, Op::Concat { a, b })
    }

    pub fn softmax_xent(&mut self, logits: Var, target: Vec<T>) -> Var {
        let z = &self.values[logits.0];
        let max = z.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = max + z.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
        let loss: T = z
            .iter()
            .zip(&target)
            .map(|(&zi, &ti)| if ti == T::zero() { T::zero() } else { -ti * (zi - lse) })
            .sum();
        let probs = softmax(z);
        self.push(vec![loss], Op::SoftmaxXent { logits, target, probs })
    }

    pub fn sigmoid_bce(&mut self, logits: Var, target: Vec<T>) -> Var {
        let z = &self.values[logits.0];
        let n = T::lit(z.len() as f64);
        let mut loss = T::zero();
        let mut probs = Vec::with_capacity(z.len());
        for (&x, &t) in z.iter().zip(&target) {
            // softplus(x) - t x, written to avoid overflow
            loss += x.max(T::zero()) - t * x + (-x.abs()).exp().ln_1p();
            probs.push(T::one() / (T::one() + (-x).exp()));
        }
        self.push(vec![loss / n], Op::SigmoidBce { logits, target, probs })
    }

    /// Back-propagates `sum_i w_i * seed_i` into `grads`.
    pub fn backward(&self, seeds: &[(Var, T)], grads: &mut Params<T>) {
        let mut adj: Vec<Option<Vec<T>>> = (0..self.values.len()).map(|_| None).collect();
        for &(v, w) in seeds {
            accumulate(&mut adj[v.0], &[w]);
        }
        for node in (0..self.ops.len()).rev() {
            let Some(dy) = adj[node].take() else {
                continue;
            };
            match &self.ops[node] {
                Op::Input => {}
                Op::Linear { layer, x } => {
                    let dense = &self.params.layers[*layer];
                    let xv = &self.values[x.0];
                    dense_backward_params(dense, xv, &dy, &mut grads.layers[*layer]);
                    if !matches!(self.ops[x.0], Op::Input) {
                        let dx = dense_backward_input(dense, &dy);
                        accumulate(&mut adj[x.0], &dx);
                    }
                }
                Op::Tanh { x } => {
                    let y = &self.values[node];
                    let dx: Vec<T> = y
                        .iter()
                        .zip(&dy)
                        .map(|(&yi, &g)| g * (T::one() - yi * yi))
                        .collect();
                    accumulate(&mut adj[x.0], &dx);
                }
                Op::Concat { a, b } => {
                    let na = self.values[a.0].len();
                    accumulate(&mut adj[a.0], &dy[..na]);
                    if !matches!(self.ops[b.0], Op::Input) {
                        accumulate(&mut adj[b.0], &dy[na..]);
                    }
                }
                Op::SoftmaxXent {
                    logits,
                    target,
                    probs,
                } => {
                    let mass: T = target.iter().copied().sum();
                    let dz: Vec<T> = probs
                        .iter()
                        .zip(target)
                        .map(|(&p, &t)| dy[0] * (mass * p - t))
                        .collect();
                    accumulate(&mut adj[logits.0], &dz);
                }
                Op::SigmoidBce {
                    logits,
                    target,
                    probs,
                } => {
                    let n = T::lit(probs.len() as f64);
                    let dz: Vec<T> = probs
                        .iter()
                        .zip(target)
                        .map(|(&p, &t)| dy[0] * (p - t) / n)
                        .collect();
                    accumulate(&mut adj[logits.0], &dz);
                }
            }
        }
    }
}

fn accumulate<T: Scalar>(slot: &mut Option<Vec<T>>, g: &[T]) {
    match slot {
        Some(acc) => acc.iter_mut().zip(g).for_each(|(a, &b)| *a += b),
        None => *slot = Some(g.to_vec()),
    }
}

fn dense_backward_params<T: Scalar>(dense: &Dense<T>, x: &[T], dy: &[T], grad: &mut Dense<T>) {
    let n_in = dense.inputs;
    let nz = sparse_support(x);
    for (o, &g) in dy.iter().enumerate() {
        if g == T::zero() {
            continue;
        }
        grad.bias[o] += g;
        let row = &mut grad.weights[o * n_in..(o + 1) * n_in];
        match &nz {
            Some(nz) => nz.iter().for_each(|&i| row[i] += g * x[i]),
            None => row.iter_mut().zip(x).for_each(|(w, &xi)| *w += g * xi),
        }
    }
}

fn dense_backward_input<T: Scalar>(dense: &Dense<T>, dy: &[T]) -> Vec<T> {
    let n_in = dense.inputs;
    let mut dx = vec![T::zero(); n_in];
    for (o, &g) in dy.iter().enumerate() {
        let row = &dense.weights[o * n_in..(o + 1) * n_in];
        for (d, &w) in dx.iter_mut().zip(row) {
            *d += g * w;
        }
    }
    dx
}
