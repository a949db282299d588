use crate::scalar::Scalar;

/// Evenly spaced bin centres used to represent rewards and values as categorical
/// distributions. Scalars map to two-hot vectors; distributions map back by
/// expectation.
#[derive(Clone, Debug, PartialEq)]
pub struct CategoricalSupport<T> {
    min: T,
    max: T,
    count: usize,
}

impl<T: Scalar> CategoricalSupport<T> {
    pub fn new(min: T, max: T, count: usize) -> Option<Self> {
        (count >= 2 && min < max && min.is_finite() && max.is_finite())
            .then_some(Self { min, max, count })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn min(&self) -> T {
        self.min
    }

    pub fn max(&self) -> T {
        self.max
    }

    pub fn step(&self) -> T {
        (self.max - self.min) / T::lit((self.count - 1) as f64)
    }

    pub fn center(&self, i: usize) -> T {
        if i + 1 == self.count {
            self.max
        } else {
            self.min + self.step() * T::lit(i as f64)
        }
    }

    pub fn centers(&self) -> Vec<T> {
        (0..self.count).map(|i| self.center(i)).collect()
    }

    /// Two-hot encoding; values outside the support clamp to the end bins.
    pub fn encode(&self, x: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.count];
        let x = x.max(self.min).min(self.max);
        let pos = (x - self.min) / self.step();
        let lo = pos.floor().to_usize().unwrap_or(0).min(self.count - 2);
        let frac = (x - self.center(lo)) / self.step();
        let frac = frac.max(T::zero()).min(T::one());
        out[lo] = T::one() - frac;
        out[lo + 1] = frac;
        out
    }

    pub fn decode(&self, probs: &[T]) -> T {
        debug_assert_eq!(probs.len(), self.count);
        probs
            .iter()
            .enumerate()
            .map(|(i, &p)| p * self.center(i))
            .sum()
    }
}
