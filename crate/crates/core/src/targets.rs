//! n-step bootstrapped value targets.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TargetError {
    #[error("n-step horizon must be at least 1")]
    ZeroHorizon,
    #[error("rewards ({rewards}) and bootstrap values ({values}) are not aligned")]
    Misaligned { rewards: usize, values: usize },
}

/// `z_t = sum_{i=1..n} gamma^(i-1) r_{t+i} + gamma^n v_{t+n}`.
///
/// `rewards[j]` is the reward received for the action taken at step `j`, so
/// `rewards[t + i - 1]` plays the role of `r_{t+i}`. `bootstrap_values[j]` is the
/// search value recorded at step `j`. The episode is treated as terminated after
/// its last step: if `t + n` reaches past it the sum stops there and no bootstrap
/// term is added. Indices at or past the end yield the absorbing value 0.
pub fn compute_value_target<T: Scalar>(
    rewards: &[T],
    bootstrap_values: &[T],
    t: usize,
    n: usize,
    gamma: T,
) -> Result<T, TargetError> {
    if n == 0 {
        return Err(TargetError::ZeroHorizon);
    }
    if rewards.len() != bootstrap_values.len() {
        return Err(TargetError::Misaligned {
            rewards: rewards.len(),
            values: bootstrap_values.len(),
        });
    }
    let len = rewards.len();
    if t >= len {
        return Ok(T::zero());
    }
    let end = (t + n).min(len);
    let mut z = T::zero();
    let mut discount = T::one();
    for &r in &rewards[t..end] {
        z += discount * r;
        discount *= gamma;
    }
    if t + n < len {
        z += discount * bootstrap_values[t + n];
    }
    Ok(z)
}

/// Value targets for every step of an episode.
pub fn value_targets<T: Scalar>(
    rewards: &[T],
    bootstrap_values: &[T],
    n: usize,
    gamma: T,
) -> Result<Vec<T>, TargetError> {
    (0..rewards.len())
        .map(|t| compute_value_target(rewards, bootstrap_values, t, n, gamma))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_step_example() {
        // 1 + 0.5 * 1 + 0.25 * 4
        let z = compute_value_target(&[1.0, 1.0, 0.0], &[0.0, 0.0, 4.0], 0, 2, 0.5).unwrap();
        assert_eq!(z, 2.5);
    }

    #[test]
    fn zero_discount_keeps_first_reward() {
        let z = compute_value_target(&[3.0, 7.0, 9.0], &[5.0, 5.0, 5.0], 0, 2, 0.0).unwrap();
        assert_eq!(z, 3.0);
    }

    #[test]
    fn truncates_at_terminal() {
        let z = compute_value_target(&[0.0, 2.0], &[9.0, 9.0], 1, 10, 0.9).unwrap();
        assert_eq!(z, 2.0);
    }

    #[test]
    fn rejects_zero_horizon() {
        assert_eq!(
            compute_value_target(&[1.0], &[1.0], 0, 0, 0.9),
            Err(TargetError::ZeroHorizon)
        );
    }

    #[test]
    fn past_end_is_absorbing() {
        assert_eq!(compute_value_target(&[1.0], &[1.0], 3, 2, 0.9).unwrap(), 0.0);
    }

    proptest! {
        // With n covering the whole suffix the target is the plain discounted return.
        #[test]
        fn long_horizon_equals_monte_carlo_return(
            rewards in proptest::collection::vec(-5.0f64..5.0, 10),
            values in proptest::collection::vec(-5.0f64..5.0, 10),
            gamma in 0.0f64..1.0,
            t in 0usize..10,
        ) {
            let z = compute_value_target(&rewards, &values, t, 10, gamma).unwrap();
            let mut brute = 0.0;
            for (i, r) in rewards[t..].iter().enumerate() {
                brute += gamma.powi(i as i32) * r;
            }
            prop_assert!((z - brute).abs() < 1e-12);
        }
    }
}
