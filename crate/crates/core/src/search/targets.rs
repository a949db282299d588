use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::SearchError;
use crate::scalar::Scalar;

/// Tempered visit-count distribution `N^(1/T) / sum N^(1/T)`.
pub fn visit_count_policy<T: Scalar>(visits: &[u32], temperature: T) -> Result<Vec<T>, SearchError> {
    let max = visits.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Err(SearchError::NoVisits);
    }
    if !(temperature > T::zero()) {
        return Err(SearchError::BadTemperature(temperature.as_f64()));
    }
    let inv = T::one() / temperature;
    let max = T::lit(f64::from(max));
    let weights: Vec<T> = visits
        .iter()
        .map(|&n| (T::lit(f64::from(n)) / max).powf(inv))
        .collect();
    let total: T = weights.iter().copied().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Visit-weighted mean of root Q values.
pub fn mcts_value<T: Scalar>(visits: &[u32], q: &[T]) -> Result<T, SearchError> {
    let total: u32 = visits.iter().sum();
    if total == 0 {
        return Err(SearchError::NoVisits);
    }
    let total = T::lit(f64::from(total));
    Ok(visits
        .iter()
        .zip(q)
        .map(|(&n, &qa)| T::lit(f64::from(n)) / total * qa)
        .sum())
}

/// `prior * exp(q / tau)`, normalized, with unvisited actions at `q = 0`.
pub fn mpo_policy_target<T: Scalar>(prior: &[T], q: &[T], visited: &[bool], tau: T) -> Vec<T> {
    let q: Vec<T> = q
        .iter()
        .zip(visited)
        .map(|(&qa, &v)| if v { qa } else { T::zero() })
        .collect();
    let q_max = q.iter().copied().fold(T::neg_infinity(), T::max);
    let weights: Vec<T> = prior
        .iter()
        .zip(&q)
        .map(|(&p, &qa)| p * ((qa - q_max) / tau).exp())
        .collect();
    let total: T = weights.iter().copied().sum();
    if total > T::zero() {
        weights.into_iter().map(|w| w / total).collect()
    } else {
        prior.to_vec()
    }
}

/// Mixes a symmetric Dirichlet(alpha) draw into `prior`. No draws are made when
/// `fraction` is 0.
pub fn add_root_dirichlet<T: Scalar, R: Rng + ?Sized>(
    prior: &[T],
    alpha: f64,
    fraction: f64,
    rng: &mut R,
) -> Vec<T> {
    if fraction == 0.0 || prior.is_empty() {
        return prior.to_vec();
    }
    let gamma = Gamma::new(alpha, 1.0).expect("dirichlet alpha must be positive");
    let draws: Vec<f64> = (0..prior.len()).map(|_| gamma.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    let n = prior.len() as f64;
    let mixed: Vec<T> = prior
        .iter()
        .zip(&draws)
        .map(|(&p, &d)| {
            let noise = if total > 0.0 { d / total } else { 1.0 / n };
            T::lit((1.0 - fraction) * p.as_f64() + fraction * noise)
        })
        .collect();
    let sum: T = mixed.iter().copied().sum();
    mixed.into_iter().map(|p| p / sum).collect()
}
