use super::tree::{Edge, MinMax};
use crate::scalar::Scalar;

/// Score of one edge: normalized value plus the prior-weighted exploration bonus.
pub fn puct_score<T: Scalar>(q_bar: T, prior: T, visits: u32, visit_sum: u32, c1: T, c2: T) -> T {
    let sum = T::lit(f64::from(visit_sum));
    let n = T::lit(f64::from(visits));
    let exploration = sum.sqrt() / (T::one() + n) * (c1 + ((sum + c2 + T::one()) / c2).ln());
    q_bar + prior * exploration
}

/// Picks the best-scoring edge. Unvisited edges use a normalized value of 0.
/// Ties go to the higher prior, then the lower index.
pub fn puct_select<T: Scalar>(edges: &[Edge<T>], min_max: &MinMax<T>, c1: T, c2: T) -> usize {
    assert!(!edges.is_empty(), "puct_select needs at least one action");
    let visit_sum: u32 = edges.iter().map(|e| e.visits).sum();
    let mut best = 0;
    let mut best_score = T::neg_infinity();
    for (i, e) in edges.iter().enumerate() {
        let q_bar = if e.visits > 0 {
            min_max.normalize(e.q)
        } else {
            T::zero()
        };
        let score = puct_score(q_bar, e.prior, e.visits, visit_sum, c1, c2);
        let better = score > best_score || (score == best_score && e.prior > edges[best].prior);
        if i == 0 || better {
            best = i;
            best_score = score;
        }
    }
    best
}
