use crate::model::HiddenState;
use crate::scalar::Scalar;

pub type NodeId = usize;

#[derive(Clone, Debug)]
pub struct Edge<T> {
    pub prior: T,
    pub visits: u32,
    /// Running mean of the returns backed up through this edge; 0 while unvisited.
    pub q: T,
    /// Reward predicted on expansion; 0 until the child exists.
    pub reward: T,
    pub child: Option<NodeId>,
}

#[derive(Clone, Debug)]
pub struct Node<T> {
    pub state: HiddenState<T>,
    pub depth: u32,
    /// Model value estimate at expansion time (0 for terminal nodes).
    pub value: T,
    pub terminal: bool,
    pub edges: Vec<Edge<T>>,
}

impl<T: Scalar> Node<T> {
    pub fn visit_sum(&self) -> u32 {
        self.edges.iter().map(|e| e.visits).sum()
    }
}

/// Running range of Q over visited edges.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MinMax<T> {
    range: Option<(T, T)>,
}

impl<T: Scalar> MinMax<T> {
    pub fn update(&mut self, q: T) {
        self.range = Some(match self.range {
            None => (q, q),
            Some((lo, hi)) => (lo.min(q), hi.max(q)),
        });
    }

    pub fn bounds(&self) -> Option<(T, T)> {
        self.range
    }

    pub fn normalize(&self, q: T) -> T {
        match self.range {
            Some((lo, hi)) => normalize_q(q, lo, hi),
            None => q,
        }
    }
}

/// `(q - min) / (max - min)`, or `q` itself when the range is degenerate.
pub fn normalize_q<T: Scalar>(q: T, q_min: T, q_max: T) -> T {
    if q_max - q_min < T::lit(1e-9) {
        q
    } else {
        (q - q_min) / (q_max - q_min)
    }
}

#[derive(Clone, Debug)]
pub struct SearchTree<T> {
    nodes: Vec<Node<T>>,
    min_max: MinMax<T>,
}

impl<T: Scalar> SearchTree<T> {
    pub const ROOT: NodeId = 0;

    pub fn new(state: HiddenState<T>, prior: &[T], value: T, terminal: bool) -> Self {
        Self {
            nodes: vec![make_node(state, 0, prior, value, terminal)],
            min_max: MinMax::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node<T> {
        &self.nodes[id]
    }

    pub fn root(&self) -> &Node<T> {
        &self.nodes[Self::ROOT]
    }

    pub fn min_max(&self) -> &MinMax<T> {
        &self.min_max
    }

    pub fn set_root_priors(&mut self, prior: &[T]) {
        for (e, &p) in self.nodes[Self::ROOT].edges.iter_mut().zip(prior) {
            e.prior = p;
        }
    }

    /// Adds the child reached by `action` from `parent` and caches the reward on the edge.
    pub fn expand(
        &mut self,
        parent: NodeId,
        action: usize,
        state: HiddenState<T>,
        reward: T,
        prior: &[T],
        value: T,
        terminal: bool,
    ) -> NodeId {
        debug_assert!(self.nodes[parent].edges[action].child.is_none());
        let depth = self.nodes[parent].depth + 1;
        let id = self.nodes.len();
        self.nodes
            .push(make_node(state, depth, prior, value, terminal));
        let edge = &mut self.nodes[parent].edges[action];
        edge.child = Some(id);
        edge.reward = reward;
        id
    }

    /// Folds a simulation's returns into the edges on `path` (root first).
    /// Returns the return `G` credited to each edge.
    pub fn backup(&mut self, path: &[(NodeId, usize)], leaf_value: T, gamma: T) -> Vec<T> {
        let mut returns = vec![T::zero(); path.len()];
        let mut g = leaf_value;
        for (i, &(node, action)) in path.iter().enumerate().rev() {
            let edge = &mut self.nodes[node].edges[action];
            g = edge.reward + gamma * g;
            let n = T::lit(f64::from(edge.visits));
            edge.q = (n * edge.q + g) / (n + T::one());
            edge.visits += 1;
            self.min_max.update(edge.q);
            returns[i] = g;
        }
        returns
    }

    pub fn max_depth(&self) -> u32 {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }
}

fn make_node<T: Scalar>(
    state: HiddenState<T>,
    depth: u32,
    prior: &[T],
    value: T,
    terminal: bool,
) -> Node<T> {
    Node {
        state,
        depth,
        value: if terminal { T::zero() } else { value },
        terminal,
        edges: prior
            .iter()
            .map(|&p| Edge {
                prior: p,
                visits: 0,
                q: T::zero(),
                reward: T::zero(),
                child: None,
            })
            .collect(),
    }
}
