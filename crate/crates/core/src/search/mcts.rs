use rand::Rng;

use super::puct::puct_select;
use super::targets::{add_root_dirichlet, mcts_value, mpo_policy_target, visit_count_policy};
use super::tree::{NodeId, SearchTree};
use super::SearchError;
use crate::config::{AgentConfig, Depth, TargetStyle};
use crate::model::{Model, RootInput};
use crate::scalar::{sample_index, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct SearchParams<T> {
    pub budget: usize,
    pub d_tree: Depth,
    pub d_uct: Depth,
    pub c1: T,
    pub c2: T,
    pub gamma: T,
    /// `(alpha, fraction)` of root noise; `None` for a noiseless search.
    pub dirichlet: Option<(f64, f64)>,
    pub target: TargetStyle,
    pub temperature: T,
    pub mpo_tau: T,
}

impl<T: Scalar> SearchParams<T> {
    /// Acting-search parameters taken from the agent config, with root noise and
    /// temperature 1.
    pub fn from_agent(cfg: &AgentConfig) -> Self {
        Self {
            budget: cfg.budget as usize,
            d_tree: cfg.d_tree,
            d_uct: cfg.d_uct,
            c1: T::lit(cfg.c1),
            c2: T::lit(cfg.c2),
            gamma: T::lit(cfg.gamma),
            dirichlet: Some((cfg.dirichlet_alpha, cfg.exploration_fraction)),
            target: cfg.target_style,
            temperature: T::one(),
            mpo_tau: T::lit(cfg.mpo_tau),
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if self.budget == 0 {
            return Err(SearchError::ZeroBudget);
        }
        if self.d_tree == Depth::Limited(0) || self.d_uct > self.d_tree {
            return Err(SearchError::BadDepth {
                d_tree: self.d_tree,
                d_uct: self.d_uct,
            });
        }
        Ok(())
    }
}

/// Where one simulation ended: the edges it crossed (root first) and the value
/// to back up from its last node.
#[derive(Clone, Debug, PartialEq)]
pub struct Simulation<T> {
    pub path: Vec<(NodeId, usize)>,
    pub leaf: NodeId,
    pub leaf_value: T,
    pub expanded: bool,
}

#[derive(Clone, Debug)]
pub struct SearchResult<T> {
    pub policy: Vec<T>,
    pub value: T,
    pub root_q: Vec<T>,
    pub root_visited: Vec<bool>,
    pub root_visits: Vec<u32>,
    /// Model prior at the root before noise.
    pub root_prior: Vec<T>,
    pub root_value: T,
    pub max_depth: u32,
    pub node_count: usize,
    /// Return credited to the root edge by each simulation, in order.
    pub root_returns: Vec<T>,
}

impl<T: Scalar> SearchResult<T> {
    /// Most visited root action; ties go to the higher prior, then the lower index.
    pub fn most_visited(&self) -> usize {
        let mut best = 0;
        for a in 1..self.root_visits.len() {
            let (n, nb) = (self.root_visits[a], self.root_visits[best]);
            if n > nb || (n == nb && self.root_prior[a] > self.root_prior[best]) {
                best = a;
            }
        }
        best
    }
}

/// Descends from the root and expands at most one new node.
pub fn search_and_expand<T: Scalar, M: Model<T> + ?Sized, R: Rng + ?Sized>(
    tree: &mut SearchTree<T>,
    model: &M,
    params: &SearchParams<T>,
    rng: &mut R,
) -> Result<Simulation<T>, SearchError> {
    let mut node = SearchTree::<T>::ROOT;
    let mut path = Vec::new();
    loop {
        let n = tree.node(node);
        if n.terminal || !params.d_tree.exceeds(n.depth) {
            return Ok(Simulation {
                path,
                leaf: node,
                leaf_value: n.value,
                expanded: false,
            });
        }
        let action = if params.d_uct.exceeds(n.depth) {
            puct_select(&n.edges, tree.min_max(), params.c1, params.c2)
        } else {
            let priors: Vec<T> = n.edges.iter().map(|e| e.prior).collect();
            sample_index(&priors, rng)
        };
        path.push((node, action));
        match n.edges[action].child {
            Some(child) => node = child,
            None => {
                let out = model.recurrent_inference(&n.state, action)?;
                let child = tree.expand(
                    node,
                    action,
                    out.next_state,
                    out.reward,
                    &out.policy,
                    out.value,
                    out.terminal,
                );
                return Ok(Simulation {
                    path,
                    leaf: child,
                    leaf_value: tree.node(child).value,
                    expanded: true,
                });
            }
        }
    }
}

/// One search in progress; exposes single simulations for inspection.
pub struct Mcts<'m, T, M: ?Sized> {
    model: &'m M,
    params: SearchParams<T>,
    tree: SearchTree<T>,
    root_prior: Vec<T>,
    root_returns: Vec<T>,
}

impl<'m, T: Scalar, M: Model<T> + ?Sized> Mcts<'m, T, M> {
    /// Runs initial inference and applies root noise.
    pub fn new<R: Rng + ?Sized>(
        model: &'m M,
        root: &RootInput<'_>,
        params: SearchParams<T>,
        rng: &mut R,
    ) -> Result<Self, SearchError> {
        params.validate()?;
        if root.env.is_some_and(|e| e.is_terminal()) {
            return Err(SearchError::TerminalRoot);
        }
        let init = model.initial_inference(root)?;
        let mut tree = SearchTree::new(init.state, &init.policy, init.value, false);
        if let Some((alpha, fraction)) = params.dirichlet {
            let noisy = add_root_dirichlet(&init.policy, alpha, fraction, rng);
            tree.set_root_priors(&noisy);
        }
        Ok(Self {
            model,
            params,
            tree,
            root_prior: init.policy,
            root_returns: Vec::new(),
        })
    }

    pub fn tree(&self) -> &SearchTree<T> {
        &self.tree
    }

    /// One select/expand/backup cycle. Returns the simulation and the return
    /// credited to each edge on its path.
    pub fn simulate<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
    ) -> Result<(Simulation<T>, Vec<T>), SearchError> {
        let sim = search_and_expand(&mut self.tree, self.model, &self.params, rng)?;
        let returns = self.tree.backup(&sim.path, sim.leaf_value, self.params.gamma);
        if let Some(&g) = returns.first() {
            self.root_returns.push(g);
        }
        Ok((sim, returns))
    }

    pub fn finish(self) -> Result<SearchResult<T>, SearchError> {
        let root = self.tree.root();
        let root_visits: Vec<u32> = root.edges.iter().map(|e| e.visits).collect();
        let root_q: Vec<T> = root.edges.iter().map(|e| e.q).collect();
        let root_visited: Vec<bool> = root_visits.iter().map(|&n| n > 0).collect();
        let value = mcts_value(&root_visits, &root_q)?;
        let policy = match self.params.target {
            TargetStyle::VisitCount => visit_count_policy(&root_visits, self.params.temperature)?,
            TargetStyle::Mpo => {
                mpo_policy_target(&self.root_prior, &root_q, &root_visited, self.params.mpo_tau)
            }
        };
        Ok(SearchResult {
            policy,
            value,
            root_value: root.value,
            max_depth: self.tree.max_depth(),
            node_count: self.tree.len(),
            root_q,
            root_visited,
            root_visits,
            root_prior: self.root_prior,
            root_returns: self.root_returns,
        })
    }
}

/// Full search: `budget` simulations from the root, then target extraction.
pub fn run_mcts<T: Scalar, M: Model<T> + ?Sized, R: Rng + ?Sized>(
    model: &M,
    root: &RootInput<'_>,
    params: &SearchParams<T>,
    rng: &mut R,
) -> Result<SearchResult<T>, SearchError> {
    let mut search = Mcts::new(model, root, params.clone(), rng)?;
    for _ in 0..params.budget {
        search.simulate(rng)?;
    }
    search.finish()
}
