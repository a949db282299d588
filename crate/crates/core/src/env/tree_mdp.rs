use rand::{Rng, RngCore};

use super::{check_action, EnvError, Environment, Observation, StepResult};

/// Fully enumerable deterministic MDP shaped as a complete tree.
///
/// Nodes use heap numbering: the root is 0 and taking action `a` in node `n`
/// leads to `n * branching + a + 1`. The reward of entering node `c` is
/// `rewards[c - 1]`. Every leaf at `depth` is terminal.
#[derive(Clone, Debug)]
pub struct TreeMdp {
    branching: usize,
    depth: usize,
    rewards: Vec<f64>,
    node: usize,
    level: usize,
}

impl TreeMdp {
    pub fn num_nodes(branching: usize, depth: usize) -> usize {
        (0..=depth).map(|d| branching.pow(d as u32)).sum()
    }

    pub fn from_rewards(branching: usize, depth: usize, rewards: Vec<f64>) -> Self {
        assert!(branching >= 1 && depth >= 1);
        assert_eq!(rewards.len(), Self::num_nodes(branching, depth) - 1);
        Self {
            branching,
            depth,
            rewards,
            node: 0,
            level: 0,
        }
    }

    /// Edge rewards drawn uniformly from `[0, 1)`.
    pub fn random<R: Rng + ?Sized>(branching: usize, depth: usize, rng: &mut R) -> Self {
        let n = Self::num_nodes(branching, depth) - 1;
        let rewards = (0..n).map(|_| rng.random::<f64>()).collect();
        Self::from_rewards(branching, depth, rewards)
    }

    /// Two-armed bandit: one step, arm rewards as given.
    pub fn bandit(arm_rewards: Vec<f64>) -> Self {
        let b = arm_rewards.len();
        Self::from_rewards(b, 1, arm_rewards)
    }

    pub fn branching(&self) -> usize {
        self.branching
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn node(&self) -> usize {
        self.node
    }

    pub fn child(&self, node: usize, action: usize) -> usize {
        node * self.branching + action + 1
    }

    pub fn edge_reward(&self, child: usize) -> f64 {
        self.rewards[child - 1]
    }
}

impl Environment for TreeMdp {
    fn name(&self) -> &'static str {
        "tree_mdp"
    }

    fn num_actions(&self) -> usize {
        self.branching
    }

    fn observation_len(&self) -> usize {
        Self::num_nodes(self.branching, self.depth)
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) -> Observation {
        self.node = 0;
        self.level = 0;
        self.observation()
    }

    fn step(&mut self, action: usize) -> Result<StepResult, EnvError> {
        check_action(action, self.branching)?;
        if self.level >= self.depth {
            return Err(EnvError::EpisodeOver);
        }
        self.node = self.child(self.node, action);
        self.level += 1;
        Ok(StepResult {
            observation: self.observation(),
            reward: self.edge_reward(self.node),
            terminal: self.level >= self.depth,
        })
    }

    fn observation(&self) -> Observation {
        let mut obs = vec![0.0; self.observation_len()];
        obs[self.node] = 1.0;
        obs
    }

    fn is_terminal(&self) -> bool {
        self.level >= self.depth
    }

    fn reseed(&mut self, _seed: u64) {}

    fn try_clone(&self) -> Option<Box<dyn Environment>> {
        Some(Box::new(self.clone()))
    }
}
