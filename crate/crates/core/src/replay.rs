//! Episode replay with uniform (episode, offset) sampling and absorbing-state padding.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use rand::Rng;
use thiserror::Error;

use crate::env::Observation;
use crate::scalar::Scalar;
use crate::targets::{value_targets, TargetError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReplayError {
    #[error("cannot insert an empty trajectory")]
    EmptyTrajectory,
    #[error("step {step}: policy target is not a probability vector (sum {sum})")]
    BadPolicyTarget { step: usize, sum: f64 },
    #[error("step {step}: policy target has {got} entries, expected {expected}")]
    WrongActionCount {
        step: usize,
        got: usize,
        expected: usize,
    },
    #[error("replay holds {have} steps, needs {need} before sampling")]
    NotReady { have: usize, need: usize },
    #[error("batch size must be positive")]
    EmptyBatch,
    #[error(transparent)]
    Target(#[from] TargetError),
}

impl ReplayError {
    /// `NotReady` clears once actors insert more data.
    pub fn is_retryable(&self) -> bool {
        matches!(self, ReplayError::NotReady { .. })
    }
}

/// One acting step as stored in replay.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryStep<T> {
    pub observation: Observation,
    pub action: usize,
    /// Reward returned by the environment for `action`.
    pub env_reward: T,
    pub policy_target: Vec<T>,
    /// Search value at this step; the bootstrap for earlier n-step targets.
    pub value_estimate: T,
}

/// A finished trajectory plus the observation that followed its last action.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode<T> {
    pub steps: Vec<TrajectoryStep<T>>,
    pub final_observation: Option<Observation>,
}

impl<T: Scalar> Episode<T> {
    pub fn new(steps: Vec<TrajectoryStep<T>>) -> Self {
        Self {
            steps,
            final_observation: None,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Undiscounted sum of environment rewards.
    pub fn total_reward(&self) -> T {
        self.steps.iter().map(|s| s.env_reward).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayConfig {
    /// Number of whole episodes kept; the oldest is evicted first.
    pub capacity_episodes: usize,
    /// Total stored steps required before sampling is allowed.
    pub min_steps: usize,
    pub unroll_k: usize,
    pub n_step: usize,
    pub gamma: f64,
    pub num_actions: usize,
}

/// One unrolled training example.
///
/// Index `k` of every target vector refers to time `t + k`. `reward_targets[0]` is a
/// zero placeholder because no reward is predicted before the first model step.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchSample<T> {
    pub observation: Observation,
    pub actions: Vec<usize>,
    pub reward_targets: Vec<T>,
    pub value_targets: Vec<T>,
    pub policy_targets: Vec<Vec<T>>,
    pub observation_targets: Vec<Observation>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingBatch<T> {
    pub unroll_k: usize,
    pub samples: Vec<BatchSample<T>>,
}

struct StoredEpisode<T> {
    episode: Episode<T>,
    value_targets: Vec<T>,
}

struct Inner<T> {
    episodes: VecDeque<Arc<StoredEpisode<T>>>,
    total_steps: usize,
    inserted_steps: u64,
}

/// Circular buffer of episodes shared between actors and the learner.
pub struct ReplayBuffer<T> {
    config: ReplayConfig,
    inner: Mutex<Inner<T>>,
}

impl<T: Scalar> ReplayBuffer<T> {
    pub fn new(config: ReplayConfig) -> Self {
        assert!(config.capacity_episodes > 0, "replay capacity must be positive");
        Self {
            config,
            inner: Mutex::new(Inner {
                episodes: VecDeque::new(),
                total_steps: 0,
                inserted_steps: 0,
            }),
        }
    }

    pub fn config(&self) -> &ReplayConfig {
        &self.config
    }

    pub fn insert(&self, steps: Vec<TrajectoryStep<T>>) -> Result<(), ReplayError> {
        self.insert_episode(Episode::new(steps))
    }

    pub fn insert_episode(&self, episode: Episode<T>) -> Result<(), ReplayError> {
        if episode.is_empty() {
            return Err(ReplayError::EmptyTrajectory);
        }
        let tol = 1e-9f64.max(1e3 * T::epsilon().as_f64());
        for (i, s) in episode.steps.iter().enumerate() {
            if s.policy_target.len() != self.config.num_actions {
                return Err(ReplayError::WrongActionCount {
                    step: i,
                    got: s.policy_target.len(),
                    expected: self.config.num_actions,
                });
            }
            let sum: f64 = s.policy_target.iter().map(|p| p.as_f64()).sum();
            let nonneg = s.policy_target.iter().all(|p| *p >= T::zero());
            if !nonneg || (sum - 1.0).abs() > tol {
                return Err(ReplayError::BadPolicyTarget { step: i, sum });
            }
        }
        let rewards: Vec<T> = episode.steps.iter().map(|s| s.env_reward).collect();
        let values: Vec<T> = episode.steps.iter().map(|s| s.value_estimate).collect();
        let z = value_targets(&rewards, &values, self.config.n_step, T::lit(self.config.gamma))?;
        let stored = Arc::new(StoredEpisode {
            value_targets: z,
            episode,
        });

        let mut inner = self.inner.lock().expect("replay lock poisoned");
        inner.total_steps += stored.episode.len();
        inner.inserted_steps += stored.episode.len() as u64;
        inner.episodes.push_back(stored);
        while inner.episodes.len() > self.config.capacity_episodes {
            if let Some(old) = inner.episodes.pop_front() {
                inner.total_steps -= old.episode.len();
            }
        }
        Ok(())
    }

    pub fn num_episodes(&self) -> usize {
        self.inner.lock().expect("replay lock poisoned").episodes.len()
    }

    pub fn num_steps(&self) -> usize {
        self.inner.lock().expect("replay lock poisoned").total_steps
    }

    /// Steps inserted over the buffer's lifetime, including evicted ones.
    pub fn inserted_steps(&self) -> u64 {
        self.inner.lock().expect("replay lock poisoned").inserted_steps
    }

    pub fn is_ready(&self) -> bool {
        self.num_steps() >= self.config.min_steps.max(1)
    }

    /// Copies of the stored episodes, oldest first.
    pub fn episodes(&self) -> Vec<Episode<T>> {
        let inner = self.inner.lock().expect("replay lock poisoned");
        inner.episodes.iter().map(|e| e.episode.clone()).collect()
    }

    /// Draws `batch_size` start positions uniformly over all stored steps.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<TrainingBatch<T>, ReplayError> {
        if batch_size == 0 {
            return Err(ReplayError::EmptyBatch);
        }
        let snapshot: Vec<Arc<StoredEpisode<T>>>;
        let total;
        {
            let inner = self.inner.lock().expect("replay lock poisoned");
            let need = self.config.min_steps.max(1);
            if inner.total_steps < need {
                return Err(ReplayError::NotReady {
                    have: inner.total_steps,
                    need,
                });
            }
            snapshot = inner.episodes.iter().cloned().collect();
            total = inner.total_steps;
        }
        let mut samples = Vec::with_capacity(batch_size);
        for _ in 0..batch_size {
            let mut idx = rng.random_range(0..total);
            let mut chosen = &snapshot[0];
            for ep in &snapshot {
                if idx < ep.episode.len() {
                    chosen = ep;
                    break;
                }
                idx -= ep.episode.len();
            }
            samples.push(self.make_sample(chosen, idx, rng));
        }
        Ok(TrainingBatch {
            unroll_k: self.config.unroll_k,
            samples,
        })
    }

    fn make_sample<R: Rng + ?Sized>(
        &self,
        stored: &StoredEpisode<T>,
        t: usize,
        rng: &mut R,
    ) -> BatchSample<T> {
        let steps = &stored.episode.steps;
        let len = steps.len();
        let k_max = self.config.unroll_k;
        let a = self.config.num_actions;
        let uniform = vec![T::one() / T::lit(a as f64); a];
        let last_obs = stored
            .episode
            .final_observation
            .clone()
            .unwrap_or_else(|| steps[len - 1].observation.clone());

        let mut actions = Vec::with_capacity(k_max);
        for k in 0..k_max {
            let j = t + k;
            actions.push(if j < len {
                steps[j].action
            } else {
                rng.random_range(0..a)
            });
        }
        let mut reward_targets = Vec::with_capacity(k_max + 1);
        let mut value_targets = Vec::with_capacity(k_max + 1);
        let mut policy_targets = Vec::with_capacity(k_max + 1);
        let mut observation_targets = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max {
            let j = t + k;
            let reward = if k > 0 && j - 1 < len {
                steps[j - 1].env_reward
            } else {
                T::zero()
            };
            reward_targets.push(reward);
            if j < len {
                value_targets.push(stored.value_targets[j]);
                policy_targets.push(steps[j].policy_target.clone());
                observation_targets.push(steps[j].observation.clone());
            } else {
                value_targets.push(T::zero());
                policy_targets.push(uniform.clone());
                observation_targets.push(last_obs.clone());
            }
        }
        BatchSample {
            observation: steps[t].observation.clone(),
            actions,
            reward_targets,
            value_targets,
            policy_targets,
            observation_targets,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(capacity: usize, min_steps: usize) -> ReplayConfig {
        ReplayConfig {
            capacity_episodes: capacity,
            min_steps,
            unroll_k: 2,
            n_step: 2,
            gamma: 0.5,
            num_actions: 2,
        }
    }

    fn episode(tag: f32, len: usize) -> Vec<TrajectoryStep<f64>> {
        (0..len)
            .map(|i| TrajectoryStep {
                observation: vec![tag, i as f32],
                action: i % 2,
                env_reward: 1.0,
                policy_target: vec![0.5, 0.5],
                value_estimate: 4.0,
            })
            .collect()
    }

    #[test]
    fn evicts_oldest_episode() {
        let buf = ReplayBuffer::new(cfg(2, 1));
        for tag in 0..3 {
            buf.insert(episode(tag as f32, 3)).unwrap();
        }
        let eps = buf.episodes();
        assert_eq!(eps.len(), 2);
        assert_eq!(eps[0].steps[0].observation[0], 1.0);
        assert_eq!(buf.num_steps(), 6);
        assert_eq!(buf.inserted_steps(), 9);
    }

    #[test]
    fn accepts_long_episode_whole() {
        let buf = ReplayBuffer::new(cfg(1, 1));
        buf.insert(episode(0.0, 600)).unwrap();
        assert_eq!(buf.num_steps(), 600);
    }

    #[test]
    fn rejects_empty_and_invalid() {
        let buf = ReplayBuffer::new(cfg(2, 1));
        assert_eq!(buf.insert(vec![]), Err(ReplayError::EmptyTrajectory));
        let mut bad = episode(0.0, 2);
        bad[1].policy_target = vec![0.7, 0.7];
        assert!(matches!(
            buf.insert(bad),
            Err(ReplayError::BadPolicyTarget { step: 1, .. })
        ));
    }

    #[test]
    fn not_ready_below_minimum() {
        let buf = ReplayBuffer::new(cfg(4, 10));
        buf.insert(episode(0.0, 3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = buf.sample(4, &mut rng).unwrap_err();
        assert!(err.is_retryable());
        assert!(!buf.is_ready());
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let buf = ReplayBuffer::new(cfg(4, 1));
        buf.insert(episode(0.0, 5)).unwrap();
        buf.insert(episode(1.0, 7)).unwrap();
        let a = buf.sample(16, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = buf.sample(16, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tail_of_three_step_episode_is_truncated_and_absorbed() {
        // rewards all 1, n = 2, gamma = 0.5, v = 4 everywhere.
        let buf = ReplayBuffer::new(cfg(1, 1));
        buf.insert(episode(0.0, 3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen_t2 = false;
        for _ in 0..50 {
            let batch = buf.sample(1, &mut rng).unwrap();
            let s = &batch.samples[0];
            if s.observation[1] == 2.0 {
                seen_t2 = true;
                // t = 2: z_2 = r_3 (terminal), then absorbing zeros.
                assert_eq!(s.value_targets, vec![1.0, 0.0, 0.0]);
                assert_eq!(s.reward_targets, vec![0.0, 1.0, 0.0]);
                assert_eq!(s.policy_targets[1], vec![0.5, 0.5]);
                assert_eq!(s.actions[0], 0);
            }
            if s.observation[1] == 0.0 {
                // z_0 = 1 + 0.5 + 0.25 * 4; z_1 = 1 + 0.5 (terminal after step 2)
                assert_eq!(s.value_targets, vec![2.5, 1.5, 1.0]);
                assert_eq!(s.reward_targets, vec![0.0, 1.0, 1.0]);
                assert_eq!(s.actions, vec![0, 1]);
            }
        }
        assert!(seen_t2);
    }

    #[test]
    fn concurrent_insert_and_sample() {
        let buf = Arc::new(ReplayBuffer::<f64>::new(cfg(50, 1)));
        buf.insert(episode(0.0, 4)).unwrap();
        std::thread::scope(|s| {
            for w in 0..4 {
                let b = Arc::clone(&buf);
                s.spawn(move || {
                    for i in 0..20 {
                        b.insert(episode((w * 100 + i) as f32, 3)).unwrap();
                    }
                });
            }
            let b = Arc::clone(&buf);
            s.spawn(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(0);
                for _ in 0..50 {
                    b.sample(8, &mut rng).unwrap();
                }
            });
        });
        assert_eq!(buf.num_episodes(), 50);
        assert_eq!(buf.num_steps(), 150);
    }
}
