use rand::RngCore;

use super::{check_action, EnvError, Environment, Observation, StepResult};

/// Deterministic corridor of `len` cells. Action 0 moves left, 1 moves right.
/// Entering the last cell pays 1 and ends the episode.
#[derive(Clone, Debug)]
pub struct ChainWorld {
    len: usize,
    max_steps: usize,
    pos: usize,
    steps: usize,
    done: bool,
}

impl ChainWorld {
    pub fn new(len: usize, max_steps: usize) -> Self {
        assert!(len >= 2, "chain needs at least two cells");
        assert!(max_steps >= 1);
        Self {
            len,
            max_steps,
            pos: 0,
            steps: 0,
            done: false,
        }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Optimal discounted value of standing in `cell` (ignoring the step limit).
    pub fn optimal_value(&self, cell: usize, gamma: f64) -> f64 {
        if cell + 1 >= self.len {
            0.0
        } else {
            gamma.powi((self.len - 2 - cell) as i32)
        }
    }

    /// Best achievable undiscounted episode return.
    pub fn optimal_return(&self) -> f64 {
        if self.max_steps >= self.len - 1 {
            1.0
        } else {
            0.0
        }
    }

    /// Puts the agent on `cell` without touching the step counter.
    pub fn set_position(&mut self, cell: usize) {
        assert!(cell < self.len);
        self.pos = cell;
        self.done = cell + 1 == self.len;
    }
}

impl Environment for ChainWorld {
    fn name(&self) -> &'static str {
        "chainworld"
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn observation_len(&self) -> usize {
        self.len
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) -> Observation {
        self.pos = 0;
        self.steps = 0;
        self.done = false;
        self.observation()
    }

    fn step(&mut self, action: usize) -> Result<StepResult, EnvError> {
        check_action(action, 2)?;
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        self.pos = match action {
            0 => self.pos.saturating_sub(1),
            _ => (self.pos + 1).min(self.len - 1),
        };
        self.steps += 1;
        let reward = if self.pos + 1 == self.len { 1.0 } else { 0.0 };
        self.done = reward > 0.0 || self.steps >= self.max_steps;
        Ok(StepResult {
            observation: self.observation(),
            reward,
            terminal: self.done,
        })
    }

    fn observation(&self) -> Observation {
        let mut obs = vec![0.0; self.len];
        obs[self.pos] = 1.0;
        obs
    }

    fn is_terminal(&self) -> bool {
        self.done
    }

    fn reseed(&mut self, _seed: u64) {}

    fn try_clone(&self) -> Option<Box<dyn Environment>> {
        Some(Box::new(self.clone()))
    }
}
