//! Minipacman on procedurally generated (or fixed) mazes with epsilon-greedy ghosts.

use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::maze::{generate_maze, Maze, Pos};
use super::{check_action, EnvError, Environment, Observation, StepResult};

/// Observation planes: walls, food, pills, agent, inedible ghosts, edible ghosts.
pub const NUM_PLANES: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Noop = 0,
    Up = 1,
    Right = 2,
    Down = 3,
    Left = 4,
}

impl Action {
    /// Maze direction index, if the action moves.
    fn direction(self) -> Option<usize> {
        match self {
            Action::Noop => None,
            Action::Up => Some(0),
            Action::Right => Some(1),
            Action::Down => Some(2),
            Action::Left => Some(3),
        }
    }

    fn from_index(i: usize) -> Action {
        [
            Action::Noop,
            Action::Up,
            Action::Right,
            Action::Down,
            Action::Left,
        ][i]
    }
}

/// Ghost count grows from `g0` by `g_delta` per level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GhostSchedule {
    pub g0: u32,
    pub g_delta: f64,
}

impl GhostSchedule {
    pub fn ghosts_at(&self, level: u32) -> usize {
        assert!(level >= 1);
        (f64::from(self.g0) + f64::from(level - 1) * self.g_delta).floor() as usize
    }

    /// Schedule used with the classic maze.
    pub fn classic() -> Self {
        Self {
            g0: 1,
            g_delta: 0.5,
        }
    }
}

/// `g0 ~ 1 + Poisson(1)`, `g_delta ~ 0.25 + U(0, 1)`.
pub fn sample_ghost_schedule<R: Rng + ?Sized>(rng: &mut R) -> GhostSchedule {
    let poisson = Poisson::new(1.0).expect("valid rate");
    let extra: f64 = poisson.sample(rng);
    GhostSchedule {
        g0: 1 + extra as u32,
        g_delta: 0.25 + rng.random::<f64>(),
    }
}

#[derive(Clone, Debug)]
pub enum MazeSource {
    /// Fresh procedural maze every episode.
    Procedural { p_remove: f64 },
    /// Uniform draw from a fixed pool each episode.
    Pool(Arc<Vec<Maze>>),
    /// Always the same maze.
    Fixed(Arc<Maze>),
}

impl MazeSource {
    pub fn pool<R: Rng + ?Sized>(size: usize, p_remove: f64, rng: &mut R) -> Self {
        assert!(size > 0);
        let mazes = (0..size).map(|_| generate_maze(rng, p_remove)).collect();
        MazeSource::Pool(Arc::new(mazes))
    }
}

#[derive(Clone, Debug)]
pub struct MinipacmanConfig {
    pub maze_source: MazeSource,
    /// Fixed ghost schedule; sampled per episode when `None`.
    pub ghost_schedule: Option<GhostSchedule>,
    /// Probability that a ghost moves randomly instead of greedily.
    pub ghost_epsilon: f64,
    pub food_reward: f64,
    pub pill_reward: f64,
    pub ghost_reward: f64,
    pub edible_steps: u32,
    pub max_steps: usize,
}

impl Default for MinipacmanConfig {
    fn default() -> Self {
        Self {
            maze_source: MazeSource::Procedural { p_remove: 0.3 },
            ghost_schedule: None,
            ghost_epsilon: 0.25,
            food_reward: 1.0,
            pill_reward: 2.0,
            ghost_reward: 5.0,
            edible_steps: 20,
            max_steps: 600,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ghost {
    pub pos: Pos,
    /// Steps of edibility left; 0 means dangerous.
    pub edible: u32,
}

#[derive(Clone, Debug)]
pub struct Minipacman {
    config: MinipacmanConfig,
    maze: Arc<Maze>,
    agent: Pos,
    ghosts: Vec<Ghost>,
    food: Vec<bool>,
    pills: Vec<bool>,
    level: u32,
    schedule: GhostSchedule,
    steps: usize,
    done: bool,
    rng: ChaCha8Rng,
}

impl Minipacman {
    /// Creates the environment and resets it once with `seed`.
    pub fn new(config: MinipacmanConfig, seed: u64) -> Self {
        let maze = Arc::new(match &config.maze_source {
            MazeSource::Fixed(m) => (**m).clone(),
            MazeSource::Pool(p) => p[0].clone(),
            MazeSource::Procedural { .. } => Maze::small(),
        });
        let cells = maze.height() * maze.width();
        let mut env = Self {
            config,
            maze,
            agent: (0, 0),
            ghosts: Vec::new(),
            food: vec![false; cells],
            pills: vec![false; cells],
            level: 1,
            schedule: GhostSchedule::classic(),
            steps: 0,
            done: false,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        env.reset(&mut ChaCha8Rng::seed_from_u64(seed));
        env
    }

    pub fn maze(&self) -> &Maze {
        &self.maze
    }

    pub fn agent(&self) -> Pos {
        self.agent
    }

    pub fn ghosts(&self) -> &[Ghost] {
        &self.ghosts
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn schedule(&self) -> GhostSchedule {
        self.schedule
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn food_left(&self) -> usize {
        self.food.iter().filter(|&&f| f).count()
    }

    pub fn config_mut(&mut self) -> &mut MinipacmanConfig {
        &mut self.config
    }

    /// Places the agent and ghosts explicitly; used to build test scenarios.
    pub fn set_positions(&mut self, agent: Pos, ghosts: &[Pos]) {
        assert!(self.maze.is_corridor(agent));
        self.agent = agent;
        self.ghosts = ghosts
            .iter()
            .map(|&pos| {
                assert!(self.maze.is_corridor(pos));
                Ghost { pos, edible: 0 }
            })
            .collect();
    }

    /// Removes all food except at `keep`, for scenario tests.
    pub fn clear_food_except(&mut self, keep: &[Pos]) {
        let w = self.maze.width();
        self.food.iter_mut().for_each(|f| *f = false);
        for &(r, c) in keep {
            self.food[r * w + c] = true;
        }
    }

    pub fn has_food(&self, (r, c): Pos) -> bool {
        self.food[r * self.maze.width() + c]
    }

    fn idx(&self, (r, c): Pos) -> usize {
        r * self.maze.width() + c
    }

    /// Food everywhere except the agent cell and the pills; pills re-drawn.
    fn lay_out_level<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let corridors = self.maze.corridor_cells();
        let candidates: Vec<Pos> = corridors.iter().copied().filter(|&p| p != self.agent).collect();
        self.pills.iter_mut().for_each(|p| *p = false);
        self.food.iter_mut().for_each(|f| *f = false);
        let n_pills = Maze::PILLS.min(candidates.len());
        for i in sample(rng, candidates.len(), n_pills) {
            let k = self.idx(candidates[i]);
            self.pills[k] = true;
        }
        for &p in &candidates {
            let k = self.idx(p);
            if !self.pills[k] {
                self.food[k] = true;
            }
        }
        let want = self.schedule.ghosts_at(self.level);
        while self.ghosts.len() < want {
            let pos = cell_avoiding(rng, &corridors, self.agent);
            self.ghosts.push(Ghost { pos, edible: 0 });
        }
    }

    fn ghost_move(&mut self, g: usize, dist: &[usize]) -> Pos {
        let ghost = self.ghosts[g];
        let options: Vec<Pos> = self.maze.neighbors(ghost.pos).collect();
        let u: f64 = self.rng.random();
        if options.is_empty() {
            return ghost.pos;
        }
        if u < self.config.ghost_epsilon {
            return options[self.rng.random_range(0..options.len())];
        }
        let d = |p: &Pos| dist[self.idx(*p)];
        let mut best = options[0];
        for &p in &options[1..] {
            let better = if ghost.edible > 0 {
                d(&p) > d(&best)
            } else {
                d(&p) < d(&best)
            };
            if better {
                best = p;
            }
        }
        best
    }

    /// Resolves contact between the agent and ghosts. Returns reward gained.
    fn resolve_contacts(&mut self, agent_prev: Pos, ghost_prev: Option<&[Pos]>) -> f64 {
        let mut reward = 0.0;
        let corridors = self.maze.corridor_cells();
        for g in 0..self.ghosts.len() {
            let pos = self.ghosts[g].pos;
            let swapped = ghost_prev
                .is_some_and(|prev| prev[g] == self.agent && pos == agent_prev);
            if pos != self.agent && !swapped {
                continue;
            }
            if self.ghosts[g].edible > 0 {
                reward += self.config.ghost_reward;
                let respawn = cell_avoiding(&mut self.rng, &corridors, self.agent);
                self.ghosts[g] = Ghost {
                    pos: respawn,
                    edible: 0,
                };
            } else {
                self.done = true;
            }
        }
        reward
    }

    fn plane_index(&self, plane: usize, (r, c): Pos) -> usize {
        plane * self.maze.height() * self.maze.width() + r * self.maze.width() + c
    }
}

fn cell_avoiding<R: Rng + ?Sized>(rng: &mut R, corridors: &[Pos], avoid: Pos) -> Pos {
    assert!(corridors.len() > 1, "maze needs two corridor cells");
    loop {
        let p = corridors[rng.random_range(0..corridors.len())];
        if p != avoid {
            return p;
        }
    }
}

impl Environment for Minipacman {
    fn name(&self) -> &'static str {
        "minipacman"
    }

    fn num_actions(&self) -> usize {
        5
    }

    fn observation_len(&self) -> usize {
        NUM_PLANES * self.maze.height() * self.maze.width()
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Observation {
        let maze = match &self.config.maze_source {
            MazeSource::Procedural { p_remove } => Arc::new(generate_maze(rng, *p_remove)),
            MazeSource::Pool(pool) => Arc::new(pool[rng.random_range(0..pool.len())].clone()),
            MazeSource::Fixed(m) => Arc::clone(m),
        };
        self.schedule = match self.config.ghost_schedule {
            Some(s) => s,
            None => sample_ghost_schedule(rng),
        };
        let cells = maze.height() * maze.width();
        self.maze = maze;
        self.food = vec![false; cells];
        self.pills = vec![false; cells];
        self.level = 1;
        self.steps = 0;
        self.done = false;
        self.ghosts.clear();
        let corridors = self.maze.corridor_cells();
        self.agent = corridors[rng.random_range(0..corridors.len())];
        self.lay_out_level(rng);
        self.rng = ChaCha8Rng::seed_from_u64(rng.next_u64());
        self.observation()
    }

    fn step(&mut self, action: usize) -> Result<StepResult, EnvError> {
        check_action(action, 5)?;
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        let mut reward = 0.0;
        let agent_prev = self.agent;
        if let Some(dir) = Action::from_index(action).direction() {
            if let Some(next) = self.maze.offset(self.agent, dir) {
                if self.maze.is_corridor(next) {
                    self.agent = next;
                }
            }
        }
        let k = self.idx(self.agent);
        if self.food[k] {
            self.food[k] = false;
            reward += self.config.food_reward;
        }
        if self.pills[k] {
            self.pills[k] = false;
            reward += self.config.pill_reward;
            for g in &mut self.ghosts {
                g.edible = self.config.edible_steps;
            }
        }
        reward += self.resolve_contacts(agent_prev, None);

        if !self.done {
            let dist = self.maze.distances_from(self.agent);
            let prev: Vec<Pos> = self.ghosts.iter().map(|g| g.pos).collect();
            for g in 0..self.ghosts.len() {
                let next = self.ghost_move(g, &dist);
                self.ghosts[g].pos = next;
            }
            reward += self.resolve_contacts(agent_prev, Some(&prev));
        }
        for g in &mut self.ghosts {
            g.edible = g.edible.saturating_sub(1);
        }
        if !self.done && self.food_left() == 0 {
            self.level += 1;
            let mut rng = self.rng.clone();
            self.lay_out_level(&mut rng);
            self.rng = rng;
        }
        self.steps += 1;
        if self.steps >= self.config.max_steps {
            self.done = true;
        }
        Ok(StepResult {
            observation: self.observation(),
            reward,
            terminal: self.done,
        })
    }

    fn observation(&self) -> Observation {
        let mut obs = vec![0.0; self.observation_len()];
        for r in 0..self.maze.height() {
            for c in 0..self.maze.width() {
                let p = (r, c);
                let k = self.idx(p);
                if !self.maze.is_corridor(p) {
                    obs[self.plane_index(0, p)] = 1.0;
                }
                if self.food[k] {
                    obs[self.plane_index(1, p)] = 1.0;
                }
                if self.pills[k] {
                    obs[self.plane_index(2, p)] = 1.0;
                }
            }
        }
        let a = self.plane_index(3, self.agent);
        obs[a] = 1.0;
        for g in &self.ghosts {
            let plane = if g.edible > 0 { 5 } else { 4 };
            let i = self.plane_index(plane, g.pos);
            obs[i] = 1.0;
        }
        obs
    }

    fn is_terminal(&self) -> bool {
        self.done
    }

    fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    fn try_clone(&self) -> Option<Box<dyn Environment>> {
        Some(Box::new(self.clone()))
    }
}
