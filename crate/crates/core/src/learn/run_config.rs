use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{parse_kv_text, parse_value, render_kv, AgentConfig, ConfigError, Variant};
use crate::env::{
    ChainWorld, Environment, GhostSchedule, Maze, MazeSource, Minipacman, MinipacmanConfig,
};
use crate::model::NetworkShape;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvKind {
    ChainWorld,
    Minipacman,
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnvKind::ChainWorld => "chainworld",
            EnvKind::Minipacman => "minipacman",
        })
    }
}

impl FromStr for EnvKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "chainworld" | "chain" => Ok(EnvKind::ChainWorld),
            "minipacman" | "pacman" => Ok(EnvKind::Minipacman),
            other => Err(format!("unknown environment `{other}`")),
        }
    }
}

/// Where Minipacman layouts come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MazeChoice {
    /// A fresh generated maze every episode.
    Procedural,
    /// A fixed pool of `maze_pool` generated mazes.
    Pool,
    /// The 9x11 hand-made maze.
    Small,
    /// The 15x19 hand-made maze; never produced by the generator.
    Classic,
}

impl fmt::Display for MazeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MazeChoice::Procedural => "procedural",
            MazeChoice::Pool => "pool",
            MazeChoice::Small => "small",
            MazeChoice::Classic => "classic",
        })
    }
}

impl FromStr for MazeChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "procedural" => Ok(MazeChoice::Procedural),
            "pool" => Ok(MazeChoice::Pool),
            "small" => Ok(MazeChoice::Small),
            "classic" => Ok(MazeChoice::Classic),
            other => Err(format!("unknown maze choice `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvConfig {
    pub kind: EnvKind,
    pub chain_length: usize,
    pub chain_max_steps: usize,
    pub maze: MazeChoice,
    pub maze_pool: usize,
    pub maze_pool_seed: u64,
    pub p_remove: f64,
    /// Fixed ghost count on every level; 0 samples a schedule per episode.
    pub ghosts: u32,
    pub ghost_epsilon: f64,
    pub food_reward: f64,
    pub pill_reward: f64,
    pub ghost_reward: f64,
    pub edible_steps: u32,
    pub max_steps: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        let m = MinipacmanConfig::default();
        Self {
            kind: EnvKind::Minipacman,
            chain_length: 10,
            chain_max_steps: 30,
            maze: MazeChoice::Procedural,
            maze_pool: 5,
            maze_pool_seed: 0,
            p_remove: 0.3,
            ghosts: 0,
            ghost_epsilon: m.ghost_epsilon,
            food_reward: m.food_reward,
            pill_reward: m.pill_reward,
            ghost_reward: m.ghost_reward,
            edible_steps: m.edible_steps,
            max_steps: m.max_steps,
        }
    }
}

impl EnvConfig {
    pub fn set_field(&mut self, key: &str, value: &str) -> Result<bool, ConfigError> {
        match key {
            "env" => self.kind = parse_value(key, value)?,
            "chain_length" => self.chain_length = parse_value(key, value)?,
            "chain_max_steps" => self.chain_max_steps = parse_value(key, value)?,
            "maze" => self.maze = parse_value(key, value)?,
            "maze_pool" => self.maze_pool = parse_value(key, value)?,
            "maze_pool_seed" => self.maze_pool_seed = parse_value(key, value)?,
            "p_remove" => self.p_remove = parse_value(key, value)?,
            "ghosts" => self.ghosts = parse_value(key, value)?,
            "ghost_epsilon" => self.ghost_epsilon = parse_value(key, value)?,
            "food_reward" => self.food_reward = parse_value(key, value)?,
            "pill_reward" => self.pill_reward = parse_value(key, value)?,
            "ghost_reward" => self.ghost_reward = parse_value(key, value)?,
            "edible_steps" => self.edible_steps = parse_value(key, value)?,
            "max_steps" => self.max_steps = parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("env", self.kind.to_string()),
            ("chain_length", self.chain_length.to_string()),
            ("chain_max_steps", self.chain_max_steps.to_string()),
            ("maze", self.maze.to_string()),
            ("maze_pool", self.maze_pool.to_string()),
            ("maze_pool_seed", self.maze_pool_seed.to_string()),
            ("p_remove", self.p_remove.to_string()),
            ("ghosts", self.ghosts.to_string()),
            ("ghost_epsilon", self.ghost_epsilon.to_string()),
            ("food_reward", self.food_reward.to_string()),
            ("pill_reward", self.pill_reward.to_string()),
            ("ghost_reward", self.ghost_reward.to_string()),
            ("edible_steps", self.edible_steps.to_string()),
            ("max_steps", self.max_steps.to_string()),
        ]
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.chain_length < 2 || self.chain_max_steps == 0 {
            return bad("chain_length must be at least 2 and chain_max_steps positive");
        }
        if self.maze == MazeChoice::Pool && self.maze_pool == 0 {
            return bad("maze = pool needs maze_pool > 0");
        }
        if !(0.0..=1.0).contains(&self.p_remove) || !(0.0..=1.0).contains(&self.ghost_epsilon) {
            return bad("p_remove and ghost_epsilon must lie in [0, 1]");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive");
        }
        Ok(())
    }

    /// Prepares shared state (such as a maze pool) once for many environments.
    pub fn factory(&self) -> EnvFactory {
        let pacman = match self.kind {
            EnvKind::ChainWorld => None,
            EnvKind::Minipacman => {
                let maze_source = match self.maze {
                    MazeChoice::Procedural => MazeSource::Procedural {
                        p_remove: self.p_remove,
                    },
                    MazeChoice::Pool => MazeSource::pool(
                        self.maze_pool,
                        self.p_remove,
                        &mut ChaCha8Rng::seed_from_u64(self.maze_pool_seed),
                    ),
                    MazeChoice::Small => MazeSource::Fixed(Arc::new(Maze::small())),
                    MazeChoice::Classic => MazeSource::Fixed(Arc::new(Maze::classic())),
                };
                Some(MinipacmanConfig {
                    maze_source,
                    ghost_schedule: (self.ghosts > 0).then_some(GhostSchedule {
                        g0: self.ghosts,
                        g_delta: 0.0,
                    }),
                    ghost_epsilon: self.ghost_epsilon,
                    food_reward: self.food_reward,
                    pill_reward: self.pill_reward,
                    ghost_reward: self.ghost_reward,
                    edible_steps: self.edible_steps,
                    max_steps: self.max_steps,
                })
            }
        };
        EnvFactory {
            config: self.clone(),
            pacman,
        }
    }
}

/// Builds freshly reset environments from a seed.
#[derive(Clone, Debug)]
pub struct EnvFactory {
    config: EnvConfig,
    pacman: Option<MinipacmanConfig>,
}

impl EnvFactory {
    pub fn make(&self, seed: u64) -> Box<dyn Environment> {
        match &self.pacman {
            None => Box::new(ChainWorld::new(
                self.config.chain_length,
                self.config.chain_max_steps,
            )),
            Some(cfg) => Box::new(Minipacman::new(cfg.clone(), seed)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetConfig {
    pub hidden: usize,
    pub latent: usize,
    pub support_min: f64,
    pub support_max: f64,
    pub support_bins: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            latent: 32,
            support_min: -5.0,
            support_max: 25.0,
            support_bins: 21,
        }
    }
}

impl NetConfig {
    pub fn set_field(&mut self, key: &str, value: &str) -> Result<bool, ConfigError> {
        match key {
            "hidden" => self.hidden = parse_value(key, value)?,
            "latent" => self.latent = parse_value(key, value)?,
            "support_min" => self.support_min = parse_value(key, value)?,
            "support_max" => self.support_max = parse_value(key, value)?,
            "support_bins" => self.support_bins = parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("hidden", self.hidden.to_string()),
            ("latent", self.latent.to_string()),
            ("support_min", self.support_min.to_string()),
            ("support_max", self.support_max.to_string()),
            ("support_bins", self.support_bins.to_string()),
        ]
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.hidden == 0 || self.latent == 0 {
            return Err(ConfigError::Invalid("hidden and latent must be positive".into()));
        }
        if !(self.support_min < self.support_max) || self.support_bins < 2 {
            return Err(ConfigError::Invalid(
                "support needs support_min < support_max and at least 2 bins".into(),
            ));
        }
        Ok(())
    }

    pub fn shape(&self, observation_len: usize, num_actions: usize) -> NetworkShape {
        NetworkShape {
            observation_len,
            num_actions,
            hidden: self.hidden,
            latent: self.latent,
            support_min: self.support_min,
            support_max: self.support_max,
            support_bins: self.support_bins,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learner_steps: u64,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Episodes kept in replay.
    pub replay_capacity: usize,
    /// Stored steps needed before learning starts.
    pub min_replay: usize,
    /// Upper bound on sampled steps per inserted step.
    pub samples_per_insert: f64,
    pub sync_interval: u64,
    /// Global gradient-norm clip; 0 disables clipping.
    pub grad_clip: f64,
    pub eval_every: u64,
    pub eval_episodes: usize,
    /// Episodes collected per acting round.
    pub actors: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learner_steps: 10_000,
            batch_size: 32,
            learning_rate: 1e-3,
            replay_capacity: 500,
            min_replay: 500,
            samples_per_insert: 0.25,
            sync_interval: 500,
            grad_clip: 5.0,
            eval_every: 1000,
            eval_episodes: 10,
            actors: 4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn set_field(&mut self, key: &str, value: &str) -> Result<bool, ConfigError> {
        match key {
            "learner_steps" => self.learner_steps = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "learning_rate" => self.learning_rate = parse_value(key, value)?,
            "replay_capacity" => self.replay_capacity = parse_value(key, value)?,
            "min_replay" => self.min_replay = parse_value(key, value)?,
            "samples_per_insert" => self.samples_per_insert = parse_value(key, value)?,
            "sync_interval" => self.sync_interval = parse_value(key, value)?,
            "grad_clip" => self.grad_clip = parse_value(key, value)?,
            "eval_every" => self.eval_every = parse_value(key, value)?,
            "eval_episodes" => self.eval_episodes = parse_value(key, value)?,
            "actors" => self.actors = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("learner_steps", self.learner_steps.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("replay_capacity", self.replay_capacity.to_string()),
            ("min_replay", self.min_replay.to_string()),
            ("samples_per_insert", self.samples_per_insert.to_string()),
            ("sync_interval", self.sync_interval.to_string()),
            ("grad_clip", self.grad_clip.to_string()),
            ("eval_every", self.eval_every.to_string()),
            ("eval_episodes", self.eval_episodes.to_string()),
            ("actors", self.actors.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.batch_size == 0 || self.replay_capacity == 0 || self.actors == 0 {
            return bad("batch_size, replay_capacity and actors must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be a finite non-negative number");
        }
        if !(self.samples_per_insert > 0.0 && self.samples_per_insert.is_finite()) {
            return bad("samples_per_insert must be positive");
        }
        if self.sync_interval == 0 || self.eval_every == 0 {
            return bad("sync_interval and eval_every must be positive");
        }
        if !(self.grad_clip >= 0.0) {
            return bad("grad_clip must be non-negative");
        }
        Ok(())
    }
}

/// Everything a training run needs, stored as one flat `key = value` file.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub agent: AgentConfig,
    pub train: TrainConfig,
    pub net: NetConfig,
    pub env: EnvConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::for_env(EnvKind::Minipacman)
    }
}

impl RunConfig {
    /// Defaults for an environment. ChainWorld uses budget 8, a [-1, 1] support
    /// and a smaller replay warm-up.
    pub fn for_env(kind: EnvKind) -> Self {
        let mut cfg = Self {
            agent: AgentConfig::default(),
            train: TrainConfig::default(),
            net: NetConfig::default(),
            env: EnvConfig {
                kind,
                ..EnvConfig::default()
            },
        };
        if kind == EnvKind::ChainWorld {
            cfg.agent.budget = 8;
            cfg.net.support_min = -1.0;
            cfg.net.support_max = 1.0;
            cfg.train.min_replay = 200;
        }
        cfg
    }

    pub fn set_field(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if key == "variant" {
            self.agent.apply_variant(parse_value::<Variant>(key, value)?);
            return Ok(());
        }
        let known = self.agent.set_field(key, value)?
            || self.train.set_field(key, value)?
            || self.net.set_field(key, value)?
            || self.env.set_field(key, value)?;
        if known {
            Ok(())
        } else {
            Err(ConfigError::UnknownKey(key.to_string()))
        }
    }

    /// Builds a config from ordered pairs. `env` picks the defaults first and a
    /// `variant` preset is applied before the remaining keys, so explicit keys win.
    pub fn from_pairs<K: AsRef<str>, V: AsRef<str>>(pairs: &[(K, V)]) -> Result<Self, ConfigError> {
        let find = |name: &str| {
            pairs
                .iter()
                .rev()
                .find(|(k, _)| k.as_ref() == name)
                .map(|(_, v)| v.as_ref())
        };
        let kind = match find("env") {
            Some(v) => parse_value("env", v)?,
            None => EnvKind::Minipacman,
        };
        let mut cfg = Self::for_env(kind);
        if let Some(v) = find("variant") {
            cfg.set_field("variant", v)?;
        }
        for (k, v) in pairs {
            if k.as_ref() != "variant" {
                cfg.set_field(k.as_ref(), v.as_ref())?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_kv_str(text: &str) -> Result<Self, ConfigError> {
        Self::from_pairs(&parse_kv_text(text)?)
    }

    pub fn fields(&self) -> Vec<(&'static str, String)> {
        let mut f = self.env.fields();
        f.extend(self.agent.fields());
        f.extend(self.net.fields());
        f.extend(self.train.fields());
        f
    }

    pub fn to_kv_string(&self) -> String {
        render_kv(&self.fields())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.agent.validate()?;
        self.train.validate()?;
        self.net.validate()?;
        self.env.validate()
    }
}
