//! Agent configuration and the flat `key = value` text format it is stored in.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for key `{key}`: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("key `{0}` given more than once")]
    DuplicateKey(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_kv_text(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: raw.to_string(),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            });
        }
        if !seen.insert(k.to_string()) {
            return Err(ConfigError::DuplicateKey(k.to_string()));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Renders pairs back into the text format, one per line.
pub fn render_kv(pairs: &[(&'static str, String)]) -> String {
    let mut s = String::new();
    for (k, v) in pairs {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(v);
        s.push('\n');
    }
    s
}

pub(crate) fn parse_value<V: FromStr>(key: &str, value: &str) -> Result<V, ConfigError>
where
    V::Err: fmt::Display,
{
    value.parse::<V>().map_err(|e| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

/// A search depth limit. `Unbounded` orders above every finite depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Depth {
    Limited(u32),
    Unbounded,
}

impl Depth {
    /// True when a node at depth `k` is strictly shallower than this limit.
    #[inline]
    pub fn exceeds(self, k: u32) -> bool {
        match self {
            Depth::Limited(d) => k < d,
            Depth::Unbounded => true,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Depth::Unbounded)
    }
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Depth::Limited(d) => write!(f, "{d}"),
            Depth::Unbounded => f.write_str("inf"),
        }
    }
}

impl FromStr for Depth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "∞" | "unbounded" => Ok(Depth::Unbounded),
            other => other
                .parse::<u32>()
                .map(Depth::Limited)
                .map_err(|_| format!("expected a non-negative integer or `inf`, got `{other}`")),
        }
    }
}

/// Which of the five planning ablations the agent runs as.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    OneStep,
    Learn,
    Data,
    LearnData,
    LearnDataEval,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::OneStep,
        Variant::Learn,
        Variant::Data,
        Variant::LearnData,
        Variant::LearnDataEval,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Variant::OneStep => "one_step",
            Variant::Learn => "learn",
            Variant::Data => "data",
            Variant::LearnData => "learn_data",
            Variant::LearnDataEval => "learn_data_eval",
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            Variant::OneStep => "1S",
            Variant::Learn => "L",
            Variant::Data => "D",
            Variant::LearnData => "L+D",
            Variant::LearnDataEval => "L+D+E",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Variant::ALL
            .into_iter()
            .find(|v| v.key() == norm || v.short().to_ascii_lowercase() == norm)
            .ok_or_else(|| format!("unknown variant `{s}`"))
    }
}

/// How the policy target is extracted from a finished search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TargetStyle {
    VisitCount,
    Mpo,
}

impl fmt::Display for TargetStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetStyle::VisitCount => "visit_count",
            TargetStyle::Mpo => "mpo",
        })
    }
}

impl FromStr for TargetStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "visit_count" | "visits" => Ok(TargetStyle::VisitCount),
            "mpo" => Ok(TargetStyle::Mpo),
            other => Err(format!("unknown target style `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub reward: f64,
    pub value: f64,
    pub policy: f64,
    pub reconstruction: f64,
    /// Coefficient `c` of the `c * |theta|^2` term.
    pub l2: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            reward: 1.0,
            value: 0.3,
            policy: 1.0,
            reconstruction: 0.0,
            l2: 1e-4,
        }
    }
}

/// Planning and learning knobs of the agent.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentConfig {
    pub d_tree: Depth,
    pub d_uct: Depth,
    pub budget: u32,
    pub c1: f64,
    pub c2: f64,
    pub gamma: f64,
    pub dirichlet_alpha: f64,
    pub exploration_fraction: f64,
    pub temp_initial: f64,
    pub temp_decay_rate: f64,
    pub temp_decay_every: u64,
    pub n_step: u32,
    pub unroll_k: u32,
    pub variant: Variant,
    pub target_style: TargetStyle,
    pub mpo_tau: f64,
    pub loss_weights: LossWeights,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            d_tree: Depth::Unbounded,
            d_uct: Depth::Unbounded,
            budget: 10,
            c1: 1.25,
            c2: 19652.0,
            gamma: 0.97,
            dirichlet_alpha: 0.3,
            exploration_fraction: 0.25,
            temp_initial: 1.0,
            temp_decay_rate: 0.95,
            temp_decay_every: 5000,
            n_step: 10,
            unroll_k: 5,
            variant: Variant::LearnDataEval,
            target_style: TargetStyle::VisitCount,
            mpo_tau: 0.1,
            loss_weights: LossWeights::default(),
        }
    }
}

impl AgentConfig {
    pub const KEYS: [&'static str; 21] = [
        "d_tree",
        "d_uct",
        "budget",
        "c1",
        "c2",
        "gamma",
        "dirichlet_alpha",
        "exploration_fraction",
        "temp_initial",
        "temp_decay_rate",
        "temp_decay_every",
        "n_step",
        "unroll_k",
        "variant",
        "target_style",
        "mpo_tau",
        "w_reward",
        "w_value",
        "w_policy",
        "w_recon",
        "l2",
    ];

    /// Switches to `variant` and applies the depth/unroll settings it forces.
    pub fn apply_variant(&mut self, variant: Variant) {
        self.variant = variant;
        if variant == Variant::OneStep {
            self.d_tree = Depth::Limited(1);
            self.d_uct = self.d_uct.min(Depth::Limited(1));
            self.unroll_k = 1;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.d_tree == Depth::Limited(0) {
            return bad("d_tree must be positive".into());
        }
        if self.d_uct > self.d_tree {
            return bad(format!(
                "d_uct ({}) must not exceed d_tree ({})",
                self.d_uct, self.d_tree
            ));
        }
        if self.budget == 0 {
            return bad("budget must be at least 1".into());
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0 && self.c1.is_finite() && self.c2.is_finite()) {
            return bad("c1 and c2 must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !(self.dirichlet_alpha > 0.0 && self.dirichlet_alpha.is_finite()) {
            return bad("dirichlet_alpha must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.exploration_fraction) {
            return bad("exploration_fraction must lie in [0, 1]".into());
        }
        if !(self.temp_initial > 0.0 && self.temp_initial.is_finite()) {
            return bad("temp_initial must be positive".into());
        }
        if !(self.temp_decay_rate > 0.0 && self.temp_decay_rate <= 1.0) {
            return bad("temp_decay_rate must lie in (0, 1]".into());
        }
        if self.temp_decay_every == 0 {
            return bad("temp_decay_every must be positive".into());
        }
        if self.n_step == 0 || self.unroll_k == 0 {
            return bad("n_step and unroll_k must be positive".into());
        }
        if !(self.mpo_tau > 0.0 && self.mpo_tau.is_finite()) {
            return bad("mpo_tau must be positive".into());
        }
        let w = &self.loss_weights;
        for (name, x) in [
            ("w_reward", w.reward),
            ("w_value", w.value),
            ("w_policy", w.policy),
            ("w_recon", w.reconstruction),
            ("l2", w.l2),
        ] {
            if !(x >= 0.0 && x.is_finite()) {
                return bad(format!("{name} must be a finite non-negative number"));
            }
        }
        if self.variant == Variant::OneStep
            && (self.d_tree != Depth::Limited(1) || self.unroll_k != 1)
        {
            return bad("variant one_step requires d_tree = 1 and unroll_k = 1".into());
        }
        if self.d_uct == Depth::Limited(0) && self.target_style == TargetStyle::VisitCount {
            return bad("d_uct = 0 makes visit counts uninformative; use target_style = mpo".into());
        }
        Ok(())
    }

    /// Sets one key. Returns `Ok(false)` when the key does not belong to this struct.
    pub fn set_field(&mut self, key: &str, value: &str) -> Result<bool, ConfigError> {
        match key {
            "d_tree" => self.d_tree = parse_value(key, value)?,
            "d_uct" => self.d_uct = parse_value(key, value)?,
            "budget" => self.budget = parse_value(key, value)?,
            "c1" => self.c1 = parse_value(key, value)?,
            "c2" => self.c2 = parse_value(key, value)?,
            "gamma" => self.gamma = parse_value(key, value)?,
            "dirichlet_alpha" => self.dirichlet_alpha = parse_value(key, value)?,
            "exploration_fraction" => self.exploration_fraction = parse_value(key, value)?,
            "temp_initial" => self.temp_initial = parse_value(key, value)?,
            "temp_decay_rate" => self.temp_decay_rate = parse_value(key, value)?,
            "temp_decay_every" => self.temp_decay_every = parse_value(key, value)?,
            "n_step" => self.n_step = parse_value(key, value)?,
            "unroll_k" => self.unroll_k = parse_value(key, value)?,
            "variant" => self.variant = parse_value(key, value)?,
            "target_style" => self.target_style = parse_value(key, value)?,
            "mpo_tau" => self.mpo_tau = parse_value(key, value)?,
            "w_reward" => self.loss_weights.reward = parse_value(key, value)?,
            "w_value" => self.loss_weights.value = parse_value(key, value)?,
            "w_policy" => self.loss_weights.policy = parse_value(key, value)?,
            "w_recon" => self.loss_weights.reconstruction = parse_value(key, value)?,
            "l2" => self.loss_weights.l2 = parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn fields(&self) -> Vec<(&'static str, String)> {
        let w = &self.loss_weights;
        vec![
            ("d_tree", self.d_tree.to_string()),
            ("d_uct", self.d_uct.to_string()),
            ("budget", self.budget.to_string()),
            ("c1", self.c1.to_string()),
            ("c2", self.c2.to_string()),
            ("gamma", self.gamma.to_string()),
            ("dirichlet_alpha", self.dirichlet_alpha.to_string()),
            ("exploration_fraction", self.exploration_fraction.to_string()),
            ("temp_initial", self.temp_initial.to_string()),
            ("temp_decay_rate", self.temp_decay_rate.to_string()),
            ("temp_decay_every", self.temp_decay_every.to_string()),
            ("n_step", self.n_step.to_string()),
            ("unroll_k", self.unroll_k.to_string()),
            ("variant", self.variant.to_string()),
            ("target_style", self.target_style.to_string()),
            ("mpo_tau", self.mpo_tau.to_string()),
            ("w_reward", w.reward.to_string()),
            ("w_value", w.value.to_string()),
            ("w_policy", w.policy.to_string()),
            ("w_recon", w.reconstruction.to_string()),
            ("l2", w.l2.to_string()),
        ]
    }

    /// Parses a config file. A `variant` key applies its preset first, so explicit
    /// keys in the same file override what the preset forces.
    pub fn from_kv_str(text: &str) -> Result<Self, ConfigError> {
        let pairs = parse_kv_text(text)?;
        let mut cfg = AgentConfig::default();
        if let Some((_, v)) = pairs.iter().find(|(k, _)| k == "variant") {
            cfg.apply_variant(parse_value("variant", v)?);
        }
        for (k, v) in &pairs {
            if !cfg.set_field(k, v)? {
                return Err(ConfigError::UnknownKey(k.clone()));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv_string(&self) -> String {
        render_kv(&self.fields())
    }
}
