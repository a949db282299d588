use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Result};
use clap::ValueEnum;
use mzplan_core::learn::{evaluate, EnvKind, MazeChoice, ModelKind, Planner};

use crate::run::load_run;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlannerArg {
    Mcts,
    Bfs,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Learned,
    Simulator,
}

/// Which mazes evaluation episodes are played on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MazePoolArg {
    /// Whatever the run trained on.
    Train,
    /// A fresh generated maze every episode.
    Procedural,
    /// The hand-made maze the generator never produces.
    Ood,
}

#[derive(Clone, Debug)]
pub struct EvalRequest {
    pub planner: PlannerArg,
    pub model: ModelArg,
    /// Defaults to the run's training budget.
    pub budget: Option<usize>,
    pub maze_pool: MazePoolArg,
    pub episodes: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalSummary {
    pub planner: PlannerArg,
    pub model: ModelArg,
    pub budget: usize,
    pub maze_pool: MazePoolArg,
    pub seed: u64,
    pub returns: Vec<f64>,
}

pub const EVAL_HEADER: &str =
    "planner,model,budget,maze_pool,episodes,seed,mean_return,median_return,min_return,max_return";

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

impl EvalSummary {
    pub fn mean(&self) -> f64 {
        self.returns.iter().sum::<f64>() / self.returns.len() as f64
    }

    pub fn median(&self) -> f64 {
        median(&self.returns)
    }

    pub fn to_csv(&self) -> String {
        let min = self.returns.iter().copied().fold(f64::INFINITY, f64::min);
        let max = self.returns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut s = format!("{EVAL_HEADER}\n");
        writeln!(
            s,
            "{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
            self.planner.name(),
            self.model.name(),
            self.budget,
            self.maze_pool.name(),
            self.returns.len(),
            self.seed,
            self.mean(),
            self.median(),
            min,
            max,
        )
        .expect("write to string");
        s
    }
}

trait ValueEnumName {
    fn name(&self) -> String;
}

impl<E: ValueEnum> ValueEnumName for E {
    fn name(&self) -> String {
        self.to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default()
    }
}

/// Plays frozen-parameter episodes from a run's checkpoint.
pub fn eval_run(dir: &Path, req: &EvalRequest) -> Result<EvalSummary> {
    if req.episodes == 0 {
        bail!("--episodes must be positive");
    }
    let (mut config, network) = load_run(dir)?;
    let budget = req.budget.unwrap_or(config.agent.budget as usize);
    if budget == 0 {
        bail!("--budget must be positive");
    }
    match req.maze_pool {
        MazePoolArg::Train => {}
        _ if config.env.kind != EnvKind::Minipacman => {
            bail!("--maze-pool applies to minipacman runs only")
        }
        MazePoolArg::Procedural => config.env.maze = MazeChoice::Procedural,
        MazePoolArg::Ood => config.env.maze = MazeChoice::Classic,
    }
    let planner = match req.planner {
        PlannerArg::None => Planner::None,
        PlannerArg::Mcts => Planner::Mcts { budget },
        PlannerArg::Bfs => Planner::Bfs { budget },
    };
    let model = match req.model {
        ModelArg::Learned => ModelKind::Learned,
        ModelArg::Simulator => ModelKind::Simulator,
    };
    let returns = evaluate(
        &config.env.factory(),
        &network,
        &config,
        planner,
        model,
        req.episodes,
        req.seed,
    )?;
    Ok(EvalSummary {
        planner: req.planner,
        model: req.model,
        budget,
        maze_pool: req.maze_pool,
        seed: req.seed,
        returns,
    })
}
