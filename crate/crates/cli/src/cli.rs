use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use mzplan_core::config::ConfigError;

use crate::eval::{eval_run, EvalRequest, MazePoolArg, ModelArg, PlannerArg};
use crate::run::{resolve_config, train_to_dir};
use crate::sweep::{parse_grid, run_sweep};

#[derive(Parser, Debug)]
#[command(name = "mzplan", version, about = "Train, evaluate and sweep planning agents")]
pub struct Cli {
    /// Worker threads; 1 runs everything on the calling thread.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train one agent and write its run directory.
    Train(Box<TrainArgs>),
    /// Evaluate a trained run under a chosen planner, model and budget.
    Eval(EvalArgs),
    /// Train every cell of a grid file.
    Sweep(SweepArgs),
}

macro_rules! agent_flags {
    ($($key:ident),* $(,)?) => {
        /// One optional flag per agent config key.
        #[derive(Args, Debug, Default, Clone)]
        pub struct AgentFlags {
            $(
                #[arg(long, value_name = "VALUE")]
                pub $key: Option<String>,
            )*
        }

        impl AgentFlags {
            pub const KEYS: &'static [&'static str] = &[$(stringify!($key)),*];

            pub fn pairs(&self) -> Vec<(String, String)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = &self.$key {
                        out.push((stringify!($key).to_string(), v.clone()));
                    }
                )*
                out
            }
        }
    };
}

agent_flags!(
    d_tree,
    d_uct,
    budget,
    c1,
    c2,
    gamma,
    dirichlet_alpha,
    exploration_fraction,
    temp_initial,
    temp_decay_rate,
    temp_decay_every,
    n_step,
    unroll_k,
    variant,
    target_style,
    mpo_tau,
    w_reward,
    w_value,
    w_policy,
    w_recon,
    l2,
);

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Variant preset: one_step, learn, data, learn_data or learn_data_eval.
    #[arg(long)]
    pub preset: Option<String>,
    /// chainworld or minipacman.
    #[arg(long)]
    pub env: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub agent: AgentFlags,
    /// Any config key, including training, network and environment keys.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Root for run directories.
    #[arg(long, env = "MZPLAN_OUT", default_value = "runs")]
    pub out: PathBuf,
    /// Print each metrics row to stderr.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Run directory written by `train`.
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long, value_enum, default_value = "mcts")]
    pub planner: PlannerArg,
    #[arg(long, value_enum, default_value = "learned")]
    pub model: ModelArg,
    /// Simulations (MCTS) or expansions (BFS); defaults to the training budget.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long, value_enum, default_value = "train")]
    pub maze_pool: MazePoolArg,
    #[arg(long, default_value_t = 20)]
    pub episodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the summary CSV here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Grid file.
    pub grid: PathBuf,
    /// Output directory; defaults to `<MZPLAN_OUT>/sweep-<grid file stem>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Cells trained concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

fn out_root() -> PathBuf {
    std::env::var_os("MZPLAN_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn train(args: &TrainArgs) -> Result<ExitCode> {
    let config = resolve_config(
        args.config.as_deref(),
        args.env.as_deref(),
        args.preset.as_deref(),
        &args.agent.pairs(),
        &args.set,
        args.seed,
    )?;
    let verbose = args.verbose;
    let report = train_to_dir(&config, &args.out, |row| {
        if verbose {
            eprintln!("{}", row.to_csv());
        }
    })?;
    println!("{}", report.dir.display());
    Ok(ExitCode::SUCCESS)
}

fn eval(args: &EvalArgs) -> Result<ExitCode> {
    let summary = eval_run(
        &args.run,
        &EvalRequest {
            planner: args.planner,
            model: args.model,
            budget: args.budget,
            maze_pool: args.maze_pool,
            episodes: args.episodes,
            seed: args.seed,
        },
    )?;
    let csv = summary.to_csv();
    if let Some(path) = &args.output {
        fs::write(path, &csv)?;
    }
    print!("{csv}");
    Ok(ExitCode::SUCCESS)
}

fn sweep(args: &SweepArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.grid)?;
    let dir = args.grid.parent().unwrap_or_else(|| ".".as_ref());
    let grid = parse_grid(&text, dir)?;
    let out = args.out.clone().unwrap_or_else(|| {
        let stem = args.grid.file_stem().unwrap_or_default().to_string_lossy();
        out_root().join(format!("sweep-{stem}"))
    });
    let rows = run_sweep(&grid, &out, args.jobs)?;
    let failed = rows.iter().filter(|r| r.result.is_err()).count();
    println!("{}", out.join("sweep.csv").display());
    if failed > 0 {
        eprintln!("{failed} of {} runs failed", rows.len());
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

/// Parses arguments, runs the command and maps errors to exit codes: 2 for
/// configuration mistakes, 1 for anything else.
pub fn main_with<I, S>(args: I) -> ExitCode
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
