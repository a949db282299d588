//! Experiment runner around `mzplan-core`: training runs with reproducible
//! output directories, checkpoint evaluation under swapped planners and models,
//! and grid sweeps.

pub mod cli;
pub mod eval;
pub mod run;
pub mod sweep;

pub use eval::{eval_run, EvalRequest, EvalSummary, MazePoolArg, ModelArg, PlannerArg};
pub use run::{config_hash, load_run, resolve_config, run_dir_name, train_to_dir, TrainReport};
pub use sweep::{parse_grid, run_sweep, Grid, SweepRow};
