//! Planners over a [`Model`](crate::model::Model): depth-limited pUCT search
//! with its target extraction, and a breadth-first max-backup planner.

mod bfs;
mod dump;
mod mcts;
mod puct;
mod targets;
mod tree;

pub use bfs::{bfs_plan, BfsResult};
pub use dump::dump_tree;
pub use mcts::{run_mcts, search_and_expand, Mcts, SearchParams, SearchResult, Simulation};
pub use puct::{puct_score, puct_select};
pub use targets::{add_root_dirichlet, mcts_value, mpo_policy_target, visit_count_policy};
pub use tree::{normalize_q, Edge, MinMax, Node, NodeId, SearchTree};

use thiserror::Error;

use crate::config::Depth;
use crate::model::ModelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("search budget must be at least 1")]
    ZeroBudget,
    #[error("invalid depth limits: d_tree = {d_tree}, d_uct = {d_uct}")]
    BadDepth { d_tree: Depth, d_uct: Depth },
    #[error("cannot search from a terminal state")]
    TerminalRoot,
    #[error("no root visits to extract a target from")]
    NoVisits,
    #[error("temperature must be positive, got {0}")]
    BadTemperature(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}
