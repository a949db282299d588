use rand::Rng;

use super::variant::{ActSource, VariantPreset};
use super::LearnError;
use crate::config::{AgentConfig, Depth};
use crate::env::Environment;
use crate::model::{Model, Network, RootInput, SimulatorModel};
use crate::replay::{Episode, TrajectoryStep};
use crate::scalar::{sample_index, Scalar};
use crate::search::{bfs_plan, run_mcts, SearchParams, SearchResult};

fn search_params<T: Scalar>(
    agent: &AgentConfig,
    d_tree: Depth,
    temperature: T,
    noise: bool,
) -> SearchParams<T> {
    let mut p = SearchParams::from_agent(agent);
    p.d_tree = d_tree;
    p.d_uct = agent.d_uct.min(d_tree);
    p.temperature = temperature;
    if !noise {
        p.dirichlet = None;
    }
    p
}

fn search<T: Scalar, R: Rng + ?Sized>(
    network: &Network<T>,
    obs: &[f32],
    params: &SearchParams<T>,
    rng: &mut R,
) -> Result<SearchResult<T>, LearnError> {
    Ok(run_mcts(
        network,
        &RootInput::observation_only(obs),
        params,
        rng,
    )?)
}

/// Plays one training episode from the environment's current state.
///
/// Every step stores the target search's policy and value. Actions follow the
/// variant: sampled from the prior, or sampled from a search policy. When the
/// target search is shallower than the configured depth (the Data variant), a
/// second full-depth search picks the action.
pub fn actor_episode<T: Scalar, R: Rng + ?Sized>(
    env: &mut dyn Environment,
    network: &Network<T>,
    agent: &AgentConfig,
    temperature: T,
    rng: &mut R,
) -> Result<Episode<T>, LearnError> {
    let preset = VariantPreset::of(agent.variant);
    let target_params = search_params(agent, preset.target_depth(agent.d_tree), temperature, true);
    let acting_params = preset
        .separate_acting_search(agent.d_tree)
        .then(|| search_params(agent, agent.d_tree, temperature, true));
    let mut steps = Vec::new();
    while !env.is_terminal() {
        let obs = env.observation();
        let targets = search(network, &obs, &target_params, rng)?;
        let action = match preset.act_train {
            ActSource::PriorSample => sample_index(&targets.root_prior, rng),
            ActSource::SearchPolicy => match &acting_params {
                Some(p) => sample_index(&search(network, &obs, p, rng)?.policy, rng),
                None => sample_index(&targets.policy, rng),
            },
        };
        let result = env.step(action)?;
        steps.push(TrajectoryStep {
            observation: obs,
            action,
            env_reward: T::lit(result.reward),
            policy_target: targets.policy,
            value_estimate: targets.value,
        });
    }
    Ok(Episode {
        steps,
        final_observation: Some(env.observation()),
    })
}

/// How evaluation picks actions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Planner {
    /// Sample from the network prior.
    None,
    /// Most visited root action of a noiseless search with this budget.
    Mcts { budget: usize },
    /// Highest root Q of a breadth-first search with this budget.
    Bfs { budget: usize },
}

/// Which model the evaluation planner searches in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Learned,
    /// Copies of the real environment with the network's prior and value.
    Simulator,
}

/// Planner implied by a variant's evaluation column.
pub fn eval_planner(agent: &AgentConfig) -> Planner {
    match VariantPreset::of(agent.variant).act_eval {
        ActSource::PriorSample => Planner::None,
        ActSource::SearchPolicy => Planner::Mcts {
            budget: agent.budget as usize,
        },
    }
}

fn plan<T: Scalar, M: Model<T>, R: Rng + ?Sized>(
    model: &M,
    root: &RootInput<'_>,
    planner: Planner,
    agent: &AgentConfig,
    rng: &mut R,
) -> Result<usize, LearnError> {
    match planner {
        Planner::None => unreachable!("handled by caller"),
        Planner::Mcts { budget } => {
            let mut p = search_params(agent, agent.d_tree, T::one(), false);
            p.budget = budget;
            Ok(run_mcts(model, root, &p, rng)?.most_visited())
        }
        Planner::Bfs { budget } => {
            Ok(bfs_plan(model, root, budget, T::lit(agent.gamma), true)?.action)
        }
    }
}

/// Plays one frozen-parameter episode and returns its undiscounted return.
pub fn eval_episode<T: Scalar, R: Rng + ?Sized>(
    env: &mut dyn Environment,
    network: &Network<T>,
    agent: &AgentConfig,
    planner: Planner,
    model: ModelKind,
    rng: &mut R,
) -> Result<f64, LearnError> {
    let simulator = SimulatorModel::new(network, network.num_actions());
    let mut total = 0.0;
    while !env.is_terminal() {
        let obs = env.observation();
        let action = match (planner, model) {
            (Planner::None, _) => {
                let root = network.initial_inference(&RootInput::observation_only(&obs))?;
                sample_index(&root.policy, rng)
            }
            (_, ModelKind::Learned) => {
                plan(network, &RootInput::observation_only(&obs), planner, agent, rng)?
            }
            (_, ModelKind::Simulator) => {
                let root = RootInput {
                    observation: &obs,
                    env: Some(&*env),
                    seed: rng.random(),
                };
                plan(&simulator, &root, planner, agent, rng)?
            }
        };
        total += env.step(action)?.reward;
    }
    Ok(total)
}
