use std::fmt::Write as _;
use std::ops::ControlFlow;
use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::actor::{actor_episode, eval_episode, eval_planner, ModelKind, Planner};
use super::learner::Learner;
use super::run_config::{EnvFactory, RunConfig};
use super::schedule::TemperatureSchedule;
use super::LearnError;
use crate::model::{LossBreakdown, Network};
use crate::replay::{ReplayBuffer, ReplayConfig};
use crate::scalar::Scalar;

/// Immutable parameters shared with actors, replaced wholesale on publish.
pub struct Snapshot<T> {
    inner: RwLock<(u64, Arc<Network<T>>)>,
}

impl<T> Snapshot<T> {
    pub fn new(network: Network<T>) -> Self {
        Self {
            inner: RwLock::new((0, Arc::new(network))),
        }
    }

    pub fn publish(&self, network: Network<T>) {
        let mut guard = self.inner.write().expect("snapshot lock poisoned");
        guard.0 += 1;
        guard.1 = Arc::new(network);
    }

    pub fn get(&self) -> Arc<Network<T>> {
        self.inner.read().expect("snapshot lock poisoned").1.clone()
    }

    pub fn version(&self) -> u64 {
        self.inner.read().expect("snapshot lock poisoned").0
    }
}

/// One row of the metrics log. Loss fields average the learner steps since
/// the previous row and are NaN when there were none.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    /// Environment steps taken by actors so far.
    pub wall_step: u64,
    pub learner_step: u64,
    pub episodes: u64,
    pub mean_return: f64,
    pub loss_total: f64,
    pub loss_r: f64,
    pub loss_v: f64,
    pub loss_p: f64,
    pub loss_recon: f64,
    pub temperature: f64,
}

pub const METRICS_HEADER: &str =
    "wall_step,learner_step,episodes,mean_return,loss_total,loss_r,loss_v,loss_p,loss_recon,temperature";

fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.6}")
    }
}

impl MetricsRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.wall_step,
            self.learner_step,
            self.episodes,
            fmt_f(self.mean_return),
            fmt_f(self.loss_total),
            fmt_f(self.loss_r),
            fmt_f(self.loss_v),
            fmt_f(self.loss_p),
            fmt_f(self.loss_recon),
            fmt_f(self.temperature),
        )
    }
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut s = String::from(METRICS_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(s, "{}", r.to_csv()).expect("write to string");
    }
    s
}

pub struct TrainOutcome<T> {
    pub network: Network<T>,
    pub metrics: Vec<MetricsRow>,
    pub env_steps: u64,
    pub episodes: u64,
    pub snapshot_version: u64,
}

#[derive(Default)]
struct LossAccum {
    sum: [f64; 5],
    count: u64,
}

impl LossAccum {
    fn add<T: Scalar>(&mut self, l: &LossBreakdown<T>) {
        let terms = [l.total, l.reward, l.value, l.policy, l.reconstruction];
        for (s, t) in self.sum.iter_mut().zip(terms) {
            *s += t.as_f64();
        }
        self.count += 1;
    }

    fn take(&mut self) -> [f64; 5] {
        let out = if self.count == 0 {
            [f64::NAN; 5]
        } else {
            self.sum.map(|s| s / self.count as f64)
        };
        *self = Self::default();
        out
    }
}

fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) * 16);
    rng.random()
}

/// Mean undiscounted return of `episodes` frozen-parameter episodes. Each
/// episode gets its own environment and RNG derived from `seed`, so the result
/// does not depend on thread scheduling.
pub fn evaluate<T: Scalar>(
    factory: &EnvFactory,
    network: &Network<T>,
    config: &RunConfig,
    planner: Planner,
    model: ModelKind,
    episodes: usize,
    seed: u64,
) -> Result<Vec<f64>, LearnError> {
    (0..episodes as u64)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(seed, 2, i);
            let mut env = factory.make(s);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            env.reset(&mut rng);
            eval_episode(env.as_mut(), network, &config.agent, planner, model, &mut rng)
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Runs actors and the learner in one process.
///
/// Each round, `actors` episodes are collected in parallel against the current
/// snapshot and inserted in actor order. The learner then steps while
/// `(steps + 1) * batch_size <= samples_per_insert * inserted_steps`. The
/// snapshot is republished every `sync_interval` learner steps and an
/// evaluation row is logged every `eval_every` steps, plus one at step 0 and
/// one at the end. Every random stream derives from `train.seed`. Returning
/// `Break` from `on_row` ends the run after that row.
pub fn run_training<T: Scalar>(
    config: &RunConfig,
    mut on_row: impl FnMut(&MetricsRow) -> ControlFlow<()>,
) -> Result<TrainOutcome<T>, LearnError> {
    config.validate()?;
    let train = &config.train;
    let seed = train.seed;
    let factory = config.env.factory();
    let probe = factory.make(seed);
    let shape = config
        .net
        .shape(probe.observation_len(), probe.num_actions());
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, 0));
    let network = Network::<T>::new(shape, &mut init_rng);
    let replay = ReplayBuffer::<T>::new(ReplayConfig {
        capacity_episodes: train.replay_capacity,
        min_steps: train.min_replay,
        unroll_k: config.agent.unroll_k as usize,
        n_step: config.agent.n_step as usize,
        gamma: config.agent.gamma,
        num_actions: probe.num_actions(),
    });
    let snapshot = Snapshot::new(network.clone());
    let mut learner = Learner::new(
        network,
        train.learning_rate,
        (train.grad_clip > 0.0).then_some(train.grad_clip),
        config.agent.loss_weights,
        train.batch_size,
    );
    let schedule = TemperatureSchedule::from_agent(&config.agent);
    let planner = eval_planner(&config.agent);
    let mut learn_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1, 0));

    let mut metrics = Vec::new();
    let mut losses = LossAccum::default();
    let mut env_steps = 0u64;
    let mut episodes = 0u64;
    let mut round = 0u64;

    let mut log = |metrics: &mut Vec<MetricsRow>,
                   losses: &mut LossAccum,
                   net: &Network<T>,
                   step: u64,
                   env_steps: u64,
                   episodes: u64|
     -> Result<ControlFlow<()>, LearnError> {
        let returns = evaluate(
            &factory,
            net,
            config,
            planner,
            ModelKind::Learned,
            train.eval_episodes,
            derive_seed(seed, 3, step),
        )?;
        let [total, r, v, p, recon] = losses.take();
        let row = MetricsRow {
            wall_step: env_steps,
            learner_step: step,
            episodes,
            mean_return: mean(&returns),
            loss_total: total,
            loss_r: r,
            loss_v: v,
            loss_p: p,
            loss_recon: recon,
            temperature: schedule.at(step),
        };
        let flow = on_row(&row);
        metrics.push(row);
        Ok(flow)
    };

    let mut stopped = log(&mut metrics, &mut losses, learner.network(), 0, 0, 0)?.is_break();

    while !stopped && learner.steps() < train.learner_steps {
        let actor_net = snapshot.get();
        let temperature = T::lit(schedule.at(learner.steps()));
        let collected: Vec<_> = (0..train.actors as u64)
            .into_par_iter()
            .map(|i| {
                let s = derive_seed(seed, 4, round * train.actors as u64 + i);
                let mut env = factory.make(s);
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                env.reset(&mut rng);
                actor_episode(
                    env.as_mut(),
                    &actor_net,
                    &config.agent,
                    temperature,
                    &mut rng,
                )
            })
            .collect::<Result<_, _>>()?;
        round += 1;
        for episode in collected {
            env_steps += episode.len() as u64;
            episodes += 1;
            replay.insert_episode(episode)?;
        }

        let budget = train.samples_per_insert * replay.inserted_steps() as f64;
        while !stopped
            && replay.is_ready()
            && learner.steps() < train.learner_steps
            && ((learner.steps() + 1) * train.batch_size as u64) as f64 <= budget
        {
            let loss = learner.step(&replay, &mut learn_rng)?;
            losses.add(&loss);
            let step = learner.steps();
            if step.is_multiple_of(train.sync_interval) {
                snapshot.publish(learner.network().clone());
            }
            if step.is_multiple_of(train.eval_every) || step == train.learner_steps {
                stopped = log(
                    &mut metrics,
                    &mut losses,
                    learner.network(),
                    step,
                    env_steps,
                    episodes,
                )?
                .is_break();
            }
        }
    }

    Ok(TrainOutcome {
        network: learner.into_network(),
        metrics,
        env_steps,
        episodes,
        snapshot_version: snapshot.version(),
    })
}
