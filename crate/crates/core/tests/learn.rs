use std::ops::ControlFlow;

use mzplan_core::config::{Depth, LossWeights, Variant};
use mzplan_core::env::{ChainWorld, Environment};
use mzplan_core::learn::{
    actor_episode, metrics_csv, muzero_loss, run_training, temperature, ActSource, EnvKind,
    Learner, RunConfig, VariantPreset,
};
use mzplan_core::model::{Network, NetworkShape};
use mzplan_core::replay::{BatchSample, TrainingBatch};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn temperature_schedule_values() {
    assert_eq!(temperature(0, 1.0, 0.95, 5000), 1.0);
    assert_eq!(temperature(4999, 1.0, 0.95, 5000), 1.0);
    assert_eq!(temperature(5000, 1.0, 0.95, 5000), 0.95);
    assert!((temperature(12000, 1.0, 0.95, 5000) - 0.9025).abs() < 1e-12);
}

#[test]
fn variant_table() {
    use ActSource::*;
    let rows = [
        (Variant::OneStep, Depth::Limited(1), PriorSample, PriorSample, 1),
        (Variant::Learn, Depth::Unbounded, PriorSample, PriorSample, 5),
        (Variant::Data, Depth::Limited(1), SearchPolicy, PriorSample, 5),
        (Variant::LearnData, Depth::Unbounded, SearchPolicy, PriorSample, 5),
        (Variant::LearnDataEval, Depth::Unbounded, SearchPolicy, SearchPolicy, 5),
    ];
    for (v, d, train, eval, k) in rows {
        let p = VariantPreset::of(v);
        assert_eq!(p.learn_d_tree, d, "{v}");
        assert_eq!(p.act_train, train, "{v}");
        assert_eq!(p.act_eval, eval, "{v}");
        assert_eq!(p.unroll_k, k, "{v}");
    }
    assert!(VariantPreset::of(Variant::Data).separate_acting_search(Depth::Unbounded));
    assert!(!VariantPreset::of(Variant::LearnData).separate_acting_search(Depth::Unbounded));
}

fn shape() -> NetworkShape {
    NetworkShape {
        observation_len: 4,
        num_actions: 2,
        hidden: 8,
        latent: 4,
        support_min: -1.0,
        support_max: 1.0,
        support_bins: 5,
    }
}

fn batch(rng: &mut ChaCha8Rng, n: usize) -> TrainingBatch<f64> {
    let samples = (0..n)
        .map(|_| {
            let obs: Vec<f32> = (0..4).map(|_| rng.random_range(0..2) as f32).collect();
            let p: f64 = rng.random();
            BatchSample {
                observation: obs.clone(),
                actions: vec![rng.random_range(0..2), rng.random_range(0..2)],
                reward_targets: vec![0.0, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                value_targets: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                policy_targets: (0..3).map(|_| vec![p, 1.0 - p]).collect(),
                observation_targets: vec![obs; 3],
            }
        })
        .collect();
    TrainingBatch {
        unroll_k: 2,
        samples,
    }
}

#[test]
fn loss_terms_add_up_and_scale_linearly() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut net = Network::<f64>::new(shape(), &mut rng);
    for v in net.params_mut().values_mut() {
        *v += rng.random_range(-0.2..0.2);
    }
    let b = batch(&mut rng, 10);
    let w = LossWeights {
        reconstruction: 0.5,
        ..LossWeights::default()
    };
    let l = muzero_loss(&b, &net, &w).unwrap();
    let sum = l.reward + l.value + l.policy + l.reconstruction + l.l2;
    assert!((l.total - sum).abs() < 1e-9);
    let doubled = muzero_loss(
        &b,
        &net,
        &LossWeights {
            policy: 2.0 * w.policy,
            ..w
        },
    )
    .unwrap();
    assert!((doubled.policy - 2.0 * l.policy).abs() < 1e-12);
    assert_eq!(doubled.value, l.value);
}

#[test]
fn zero_learning_rate_leaves_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let net = Network::<f64>::new(shape(), &mut rng);
    let before = net.params().clone();
    let mut learner = Learner::new(net, 0.0, Some(5.0), LossWeights::default(), 8);
    let b = batch(&mut rng, 8);
    learner.step_on(&b).unwrap();
    assert_eq!(learner.network().params(), &before);
    assert_eq!(learner.steps(), 1);
}

#[test]
fn overfits_one_batch() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let net = Network::<f64>::new(shape(), &mut rng);
    let b = batch(&mut rng, 16);
    let w = LossWeights::default();
    let mut learner = Learner::new(net, 1e-2, Some(5.0), w, 16);
    let mut losses = Vec::new();
    for _ in 0..100 {
        losses.push(learner.step_on(&b).unwrap().total);
    }
    let last = muzero_loss(&b, learner.network(), &w).unwrap().total;
    assert!(last < losses[0]);
    // smoothed curve is monotone
    let means: Vec<f64> = losses.chunks(20).map(|c| c.iter().sum::<f64>() / 20.0).collect();
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
}

fn chain_config() -> RunConfig {
    let mut cfg = RunConfig::for_env(EnvKind::ChainWorld);
    cfg.env.chain_length = 5;
    cfg.env.chain_max_steps = 12;
    cfg.net.hidden = 16;
    cfg.net.latent = 8;
    cfg.train.batch_size = 8;
    cfg.train.min_replay = 20;
    cfg.train.eval_every = 10;
    cfg.train.eval_episodes = 3;
    cfg.train.sync_interval = 7;
    cfg.train.actors = 2;
    cfg.train.samples_per_insert = 0.25;
    cfg
}

#[test]
fn zero_learner_steps_logs_only_initial_evaluation() {
    let mut cfg = chain_config();
    cfg.train.learner_steps = 0;
    let out = run_training::<f64>(&cfg, |_| ControlFlow::Continue(())).unwrap();
    assert_eq!(out.metrics.len(), 1);
    assert_eq!(out.metrics[0].learner_step, 0);
    assert!(out.metrics[0].loss_total.is_nan());
}

#[test]
fn training_respects_ratio_and_sync() {
    let mut cfg = chain_config();
    cfg.train.learner_steps = 30;
    let out = run_training::<f64>(&cfg, |_| ControlFlow::Continue(())).unwrap();
    let sampled = 30.0 * cfg.train.batch_size as f64;
    assert!(sampled <= cfg.train.samples_per_insert * out.env_steps as f64);
    assert_eq!(out.snapshot_version, 30 / 7);
    let steps: Vec<u64> = out.metrics.iter().map(|r| r.learner_step).collect();
    assert_eq!(steps, vec![0, 10, 20, 30]);
    for r in &out.metrics[1..] {
        let sum = r.loss_r + r.loss_v + r.loss_p + r.loss_recon;
        assert!(r.loss_total >= sum);
    }
}

#[test]
fn training_is_reproducible() {
    let mut cfg = chain_config();
    cfg.train.learner_steps = 20;
    cfg.agent.apply_variant(Variant::Data);
    let a = run_training::<f64>(&cfg, |_| ControlFlow::Continue(())).unwrap();
    let b = run_training::<f64>(&cfg, |_| ControlFlow::Continue(())).unwrap();
    assert_eq!(metrics_csv(&a.metrics), metrics_csv(&b.metrics));
    assert_eq!(a.network.params(), b.network.params());
}

#[test]
fn actor_episodes_are_reproducible_and_well_formed() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let net = Network::<f64>::new(
        NetworkShape {
            observation_len: 6,
            ..shape()
        },
        &mut rng,
    );
    for variant in Variant::ALL {
        let mut agent = mzplan_core::config::AgentConfig::default();
        agent.apply_variant(variant);
        agent.budget = 6;
        let play = |seed| {
            let mut env = ChainWorld::new(6, 15);
            env.reset(&mut ChaCha8Rng::seed_from_u64(seed));
            actor_episode(&mut env, &net, &agent, 1.0, &mut ChaCha8Rng::seed_from_u64(seed))
                .unwrap()
        };
        let a = play(7);
        assert_eq!(a, play(7));
        assert!(!a.steps.is_empty() && a.steps.len() <= 15);
        for s in &a.steps {
            assert!((s.policy_target.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn run_config_round_trips() {
    let mut cfg = RunConfig::for_env(EnvKind::ChainWorld);
    cfg.agent.apply_variant(Variant::OneStep);
    cfg.train.seed = 9;
    let text = cfg.to_kv_string();
    assert_eq!(RunConfig::from_kv_str(&text).unwrap(), cfg);
    assert!(RunConfig::from_kv_str("bogus = 1").is_err());
    let chain = RunConfig::from_kv_str("env = chainworld\nbudget = 3").unwrap();
    assert_eq!(chain.agent.budget, 3);
    assert_eq!(chain.net.support_max, 1.0);
}

#[test]
fn fixed_ghost_count_applies_on_every_episode() {
    let cfg = RunConfig::from_kv_str("maze = small\nghosts = 2").unwrap();
    let factory = cfg.env.factory();
    for seed in 0..5 {
        let mut env = factory.make(seed);
        env.reset(&mut ChaCha8Rng::seed_from_u64(seed));
        let obs = env.observation();
        let plane = obs.len() / mzplan_core::env::NUM_PLANES;
        let ghosts: f32 = obs[4 * plane..].iter().sum();
        assert_eq!(ghosts, 2.0);
    }
}
