use mzplan_core::config::{Depth, TargetStyle};
use mzplan_core::env::{Environment, TreeMdp};
use mzplan_core::model::{
    HiddenState, Model, ModelError, ModelOutput, RootInference, RootInput, SimulatorModel,
    UniformPrior,
};
use mzplan_core::search::{
    add_root_dirichlet, bfs_plan, dump_tree, mcts_value, mpo_policy_target, normalize_q,
    puct_select, run_mcts, visit_count_policy, Edge, Mcts, MinMax, SearchError, SearchParams,
    SearchTree,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic model whose latent state is the action path from the root.
/// Rewards, priors and values are fixed pseudo-random functions of the path.
struct PathModel {
    actions: usize,
    salt: u64,
}

fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl PathModel {
    fn key(&self, path: &[f64]) -> u64 {
        path.iter()
            .fold(mix(self.salt), |h, &a| mix(h ^ (a as u64 + 1)))
    }

    fn unit(&self, key: u64, k: u64) -> f64 {
        (mix(key ^ k) >> 11) as f64 / (1u64 << 53) as f64
    }

    fn outputs(&self, path: &[f64]) -> (Vec<f64>, f64) {
        let key = self.key(path);
        let raw: Vec<f64> = (0..self.actions)
            .map(|a| 0.1 + self.unit(key, 10 + a as u64))
            .collect();
        let total: f64 = raw.iter().sum();
        (
            raw.iter().map(|p| p / total).collect(),
            self.unit(key, 1) * 2.0 - 1.0,
        )
    }
}

impl Model<f64> for PathModel {
    fn num_actions(&self) -> usize {
        self.actions
    }

    fn initial_inference(&self, _root: &RootInput<'_>) -> Result<RootInference<f64>, ModelError> {
        let (policy, value) = self.outputs(&[]);
        Ok(RootInference {
            state: HiddenState::Latent(Vec::new()),
            policy,
            value,
        })
    }

    fn recurrent_inference(
        &self,
        state: &HiddenState<f64>,
        action: usize,
    ) -> Result<ModelOutput<f64>, ModelError> {
        let mut path = state.as_latent().unwrap().to_vec();
        path.push(action as f64);
        let (policy, value) = self.outputs(&path);
        let reward = self.unit(self.key(&path), 2) * 2.0 - 1.0;
        Ok(ModelOutput {
            reward,
            next_state: HiddenState::Latent(path),
            policy,
            value,
            terminal: false,
        })
    }
}

fn params(budget: usize) -> SearchParams<f64> {
    SearchParams {
        budget,
        d_tree: Depth::Unbounded,
        d_uct: Depth::Unbounded,
        c1: 1.25,
        c2: 19652.0,
        gamma: 0.97,
        dirichlet: None,
        target: TargetStyle::VisitCount,
        temperature: 1.0,
        mpo_tau: 0.1,
    }
}

fn edge(prior: f64, visits: u32, q: f64) -> Edge<f64> {
    Edge {
        prior,
        visits,
        q,
        reward: 0.0,
        child: None,
    }
}

const OBS: [f32; 1] = [0.0];

fn root() -> RootInput<'static> {
    RootInput::observation_only(&OBS)
}

#[test]
fn puct_worked_example() {
    let edges = vec![edge(0.6, 1, 0.5), edge(0.4, 0, 0.0)];
    let mut mm = MinMax::default();
    mm.update(0.5);
    assert_eq!(puct_select(&edges, &mm, 1.25, 19652.0), 0);
    let s0 = mzplan_core::search::puct_score(0.5f64, 0.6, 1, 1, 1.25, 19652.0);
    let s1 = mzplan_core::search::puct_score(0.0f64, 0.4, 0, 1, 1.25, 19652.0);
    assert!((s0 - 0.875).abs() < 1e-3 && (s1 - 0.5).abs() < 1e-3);
}

#[test]
fn puct_unvisited_tie_goes_to_higher_prior_then_lower_index() {
    let mm = MinMax::default();
    let edges = vec![edge(0.2, 0, 0.0), edge(0.5, 0, 0.0), edge(0.3, 0, 0.0)];
    assert_eq!(puct_select(&edges, &mm, 1.25, 19652.0), 1);
    let edges = vec![edge(0.5, 0, 0.0), edge(0.5, 0, 0.0)];
    assert_eq!(puct_select(&edges, &mm, 1.25, 19652.0), 0);
}

#[test]
fn normalization_examples() {
    assert_eq!(normalize_q(0.0, -2.0, 2.0), 0.5);
    assert_eq!(normalize_q(-2.0, -2.0, 2.0), 0.0);
    assert_eq!(normalize_q(2.0, -2.0, 2.0), 1.0);
    assert_eq!(normalize_q(0.7, 0.3, 0.3), 0.7);
}

fn latent() -> HiddenState<f64> {
    HiddenState::Latent(Vec::new())
}

#[test]
fn backup_single_edge() {
    let mut tree = SearchTree::new(latent(), &[1.0], 0.0, false);
    let c = tree.expand(0, 0, latent(), 1.0, &[1.0], 0.5, false);
    let g = tree.backup(&[(0, 0)], tree.node(c).value, 0.9);
    assert!((g[0] - 1.45).abs() < 1e-12);
    assert!((tree.root().edges[0].q - 1.45).abs() < 1e-12);
    assert_eq!(tree.root().edges[0].visits, 1);
}

#[test]
fn backup_two_edges() {
    let mut tree = SearchTree::new(latent(), &[1.0], 0.0, false);
    let a = tree.expand(0, 0, latent(), 0.0, &[1.0], 0.0, false);
    let b = tree.expand(a, 0, latent(), 1.0, &[1.0], 2.0, false);
    tree.backup(&[(0, 0), (a, 0)], tree.node(b).value, 0.5);
    assert_eq!(tree.node(a).edges[0].q, 2.0);
    assert_eq!(tree.root().edges[0].q, 1.0);
}

#[test]
fn backup_of_zeros_keeps_zero() {
    let mut tree = SearchTree::new(latent(), &[1.0], 0.0, false);
    let a = tree.expand(0, 0, latent(), 0.0, &[1.0], 0.0, false);
    for _ in 0..5 {
        tree.backup(&[(0, 0)], tree.node(a).value, 0.9);
    }
    assert_eq!(tree.root().edges[0].q, 0.0);
    assert_eq!(tree.root().edges[0].visits, 5);
}

#[test]
fn target_examples() {
    assert_eq!(visit_count_policy::<f64>(&[3, 1], 1.0).unwrap(), vec![0.75, 0.25]);
    let p = visit_count_policy::<f64>(&[3, 1], 0.5).unwrap();
    assert!((p[0] - 0.9).abs() < 1e-12 && (p[1] - 0.1).abs() < 1e-12);
    assert_eq!(visit_count_policy::<f64>(&[2, 2], 0.3).unwrap(), vec![0.5, 0.5]);
    assert_eq!(
        visit_count_policy::<f64>(&[0, 0], 1.0),
        Err(SearchError::NoVisits)
    );
    assert_eq!(mcts_value(&[3, 1], &[1.0, 0.0]).unwrap(), 0.75);
    assert_eq!(mcts_value(&[0, 4], &[9.0, -2.0]).unwrap(), -2.0);
    assert!(mcts_value::<f64>(&[0, 0], &[1.0, 1.0]).is_err());

    let m = mpo_policy_target(&[0.5, 0.5], &[0.1, 0.0], &[true, true], 0.1);
    let e = std::f64::consts::E;
    assert!((m[0] - e / (e + 1.0)).abs() < 1e-12);
    assert!((m[0] - 0.731).abs() < 1e-3 && (m[1] - 0.269).abs() < 1e-3);
    let prior = [0.2f64, 0.3, 0.5];
    let same = mpo_policy_target(&prior, &[0.4, 0.4, 0.4], &[true, true, true], 0.1);
    for (a, b) in same.iter().zip(prior) {
        assert!((a - b).abs() < 1e-12);
    }
    // unvisited actions count as q = 0
    let m = mpo_policy_target(&[0.5f64, 0.5], &[0.0, 7.0], &[true, false], 0.1);
    assert!((m[0] - 0.5).abs() < 1e-12);
}

#[test]
fn dirichlet_with_zero_fraction_is_identity_and_draws_nothing() {
    let mut a = ChaCha8Rng::seed_from_u64(1);
    let b = a.clone();
    let prior = vec![0.1, 0.2, 0.7];
    assert_eq!(add_root_dirichlet(&prior, 0.3, 0.0, &mut a), prior);
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn dirichlet_output_is_distribution(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.01).collect();
        let t: f64 = raw.iter().sum();
        let prior: Vec<f64> = raw.iter().map(|x| x / t).collect();
        let out = add_root_dirichlet(&prior, 0.3, 0.25, &mut rng);
        prop_assert!(out.iter().all(|&p| p >= 0.0));
        prop_assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn puct_ignores_constant_q_shift(seed in any::<u64>(), shift in -50.0f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..6);
        let edges: Vec<Edge<f64>> = (0..n)
            .map(|_| {
                let v = rng.random_range(0..5u32);
                edge(rng.random::<f64>(), v, if v > 0 { rng.random_range(-1.0..1.0) } else { 0.0 })
            })
            .collect();
        if edges.iter().filter(|e| e.visits > 0).count() < 2 {
            return Ok(());
        }
        let shifted: Vec<Edge<f64>> = edges
            .iter()
            .map(|e| Edge { q: if e.visits > 0 { e.q + shift } else { 0.0 }, ..e.clone() })
            .collect();
        let mut mm = MinMax::default();
        let mut mm_s = MinMax::default();
        for e in edges.iter().filter(|e| e.visits > 0) {
            mm.update(e.q);
            mm_s.update(e.q + shift);
        }
        let (lo, hi) = mm.bounds().unwrap();
        prop_assume!(hi - lo > 1e-6);
        prop_assert_eq!(
            puct_select(&edges, &mm, 1.25, 19652.0),
            puct_select(&shifted, &mm_s, 1.25, 19652.0)
        );
    }
}

#[test]
fn one_simulation_gives_one_hot_policy() {
    let model = PathModel { actions: 3, salt: 4 };
    let r = run_mcts(&model, &root(), &params(1), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(r.node_count, 2);
    assert_eq!(r.root_visits.iter().sum::<u32>(), 1);
    assert_eq!(r.policy.iter().filter(|&&p| p == 1.0).count(), 1);
}

#[test]
fn unbounded_search_fills_budget() {
    for salt in 0..20 {
        let model = PathModel { actions: 3, salt };
        let mut rng = ChaCha8Rng::seed_from_u64(salt);
        let mut p = params(40);
        p.dirichlet = Some((0.3, 0.25));
        let r = run_mcts(&model, &root(), &p, &mut rng).unwrap();
        assert_eq!(r.root_visits.iter().sum::<u32>(), 40);
        assert_eq!(r.node_count, 41);
        assert!((r.policy.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mean = r.root_returns.iter().sum::<f64>() / r.root_returns.len() as f64;
        assert!((r.value - mean).abs() < 1e-12);
    }
}

#[test]
fn depth_one_search_is_a_root_fan() {
    let model = PathModel { actions: 4, salt: 9 };
    let mut p = params(30);
    p.d_tree = Depth::Limited(1);
    p.d_uct = Depth::Limited(1);
    let r = run_mcts(&model, &root(), &p, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(r.max_depth, 1);
    assert!(r.node_count <= 5);
    assert_eq!(r.root_visits.iter().sum::<u32>(), 30);
}

#[test]
fn prior_sampling_rollouts_below_zero_uct_depth() {
    let model = PathModel { actions: 2, salt: 3 };
    let mut p = params(25);
    p.d_uct = Depth::Limited(0);
    p.target = TargetStyle::Mpo;
    let mut search = Mcts::new(&model, &root(), p, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..25 {
        let (sim, _) = search.simulate(&mut rng).unwrap();
        assert!(sim.expanded);
    }
    let r = search.finish().unwrap();
    assert_eq!(r.node_count, 26);
    assert!(r.max_depth > 3);
}

#[test]
fn edge_q_is_mean_of_backed_up_returns() {
    use std::collections::HashMap;
    for seed in 0..30 {
        let model = PathModel { actions: 3, salt: seed };
        let mut p = params(60);
        p.d_tree = Depth::Limited(1 + (seed % 4) as u32);
        p.d_uct = p.d_tree;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut search = Mcts::new(&model, &root(), p, &mut rng).unwrap();
        let mut log: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
        for _ in 0..60 {
            let (sim, g) = search.simulate(&mut rng).unwrap();
            for (e, g) in sim.path.iter().zip(g) {
                log.entry(*e).or_default().push(g);
            }
        }
        let tree = search.tree();
        assert!(tree.len() <= 61);
        for ((node, action), gs) in &log {
            let e = &tree.node(*node).edges[*action];
            let mean = gs.iter().sum::<f64>() / gs.len() as f64;
            assert_eq!(e.visits as usize, gs.len());
            assert!((e.q - mean).abs() < 1e-12);
        }
    }
}

#[test]
fn bandit_search_prefers_better_arm() {
    let env = TreeMdp::bandit(vec![1.0, 0.0]);
    let model = SimulatorModel::new(
        UniformPrior {
            num_actions: 2,
            value: 0.0,
        },
        2,
    );
    let obs = env.observation();
    let r = run_mcts(
        &model,
        &RootInput {
            observation: &obs,
            env: Some(&env),
            seed: 0,
        },
        &params(200),
        &mut ChaCha8Rng::seed_from_u64(0),
    )
    .unwrap();
    assert!(r.policy[0] > 0.9, "{:?}", r.policy);
}

#[test]
fn golden_tree_dump() {
    let env = TreeMdp::bandit(vec![1.0, 0.0]);
    let model = SimulatorModel::new(
        UniformPrior {
            num_actions: 2,
            value: 0.0,
        },
        2,
    );
    let obs = env.observation();
    let mut p = params(3);
    p.gamma = 1.0;
    let root = RootInput {
        observation: &obs,
        env: Some(&env),
        seed: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut search = Mcts::new(&model, &root, p, &mut rng).unwrap();
    for _ in 0..3 {
        search.simulate(&mut rng).unwrap();
    }
    let expected = "\
depth\tpath\tvisits\tq\tprior\treward
0\t0\t3\t1.000000\t0.500000\t1.000000
0\t1\t0\t0.000000\t0.500000\t0.000000
1\t0.0\t0\t0.000000\t0.500000\t0.000000
1\t0.1\t0\t0.000000\t0.500000\t0.000000
";
    assert_eq!(dump_tree(search.tree()), expected);
}

#[test]
fn invalid_search_settings_are_rejected() {
    let model = PathModel { actions: 2, salt: 0 };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(
        run_mcts(&model, &root(), &params(0), &mut rng).unwrap_err(),
        SearchError::ZeroBudget
    );
    let mut p = params(5);
    p.d_tree = Depth::Limited(1);
    p.d_uct = Depth::Limited(2);
    assert!(matches!(
        run_mcts(&model, &root(), &p, &mut rng),
        Err(SearchError::BadDepth { .. })
    ));
    let mut env = TreeMdp::bandit(vec![1.0]);
    env.step(0).unwrap();
    let sim = SimulatorModel::new(
        UniformPrior {
            num_actions: 1,
            value: 0.0,
        },
        1,
    );
    let obs = env.observation();
    let root = RootInput {
        observation: &obs,
        env: Some(&env),
        seed: 0,
    };
    assert_eq!(
        run_mcts(&sim, &root, &params(5), &mut rng).unwrap_err(),
        SearchError::TerminalRoot
    );
    assert_eq!(
        bfs_plan(&model, &RootInput::observation_only(&OBS), 0, 0.9, true).unwrap_err(),
        SearchError::ZeroBudget
    );
}

#[test]
fn bfs_single_action() {
    let model = PathModel { actions: 1, salt: 2 };
    let r = bfs_plan(&model, &root(), 5, 0.9, true).unwrap();
    assert_eq!(r.action, 0);
    assert_eq!(r.expansions, 5);
}

#[test]
fn bfs_root_fan_uses_one_step_lookahead() {
    for salt in 0..20 {
        let model = PathModel { actions: 3, salt };
        let r = bfs_plan(&model, &root(), 3, 0.9, true).unwrap();
        let q: Vec<f64> = (0..3)
            .map(|a| {
                let out = model.recurrent_inference(&latent(), a).unwrap();
                out.reward + 0.9 * out.value
            })
            .collect();
        for a in 0..3 {
            assert_eq!(r.root_q[a], Some(q[a]));
        }
        assert_eq!(Some(r.action), mzplan_core::scalar::argmax(&q));
    }
}

fn brute_force(model: &PathModel, path: Vec<f64>, depth: usize, gamma: f64) -> f64 {
    let state = HiddenState::Latent(path);
    (0..model.actions)
        .map(|a| {
            let out = model.recurrent_inference(&state, a).unwrap();
            let next = if depth == 1 {
                out.value
            } else {
                let HiddenState::Latent(p) = out.next_state else { unreachable!() };
                brute_force(model, p, depth - 1, gamma)
            };
            out.reward + gamma * next
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn bfs_full_two_level_tree_matches_enumeration() {
    for salt in 0..20 {
        let model = PathModel { actions: 2, salt };
        let r = bfs_plan(&model, &root(), 6, 0.9, true).unwrap();
        for a in 0..2 {
            let out = model.recurrent_inference(&latent(), a).unwrap();
            let HiddenState::Latent(p) = out.next_state else { unreachable!() };
            let expect = out.reward + 0.9 * brute_force(&model, p, 1, 0.9);
            assert_eq!(r.root_q[a], Some(expect));
        }
    }
}

#[test]
fn bfs_without_discount() {
    let model = PathModel { actions: 2, salt: 1 };
    let r = bfs_plan(&model, &root(), 2, 0.5, false).unwrap();
    let out = model.recurrent_inference(&latent(), 1).unwrap();
    assert_eq!(r.root_q[1], Some(out.reward + out.value));
}

#[test]
fn searches_are_reproducible() {
    let model = PathModel { actions: 3, salt: 8 };
    let mut p = params(50);
    p.dirichlet = Some((0.3, 0.25));
    p.d_uct = Depth::Limited(2);
    let a = run_mcts(&model, &root(), &p, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let b = run_mcts(&model, &root(), &p, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    assert_eq!(a.root_visits, b.root_visits);
    assert_eq!(a.root_q, b.root_q);
}
