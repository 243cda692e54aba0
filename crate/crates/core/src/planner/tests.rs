use std::collections::HashMap;

use super::*;
use crate::envs::chain::{chain, chain_start_values, ADVANCE, STAY};
use crate::envs::{sample_initial, sequence_probability, DomainConfig};
use crate::psr::{exact_model, RankRule};
use crate::rng::rng_from;
use crate::ActObs;

fn cfg(n_sims: usize, max_depth: usize, c: f64) -> PlannerConfig {
    PlannerConfig {
        n_sims,
        max_depth,
        c,
        gamma: 0.95,
    }
}

fn search_chain(immediate: f64, later: f64, n_sims: usize, seed: u64) -> (usize, SearchTree) {
    let env = chain(immediate, later, 0.95, 10).unwrap();
    let model = exact_model(&env, 2, RankRule::Relative(1e-9)).unwrap();
    let sim = PsrSimulator {
        model: &model,
        rewards: &env.reward_map,
    };
    let mut tree = SearchTree::new(2);
    let b = model.initial_state();
    let c = (immediate.max(later)).max(1.0);
    let mut counters = SearchCounters::default();
    let a = act_search(
        &sim,
        &mut tree,
        |_| b.clone(),
        &cfg(n_sims, 10, c),
        &mut counters,
        &mut rng_from(seed, &[]),
    );
    assert_eq!(counters, SearchCounters::default());
    (a, tree)
}

#[test]
fn immediate_reward_chain_picks_the_paying_action() {
    for seed in 0..10 {
        assert_eq!(search_chain(1.0, 0.0, 50, seed).0, STAY);
    }
}

#[test]
fn delayed_reward_chain_matches_brute_force() {
    let q = chain_start_values(1.0, 2.0, 0.95, 10);
    let best = if q[ADVANCE] > q[STAY] { ADVANCE } else { STAY };
    assert_eq!(best, ADVANCE);
    for seed in 0..10 {
        assert_eq!(search_chain(1.0, 2.0, 500, seed).0, best, "seed {seed}");
    }
}

#[test]
fn root_counts_add_up() {
    let (_, tree) = search_chain(1.0, 2.0, 300, 1);
    let root = tree.root();
    assert_eq!(root.visits, 300);
    assert_eq!(root.actions.iter().map(|s| s.visits).sum::<u64>(), 300);
}

#[test]
fn single_simulation_returns_the_tried_action() {
    let (a, tree) = search_chain(1.0, 2.0, 1, 7);
    assert_eq!(tree.root().actions[a].visits, 1);
}

fn tiger_search(n_sims: usize, seed: u64) -> (usize, SearchTree) {
    let env = DomainConfig::tiger().build().unwrap();
    let model = exact_model(&env, 2, RankRule::Fixed(2)).unwrap();
    let sim = PsrSimulator {
        model: &model,
        rewards: &env.reward_map,
    };
    let mut tree = SearchTree::new(3);
    let b = model.initial_state();
    let a = act_search(
        &sim,
        &mut tree,
        |_| b.clone(),
        &cfg(n_sims, 20, 110.0),
        &mut SearchCounters::default(),
        &mut rng_from(seed, &[]),
    );
    (a, tree)
}

#[test]
fn search_is_deterministic_and_values_are_bounded() {
    let (a, t) = tiger_search(500, 3);
    let (b, u) = tiger_search(500, 3);
    assert_eq!(a, b);
    assert_eq!(t, u);
    // Rewards lie in [-100, 10].
    let (lo, hi) = (-100.0 / 0.05, 10.0 / 0.05);
    for id in 0..t.len() {
        for s in &t.node(id).actions {
            assert!(s.value.is_finite() && s.value >= lo && s.value <= hi);
        }
        let n = t.node(id);
        assert_eq!(n.visits, n.actions.iter().map(|s| s.visits).sum::<u64>());
    }
}

#[test]
fn tiger_search_listens_first() {
    // With a uniform belief, opening a door is worth -45 on average.
    let (a, _) = tiger_search(1000, 5);
    assert_eq!(a, crate::envs::tiger::LISTEN);
}

#[test]
fn rollout_base_cases() {
    let mut c = SearchCounters::default();
    let mut rng = rng_from(0, &[]);
    let zero = chain(0.0, 0.0, 0.95, 10).unwrap();
    let model = exact_model(&zero, 2, RankRule::Relative(1e-9)).unwrap();
    let sim = PsrSimulator {
        model: &model,
        rewards: &zero.reward_map,
    };
    for _ in 0..20 {
        assert_eq!(rollout(&sim, &model.initial_state(), 0, &cfg(1, 10, 1.0), &mut c, &mut rng), 0.0);
    }

    let env = chain(1.0, 0.0, 0.95, 10).unwrap();
    let model = exact_model(&env, 2, RankRule::Relative(1e-9)).unwrap();
    let sim = PsrSimulator {
        model: &model,
        rewards: &env.reward_map,
    };
    let b = model.initial_state();
    assert_eq!(rollout(&sim, &b, 10, &cfg(1, 10, 1.0), &mut c, &mut rng), 0.0);
    let r = rollout(&sim, &b, 9, &cfg(1, 10, 1.0), &mut c, &mut rng);
    assert!(r == 0.0 || r == 1.0);
}

#[test]
fn tiger_rollouts_lose_on_average() {
    let env = DomainConfig::tiger().build().unwrap();
    let model = exact_model(&env, 2, RankRule::Fixed(2)).unwrap();
    let sim = PsrSimulator {
        model: &model,
        rewards: &env.reward_map,
    };
    let mut c = SearchCounters::default();
    let mut rng = rng_from(1, &[]);
    let b = model.initial_state();
    let n = 2000;
    let mean = (0..n)
        .map(|_| rollout(&sim, &b, 0, &cfg(1, 20, 1.0), &mut c, &mut rng))
        .sum::<f64>()
        / n as f64;
    assert!(mean < 0.0, "{mean}");
}

/// Histories of length 3 under uniform actions. The action stream depends
/// only on the draw index, so two models see the same action sequences.
fn history_counts<M: SimModel>(m: &M, start: impl Fn(&mut SimRng) -> M::State, n: usize, seed: u64) -> HashMap<Vec<ActObs>, usize> {
    let mut rng = rng_from(seed, &[]);
    let mut policy = rng_from(0, &[]);
    let mut out = HashMap::new();
    for _ in 0..n {
        let mut s = start(&mut rng);
        let mut h = Vec::with_capacity(3);
        for _ in 0..3 {
            let a = policy.random_range(0..m.n_actions());
            match m.step(&s, a, &mut rng) {
                SimStep::Next { state, obs, .. } => {
                    h.push(ActObs::new(a, obs));
                    s = state;
                }
                SimStep::Aborted => panic!("exact model aborted"),
            }
        }
        *out.entry(h).or_insert(0) += 1;
    }
    out
}

/// Total variation against the exact length-3 distribution, and the expected
/// value of that distance for an `n`-sample draw from the exact law.
fn tv_against_exact(env: &crate::envs::Environment, counts: &HashMap<Vec<ActObs>, usize>, n: usize) -> (f64, f64) {
    let pairs: Vec<ActObs> = env.alphabet().pairs().collect();
    let n_actions = env.alphabet().n_actions() as f64;
    let mut tv = 0.0;
    let mut floor = 0.0;
    let mut seen = 0;
    for seq in crate::data::all_sequences(&pairs, 3).into_iter().filter(|s| s.len() == 3) {
        let p = sequence_probability(env, &seq) / n_actions.powi(3);
        let c = counts.get(&seq).copied().unwrap_or(0);
        seen += c;
        tv += (c as f64 / n as f64 - p).abs();
        floor += (p * (1.0 - p) / (2.0 * std::f64::consts::PI * n as f64)).sqrt();
    }
    assert_eq!(seen, n, "sampled a history outside the alphabet");
    (tv / 2.0, floor)
}

#[test]
fn exact_psr_rollouts_match_the_true_simulator() {
    let env = DomainConfig::tiger().build().unwrap();
    let model = exact_model(&env, 2, RankRule::Fixed(2)).unwrap();
    let n = 20_000;
    let psr = history_counts(
        &PsrSimulator {
            model: &model,
            rewards: &env.reward_map,
        },
        |_| model.initial_state(),
        n,
        1,
    );
    let truth = history_counts(&TrueSimulator { env: &env }, |r| sample_initial(&env.spec, r), n, 2);
    for counts in [&psr, &truth] {
        let (tv, floor) = tv_against_exact(&env, counts, n);
        assert!(tv < 1.25 * floor, "tv {tv} noise floor {floor}");
    }
}

#[test]
fn random_tiger_loses() {
    let env = DomainConfig::tiger().build().unwrap();
    let n = 300;
    let mean: f64 = (0..n)
        .map(|i| {
            random_baseline(&env, &mut rng_from(i, &[0]), &mut rng_from(i, &[1]))
                .unwrap()
                .return_undiscounted()
        })
        .sum::<f64>()
        / n as f64;
    assert!(mean < 0.0, "{mean}");
}

#[test]
fn random_posyadmin_is_no_better_than_doing_nothing() {
    let env = DomainConfig::posyadmin(3).build().unwrap();
    let n = 1000;
    let mut random = 0.0;
    let mut idle = 0.0;
    for i in 0..n {
        random += random_baseline(&env, &mut rng_from(i, &[0]), &mut rng_from(i, &[1]))
            .unwrap()
            .return_undiscounted();
        let mut rng = rng_from(i, &[0]);
        let mut s = sample_initial(&env.spec, &mut rng);
        for _ in 0..env.max_steps() {
            let (out, _) = env.step_augmented(s, crate::envs::posyadmin::DO_NOTHING, &mut rng).unwrap();
            idle += out.reward;
            s = out.next;
        }
    }
    assert!(random <= idle, "{} > {}", random / n as f64, idle / n as f64);
}

#[test]
fn pomcp_beats_random_on_tiger() {
    let env = DomainConfig::tiger().build().unwrap();
    let n = 100;
    let c = cfg(500, 20, 110.0);
    let (mut pomcp, mut random) = (0.0, 0.0);
    for i in 0..n {
        pomcp += pomcp_baseline(&env, &c, &mut rng_from(i, &[0]), &mut rng_from(i, &[2]))
            .unwrap()
            .return_undiscounted();
        random += random_baseline(&env, &mut rng_from(i, &[0]), &mut rng_from(i, &[1]))
            .unwrap()
            .return_undiscounted();
    }
    assert!(pomcp > random + 20.0 * n as f64, "{pomcp} vs {random}");
}

#[test]
fn psr_episode_is_deterministic_and_bounded() {
    let env = DomainConfig::tiger().build().unwrap();
    let model = exact_model(&env, 2, RankRule::Fixed(2)).unwrap();
    let c = cfg(200, 20, 110.0);
    let run = || plan_episode(&model, &env, &c, &mut rng_from(4, &[0]), &mut rng_from(4, &[1])).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.steps.len(), 20);
    assert_eq!(
        a.steps.iter().map(|s| (s.action, s.obs, s.reward)).collect::<Vec<_>>(),
        b.steps.iter().map(|s| (s.action, s.obs, s.reward)).collect::<Vec<_>>()
    );
    assert_eq!(a.reset_count, 0);
    assert!(a.mean_action_seconds() > 0.0);
}

#[test]
fn rocksample_episode_stops_at_exit() {
    let env = DomainConfig::rocksample(3, 2).build().unwrap();
    let c = cfg(200, 30, 20.0);
    for i in 0..5 {
        let r = pomcp_baseline(&env, &c, &mut rng_from(i, &[0]), &mut rng_from(i, &[1])).unwrap();
        assert!(r.steps.len() <= 30);
        if let Some(last) = r.steps.last() {
            if r.steps.len() < 30 {
                assert_eq!(last.action, crate::envs::rocksample::EAST);
            }
        }
    }
}

#[test]
fn config_validation() {
    assert!(cfg(0, 5, 1.0).validate().is_err());
    assert!(cfg(1, 0, 1.0).validate().is_err());
    assert!(cfg(1, 5, -1.0).validate().is_err());
    assert!(cfg(1, 5, 1.0).validate().is_ok());
}

#[test]
fn episode_returns() {
    let rec = EpisodeRecord {
        steps: [1.0, 2.0]
            .iter()
            .map(|&reward| StepRecord {
                action: 0,
                obs: 0,
                reward,
                seconds: 0.5,
            })
            .collect(),
        ..EpisodeRecord::default()
    };
    assert_eq!(rec.return_undiscounted(), 3.0);
    assert_eq!(rec.return_discounted(0.5), 2.0);
    assert_eq!(rec.mean_action_seconds(), 0.5);
}
