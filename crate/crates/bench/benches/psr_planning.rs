use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use psrplan_bench::{estimates, learned, posyadmin3, tiger};
use psrplan_core::planner::{act_search, PlannerConfig, PsrSimulator, SearchCounters, SearchTree};
use psrplan_core::psr::{learn, RankRule};
use psrplan_core::rng::rng_from;

fn state_updates(c: &mut Criterion) {
    for (name, env, rank) in [("tiger", tiger(), RankRule::Gap(1e-6)), ("posyadmin3", posyadmin3(), RankRule::Fixed(20))] {
        let model = learned(&env, 200, 8, rank);
        let b = model.initial_state();
        let (a, o) = (0, model.seen_obs(0)[0]);
        c.bench_function(&format!("{name}/obs_distribution"), |bench| {
            bench.iter(|| model.obs_distribution(black_box(&b), a).unwrap())
        });
        c.bench_function(&format!("{name}/update_state"), |bench| {
            bench.iter(|| model.update_state(black_box(&b), a, o).unwrap())
        });
    }
}

fn learning(c: &mut Criterion) {
    let env = tiger();
    let est = estimates(&env, 200, 6);
    c.bench_function("tiger/learn", |bench| bench.iter(|| learn(black_box(&est), RankRule::Gap(1e-6)).unwrap()));
}

fn search(c: &mut Criterion) {
    let env = tiger();
    let model = learned(&env, 200, 6, RankRule::Gap(1e-6));
    let sim = PsrSimulator {
        model: &model,
        rewards: &env.reward_map,
    };
    let cfg = PlannerConfig {
        n_sims: 1000,
        max_depth: env.max_steps,
        c: 110.0,
        gamma: 0.95,
    };
    let b = model.initial_state();
    c.bench_function("tiger/act_search_1000", |bench| {
        let mut rng = rng_from(3, &[]);
        bench.iter(|| {
            let mut tree = SearchTree::new(model.alphabet().n_actions());
            act_search(&sim, &mut tree, |_| b.clone(), &cfg, &mut SearchCounters::default(), &mut rng)
        })
    });
}

criterion_group!(benches, state_updates, learning, search);
criterion_main!(benches);
