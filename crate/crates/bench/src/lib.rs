//! Shared fixtures for the benchmarks.

use psrplan_core::data::{build_test_history_sets, estimate_hankel, generate_trajectories, HankelEstimates, SetOptions};
use psrplan_core::envs::{DomainConfig, Environment};
use psrplan_core::psr::{learn, PsrModel, RankRule};

pub fn tiger() -> Environment {
    DomainConfig::tiger().build().expect("tiger builds")
}

pub fn posyadmin3() -> Environment {
    DomainConfig::posyadmin(3).build().expect("posyadmin builds")
}

/// Hankel estimates from a small fixed corpus.
pub fn estimates(env: &Environment, trajectories: usize, length: usize) -> HankelEstimates {
    let corpus = generate_trajectories(env, trajectories, length, 1).expect("corpus");
    let sets = build_test_history_sets(&corpus, &env.alphabet(), &SetOptions::default()).expect("sets");
    estimate_hankel(env, &sets, 20, 1).expect("estimates")
}

pub fn learned(env: &Environment, trajectories: usize, length: usize, rank: RankRule) -> PsrModel {
    learn(&estimates(env, trajectories, length), rank).expect("model")
}
