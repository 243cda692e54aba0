//! Exact-model oracles over the augmented observation alphabet.
//!
//! All sequence probabilities here are action-conditioned,
//! Pr[o_1..o_n || a_1..a_n], computed by forward propagation of an
//! unnormalized state distribution. Mass that has reached a terminal state
//! cannot emit further observations.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::alphabet::ActObs;
use crate::data::{HankelEstimates, PairEstimate, SampleCounts, TestHistorySets};
use crate::error::Result;

use super::{Belief, Environment, PomdpSpec, RewardObservationMap};

/// Pr[symbol | a, s', state reward] under the augmented emission.
pub fn aug_obs_likelihood(
    spec: &PomdpSpec,
    map: &RewardObservationMap,
    action: usize,
    next: usize,
    state_reward: f64,
    symbol: usize,
) -> f64 {
    spec.observations(action, next)
        .iter()
        .filter(|&&(o, _)| map.augment(action, o, state_reward).ok() == Some(symbol))
        .map(|&(_, q)| q)
        .sum()
}

/// One forward step: α'(s') = Σ_s α(s) T(s,a,s') Pr[o | a, s', r(s,a,s')].
fn propagate(env: &Environment, alpha: &[f64], step: ActObs) -> Vec<f64> {
    let spec = &env.spec;
    let mut next = vec![0.0; spec.n_states()];
    for (s, &p) in alpha.iter().enumerate() {
        if p == 0.0 || spec.is_terminal(s) {
            continue;
        }
        for e in spec.transitions(s, step.action) {
            let lik = aug_obs_likelihood(spec, &env.reward_map, step.action, e.next, e.reward, step.obs);
            next[e.next] += p * e.prob * lik;
        }
    }
    next
}

fn propagate_seq(env: &Environment, alpha: &[f64], seq: &[ActObs]) -> Vec<f64> {
    let mut cur = alpha.to_vec();
    for &st in seq {
        cur = propagate(env, &cur, st);
    }
    cur
}

/// Exact joint probability Pr[o_1..o_n || a_1..a_n] from the initial belief.
pub fn sequence_probability(env: &Environment, seq: &[ActObs]) -> f64 {
    propagate_seq(env, &env.spec.initial_belief().probs, seq).iter().sum()
}

/// Posterior over hidden states after observing an augmented symbol.
pub fn belief_update_augmented(env: &Environment, belief: &Belief, action: usize, symbol: usize) -> Result<Belief> {
    Belief::normalized(propagate(env, &belief.probs, ActObs::new(action, symbol)))
}

/// Pr[symbol | belief, a] over the augmented alphabet.
pub fn exact_aug_obs_prob(env: &Environment, belief: &Belief, action: usize) -> Vec<f64> {
    let spec = &env.spec;
    let map = &env.reward_map;
    let mut out = vec![0.0; map.n_symbols()];
    for (s, &p) in belief.probs.iter().enumerate() {
        if p == 0.0 || spec.is_terminal(s) {
            continue;
        }
        for e in spec.transitions(s, action) {
            for &(o, q) in spec.observations(action, e.next) {
                if let Ok(sym) = map.augment(action, o, e.reward) {
                    out[sym] += p * e.prob * q;
                }
            }
        }
    }
    out
}

/// Analytic Hankel matrices for the given index sets.
pub fn exact_hankel(env: &Environment, sets: &TestHistorySets) -> HankelEstimates {
    let alphabet = &sets.alphabet;
    let nt = sets.tests.len();
    let nh = sets.histories.len();
    let mut p_h = DVector::zeros(nh);
    let mut p_th = DMatrix::zeros(nt, nh);
    let mut pair_mats: Vec<Option<DMatrix<f64>>> = vec![None; alphabet.n_pairs()];
    for &p in &sets.pairs {
        pair_mats[alphabet.pair_index(p)] = Some(DMatrix::zeros(nt, nh));
    }
    let init = env.spec.initial_belief().probs;

    for (j, h) in sets.histories.iter().enumerate() {
        let alpha_h = propagate_seq(env, &init, h);
        p_h[j] = alpha_h.iter().sum();
        if p_h[j] == 0.0 {
            continue;
        }
        fill_tests(env, &alpha_h, &sets.tests, |t, v| p_th[(t, j)] = v);
        for &p in &sets.pairs {
            let alpha_hao = propagate(env, &alpha_h, p);
            if alpha_hao.iter().all(|&v| v == 0.0) {
                continue;
            }
            let m = pair_mats[alphabet.pair_index(p)].as_mut().expect("allocated above");
            fill_tests(env, &alpha_hao, &sets.tests, |t, v| m[(t, j)] = v);
        }
    }

    let p_t_ao_h = pair_mats
        .into_iter()
        .map(|m| m.map_or(PairEstimate::Absent, PairEstimate::from_matrix))
        .collect();
    HankelEstimates {
        sets: sets.clone(),
        p_h,
        p_th,
        p_t_ao_h,
        counts: SampleCounts {
            history_samples: vec![0; nh],
            history_attempts: vec![0; nh],
        },
    }
}

fn fill_tests(env: &Environment, alpha: &[f64], tests: &[Vec<ActObs>], mut put: impl FnMut(usize, f64)) {
    // Tests share first steps; cache them.
    let mut first: HashMap<ActObs, Vec<f64>> = HashMap::new();
    for (i, t) in tests.iter().enumerate() {
        let Some((&head, tail)) = t.split_first() else {
            put(i, alpha.iter().sum());
            continue;
        };
        let after = first.entry(head).or_insert_with(|| propagate(env, alpha, head));
        let v: f64 = if tail.is_empty() {
            after.iter().sum()
        } else {
            propagate_seq(env, after, tail).iter().sum()
        };
        put(i, v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{tiger::*, DomainConfig};

    #[test]
    fn augmented_distribution_sums_to_one() {
        for cfg in [DomainConfig::tiger(), DomainConfig::posyadmin(3), DomainConfig::rocksample(3, 2)] {
            let env = cfg.build().unwrap();
            let b = env.spec.initial_belief();
            for a in 0..env.spec.n_actions() {
                let p = exact_aug_obs_prob(&env, &b, a);
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tiger_sequence_probabilities() {
        let env = DomainConfig::tiger().build().unwrap();
        assert_eq!(sequence_probability(&env, &[]), 1.0);
        let p = sequence_probability(&env, &[ActObs::new(LISTEN, HEAR_LEFT)]);
        assert!((p - 0.5).abs() < 1e-15);
        // Listening never yields a door reward.
        assert_eq!(sequence_probability(&env, &[ActObs::new(LISTEN, 2)]), 0.0);
        let p = sequence_probability(&env, &[ActObs::new(OPEN_LEFT, 2)]);
        assert!((p - 0.5).abs() < 1e-15);
    }
}
