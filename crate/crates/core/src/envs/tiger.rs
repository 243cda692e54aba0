//! The Tiger problem.
//!
//! Two doors, a tiger behind one. Listening costs 1 and reports the tiger's
//! side correctly with probability `listen_accuracy`. Opening the door
//! without the tiger pays +10, the other door -100; either way the tiger is
//! then placed uniformly at random again and the episode continues.

use crate::error::Result;

use super::{PomdpSpec, PromotedReward, PromotionMode, RewardObservationMap, SpecTables, Transition};

pub const TIGER_LEFT: usize = 0;
pub const TIGER_RIGHT: usize = 1;

pub const LISTEN: usize = 0;
pub const OPEN_LEFT: usize = 1;
pub const OPEN_RIGHT: usize = 2;

pub const HEAR_LEFT: usize = 0;
pub const HEAR_RIGHT: usize = 1;

pub fn tiger(listen_accuracy: f64, discount: f64) -> Result<(PomdpSpec, RewardObservationMap)> {
    let n_states = 2;
    let n_actions = 3;
    let mut transitions = Vec::with_capacity(n_states * n_actions);
    for s in 0..n_states {
        for a in 0..n_actions {
            let row = match a {
                LISTEN => vec![Transition {
                    next: s,
                    prob: 1.0,
                    reward: 0.0,
                }],
                _ => {
                    let opened_tiger = (a == OPEN_LEFT && s == TIGER_LEFT)
                        || (a == OPEN_RIGHT && s == TIGER_RIGHT);
                    let reward = if opened_tiger { -100.0 } else { 10.0 };
                    (0..n_states)
                        .map(|next| Transition {
                            next,
                            prob: 0.5,
                            reward,
                        })
                        .collect()
                }
            };
            transitions.push(row);
        }
    }
    let mut observations = Vec::with_capacity(n_actions * n_states);
    for a in 0..n_actions {
        for next in 0..n_states {
            observations.push(if a == LISTEN {
                let correct = if next == TIGER_LEFT { HEAR_LEFT } else { HEAR_RIGHT };
                vec![(correct, listen_accuracy), (1 - correct, 1.0 - listen_accuracy)]
            } else {
                vec![(HEAR_LEFT, 0.5), (HEAR_RIGHT, 0.5)]
            });
        }
    }
    let spec = PomdpSpec::new(SpecTables {
        name: "tiger".into(),
        state_names: vec!["tiger-left".into(), "tiger-right".into()],
        action_names: vec!["listen".into(), "open-left".into(), "open-right".into()],
        obs_names: vec!["hear-left".into(), "hear-right".into()],
        transitions,
        observations,
        action_cost: vec![-1.0, 0.0, 0.0],
        initial: vec![0.5, 0.5],
        terminal: vec![false, false],
        discount,
    })?;
    let map = RewardObservationMap::new(
        &spec,
        PromotionMode::Replace,
        vec![
            PromotedReward {
                value: 10.0,
                label: "r+10".into(),
            },
            PromotedReward {
                value: -100.0,
                label: "r-100".into(),
            },
        ],
        &[],
    )?;
    Ok((spec, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{belief_update, exact_obs_prob, step, Belief, DomainConfig, HiddenState};
    use crate::rng::rng_from;

    #[test]
    fn door_rewards() {
        let env = DomainConfig::tiger().build().unwrap();
        let mut rng = rng_from(1, &[]);
        let good = step(&env.spec, HiddenState(TIGER_LEFT), OPEN_RIGHT, &mut rng).unwrap();
        assert_eq!(good.reward, 10.0);
        let bad = step(&env.spec, HiddenState(TIGER_LEFT), OPEN_LEFT, &mut rng).unwrap();
        assert_eq!(bad.reward, -100.0);
        let listen = step(&env.spec, HiddenState(TIGER_RIGHT), LISTEN, &mut rng).unwrap();
        assert_eq!(listen.reward, -1.0);
        assert_eq!(listen.next, HiddenState(TIGER_RIGHT));
    }

    #[test]
    fn listen_posterior_by_hand() {
        let env = DomainConfig::tiger().build().unwrap();
        let b = belief_update(&env.spec, &env.spec.initial_belief(), LISTEN, HEAR_LEFT).unwrap();
        // 0.5*0.85 / (0.5*0.85 + 0.5*0.15)
        assert!((b.probs[0] - 0.85).abs() < 1e-12);
        assert!((b.probs[1] - 0.15).abs() < 1e-12);
        let p = exact_obs_prob(&env.spec, &env.spec.initial_belief(), LISTEN).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
        let p = exact_obs_prob(&env.spec, &b, LISTEN).unwrap();
        // 0.85*0.85 + 0.15*0.15
        assert!((p[0] - 0.745).abs() < 1e-12);
        assert!((p[1] - 0.255).abs() < 1e-12);
    }

    #[test]
    fn reset_is_uniform() {
        let env = DomainConfig::tiger().build().unwrap();
        let left = (0..10_000u64)
            .filter(|&s| crate::envs::reset(&env.spec, s) == HiddenState(TIGER_LEFT))
            .count();
        assert!((left as f64 / 10_000.0 - 0.5).abs() < 0.02);
    }

    #[test]
    fn door_rewards_are_promoted() {
        let env = DomainConfig::tiger().build().unwrap();
        let names = env.alphabet().obs_names;
        assert_eq!(names, vec!["hear-left", "hear-right", "r+10", "r-100"]);
        let m = &env.reward_map;
        assert_eq!(m.augment(OPEN_LEFT, HEAR_RIGHT, 10.0).unwrap(), 2);
        assert_eq!(m.augment(LISTEN, HEAR_RIGHT, 0.0).unwrap(), HEAR_RIGHT);
        assert_eq!(m.reward(OPEN_LEFT, 3), -100.0);
        assert_eq!(m.reward(LISTEN, HEAR_LEFT), -1.0);
        assert!(!m.is_terminal(OPEN_LEFT, 2));
        let _ = Belief::point(2, 0);
    }
}
