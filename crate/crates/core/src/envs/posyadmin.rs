//! Partially observable sysadmin.
//!
//! A network of `n` computers, each working or failing. Every step each
//! working computer independently fails with probability `fail_prob`; a
//! computer being rebooted is working after the step. Actions are
//! do-nothing, ping i (cost 1, reveals computer i) and reboot i (cost 20).
//! Each failing computer costs 10 per step, assessed on the state in which
//! the action is taken; that status cost is promoted into the observation as
//! the number of failing computers.

use crate::error::{Error, Result};

use super::{PomdpSpec, PromotedReward, PromotionMode, RewardObservationMap, SpecTables, Transition};

pub const DO_NOTHING: usize = 0;
pub const NULL: usize = 0;
pub const FAILING: usize = 1;
pub const WORKING: usize = 2;

pub const PING_COST: f64 = -1.0;
pub const REBOOT_COST: f64 = -20.0;
pub const FAILING_COST: f64 = -10.0;

pub fn ping(i: usize) -> usize {
    1 + i
}

pub fn reboot(n: usize, i: usize) -> usize {
    1 + n + i
}

pub fn posyadmin(
    n: usize,
    fail_prob: f64,
    discount: f64,
) -> Result<(PomdpSpec, RewardObservationMap)> {
    if n == 0 || n > 12 {
        return Err(Error::InvalidSpec(format!("POSyadmin supports 1..=12 computers, got {n}")));
    }
    if !(0.0..=1.0).contains(&fail_prob) {
        return Err(Error::InvalidSpec(format!("failure probability {fail_prob}")));
    }
    let n_states = 1usize << n;
    let n_actions = 2 * n + 1;
    let rebooted = |a: usize| (a > n).then(|| a - n - 1);

    let mut transitions = Vec::with_capacity(n_states * n_actions);
    for s in 0..n_states {
        let status_cost = FAILING_COST * s.count_ones() as f64;
        for a in 0..n_actions {
            let mut base = s;
            let mut exempt = 0usize;
            if let Some(i) = rebooted(a) {
                base &= !(1 << i);
                exempt = 1 << i;
            }
            let candidates: Vec<usize> = (0..n)
                .filter(|&i| base & (1 << i) == 0 && exempt & (1 << i) == 0)
                .collect();
            let m = candidates.len();
            let mut row = Vec::with_capacity(1 << m);
            for subset in 0..(1usize << m) {
                let mut next = base;
                let mut prob = 1.0;
                for (j, &i) in candidates.iter().enumerate() {
                    if subset & (1 << j) != 0 {
                        next |= 1 << i;
                        prob *= fail_prob;
                    } else {
                        prob *= 1.0 - fail_prob;
                    }
                }
                if prob > 0.0 {
                    row.push(Transition {
                        next,
                        prob,
                        reward: status_cost,
                    });
                }
            }
            transitions.push(row);
        }
    }
    let mut observations = Vec::with_capacity(n_actions * n_states);
    for a in 0..n_actions {
        for next in 0..n_states {
            let obs = if (1..=n).contains(&a) {
                if next & (1 << (a - 1)) != 0 {
                    FAILING
                } else {
                    WORKING
                }
            } else {
                NULL
            };
            observations.push(vec![(obs, 1.0)]);
        }
    }
    let mut action_names = vec!["do-nothing".to_string()];
    action_names.extend((0..n).map(|i| format!("ping{i}")));
    action_names.extend((0..n).map(|i| format!("reboot{i}")));
    let mut action_cost = vec![0.0];
    action_cost.extend(std::iter::repeat(PING_COST).take(n));
    action_cost.extend(std::iter::repeat(REBOOT_COST).take(n));
    let mut initial = vec![0.0; n_states];
    initial[0] = 1.0;

    let spec = PomdpSpec::new(SpecTables {
        name: format!("posyadmin({n})"),
        state_names: (0..n_states).map(|s| format!("{s:0n$b}")).collect(),
        action_names,
        obs_names: vec!["null".into(), "failing".into(), "working".into()],
        transitions,
        observations,
        action_cost,
        initial,
        terminal: vec![false; n_states],
        discount,
    })?;
    let promoted = (0..=n)
        .map(|c| PromotedReward {
            value: FAILING_COST * c as f64,
            label: format!("c{c}"),
        })
        .collect();
    let map = RewardObservationMap::new(&spec, PromotionMode::Attach, promoted, &[])?;
    Ok((spec, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{belief_update, step, Belief, DomainConfig, HiddenState};
    use crate::rng::rng_from;

    #[test]
    fn ping_costs_one() {
        let env = DomainConfig::posyadmin(3).build().unwrap();
        let mut rng = rng_from(3, &[]);
        for i in 0..3 {
            let out = step(&env.spec, HiddenState(0), ping(i), &mut rng).unwrap();
            assert_eq!(out.reward, -1.0);
        }
        let out = step(&env.spec, HiddenState(0b011), reboot(3, 0), &mut rng).unwrap();
        assert_eq!(out.reward, -20.0 - 20.0);
        assert_eq!(out.next.0 & 1, 0);
    }

    #[test]
    fn starts_all_working() {
        let env = DomainConfig::posyadmin(3).build().unwrap();
        assert_eq!(env.spec.initial_belief().probs[0], 1.0);
        for seed in 0..50 {
            assert_eq!(crate::envs::reset(&env.spec, seed), HiddenState(0));
        }
    }

    #[test]
    fn do_nothing_applies_failure_dynamics_only() {
        let env = DomainConfig::posyadmin(3).build().unwrap();
        let f: f64 = 0.1;
        let belief = Belief {
            probs: vec![0.3, 0.1, 0.05, 0.05, 0.2, 0.1, 0.15, 0.05],
        };
        let got = belief_update(&env.spec, &belief, DO_NOTHING, NULL).unwrap();
        // Matrix-vector oracle: failing bits never clear, each working bit flips w.p. f.
        let mut want = vec![0.0; 8];
        for s in 0..8usize {
            for t in 0..8usize {
                if s & !t != 0 {
                    continue;
                }
                let flips = (t & !s).count_ones() as i32;
                let stay = 3 - s.count_ones() as i32 - flips;
                want[t] += belief.probs[s] * f.powi(flips) * (1.0 - f).powi(stay);
            }
        }
        for (g, w) in got.probs.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
        }
    }

    #[test]
    fn status_cost_is_promoted_with_base_observation() {
        let env = DomainConfig::posyadmin(3).build().unwrap();
        let m = &env.reward_map;
        assert_eq!(m.n_symbols(), 12);
        let sym = m.augment(ping(1), WORKING, -20.0).unwrap();
        assert_eq!(m.symbols()[sym].base, Some(WORKING));
        assert_eq!(m.promoted_value(sym), Some(-20.0));
        assert_eq!(m.reward(ping(1), sym), -21.0);
    }
}
