//! A deterministic two-state chain for planner sanity checks.
//!
//! From the start state, `stay` (action 0) pays `immediate` and stays put;
//! `advance` (action 1) pays nothing and moves to an absorbing state where
//! every action pays `later`. There is a single base observation, so the
//! promoted rewards are the only signal.

use crate::error::Result;

use super::{Environment, PomdpSpec, PromotedReward, PromotionMode, RewardObservationMap, SpecTables, Transition};

pub const STAY: usize = 0;
pub const ADVANCE: usize = 1;

pub fn chain(immediate: f64, later: f64, discount: f64, max_steps: usize) -> Result<Environment> {
    let t = |next, reward| {
        vec![Transition {
            next,
            prob: 1.0,
            reward,
        }]
    };
    let spec = PomdpSpec::new(SpecTables {
        name: "chain".into(),
        state_names: vec!["start".into(), "end".into()],
        action_names: vec!["stay".into(), "advance".into()],
        obs_names: vec!["o".into()],
        transitions: vec![t(0, immediate), t(1, 0.0), t(1, later), t(1, later)],
        observations: vec![vec![(0, 1.0)]; 4],
        action_cost: vec![0.0, 0.0],
        initial: vec![1.0, 0.0],
        terminal: vec![false, false],
        discount,
    })?;
    let mut promoted: Vec<PromotedReward> = Vec::new();
    for v in [immediate, later] {
        if v != 0.0 && promoted.iter().all(|p| p.value != v) {
            promoted.push(PromotedReward {
                value: v,
                label: format!("r{v:+}"),
            });
        }
    }
    let map = RewardObservationMap::new(&spec, PromotionMode::Replace, promoted, &[])?;
    Ok(Environment::custom(spec, map, max_steps))
}

/// Optimal finite-horizon discounted value of each action at the start.
pub fn chain_start_values(immediate: f64, later: f64, gamma: f64, horizon: usize) -> [f64; 2] {
    // v_end[h] = value of the absorbing state with h steps to go.
    let mut v_start = 0.0;
    let mut v_end = 0.0;
    let mut q = [0.0, 0.0];
    for _ in 0..horizon {
        q = [immediate + gamma * v_start, gamma * v_end];
        v_start = q[0].max(q[1]);
        v_end = later + gamma * v_end;
    }
    q
}
