//! Generative models for the search: the learned PSR and the true POMDP.

use rand::Rng;

use crate::envs::{belief_update_augmented, Belief, Environment, HiddenState, RewardObservationMap};
use crate::error::Result;
use crate::psr::{PredictiveState, PsrModel};
use crate::rng::SimRng;

use super::search::{SimModel, SimStep};

/// Simulates with a learned PSR: observations sampled from the predicted
/// distribution, rewards read off the augmented observation.
pub struct PsrSimulator<'a> {
    pub model: &'a PsrModel,
    pub rewards: &'a RewardObservationMap,
}

impl SimModel for PsrSimulator<'_> {
    type State = PredictiveState;

    fn n_actions(&self) -> usize {
        self.model.alphabet().n_actions()
    }

    fn step(&self, b: &PredictiveState, a: usize, rng: &mut SimRng) -> SimStep<PredictiveState> {
        let Ok((o, fallback)) = self.model.sample_obs(b, a, rng) else {
            return SimStep::Aborted;
        };
        match self.model.update_state(b, a, o) {
            Ok(next) => SimStep::Next {
                state: next,
                obs: o,
                reward: self.rewards.reward(a, o),
                terminal: self.rewards.is_terminal(a, o),
                fallback,
            },
            Err(_) => SimStep::Aborted,
        }
    }
}

/// Simulates with the true environment dynamics.
pub struct TrueSimulator<'a> {
    pub env: &'a Environment,
}

impl SimModel for TrueSimulator<'_> {
    type State = HiddenState;

    fn n_actions(&self) -> usize {
        self.env.spec.n_actions()
    }

    fn step(&self, s: &HiddenState, a: usize, rng: &mut SimRng) -> SimStep<HiddenState> {
        match self.env.step_augmented(*s, a, rng) {
            Ok((out, obs)) => SimStep::Next {
                state: out.next,
                obs,
                reward: out.reward,
                terminal: out.terminal,
                fallback: false,
            },
            Err(_) => SimStep::Aborted,
        }
    }
}

/// Belief over hidden states for the true-model baseline.
#[derive(Debug, Clone)]
pub enum BeliefTracker {
    Exact(Belief),
    Particles(Vec<HiddenState>),
}

/// Resets spent per requested particle before declaring depletion.
const PARTICLE_ATTEMPTS: usize = 20;

impl BeliefTracker {
    pub fn sample(&self, rng: &mut SimRng) -> HiddenState {
        match self {
            BeliefTracker::Exact(b) => b.sample(rng),
            BeliefTracker::Particles(p) => p[rng.random_range(0..p.len())],
        }
    }

    /// Conditions on the real (a, symbol) by rejection for particles.
    /// Returns `Ok(false)` when no particle survived and the set was rebuilt
    /// from `exact`, the exact posterior after the same step.
    pub fn update(
        &mut self,
        env: &Environment,
        a: usize,
        symbol: usize,
        exact: &Belief,
        rng: &mut SimRng,
    ) -> Result<bool> {
        match self {
            BeliefTracker::Exact(b) => {
                *b = belief_update_augmented(env, b, a, symbol)?;
                Ok(true)
            }
            BeliefTracker::Particles(p) => {
                let n = p.len();
                let mut next = Vec::with_capacity(n);
                for _ in 0..n * PARTICLE_ATTEMPTS {
                    if next.len() == n {
                        break;
                    }
                    let s = p[rng.random_range(0..n)];
                    if env.spec.is_terminal(s.0) {
                        continue;
                    }
                    let (out, sym) = env.step_augmented(s, a, rng)?;
                    if sym == symbol {
                        next.push(out.next);
                    }
                }
                if next.is_empty() {
                    *p = (0..n).map(|_| exact.sample(rng)).collect();
                    return Ok(false);
                }
                // Top up a thinned set by resampling the survivors.
                let kept = next.len();
                while next.len() < n {
                    next.push(next[rng.random_range(0..kept)]);
                }
                *p = next;
                Ok(true)
            }
        }
    }
}
