//! Online planning: UCT search over a learned PSR, plus the true-model
//! POMCP and uniform-random baselines.

mod models;
mod search;
mod tree;

pub use models::{BeliefTracker, PsrSimulator, TrueSimulator};
pub use search::{act_search, rollout, simulate, SearchCounters, SimModel, SimStep};
pub use tree::{greedy_action, ucb_select, ActionStats, NodeId, SearchNode, SearchTree};

use std::time::Instant;

use rand::Rng;

use crate::envs::{belief_update_augmented, sample_initial, DomainConfig, Environment};
use crate::error::{Error, Result};
use crate::psr::PsrModel;
use crate::rng::SimRng;

/// Smallest per-action time recorded, so averages stay positive.
const MIN_ACTION_SECONDS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig {
    pub n_sims: usize,
    pub max_depth: usize,
    /// UCB exploration constant.
    pub c: f64,
    pub gamma: f64,
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sims == 0 {
            return Err(Error::Config("n_sims must be at least 1".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        if !(self.c >= 0.0) || !self.c.is_finite() {
            return Err(Error::Config(format!("exploration constant must be >= 0, got {}", self.c)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!("gamma must be in (0, 1], got {}", self.gamma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub action: usize,
    /// Augmented observation emitted by the real environment.
    pub obs: usize,
    pub reward: f64,
    /// Wall time spent choosing the action.
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeRecord {
    pub steps: Vec<StepRecord>,
    /// Simulated observations drawn from a fallback distribution.
    pub fallback_count: u64,
    /// Real-execution recoveries: predictive state reset to b* (PSR) or
    /// particle set rebuilt (POMCP).
    pub reset_count: u64,
    /// Simulation steps abandoned on impossible transitions.
    pub aborted_count: u64,
}

impl EpisodeRecord {
    pub fn return_undiscounted(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    pub fn return_discounted(&self, gamma: f64) -> f64 {
        self.steps
            .iter()
            .rev()
            .fold(0.0, |acc, s| s.reward + gamma * acc)
    }

    pub fn mean_action_seconds(&self) -> f64 {
        if self.steps.is_empty() {
            return MIN_ACTION_SECONDS;
        }
        self.steps.iter().map(|s| s.seconds).sum::<f64>() / self.steps.len() as f64
    }

    fn push(&mut self, action: usize, obs: usize, reward: f64, started: Instant) {
        self.steps.push(StepRecord {
            action,
            obs,
            reward,
            seconds: started.elapsed().as_secs_f64().max(MIN_ACTION_SECONDS),
        });
    }
}

fn check_alphabet(model: &PsrModel, env: &Environment) -> Result<()> {
    let a = model.alphabet();
    if a.n_actions() != env.spec.n_actions() || a.n_obs() != env.reward_map.n_symbols() {
        return Err(Error::InvalidSpec(format!(
            "model alphabet {}x{} does not match environment {}x{}",
            a.n_actions(),
            a.n_obs(),
            env.spec.n_actions(),
            env.reward_map.n_symbols()
        )));
    }
    Ok(())
}

/// One real episode planned with a learned PSR.
///
/// Each step searches from the current predictive state, executes the
/// chosen action in `env`, and conditions on the real observation (mapped
/// to a modelled one if the model lacks the pair). The tree is kept across
/// steps by descending into the executed (a, o) child. If the real
/// observation is impossible under the model, the predictive state is reset
/// to b* and the tree discarded.
pub fn plan_episode(
    model: &PsrModel,
    env: &Environment,
    cfg: &PlannerConfig,
    env_rng: &mut SimRng,
    rng: &mut SimRng,
) -> Result<EpisodeRecord> {
    cfg.validate()?;
    check_alphabet(model, env)?;
    let sim = PsrSimulator {
        model,
        rewards: &env.reward_map,
    };
    let mut record = EpisodeRecord::default();
    let mut counters = SearchCounters::default();
    let mut state = sample_initial(&env.spec, env_rng);
    let mut b = model.initial_state();
    let mut tree = SearchTree::new(env.spec.n_actions());
    for _ in 0..env.max_steps() {
        let started = Instant::now();
        let a = act_search(&sim, &mut tree, |_| b.clone(), cfg, &mut counters, rng);
        record.push(a, 0, 0.0, started);
        let (out, o_real) = env.step_augmented(state, a, env_rng)?;
        let last = record.steps.last_mut().expect("pushed above");
        last.obs = o_real;
        last.reward = out.reward;

        let next = model
            .map_unseen_observation(a, o_real, rng)
            .and_then(|o| Ok((o, model.update_state(&b, a, o)?)));
        match next {
            Ok((o, nb)) => {
                b = nb;
                tree.advance(a, o);
            }
            Err(e) => {
                log::debug!("resetting predictive state after {a}:{o_real}: {e}");
                record.reset_count += 1;
                b = model.initial_state();
                tree = SearchTree::new(env.spec.n_actions());
            }
        }
        state = out.next;
        if out.terminal {
            break;
        }
    }
    record.fallback_count = counters.fallbacks;
    record.aborted_count = counters.aborted;
    Ok(record)
}

/// Number of particles used for domains without exact belief tracking.
pub const POMCP_PARTICLES: usize = 10_000;

/// Whether the baseline tracks particles (RockSample) or the exact belief.
pub fn uses_particles(env: &Environment) -> bool {
    matches!(env.config, Some(DomainConfig::RockSample { .. }))
}

/// One real episode planned by POMCP with the true simulator. Root states
/// come from the exact belief, or from a particle set for RockSample.
pub fn pomcp_baseline(
    env: &Environment,
    cfg: &PlannerConfig,
    env_rng: &mut SimRng,
    rng: &mut SimRng,
) -> Result<EpisodeRecord> {
    cfg.validate()?;
    let sim = TrueSimulator { env };
    let mut record = EpisodeRecord::default();
    let mut counters = SearchCounters::default();
    let mut state = sample_initial(&env.spec, env_rng);
    let mut exact = env.spec.initial_belief();
    let mut tracker = if uses_particles(env) {
        BeliefTracker::Particles((0..POMCP_PARTICLES).map(|_| exact.sample(rng)).collect())
    } else {
        BeliefTracker::Exact(exact.clone())
    };
    let mut tree = SearchTree::new(env.spec.n_actions());
    for _ in 0..env.max_steps() {
        let started = Instant::now();
        let a = act_search(&sim, &mut tree, |r| tracker.sample(r), cfg, &mut counters, rng);
        record.push(a, 0, 0.0, started);
        let (out, o) = env.step_augmented(state, a, env_rng)?;
        let last = record.steps.last_mut().expect("pushed above");
        last.obs = o;
        last.reward = out.reward;
        state = out.next;
        if out.terminal {
            break;
        }
        exact = belief_update_augmented(env, &exact, a, o)?;
        if !tracker.update(env, a, o, &exact, rng)? {
            log::debug!("particle set depleted after {a}:{o}; rebuilt from the exact belief");
            record.reset_count += 1;
        }
        tree.advance(a, o);
    }
    record.fallback_count = counters.fallbacks;
    record.aborted_count = counters.aborted;
    Ok(record)
}

/// One real episode with uniformly random actions.
pub fn random_baseline(env: &Environment, env_rng: &mut SimRng, rng: &mut SimRng) -> Result<EpisodeRecord> {
    let mut record = EpisodeRecord::default();
    let mut state = sample_initial(&env.spec, env_rng);
    for _ in 0..env.max_steps() {
        let started = Instant::now();
        let a = rng.random_range(0..env.spec.n_actions());
        record.push(a, 0, 0.0, started);
        let (out, o) = env.step_augmented(state, a, env_rng)?;
        let last = record.steps.last_mut().expect("pushed above");
        last.obs = o;
        last.reward = out.reward;
        state = out.next;
        if out.terminal {
            break;
        }
    }
    Ok(record)
}

#[cfg(test)]
mod tests;
