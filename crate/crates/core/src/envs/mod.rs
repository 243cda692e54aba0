//! Ground-truth discrete POMDP simulators and exact-model oracles.
//!
//! A [`PomdpSpec`] stores the dynamics as sparse tables. Rewards are split
//! into a state-dependent part carried by each transition entry and a
//! state-independent per-action cost; the [`RewardObservationMap`] decides
//! which state-dependent rewards are promoted into the observation alphabet.

mod exact;
pub mod chain;
pub mod posyadmin;
mod reward_map;
pub mod rocksample;
pub mod tiger;

pub use exact::{
    aug_obs_likelihood, belief_update_augmented, exact_aug_obs_prob, exact_hankel,
    sequence_probability,
};
pub use posyadmin::posyadmin;
pub use reward_map::{AugmentedSymbol, PromotedReward, PromotionMode, RewardObservationMap};
pub use rocksample::{rocksample, RockSampleLayout};
pub use tiger::tiger;

use rand::Rng;

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};
use crate::rng::{rng_from, SimRng};

const ROW_TOL: f64 = 1e-12;

/// One entry of the sparse transition table for a (state, action) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub next: usize,
    pub prob: f64,
    /// State-dependent reward R(s, a, s') excluding the action cost.
    pub reward: f64,
}

#[derive(Debug, Clone)]
pub struct PomdpSpec {
    pub name: String,
    pub state_names: Vec<String>,
    pub action_names: Vec<String>,
    pub obs_names: Vec<String>,
    /// Indexed by `s * n_actions + a`.
    transitions: Vec<Vec<Transition>>,
    /// Indexed by `a * n_states + s'`, pairs of (base observation, probability).
    observations: Vec<Vec<(usize, f64)>>,
    action_cost: Vec<f64>,
    initial: Vec<f64>,
    terminal: Vec<bool>,
    discount: f64,
}

/// Raw tables for [`PomdpSpec::new`].
#[derive(Debug, Clone, Default)]
pub struct SpecTables {
    pub name: String,
    pub state_names: Vec<String>,
    pub action_names: Vec<String>,
    pub obs_names: Vec<String>,
    pub transitions: Vec<Vec<Transition>>,
    pub observations: Vec<Vec<(usize, f64)>>,
    pub action_cost: Vec<f64>,
    pub initial: Vec<f64>,
    pub terminal: Vec<bool>,
    pub discount: f64,
}

impl PomdpSpec {
    pub fn new(t: SpecTables) -> Result<Self> {
        let ns = t.state_names.len();
        let na = t.action_names.len();
        let no = t.obs_names.len();
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if ns == 0 || na == 0 || no == 0 {
            return bad("empty state, action or observation set".into());
        }
        if t.transitions.len() != ns * na {
            return bad(format!("expected {} transition rows", ns * na));
        }
        if t.observations.len() != na * ns {
            return bad(format!("expected {} observation rows", na * ns));
        }
        if t.action_cost.len() != na || t.initial.len() != ns || t.terminal.len() != ns {
            return bad("action cost, initial belief or terminal set has wrong length".into());
        }
        if !(t.discount > 0.0 && t.discount <= 1.0) {
            return bad(format!("discount {} outside (0, 1]", t.discount));
        }
        for (i, row) in t.transitions.iter().enumerate() {
            let sum: f64 = row.iter().map(|e| e.prob).sum();
            if (sum - 1.0).abs() > ROW_TOL
                || row.iter().any(|e| e.next >= ns || e.prob < 0.0 || !e.reward.is_finite())
            {
                return bad(format!(
                    "transition row (s={}, a={}) invalid (sum {sum})",
                    i / na,
                    i % na
                ));
            }
        }
        for (i, row) in t.observations.iter().enumerate() {
            let sum: f64 = row.iter().map(|e| e.1).sum();
            if (sum - 1.0).abs() > ROW_TOL || row.iter().any(|e| e.0 >= no || e.1 < 0.0) {
                return bad(format!(
                    "observation row (a={}, s'={}) invalid (sum {sum})",
                    i / ns,
                    i % ns
                ));
            }
        }
        let init_sum: f64 = t.initial.iter().sum();
        if (init_sum - 1.0).abs() > ROW_TOL || t.initial.iter().any(|&p| p < 0.0) {
            return bad(format!("initial belief sums to {init_sum}"));
        }
        Ok(PomdpSpec {
            name: t.name,
            state_names: t.state_names,
            action_names: t.action_names,
            obs_names: t.obs_names,
            transitions: t.transitions,
            observations: t.observations,
            action_cost: t.action_cost,
            initial: t.initial,
            terminal: t.terminal,
            discount: t.discount,
        })
    }

    pub fn n_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn n_actions(&self) -> usize {
        self.action_names.len()
    }

    pub fn n_obs(&self) -> usize {
        self.obs_names.len()
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn transitions(&self, s: usize, a: usize) -> &[Transition] {
        &self.transitions[s * self.n_actions() + a]
    }

    pub fn observations(&self, a: usize, next: usize) -> &[(usize, f64)] {
        &self.observations[a * self.n_states() + next]
    }

    pub fn action_cost(&self, a: usize) -> f64 {
        self.action_cost[a]
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn initial_belief(&self) -> Belief {
        Belief {
            probs: self.initial.clone(),
        }
    }

    /// Total reward R(s, a, s'), or `None` when s' is unreachable from (s, a).
    pub fn reward(&self, s: usize, a: usize, next: usize) -> Option<f64> {
        self.transitions(s, a)
            .iter()
            .find(|e| e.next == next)
            .map(|e| e.reward + self.action_cost[a])
    }

    /// Smallest and largest one-step total reward over all reachable entries.
    pub fn reward_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in 0..self.n_states() {
            for a in 0..self.n_actions() {
                for e in self.transitions(s, a) {
                    let r = e.reward + self.action_cost[a];
                    lo = lo.min(r);
                    hi = hi.max(r);
                }
            }
        }
        (lo, hi)
    }

    fn check_action(&self, action: usize) -> Result<()> {
        if action >= self.n_actions() {
            return Err(Error::InvalidAction {
                action,
                n_actions: self.n_actions(),
            });
        }
        Ok(())
    }
}

/// Opaque handle to a hidden environment state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HiddenState(pub usize);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next: HiddenState,
    pub obs: usize,
    /// Total reward, state-dependent part plus action cost.
    pub reward: f64,
    /// State-dependent part only; this is what may be promoted.
    pub state_reward: f64,
    pub terminal: bool,
}

fn sample_index<I: Iterator<Item = f64>>(weights: I, rng: &mut SimRng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

pub fn sample_initial(spec: &PomdpSpec, rng: &mut SimRng) -> HiddenState {
    HiddenState(sample_index(spec.initial.iter().copied(), rng))
}

/// Samples a hidden start state; deterministic in `seed`.
pub fn reset(spec: &PomdpSpec, seed: u64) -> HiddenState {
    sample_initial(spec, &mut rng_from(seed, &[0x7265_7365_74]))
}

pub fn step(
    spec: &PomdpSpec,
    state: HiddenState,
    action: usize,
    rng: &mut SimRng,
) -> Result<StepOutcome> {
    spec.check_action(action)?;
    if spec.is_terminal(state.0) {
        return Err(Error::SteppedTerminal(state.0));
    }
    let row = spec.transitions(state.0, action);
    let e = row[sample_index(row.iter().map(|e| e.prob), rng)];
    let obs_row = spec.observations(action, e.next);
    let obs = obs_row[sample_index(obs_row.iter().map(|o| o.1), rng)].0;
    Ok(StepOutcome {
        next: HiddenState(e.next),
        obs,
        reward: e.reward + spec.action_cost(action),
        state_reward: e.reward,
        terminal: spec.is_terminal(e.next),
    })
}

/// Distribution over hidden states.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    pub probs: Vec<f64>,
}

impl Belief {
    pub fn point(n_states: usize, s: usize) -> Self {
        let mut probs = vec![0.0; n_states];
        probs[s] = 1.0;
        Belief { probs }
    }

    pub fn is_valid(&self) -> bool {
        let sum: f64 = self.probs.iter().sum();
        self.probs.iter().all(|&p| p >= 0.0) && (sum - 1.0).abs() <= 1e-10
    }

    pub fn sample(&self, rng: &mut SimRng) -> HiddenState {
        HiddenState(sample_index(self.probs.iter().copied(), rng))
    }

    pub(crate) fn normalized(mut probs: Vec<f64>) -> Result<Self> {
        let z: f64 = probs.iter().sum();
        if !(z > 0.0) {
            return Err(Error::ImpossibleEvidence);
        }
        probs.iter_mut().for_each(|p| *p /= z);
        Ok(Belief { probs })
    }
}

/// Bayes filter over base observations: b'(s') ∝ Σ_s b(s) T(s,a,s') Z(a,s',o).
pub fn belief_update(spec: &PomdpSpec, belief: &Belief, action: usize, obs: usize) -> Result<Belief> {
    spec.check_action(action)?;
    let mut next = vec![0.0; spec.n_states()];
    for (s, &p) in belief.probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for e in spec.transitions(s, action) {
            let z: f64 = spec
                .observations(action, e.next)
                .iter()
                .filter(|(o, _)| *o == obs)
                .map(|(_, q)| q)
                .sum();
            next[e.next] += p * e.prob * z;
        }
    }
    Belief::normalized(next)
}

/// Pr[o | belief, a] over base observations.
pub fn exact_obs_prob(spec: &PomdpSpec, belief: &Belief, action: usize) -> Result<Vec<f64>> {
    spec.check_action(action)?;
    let mut out = vec![0.0; spec.n_obs()];
    for (s, &p) in belief.probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for e in spec.transitions(s, action) {
            for &(o, q) in spec.observations(action, e.next) {
                out[o] += p * e.prob * q;
            }
        }
    }
    Ok(out)
}

/// Parameters for one of the benchmark domains.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainConfig {
    Tiger {
        listen_accuracy: f64,
        discount: f64,
    },
    PoSysadmin {
        computers: usize,
        fail_prob: f64,
        discount: f64,
    },
    RockSample {
        size: usize,
        rocks: usize,
        /// Half-efficiency distance of the rock sensor.
        sensor_d0: f64,
        discount: f64,
        layout: Option<Vec<(usize, usize)>>,
    },
}

impl DomainConfig {
    pub fn tiger() -> Self {
        DomainConfig::Tiger {
            listen_accuracy: 0.85,
            discount: 0.95,
        }
    }

    pub fn posyadmin(computers: usize) -> Self {
        DomainConfig::PoSysadmin {
            computers,
            fail_prob: 0.1,
            discount: 0.95,
        }
    }

    pub fn rocksample(size: usize, rocks: usize) -> Self {
        DomainConfig::RockSample {
            size,
            rocks,
            sensor_d0: 20.0,
            discount: 0.95,
            layout: None,
        }
    }

    /// Short label used in metrics tables, e.g. `rocksample(5,7)`.
    pub fn label(&self) -> String {
        match self {
            DomainConfig::Tiger { .. } => "tiger".into(),
            DomainConfig::PoSysadmin { computers, .. } => format!("posyadmin({computers})"),
            DomainConfig::RockSample { size, rocks, .. } => format!("rocksample({size},{rocks})"),
        }
    }

    /// Maximum number of real decision steps per episode.
    pub fn max_steps(&self) -> usize {
        match self {
            DomainConfig::RockSample { .. } => 30,
            _ => 20,
        }
    }

    pub fn build(&self) -> Result<Environment> {
        let (spec, reward_map) = match self {
            DomainConfig::Tiger {
                listen_accuracy,
                discount,
            } => tiger(*listen_accuracy, *discount)?,
            DomainConfig::PoSysadmin {
                computers,
                fail_prob,
                discount,
            } => posyadmin(*computers, *fail_prob, *discount)?,
            DomainConfig::RockSample {
                size,
                rocks,
                sensor_d0,
                discount,
                layout,
            } => {
                let layout = match layout {
                    Some(cells) => RockSampleLayout::new(*size, cells.clone())?,
                    None => RockSampleLayout::generate(*size, *rocks)?,
                };
                if layout.rocks.len() != *rocks {
                    return Err(Error::Config(format!(
                        "layout lists {} rocks, expected {rocks}",
                        layout.rocks.len()
                    )));
                }
                rocksample(&layout, *sensor_d0, *discount)?
            }
        };
        Ok(Environment {
            spec,
            reward_map,
            max_steps: self.max_steps(),
            config: Some(self.clone()),
        })
    }
}

/// A benchmark domain ready for simulation: dynamics plus reward promotion.
#[derive(Debug, Clone)]
pub struct Environment {
    pub spec: PomdpSpec,
    pub reward_map: RewardObservationMap,
    /// Real decision steps per episode.
    pub max_steps: usize,
    /// The benchmark configuration this was built from, if any.
    pub config: Option<DomainConfig>,
}

impl Environment {
    /// An environment outside the built-in benchmarks.
    pub fn custom(spec: PomdpSpec, reward_map: RewardObservationMap, max_steps: usize) -> Self {
        Environment {
            spec,
            reward_map,
            max_steps,
            config: None,
        }
    }

    pub fn label(&self) -> String {
        match &self.config {
            Some(c) => c.label(),
            None => self.spec.name.clone(),
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::new(
            self.spec.action_names.clone(),
            self.reward_map.symbol_names(&self.spec),
        )
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    /// Steps the simulator and maps the emission to an augmented symbol.
    pub fn step_augmented(
        &self,
        state: HiddenState,
        action: usize,
        rng: &mut SimRng,
    ) -> Result<(StepOutcome, usize)> {
        let out = step(&self.spec, state, action, rng)?;
        let sym = self.reward_map.augment(action, out.obs, out.state_reward)?;
        Ok((out, sym))
    }
}
