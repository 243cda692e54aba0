//! Promotion of reward signals into the observation alphabet.
//!
//! Each step emits a base observation and a reward. The reward's
//! state-dependent part is either promoted, in which case it becomes (part
//! of) the augmented observation symbol, or it must be zero. The
//! state-independent action cost always stays in the residual map, which is
//! keyed by (action, augmented observation) and never enters model learning.

use crate::error::{Error, Result};

use super::PomdpSpec;

const VALUE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromotionMode {
    /// A promoted reward replaces the base observation of that step.
    Replace,
    /// Every step carries both its base observation and a promoted reward.
    Attach,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromotedReward {
    pub value: f64,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AugmentedSymbol {
    pub base: Option<usize>,
    pub promoted: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RewardObservationMap {
    mode: PromotionMode,
    n_actions: usize,
    n_base: usize,
    promoted: Vec<PromotedReward>,
    symbols: Vec<AugmentedSymbol>,
    /// reward(a, o) for the part of the reward that is not promoted.
    residual: Vec<f64>,
    terminal: Vec<bool>,
}

impl RewardObservationMap {
    /// Builds the map. `terminal_pairs` lists (action, promoted index) pairs
    /// that end a simulated episode.
    pub fn new(
        spec: &PomdpSpec,
        mode: PromotionMode,
        promoted: Vec<PromotedReward>,
        terminal_pairs: &[(usize, usize)],
    ) -> Result<Self> {
        for (i, p) in promoted.iter().enumerate() {
            if promoted[..i]
                .iter()
                .any(|q| (q.value - p.value).abs() <= VALUE_TOL)
            {
                return Err(Error::InvalidSpec(format!(
                    "promoted reward {} listed twice",
                    p.value
                )));
            }
        }
        let n_base = spec.n_obs();
        let symbols: Vec<AugmentedSymbol> = match mode {
            PromotionMode::Replace => (0..n_base)
                .map(|o| AugmentedSymbol {
                    base: Some(o),
                    promoted: None,
                })
                .chain((0..promoted.len()).map(|p| AugmentedSymbol {
                    base: None,
                    promoted: Some(p),
                }))
                .collect(),
            PromotionMode::Attach => (0..n_base)
                .flat_map(|o| {
                    (0..promoted.len()).map(move |p| AugmentedSymbol {
                        base: Some(o),
                        promoted: Some(p),
                    })
                })
                .collect(),
        };
        let n_actions = spec.n_actions();
        let n_sym = symbols.len();
        let mut residual = vec![0.0; n_actions * n_sym];
        let mut terminal = vec![false; n_actions * n_sym];
        for a in 0..n_actions {
            for (o, sym) in symbols.iter().enumerate() {
                residual[a * n_sym + o] = spec.action_cost(a);
                if let Some(p) = sym.promoted {
                    terminal[a * n_sym + o] = terminal_pairs.contains(&(a, p));
                }
            }
        }
        let map = RewardObservationMap {
            mode,
            n_actions,
            n_base,
            promoted,
            symbols,
            residual,
            terminal,
        };
        map.check_coverage(spec)?;
        Ok(map)
    }

    /// Every reachable state-dependent reward must map to a symbol.
    fn check_coverage(&self, spec: &PomdpSpec) -> Result<()> {
        for s in 0..spec.n_states() {
            for a in 0..spec.n_actions() {
                for e in spec.transitions(s, a) {
                    self.promoted_index(e.reward)?;
                }
            }
        }
        Ok(())
    }

    fn promoted_index(&self, state_reward: f64) -> Result<Option<usize>> {
        let hit = self
            .promoted
            .iter()
            .position(|p| (p.value - state_reward).abs() <= VALUE_TOL);
        match (self.mode, hit) {
            (_, Some(i)) => Ok(Some(i)),
            (PromotionMode::Replace, None) if state_reward.abs() <= VALUE_TOL => Ok(None),
            _ => Err(Error::UncoveredReward(state_reward)),
        }
    }

    pub fn mode(&self) -> PromotionMode {
        self.mode
    }

    pub fn n_symbols(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[AugmentedSymbol] {
        &self.symbols
    }

    pub fn promoted(&self) -> &[PromotedReward] {
        &self.promoted
    }

    pub fn symbol_names(&self, spec: &PomdpSpec) -> Vec<String> {
        self.symbols
            .iter()
            .map(|s| match (s.base, s.promoted) {
                (Some(o), None) => spec.obs_names[o].clone(),
                (None, Some(p)) => self.promoted[p].label.clone(),
                (Some(o), Some(p)) => format!("{}+{}", spec.obs_names[o], self.promoted[p].label),
                (None, None) => unreachable!("symbol without content"),
            })
            .collect()
    }

    /// Augmented symbol for a step that emitted `base_obs` and a
    /// state-dependent reward `state_reward`.
    pub fn augment(&self, _action: usize, base_obs: usize, state_reward: f64) -> Result<usize> {
        let promoted = self.promoted_index(state_reward)?;
        Ok(match (self.mode, promoted) {
            (PromotionMode::Replace, None) => base_obs,
            (PromotionMode::Replace, Some(p)) => self.n_base + p,
            (PromotionMode::Attach, Some(p)) => base_obs * self.promoted.len() + p,
            (PromotionMode::Attach, None) => unreachable!("attach mode promotes every reward"),
        })
    }

    /// Value of the promoted reward carried by symbol `o`, if any.
    pub fn promoted_value(&self, o: usize) -> Option<f64> {
        self.symbols[o].promoted.map(|p| self.promoted[p].value)
    }

    /// reward(ao): the part of the step reward not carried by the symbol.
    pub fn residual(&self, a: usize, o: usize) -> f64 {
        self.residual[a * self.symbols.len() + o]
    }

    /// Reward credited to a simulated step with action `a` and symbol `o`.
    pub fn reward(&self, a: usize, o: usize) -> f64 {
        self.promoted_value(o).unwrap_or(0.0) + self.residual(a, o)
    }

    /// Whether sampling `o` after `a` ends a simulated episode.
    pub fn is_terminal(&self, a: usize, o: usize) -> bool {
        self.terminal[a * self.symbols.len() + o]
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Smallest and largest simulated one-step reward over the alphabet.
    pub fn reward_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in 0..self.n_actions {
            for o in 0..self.symbols.len() {
                let r = self.reward(a, o);
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        (lo, hi)
    }
}
