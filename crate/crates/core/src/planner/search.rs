//! Generic UCT search: simulate, roll out and pick the greedy action.

use rand::Rng;

use crate::rng::SimRng;

use super::tree::{greedy_action, ucb_select, NodeId, SearchTree};
use super::PlannerConfig;

/// One sampled transition of a generative model.
#[derive(Debug, Clone, PartialEq)]
pub enum SimStep<S> {
    Next {
        state: S,
        obs: usize,
        reward: f64,
        terminal: bool,
        /// The observation came from a degenerate-distribution fallback.
        fallback: bool,
    },
    /// The model cannot continue from this state (impossible transition).
    Aborted,
}

/// A generative model the search can sample from.
pub trait SimModel {
    type State: Clone;

    fn n_actions(&self) -> usize;

    fn step(&self, state: &Self::State, action: usize, rng: &mut SimRng) -> SimStep<Self::State>;
}

/// Counters accumulated over simulations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchCounters {
    pub fallbacks: u64,
    pub aborted: u64,
}

struct Ctx<'a, M> {
    model: &'a M,
    cfg: &'a PlannerConfig,
    counters: &'a mut SearchCounters,
}

impl<M: SimModel> Ctx<'_, M> {
    fn sample(&mut self, state: &M::State, a: usize, rng: &mut SimRng) -> SimStep<M::State> {
        let s = self.model.step(state, a, rng);
        match &s {
            SimStep::Next { fallback: true, .. } => self.counters.fallbacks += 1,
            SimStep::Aborted => self.counters.aborted += 1,
            _ => {}
        }
        s
    }

    fn simulate(&mut self, tree: &mut SearchTree, node: NodeId, state: &M::State, depth: usize, rng: &mut SimRng) -> f64 {
        if depth >= self.cfg.max_depth || tree.node(node).terminal {
            return 0.0;
        }
        let a = ucb_select(tree.node(node), self.cfg.c, rng);
        let r = match self.sample(state, a, rng) {
            SimStep::Aborted => 0.0,
            SimStep::Next {
                state: next,
                obs,
                reward,
                terminal,
                ..
            } => {
                let future = match tree.node(node).child(a, obs) {
                    Some(child) => self.simulate(tree, child, &next, depth + 1, rng),
                    None => {
                        tree.add_child(node, a, obs, terminal);
                        self.rollout(&next, depth + 1, terminal, rng)
                    }
                };
                reward + self.cfg.gamma * future
            }
        };
        tree.node_mut(node).update(a, r);
        r
    }

    fn rollout(&mut self, state: &M::State, depth: usize, terminal: bool, rng: &mut SimRng) -> f64 {
        let mut total = 0.0;
        let mut scale = 1.0;
        let mut state = state.clone();
        let mut terminal = terminal;
        for _ in depth..self.cfg.max_depth {
            if terminal {
                break;
            }
            let a = rng.random_range(0..self.model.n_actions());
            match self.sample(&state, a, rng) {
                SimStep::Aborted => break,
                SimStep::Next {
                    state: next,
                    reward,
                    terminal: t,
                    ..
                } => {
                    total += scale * reward;
                    scale *= self.cfg.gamma;
                    state = next;
                    terminal = t;
                }
            }
        }
        total
    }
}

/// Runs one simulation from the root; returns its discounted return.
pub fn simulate<M: SimModel>(
    model: &M,
    tree: &mut SearchTree,
    root_state: &M::State,
    cfg: &PlannerConfig,
    counters: &mut SearchCounters,
    rng: &mut SimRng,
) -> f64 {
    Ctx { model, cfg, counters }.simulate(tree, SearchTree::ROOT, root_state, 0, rng)
}

/// Uniform-random rollout of at most `max_depth - depth` steps.
pub fn rollout<M: SimModel>(
    model: &M,
    state: &M::State,
    depth: usize,
    cfg: &PlannerConfig,
    counters: &mut SearchCounters,
    rng: &mut SimRng,
) -> f64 {
    Ctx { model, cfg, counters }.rollout(state, depth, false, rng)
}

/// `cfg.n_sims` simulations from root states drawn by `root_state`, then
/// the greedy root action.
pub fn act_search<M: SimModel>(
    model: &M,
    tree: &mut SearchTree,
    mut root_state: impl FnMut(&mut SimRng) -> M::State,
    cfg: &PlannerConfig,
    counters: &mut SearchCounters,
    rng: &mut SimRng,
) -> usize {
    let mut ctx = Ctx { model, cfg, counters };
    for _ in 0..cfg.n_sims {
        let s = root_state(rng);
        ctx.simulate(tree, SearchTree::ROOT, &s, 0, rng);
    }
    greedy_action(tree.root(), rng)
}
