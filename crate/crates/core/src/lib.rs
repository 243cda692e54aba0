//! Offline spectral learning of predictive state representations (PSRs)
//! combined with online Monte-Carlo tree search.
//!
//! The pipeline runs in two stages. A PSR is first learned from interaction
//! data collected under a uniform-random policy, with selected reward signals
//! promoted into the observation alphabet. The learned model then serves as
//! the simulator for UCT search at every real decision step.
//!
//! Modules:
//! - [`envs`]: ground-truth POMDP benchmarks (Tiger, POSyadmin, RockSample)
//!   and exact-model oracles.
//! - [`data`]: trajectory generation and empirical Hankel estimation.
//! - [`psr`]: spectral learning and the learned-model runtime.
//! - [`planner`]: PSR-MCTS plus true-model POMCP and random baselines.
//! - [`harness`]: experiment configuration, presets, metrics and diagnostics.

pub mod alphabet;
pub mod data;
pub mod envs;
pub mod error;
pub mod harness;
pub mod planner;
pub mod psr;
pub mod rng;

pub use alphabet::{ActObs, Alphabet};
pub use error::{Error, Result};
pub use rng::SimRng;
