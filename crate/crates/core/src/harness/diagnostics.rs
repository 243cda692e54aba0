//! Model quality against the true environment.

use std::fmt;

use rand::Rng;

use crate::alphabet::ActObs;
use crate::data::Sequence;
use crate::envs::{belief_update_augmented, exact_aug_obs_prob, Belief, Environment};
use crate::planner::{PsrSimulator, SimModel, SimStep};
use crate::psr::linalg::numerical_rank;
use crate::psr::PsrModel;
use crate::rng::rng_from;

/// Relative threshold for the numerical rank of the stored spectrum.
const RANK_TOL: f64 = 1e-9;

/// Histories and rollouts to probe a model with.
#[derive(Debug, Clone, Default)]
pub struct Probes {
    pub histories: Vec<Sequence>,
    /// Uniform-policy rollouts from b*, each `rollout_length` steps.
    pub rollouts: usize,
    pub rollout_length: usize,
    pub seed: u64,
}

impl Probes {
    /// Every history of length `0..=max_len` with positive probability, plus
    /// `rollouts` episode-length rollouts.
    pub fn standard(env: &Environment, max_len: usize, rollouts: usize, seed: u64) -> Self {
        Probes {
            histories: reachable_histories(env, max_len),
            rollouts,
            rollout_length: env.max_steps(),
            seed,
        }
    }
}

/// Histories of length `0..=max_len` reachable in `env`, shortest first.
pub fn reachable_histories(env: &Environment, max_len: usize) -> Vec<Sequence> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![(Vec::new(), env.spec.initial_belief())];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (h, b) in &frontier {
            for a in 0..env.spec.n_actions() {
                for (o, &p) in exact_aug_obs_prob(env, b, a).iter().enumerate() {
                    if p <= 0.0 {
                        continue;
                    }
                    let Ok(nb) = belief_update_augmented(env, b, a, o) else {
                        continue;
                    };
                    let mut nh: Sequence = h.clone();
                    nh.push(ActObs::new(a, o));
                    out.push(nh.clone());
                    next.push((nh, nb));
                }
            }
        }
        frontier = next;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub rank: usize,
    /// Singular values of the training P_{T,H} above 1e-9 of the largest.
    pub numerical_rank: usize,
    /// Probe histories with positive true probability.
    pub histories: usize,
    /// One-step L1 error between predicted and true observation
    /// distributions, over probe histories and all actions.
    pub max_error: Option<f64>,
    pub mean_error: Option<f64>,
    /// Probe histories the model could not follow; b* was used instead.
    pub reset_histories: usize,
    pub rollout_steps: u64,
    pub fallback_rate: Option<f64>,
    pub abort_rate: Option<f64>,
}

impl DiagnosticsReport {
    pub fn is_empty(&self) -> bool {
        self.histories == 0 && self.rollout_steps == 0
    }
}

impl fmt::Display for DiagnosticsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"));
        writeln!(f, "rank {}", self.rank)?;
        writeln!(f, "numerical_rank {}", self.numerical_rank)?;
        writeln!(f, "histories {}", self.histories)?;
        writeln!(f, "max_one_step_l1 {}", opt(self.max_error))?;
        writeln!(f, "mean_one_step_l1 {}", opt(self.mean_error))?;
        writeln!(f, "reset_histories {}", self.reset_histories)?;
        writeln!(f, "rollout_steps {}", self.rollout_steps)?;
        writeln!(f, "fallback_rate {}", opt(self.fallback_rate))?;
        write!(f, "abort_rate {}", opt(self.abort_rate))
    }
}

/// One-step prediction error over `probes.histories` and simulator health
/// over `probes.rollouts`. Unmodelled symbols count as predicted zero.
pub fn model_diagnostics(model: &PsrModel, env: &Environment, probes: &Probes) -> DiagnosticsReport {
    let mut errors = Vec::new();
    let mut histories = 0;
    let mut reset_histories = 0;
    for h in &probes.histories {
        let mut belief: Belief = env.spec.initial_belief();
        let mut b = model.initial_state();
        let mut reachable = true;
        let mut followed = true;
        for p in h {
            match belief_update_augmented(env, &belief, p.action, p.obs) {
                Ok(nb) => belief = nb,
                Err(_) => {
                    reachable = false;
                    break;
                }
            }
            if followed {
                match model.update_state(&b, p.action, p.obs) {
                    Ok(nb) => b = nb,
                    Err(_) => followed = false,
                }
            }
        }
        if !reachable {
            continue;
        }
        histories += 1;
        if !followed {
            reset_histories += 1;
            b = model.initial_state();
        }
        for a in 0..env.spec.n_actions() {
            let exact = exact_aug_obs_prob(env, &belief, a);
            if exact.iter().sum::<f64>() <= 0.0 {
                continue;
            }
            let predicted = model
                .obs_distribution(&b, a)
                .map(|d| d.probs)
                .unwrap_or_else(|_| vec![0.0; exact.len()]);
            errors.push(exact.iter().zip(&predicted).map(|(x, y)| (x - y).abs()).sum::<f64>());
        }
    }

    let sim = PsrSimulator {
        model,
        rewards: &env.reward_map,
    };
    let mut rng = rng_from(probes.seed, &[0x6469_6167]);
    let (mut steps, mut fallbacks, mut aborts) = (0u64, 0u64, 0u64);
    for _ in 0..probes.rollouts {
        let mut b = model.initial_state();
        for _ in 0..probes.rollout_length {
            let a = rng.random_range(0..sim.n_actions());
            steps += 1;
            match sim.step(&b, a, &mut rng) {
                SimStep::Next {
                    state,
                    terminal,
                    fallback,
                    ..
                } => {
                    fallbacks += fallback as u64;
                    b = state;
                    if terminal {
                        break;
                    }
                }
                SimStep::Aborted => {
                    aborts += 1;
                    break;
                }
            }
        }
    }
    let rate = |n: u64| (steps > 0).then(|| n as f64 / steps as f64);

    DiagnosticsReport {
        rank: model.rank(),
        numerical_rank: numerical_rank(&model.singular_values, RANK_TOL),
        histories,
        max_error: errors.iter().copied().reduce(f64::max),
        mean_error: (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64),
        reset_histories,
        rollout_steps: steps,
        fallback_rate: rate(fallbacks),
        abort_rate: rate(aborts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{sequence_probability, DomainConfig};
    use crate::psr::{exact_model, RankRule};

    #[test]
    fn reachable_histories_match_enumeration() {
        let env = DomainConfig::tiger().build().unwrap();
        let pairs: Vec<ActObs> = env.alphabet().pairs().collect();
        let brute = crate::data::all_sequences(&pairs, 3)
            .into_iter()
            .filter(|h| sequence_probability(&env, h) > 0.0)
            .count();
        assert_eq!(reachable_histories(&env, 3).len(), brute + 1);
    }

    #[test]
    fn exact_tiger_model_is_exact() {
        let env = DomainConfig::tiger().build().unwrap();
        let model = exact_model(&env, 2, RankRule::Relative(1e-9)).unwrap();
        let r = model_diagnostics(&model, &env, &Probes::standard(&env, 3, 50, 1));
        assert_eq!(r.rank, 2);
        assert!(r.max_error.unwrap() < 1e-8, "{r}");
        assert_eq!(r.reset_histories, 0);
        assert_eq!(r.fallback_rate, Some(0.0));
        assert_eq!(r.rollout_steps, 50 * 20);
    }

    #[test]
    fn empty_probes_give_an_empty_report() {
        let env = DomainConfig::tiger().build().unwrap();
        let model = exact_model(&env, 2, RankRule::Fixed(2)).unwrap();
        let r = model_diagnostics(&model, &env, &Probes::default());
        assert!(r.is_empty());
        assert_eq!((r.max_error, r.mean_error, r.fallback_rate), (None, None, None));
    }

    #[test]
    fn unmodelled_symbols_count_as_errors() {
        let env = DomainConfig::tiger().build().unwrap();
        let model = exact_model(&env, 2, RankRule::Fixed(2)).unwrap();
        let listen_left_only: Vec<ActObs> = model.pairs().into_iter().filter(|p| p.action != 0 || p.obs == 0).collect();
        let r = model_diagnostics(&model.restrict_to_pairs(&listen_left_only), &env, &Probes::standard(&env, 0, 0, 1));
        // Listening from b*: the model puts all mass on hear-left.
        assert!((r.max_error.unwrap() - 1.0).abs() < 1e-9, "{r}");
    }
}
