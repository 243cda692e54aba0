//! Training data: uniform-random trajectories with promoted rewards, the
//! test/history index sets built from them, and empirical Hankel estimates.

mod estimate;
mod hankel;
pub mod io;

pub use estimate::{estimate_hankel, estimate_hankel_from_corpus};
pub use hankel::{HankelEstimates, PairEstimate, SampleCounts, Sequence, TestHistorySets};

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use rayon::prelude::*;

use crate::alphabet::{ActObs, Alphabet};
use crate::envs::{sample_initial, Environment};
use crate::error::{Error, Result};
use crate::rng::rng_from;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryStep {
    pub action: usize,
    /// Augmented observation symbol.
    pub obs: usize,
    /// Raw environment reward.
    pub reward: f64,
}

impl TrajectoryStep {
    pub fn pair(&self) -> ActObs {
        ActObs::new(self.action, self.obs)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
}

impl Trajectory {
    pub fn pairs(&self) -> impl Iterator<Item = ActObs> + '_ {
        self.steps.iter().map(TrajectoryStep::pair)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// `count` trajectories of up to `length` steps under uniform-random actions.
/// A trajectory stops early when it enters a terminal state.
pub fn generate_trajectories(env: &Environment, count: usize, length: usize, seed: u64) -> Result<Vec<Trajectory>> {
    let n_actions = env.spec.n_actions();
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from(seed, &[0x7472616a, i as u64]);
            let mut state = sample_initial(&env.spec, &mut rng);
            let mut steps = Vec::with_capacity(length);
            for _ in 0..length {
                let action = rng.random_range(0..n_actions);
                let (out, obs) = env.step_augmented(state, action, &mut rng)?;
                steps.push(TrajectoryStep {
                    action,
                    obs,
                    reward: out.reward,
                });
                state = out.next;
                if out.terminal {
                    break;
                }
            }
            Ok(Trajectory { steps })
        })
        .collect()
}

/// Which one-step pairs to build tests (or P_{T,ao,H} matrices) from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSelection {
    /// Every pair of the alphabet.
    Full,
    /// Only pairs that occur in the corpus.
    Observed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetOptions {
    /// Longest test; tests of every length 1..=test_length are included.
    pub test_length: usize,
    pub max_histories: usize,
    pub test_pairs: PairSelection,
    pub ao_pairs: PairSelection,
}

impl Default for SetOptions {
    fn default() -> Self {
        SetOptions {
            test_length: 2,
            max_histories: 2000,
            test_pairs: PairSelection::Full,
            ao_pairs: PairSelection::Full,
        }
    }
}

/// Distinct (action, observation) pairs in the corpus, sorted.
pub fn observed_pairs(trajectories: &[Trajectory]) -> Vec<ActObs> {
    trajectories
        .iter()
        .flat_map(Trajectory::pairs)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// All sequences of length 1..=max_len over `pairs`, shortest first.
pub fn all_sequences(pairs: &[ActObs], max_len: usize) -> Vec<Sequence> {
    let mut out: Vec<Sequence> = Vec::new();
    let mut frontier: Vec<Sequence> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(frontier.len() * pairs.len());
        for s in &frontier {
            for &p in pairs {
                let mut t = s.clone();
                t.push(p);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Histories are the distinct corpus prefixes (the empty history first, then
/// by decreasing frequency, capped) with their occurrence counts; tests are
/// all sequences up to `test_length` over the selected pairs.
pub fn build_test_history_sets(
    trajectories: &[Trajectory],
    alphabet: &Alphabet,
    opts: &SetOptions,
) -> Result<TestHistorySets> {
    if trajectories.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !(1..=2).contains(&opts.test_length) {
        return Err(Error::InvalidTestLength(opts.test_length));
    }
    let observed = observed_pairs(trajectories);
    let select = |sel: PairSelection| match sel {
        PairSelection::Full => alphabet.pairs().collect::<Vec<_>>(),
        PairSelection::Observed => observed.clone(),
    };

    let mut freq: HashMap<&[ActObs], usize> = HashMap::new();
    let prefixes: Vec<Vec<ActObs>> = trajectories.iter().map(|t| t.pairs().collect()).collect();
    for p in &prefixes {
        for len in 1..=p.len() {
            *freq.entry(&p[..len]).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&[ActObs], usize)> = freq.into_iter().collect();
    ranked.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.len().cmp(&y.0.len())).then(x.0.cmp(y.0)));
    let mut histories: Vec<Sequence> = vec![Vec::new()];
    let mut history_counts = vec![trajectories.len()];
    for (h, n) in ranked.into_iter().take(opts.max_histories.saturating_sub(1)) {
        histories.push(h.to_vec());
        history_counts.push(n);
    }

    Ok(TestHistorySets {
        alphabet: alphabet.clone(),
        histories,
        history_counts,
        tests: all_sequences(&select(opts.test_pairs), opts.test_length),
        pairs: select(opts.ao_pairs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::DomainConfig;

    #[test]
    fn tiger_corpus_shape() {
        let env = DomainConfig::tiger().build().unwrap();
        let corpus = generate_trajectories(&env, 200, 6, 1).unwrap();
        assert_eq!(corpus.len(), 200);
        assert!(corpus.iter().all(|t| t.len() == 6));
        assert!(generate_trajectories(&env, 0, 6, 1).unwrap().is_empty());
        assert_eq!(corpus, generate_trajectories(&env, 200, 6, 1).unwrap());
    }

    #[test]
    fn tiger_full_tests_count() {
        let env = DomainConfig::tiger().build().unwrap();
        let corpus = generate_trajectories(&env, 50, 6, 2).unwrap();
        let sets = build_test_history_sets(&corpus, &env.alphabet(), &SetOptions::default()).unwrap();
        assert_eq!(sets.tests.len(), 12 + 144);
        assert_eq!(sets.pairs.len(), 12);
        assert!(sets.histories[0].is_empty());
        assert_eq!(sets.history_counts[0], 50);
        assert_eq!(sets.history_counts.iter().skip(1).filter(|h| **h > 0).count(), sets.histories.len() - 1);
        let one = SetOptions {
            test_length: 1,
            ..SetOptions::default()
        };
        let sets1 = build_test_history_sets(&corpus, &env.alphabet(), &one).unwrap();
        let alphabet_tests: Vec<Sequence> = env.alphabet().pairs().map(|p| vec![p]).collect();
        assert_eq!(sets1.tests, alphabet_tests);
    }

    #[test]
    fn set_errors() {
        let alphabet = Alphabet::numbered(2, 2);
        assert!(matches!(
            build_test_history_sets(&[], &alphabet, &SetOptions::default()),
            Err(Error::EmptyCorpus)
        ));
        let t = Trajectory {
            steps: vec![TrajectoryStep {
                action: 0,
                obs: 1,
                reward: 0.0,
            }],
        };
        let bad = SetOptions {
            test_length: 3,
            ..SetOptions::default()
        };
        assert!(matches!(
            build_test_history_sets(&[t], &alphabet, &bad),
            Err(Error::InvalidTestLength(3))
        ));
    }

    #[test]
    fn histories_are_capped_most_frequent_first() {
        let env = DomainConfig::tiger().build().unwrap();
        let corpus = generate_trajectories(&env, 100, 6, 3).unwrap();
        let opts = SetOptions {
            max_histories: 20,
            ..SetOptions::default()
        };
        let sets = build_test_history_sets(&corpus, &env.alphabet(), &opts).unwrap();
        assert_eq!(sets.histories.len(), 20);
        // Length-1 prefixes are the most frequent after the empty history.
        assert!(sets.histories[1..7].iter().all(|h| h.len() == 1));
    }
}
