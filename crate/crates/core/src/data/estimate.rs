//! Monte Carlo Hankel estimators.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::alphabet::ActObs;
use crate::envs::{sample_initial, Environment, HiddenState};
use crate::error::{Error, Result};
use crate::rng::{rng_from, SimRng};

use super::{HankelEstimates, PairEstimate, SampleCounts, TestHistorySets, Trajectory};

/// Rejection budget per requested posterior sample.
const ATTEMPTS_PER_SAMPLE: usize = 200;

/// Tests that share an action sequence, keyed by their encoded observations.
struct TestGroup {
    actions: Vec<usize>,
    by_obs: HashMap<u64, usize>,
}

fn encode_obs(obs: impl IntoIterator<Item = usize>, n_obs: usize) -> u64 {
    obs.into_iter().fold(0u64, |k, o| k * n_obs as u64 + o as u64 + 1)
}

fn group_tests(sets: &TestHistorySets) -> Vec<TestGroup> {
    let n_obs = sets.alphabet.n_obs();
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut groups: Vec<TestGroup> = Vec::new();
    for (i, t) in sets.tests.iter().enumerate() {
        let actions: Vec<usize> = t.iter().map(|p| p.action).collect();
        let g = *index.entry(actions.clone()).or_insert_with(|| {
            groups.push(TestGroup {
                actions,
                by_obs: HashMap::new(),
            });
            groups.len() - 1
        });
        groups[g].by_obs.insert(encode_obs(t.iter().map(|p| p.obs), n_obs), i);
    }
    groups
}

/// Runs `actions` from `state`; returns the encoded observations, or `None`
/// if a terminal state cut the sequence short.
fn run_actions(
    env: &Environment,
    mut state: HiddenState,
    actions: &[usize],
    rng: &mut SimRng,
) -> Result<Option<u64>> {
    let n_obs = env.reward_map.n_symbols();
    let mut key = 0u64;
    for &a in actions {
        if env.spec.is_terminal(state.0) {
            return Ok(None);
        }
        let (out, sym) = env.step_augmented(state, a, rng)?;
        key = key * n_obs as u64 + sym as u64 + 1;
        state = out.next;
    }
    Ok(Some(key))
}

/// Draws up to `target` hidden states consistent with `history` by
/// rejection from fresh resets. Returns the samples and the resets spent.
fn posterior_samples(
    env: &Environment,
    history: &[ActObs],
    target: usize,
    rng: &mut SimRng,
) -> Result<(Vec<HiddenState>, usize)> {
    let mut samples = Vec::with_capacity(target);
    let mut attempts = 0;
    let budget = target * ATTEMPTS_PER_SAMPLE;
    'outer: while samples.len() < target && attempts < budget {
        attempts += 1;
        let mut s = sample_initial(&env.spec, rng);
        for &st in history {
            if env.spec.is_terminal(s.0) {
                continue 'outer;
            }
            let (out, sym) = env.step_augmented(s, st.action, rng)?;
            if sym != st.obs {
                continue 'outer;
            }
            s = out.next;
        }
        samples.push(s);
    }
    Ok((samples, attempts))
}

struct Column {
    p_h: f64,
    p_th: Vec<f64>,
    /// Per estimated pair (in `sets.pairs` order), `None` when all zero.
    pairs: Vec<Option<Vec<f64>>>,
    samples: usize,
    attempts: usize,
}

fn estimate_column(
    env: &Environment,
    sets: &TestHistorySets,
    groups: &[TestGroup],
    pair_slot: &HashMap<ActObs, usize>,
    pair_actions: &[usize],
    history: &[ActObs],
    target: usize,
    rng: &mut SimRng,
) -> Result<Column> {
    let nt = sets.tests.len();
    let (samples, attempts) = posterior_samples(env, history, target, rng)?;
    let mut col = Column {
        p_h: 0.0,
        p_th: vec![0.0; nt],
        pairs: vec![None; sets.pairs.len()],
        samples: samples.len(),
        attempts,
    };
    if samples.is_empty() {
        return Ok(col);
    }
    col.p_h = samples.len() as f64 / attempts as f64;
    let mut pair_counts: Vec<Option<Vec<f64>>> = vec![None; sets.pairs.len()];

    for &s in &samples {
        for g in groups {
            if let Some(key) = run_actions(env, s, &g.actions, rng)? {
                if let Some(&t) = g.by_obs.get(&key) {
                    col.p_th[t] += 1.0;
                }
            }
        }
        for &a in pair_actions {
            if env.spec.is_terminal(s.0) {
                break;
            }
            let (out, sym) = env.step_augmented(s, a, rng)?;
            let Some(&slot) = pair_slot.get(&ActObs::new(a, sym)) else {
                continue;
            };
            let counts = pair_counts[slot].get_or_insert_with(|| vec![0.0; nt]);
            for g in groups {
                if let Some(key) = run_actions(env, out.next, &g.actions, rng)? {
                    if let Some(&t) = g.by_obs.get(&key) {
                        counts[t] += 1.0;
                    }
                }
            }
        }
    }

    let scale = col.p_h / samples.len() as f64;
    col.p_th.iter_mut().for_each(|v| *v *= scale);
    for (dst, src) in col.pairs.iter_mut().zip(pair_counts) {
        *dst = src
            .map(|mut v| {
                v.iter_mut().for_each(|x| *x *= scale);
                v
            })
            .filter(|v| v.iter().any(|&x| x != 0.0));
    }
    Ok(col)
}

fn assemble(sets: &TestHistorySets, columns: Vec<Column>) -> HankelEstimates {
    let nt = sets.tests.len();
    let nh = sets.histories.len();
    let alphabet = &sets.alphabet;
    let mut p_h = DVector::zeros(nh);
    let mut p_th = DMatrix::zeros(nt, nh);
    let mut mats: Vec<Option<DMatrix<f64>>> = vec![None; sets.pairs.len()];
    let mut counts = SampleCounts::default();
    for (j, col) in columns.into_iter().enumerate() {
        p_h[j] = col.p_h;
        p_th.column_mut(j).copy_from_slice(&col.p_th);
        for (slot, v) in col.pairs.into_iter().enumerate() {
            if let Some(v) = v {
                mats[slot]
                    .get_or_insert_with(|| DMatrix::zeros(nt, nh))
                    .column_mut(j)
                    .copy_from_slice(&v);
            }
        }
        counts.history_samples.push(col.samples);
        counts.history_attempts.push(col.attempts);
    }
    let mut p_t_ao_h = vec![PairEstimate::Absent; alphabet.n_pairs()];
    for (slot, m) in mats.into_iter().enumerate() {
        p_t_ao_h[alphabet.pair_index(sets.pairs[slot])] = match m {
            Some(m) => PairEstimate::Dense(m),
            None => PairEstimate::Zero,
        };
    }
    HankelEstimates {
        sets: sets.clone(),
        p_h,
        p_th,
        p_t_ao_h,
        counts,
    }
}

/// Estimates P_H, P_{T,H} and P_{T,ao,H} by simulation.
///
/// Every occurrence of a history in the corpus contributes `repeats` trials:
/// that many hidden states are drawn from the history's posterior by
/// rejection (at most 200 resets per requested sample), and P_H is the
/// acceptance rate. Each test's action sequence is then executed once
/// from every sampled state, and likewise after each one-step action for the
/// pair matrices. Histories that are never reproduced get zero columns.
/// Entries are action-conditioned probabilities.
pub fn estimate_hankel(env: &Environment, sets: &TestHistorySets, repeats: usize, seed: u64) -> Result<HankelEstimates> {
    if repeats == 0 {
        return Err(Error::Config("repeats must be positive".into()));
    }
    let groups = group_tests(sets);
    let pair_slot: HashMap<ActObs, usize> = sets.pairs.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let mut pair_actions: Vec<usize> = sets.pairs.iter().map(|p| p.action).collect();
    pair_actions.sort_unstable();
    pair_actions.dedup();

    let columns = sets
        .histories
        .par_iter()
        .enumerate()
        .map(|(j, h)| {
            let mut rng = rng_from(seed, &[0x68616e6b, j as u64]);
            let target = repeats * sets.history_counts.get(j).copied().unwrap_or(1).max(1);
            estimate_column(env, sets, &groups, &pair_slot, &pair_actions, h, target, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(sets, columns))
}

/// Estimates the Hankel matrices from a fixed corpus by counting.
///
/// Each entry is the fraction of trajectories starting with the sequence's
/// actions whose observations also match, so a corpus of one repeated
/// trajectory yields probability one for each of its prefixes.
pub fn estimate_hankel_from_corpus(trajectories: &[Trajectory], sets: &TestHistorySets) -> Result<HankelEstimates> {
    if trajectories.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut full: HashMap<Vec<ActObs>, usize> = HashMap::new();
    let mut acts: HashMap<Vec<usize>, usize> = HashMap::new();
    for t in trajectories {
        let pairs: Vec<ActObs> = t.pairs().collect();
        for len in 0..=pairs.len() {
            *full.entry(pairs[..len].to_vec()).or_default() += 1;
            *acts.entry(pairs[..len].iter().map(|p| p.action).collect()).or_default() += 1;
        }
    }
    let prob = |seq: &[ActObs]| -> f64 {
        let a: Vec<usize> = seq.iter().map(|p| p.action).collect();
        match (full.get(seq), acts.get(&a)) {
            (Some(&n), Some(&d)) => n as f64 / d as f64,
            _ => 0.0,
        }
    };

    let nt = sets.tests.len();
    let columns = sets
        .histories
        .iter()
        .map(|h| {
            let a: Vec<usize> = h.iter().map(|p| p.action).collect();
            let samples = full.get(h.as_slice()).copied().unwrap_or(0);
            let attempts = acts.get(&a).copied().unwrap_or(0);
            let mut seq = h.clone();
            let fill = |seq: &mut Vec<ActObs>, prefix_len: usize| -> Vec<f64> {
                sets.tests
                    .iter()
                    .map(|t| {
                        seq.truncate(prefix_len);
                        seq.extend_from_slice(t);
                        prob(seq)
                    })
                    .collect()
            };
            let p_th = fill(&mut seq, h.len());
            let pairs = sets
                .pairs
                .iter()
                .map(|&p| {
                    seq.truncate(h.len());
                    seq.push(p);
                    let v = fill(&mut seq, h.len() + 1);
                    Some(v).filter(|v| v.iter().any(|&x| x != 0.0))
                })
                .collect();
            Column {
                p_h: prob(h),
                p_th,
                pairs,
                samples,
                attempts,
            }
        })
        .collect::<Vec<_>>();
    debug_assert!(columns.iter().all(|c| c.p_th.len() == nt));
    Ok(assemble(sets, columns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_test_history_sets, generate_trajectories, SetOptions, TrajectoryStep};
    use crate::envs::{exact_hankel, DomainConfig};

    fn tiger_sets(n: usize) -> (Environment, TestHistorySets) {
        let env = DomainConfig::tiger().build().unwrap();
        let corpus = generate_trajectories(&env, 300, 4, 5).unwrap();
        let opts = SetOptions {
            max_histories: n,
            ..SetOptions::default()
        };
        let sets = build_test_history_sets(&corpus, &env.alphabet(), &opts).unwrap();
        (env, sets)
    }

    #[test]
    fn estimates_are_deterministic() {
        let (env, sets) = tiger_sets(15);
        let a = estimate_hankel(&env, &sets, 20, 9).unwrap();
        let b = estimate_hankel(&env, &sets, 20, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn estimates_approach_exact_values() {
        let (env, sets) = tiger_sets(15);
        let exact = exact_hankel(&env, &sets);
        let coarse = estimate_hankel(&env, &sets, 50, 1).unwrap().max_abs_diff(&exact);
        let fine = estimate_hankel(&env, &sets, 2000, 1).unwrap().max_abs_diff(&exact);
        assert!(fine < coarse, "{fine} !< {coarse}");
        assert!(fine < 0.05, "{fine}");
    }

    #[test]
    fn repeated_trajectory_has_unit_prefixes() {
        let steps: Vec<TrajectoryStep> = [(0, 1), (1, 0), (0, 0)]
            .iter()
            .map(|&(action, obs)| TrajectoryStep {
                action,
                obs,
                reward: 0.0,
            })
            .collect();
        let corpus = vec![Trajectory { steps }; 5];
        let alphabet = crate::alphabet::Alphabet::numbered(2, 2);
        let opts = SetOptions {
            test_length: 1,
            ..SetOptions::default()
        };
        let sets = build_test_history_sets(&corpus, &alphabet, &opts).unwrap();
        let est = estimate_hankel_from_corpus(&corpus, &sets).unwrap();
        assert_eq!(sets.histories.len(), 4);
        assert!(est.p_h.iter().all(|&p| p == 1.0));
        // History (0,1) followed by test (1,0) is the observed continuation.
        let h = sets.histories.iter().position(|h| h.len() == 1).unwrap();
        let t = sets.tests.iter().position(|t| t[0] == ActObs::new(1, 0)).unwrap();
        assert_eq!(est.p_th[(t, h)], 1.0);
        assert_eq!(est.counts.history_samples[h], 5);
    }

    #[test]
    fn unreachable_history_gets_zero_column() {
        let env = DomainConfig::tiger().build().unwrap();
        let sets = TestHistorySets::new(
            env.alphabet(),
            vec![vec![], vec![ActObs::new(0, 2)]],
            vec![vec![ActObs::new(0, 0)]],
            vec![ActObs::new(0, 0)],
        );
        let est = estimate_hankel(&env, &sets, 3, 0).unwrap();
        assert_eq!(est.p_h[1], 0.0);
        assert_eq!(est.p_th[(0, 1)], 0.0);
        assert_eq!(est.counts.unreachable(), 1);
        assert_eq!(est.counts.history_attempts[1], 600);
    }
}
