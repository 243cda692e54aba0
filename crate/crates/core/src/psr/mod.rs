//! Spectral learning of transformed PSRs and the learned-model runtime.
//!
//! Given Hankel estimates P_H, P_{T,H} and P_{T,ao,H}, with U the top-k left
//! singular vectors of P_{T,H}:
//!
//! ```text
//! b*    = U^T P_{T,H} e_empty
//! b_inf = ((U^T P_{T,H})^T)^+ P_H
//! B_ao  = U^T P_{T,ao,H} (U^T P_{T,H})^+
//! ```
//!
//! and the state update is `b' = B_ao b / (b_inf^T B_ao b)`.

pub mod io;
pub mod linalg;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::Rng;

use crate::alphabet::{ActObs, Alphabet};
use crate::data::{all_sequences, HankelEstimates, PairEstimate, TestHistorySets};
use crate::envs::{exact_hankel, sequence_probability, Environment};
use crate::error::{Error, Result};
use crate::rng::SimRng;

use linalg::{numerical_rank, pseudo_inverse, truncated_svd};

/// Normalizers at or below this are treated as zero.
pub const EPS_NORM: f64 = 1e-12;
/// Relative singular-value cutoff for pseudo-inverses.
pub const PINV_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankRule {
    Fixed(usize),
    /// Count singular values of P_{T,H} above this fraction of the largest.
    Relative(f64),
    /// Cut at the largest ratio between consecutive singular values, among
    /// those above this fraction of the largest.
    Gap(f64),
}

impl Default for RankRule {
    fn default() -> Self {
        RankRule::Relative(1e-6)
    }
}

/// Predictive state in the learned k-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveState(pub DVector<f64>);

/// One-step observation distribution for a fixed action.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsDistribution {
    /// Indexed by observation symbol; zero for symbols outside the model.
    pub probs: Vec<f64>,
    /// True when no symbol had positive predicted mass and the uniform
    /// distribution over the action's modelled symbols was used instead.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsrModel {
    alphabet: Alphabet,
    b_star: DVector<f64>,
    b_inf: DVector<f64>,
    /// Indexed by pair index; `None` for pairs outside the model.
    ops: Vec<Option<DMatrix<f64>>>,
    /// Cached b_inf^T B_ao.
    rows: Vec<Option<RowDVector<f64>>>,
    /// Singular values of the P_{T,H} estimate the model was learned from.
    pub singular_values: Vec<f64>,
    /// Free-form key/value annotations carried through serialization.
    pub meta: BTreeMap<String, String>,
}

/// Learns a PSR from Hankel estimates. Pairs whose estimate is absent are
/// left out of the model; the empty history must be among the columns.
pub fn learn(est: &HankelEstimates, rank: RankRule) -> Result<PsrModel> {
    let eps = est
        .sets
        .empty_history()
        .ok_or_else(|| Error::DegenerateEstimates("empty history missing from the history set".into()))?;
    if est.p_th.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateEstimates("P_{T,H} is identically zero".into()));
    }
    let (nt, nh) = est.p_th.shape();
    let sigma = linalg::singular_values(&est.p_th);
    let k = match rank {
        RankRule::Fixed(k) => k,
        RankRule::Relative(tol) => numerical_rank(&sigma, tol),
        RankRule::Gap(tol) => linalg::gap_rank(&sigma, tol),
    };
    if k == 0 || k > nt.min(nh) {
        return Err(Error::RankTooLarge { k, rows: nt, cols: nh });
    }
    let svd = truncated_svd(&est.p_th, k)?;
    let ut = svd.u.transpose();
    let m = &ut * &est.p_th;
    let m_pinv = pseudo_inverse(&m, PINV_CUTOFF);
    let b_star = m.column(eps).into_owned();
    let b_inf = pseudo_inverse(&m.transpose(), PINV_CUTOFF) * &est.p_h;
    let ops = est
        .p_t_ao_h
        .iter()
        .map(|pe| match pe {
            PairEstimate::Absent => None,
            PairEstimate::Zero => Some(DMatrix::zeros(k, k)),
            PairEstimate::Dense(p) => Some(&ut * p * &m_pinv),
        })
        .collect();
    Ok(PsrModel::from_parts(est.alphabet().clone(), b_star, b_inf, ops, sigma))
}

/// The PSR of a small environment learned from its analytic Hankel
/// matrices: tests are all sequences up to length `depth`, histories the
/// reachable ones among them plus the empty history.
pub fn exact_model(env: &Environment, depth: usize, rank: RankRule) -> Result<PsrModel> {
    let alphabet = env.alphabet();
    let pairs: Vec<ActObs> = alphabet.pairs().collect();
    let tests = all_sequences(&pairs, depth);
    let mut histories = vec![Vec::new()];
    histories.extend(tests.iter().filter(|h| sequence_probability(env, h) > 0.0).cloned());
    let sets = TestHistorySets::new(alphabet, histories, tests, pairs);
    learn(&exact_hankel(env, &sets), rank)
}

impl PsrModel {
    pub fn from_parts(
        alphabet: Alphabet,
        b_star: DVector<f64>,
        b_inf: DVector<f64>,
        ops: Vec<Option<DMatrix<f64>>>,
        singular_values: Vec<f64>,
    ) -> Self {
        assert_eq!(ops.len(), alphabet.n_pairs(), "one operator slot per pair");
        let rows = ops.iter().map(|b| b.as_ref().map(|b| b_inf.transpose() * b)).collect();
        PsrModel {
            alphabet,
            b_star,
            b_inf,
            ops,
            rows,
            singular_values,
            meta: BTreeMap::new(),
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn rank(&self) -> usize {
        self.b_star.len()
    }

    pub fn b_star(&self) -> &DVector<f64> {
        &self.b_star
    }

    pub fn b_inf(&self) -> &DVector<f64> {
        &self.b_inf
    }

    pub fn op(&self, p: ActObs) -> Option<&DMatrix<f64>> {
        if !self.alphabet.contains(p) {
            return None;
        }
        self.ops[self.alphabet.pair_index(p)].as_ref()
    }

    pub fn has_pair(&self, p: ActObs) -> bool {
        self.op(p).is_some()
    }

    /// Pairs with an operator, in pair-index order.
    pub fn pairs(&self) -> Vec<ActObs> {
        self.alphabet.pairs().filter(|&p| self.has_pair(p)).collect()
    }

    /// Observation symbols modelled for action `a`.
    pub fn seen_obs(&self, a: usize) -> Vec<usize> {
        (0..self.alphabet.n_obs())
            .filter(|&o| self.has_pair(ActObs::new(a, o)))
            .collect()
    }

    /// The model with operators kept only for `keep`.
    pub fn restrict_to_pairs(&self, keep: &[ActObs]) -> PsrModel {
        let mut ops = vec![None; self.ops.len()];
        for &p in keep {
            if self.alphabet.contains(p) {
                let i = self.alphabet.pair_index(p);
                ops[i] = self.ops[i].clone();
            }
        }
        let mut m = PsrModel::from_parts(
            self.alphabet.clone(),
            self.b_star.clone(),
            self.b_inf.clone(),
            ops,
            self.singular_values.clone(),
        );
        m.meta = self.meta.clone();
        m
    }

    pub fn initial_state(&self) -> PredictiveState {
        PredictiveState(self.b_star.clone())
    }

    /// b_inf^T B_ao b, unclamped; `None` if the pair is outside the model.
    pub fn raw_prob(&self, b: &PredictiveState, p: ActObs) -> Option<f64> {
        if !self.alphabet.contains(p) {
            return None;
        }
        self.rows[self.alphabet.pair_index(p)].as_ref().map(|r| r.dot(&b.0.transpose()))
    }

    /// Predicted observation distribution for action `a`: negative values are
    /// clamped and the rest renormalized.
    pub fn obs_distribution(&self, b: &PredictiveState, a: usize) -> Result<ObsDistribution> {
        let n_obs = self.alphabet.n_obs();
        let mut probs = vec![0.0; n_obs];
        let mut modelled = 0;
        for (o, p) in probs.iter_mut().enumerate() {
            if let Some(v) = self.raw_prob(b, ActObs::new(a, o)) {
                modelled += 1;
                *p = v.max(0.0);
            }
        }
        if modelled == 0 {
            return Err(Error::NoSeenObservation(a));
        }
        let z: f64 = probs.iter().sum();
        if z > EPS_NORM && z.is_finite() {
            probs.iter_mut().for_each(|p| *p /= z);
            return Ok(ObsDistribution { probs, fallback: false });
        }
        for (o, p) in probs.iter_mut().enumerate() {
            *p = if self.has_pair(ActObs::new(a, o)) {
                1.0 / modelled as f64
            } else {
                0.0
            };
        }
        Ok(ObsDistribution { probs, fallback: true })
    }

    /// Samples an observation for action `a`; the flag reports a fallback.
    pub fn sample_obs(&self, b: &PredictiveState, a: usize, rng: &mut SimRng) -> Result<(usize, bool)> {
        let d = self.obs_distribution(b, a)?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = 0;
        for (o, &p) in d.probs.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last = o;
                if u < acc {
                    return Ok((o, d.fallback));
                }
            }
        }
        Ok((last, d.fallback))
    }

    /// `b' = B_ao b / (b_inf^T B_ao b)`.
    pub fn update_state(&self, b: &PredictiveState, a: usize, o: usize) -> Result<PredictiveState> {
        let p = ActObs::new(a, o);
        let op = self.op(p).ok_or(Error::UnknownPair { action: a, obs: o })?;
        let next = op * &b.0;
        let z = self.b_inf.dot(&next);
        if !(z > EPS_NORM) || !z.is_finite() {
            return Err(Error::ImpossibleTransition(z));
        }
        Ok(PredictiveState(next / z))
    }

    /// b_inf^T B_{a_n o_n} ... B_{a_1 o_1} b*; zero if a pair is outside
    /// the model.
    pub fn predict_sequence(&self, seq: &[ActObs]) -> f64 {
        let mut b = self.b_star.clone();
        for &p in seq {
            match self.op(p) {
                Some(op) => b = op * b,
                None => return 0.0,
            }
        }
        self.b_inf.dot(&b)
    }

    /// Observation to feed the state update after the real environment
    /// emitted `o_real`: itself when modelled, otherwise a uniformly random
    /// modelled symbol for `a`.
    pub fn map_unseen_observation(&self, a: usize, o_real: usize, rng: &mut SimRng) -> Result<usize> {
        if self.has_pair(ActObs::new(a, o_real)) {
            return Ok(o_real);
        }
        let seen = self.seen_obs(a);
        if seen.is_empty() {
            return Err(Error::NoSeenObservation(a));
        }
        Ok(seen[rng.random_range(0..seen.len())])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{all_sequences, TestHistorySets};
    use crate::envs::{exact_hankel, sequence_probability, tiger::*, DomainConfig};

    fn tiger_exact_model(rank: RankRule) -> (crate::envs::Environment, PsrModel) {
        let env = DomainConfig::tiger().build().unwrap();
        let alphabet = env.alphabet();
        let pairs: Vec<ActObs> = alphabet.pairs().collect();
        let mut histories = vec![vec![]];
        histories.extend(all_sequences(&pairs, 2));
        let sets = TestHistorySets::new(alphabet, histories, all_sequences(&pairs, 2), pairs);
        let est = exact_hankel(&env, &sets);
        (env.clone(), learn(&est, rank).unwrap())
    }

    #[test]
    fn exact_tiger_hankel_has_rank_two() {
        let (_, m) = tiger_exact_model(RankRule::Relative(1e-9));
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn exact_model_reproduces_sequence_probabilities() {
        let (env, m) = tiger_exact_model(RankRule::Fixed(2));
        let pairs: Vec<ActObs> = env.alphabet().pairs().collect();
        for seq in all_sequences(&pairs, 3) {
            let want = sequence_probability(&env, &seq);
            let got = m.predict_sequence(&seq);
            assert!((want - got).abs() < 1e-9, "{seq:?}: {got} vs {want}");
        }
        assert!((m.predict_sequence(&[]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn listen_prediction_and_update() {
        let (_, m) = tiger_exact_model(RankRule::Fixed(2));
        let p = m.predict_sequence(&[ActObs::new(LISTEN, HEAR_LEFT)]);
        assert!((p - 0.5).abs() < 1e-9);
        let b = m.update_state(&m.initial_state(), LISTEN, HEAR_LEFT).unwrap();
        let d = m.obs_distribution(&b, LISTEN).unwrap();
        assert!(!d.fallback);
        // 0.85^2 + 0.15^2 after one hear-left.
        assert!((d.probs[HEAR_LEFT] - 0.745).abs() < 1e-9);
        assert!(d.probs.iter().all(|&p| p >= 0.0));
        assert!((d.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn impossible_update_is_reported() {
        let (_, m) = tiger_exact_model(RankRule::Fixed(2));
        // Listening never produces a door reward.
        let err = m.update_state(&m.initial_state(), LISTEN, 2).unwrap_err();
        assert!(matches!(err, Error::ImpossibleTransition(_)));
    }

    #[test]
    fn restricted_model_falls_back_and_maps_unseen() {
        let (_, m) = tiger_exact_model(RankRule::Fixed(2));
        let keep = [ActObs::new(LISTEN, HEAR_LEFT), ActObs::new(OPEN_LEFT, 2)];
        let r = m.restrict_to_pairs(&keep);
        assert_eq!(r.pairs(), keep.to_vec());
        assert_eq!(r.seen_obs(LISTEN), vec![HEAR_LEFT]);
        assert!(matches!(
            r.obs_distribution(&r.initial_state(), OPEN_RIGHT),
            Err(Error::NoSeenObservation(OPEN_RIGHT))
        ));
        assert!(matches!(
            r.update_state(&r.initial_state(), LISTEN, HEAR_RIGHT),
            Err(Error::UnknownPair { .. })
        ));
        let mut rng = crate::rng::rng_from(0, &[]);
        assert_eq!(r.map_unseen_observation(LISTEN, HEAR_RIGHT, &mut rng).unwrap(), HEAR_LEFT);
        assert!(matches!(
            r.map_unseen_observation(OPEN_RIGHT, 2, &mut rng),
            Err(Error::NoSeenObservation(OPEN_RIGHT))
        ));
        let z = PredictiveState(DVector::zeros(2));
        let d = r.obs_distribution(&z, LISTEN).unwrap();
        assert!(d.fallback);
        assert_eq!(d.probs[HEAR_LEFT], 1.0);
    }
}
