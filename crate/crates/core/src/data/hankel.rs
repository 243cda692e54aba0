//! Test/history index sets and Hankel matrix estimates.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::alphabet::{ActObs, Alphabet};

pub type Sequence = Vec<ActObs>;

/// Rows (tests) and columns (histories) of the Hankel matrices, plus the
/// one-step pairs for which P_{T,ao,H} is estimated.
#[derive(Debug, Clone, PartialEq)]
pub struct TestHistorySets {
    pub alphabet: Alphabet,
    pub histories: Vec<Sequence>,
    /// Occurrences of each history in the corpus; scales its sample budget.
    pub history_counts: Vec<usize>,
    pub tests: Vec<Sequence>,
    pub pairs: Vec<ActObs>,
}

impl TestHistorySets {
    /// Index sets with every history counted once.
    pub fn new(alphabet: Alphabet, histories: Vec<Sequence>, tests: Vec<Sequence>, pairs: Vec<ActObs>) -> Self {
        let history_counts = vec![1; histories.len()];
        TestHistorySets {
            alphabet,
            histories,
            history_counts,
            tests,
            pairs,
        }
    }

    pub fn history_index(&self) -> HashMap<&[ActObs], usize> {
        self.histories
            .iter()
            .enumerate()
            .map(|(i, h)| (h.as_slice(), i))
            .collect()
    }

    /// Position of the empty history, if present.
    pub fn empty_history(&self) -> Option<usize> {
        self.histories.iter().position(|h| h.is_empty())
    }
}

/// Estimate of P_{T,ao,H} for a single pair.
#[derive(Debug, Clone, PartialEq)]
pub enum PairEstimate {
    /// The pair was not estimated (reduced-observation learning).
    Absent,
    /// Estimated and identically zero.
    Zero,
    Dense(DMatrix<f64>),
}

impl PairEstimate {
    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        if m.iter().all(|&v| v == 0.0) {
            PairEstimate::Zero
        } else {
            PairEstimate::Dense(m)
        }
    }

    pub fn is_estimated(&self) -> bool {
        !matches!(self, PairEstimate::Absent)
    }

    pub fn get(&self, t: usize, h: usize) -> f64 {
        match self {
            PairEstimate::Dense(m) => m[(t, h)],
            _ => 0.0,
        }
    }
}

/// Sample sizes behind each history column.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleCounts {
    /// Hidden-state samples that reproduced the history.
    pub history_samples: Vec<usize>,
    /// Resets spent reaching the history.
    pub history_attempts: Vec<usize>,
}

impl SampleCounts {
    /// Histories whose rejection budget ran out before any sample was found.
    pub fn unreachable(&self) -> usize {
        self.history_samples.iter().filter(|&&n| n == 0).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HankelEstimates {
    pub sets: TestHistorySets,
    /// P_H, one entry per history.
    pub p_h: DVector<f64>,
    /// P_{T,H}, tests x histories.
    pub p_th: DMatrix<f64>,
    /// P_{T,ao,H}, indexed by the alphabet's pair index.
    pub p_t_ao_h: Vec<PairEstimate>,
    pub counts: SampleCounts,
}

impl HankelEstimates {
    pub fn alphabet(&self) -> &Alphabet {
        &self.sets.alphabet
    }

    pub fn pair_estimate(&self, p: ActObs) -> &PairEstimate {
        &self.p_t_ao_h[self.sets.alphabet.pair_index(p)]
    }

    /// Largest absolute entrywise difference in P_H, P_{T,H} and P_{T,ao,H}.
    pub fn max_abs_diff(&self, other: &HankelEstimates) -> f64 {
        let mut d = (&self.p_h - &other.p_h).amax();
        d = d.max((&self.p_th - &other.p_th).amax());
        for (x, y) in self.p_t_ao_h.iter().zip(&other.p_t_ao_h) {
            for t in 0..self.p_th.nrows() {
                for h in 0..self.p_th.ncols() {
                    d = d.max((x.get(t, h) - y.get(t, h)).abs());
                }
            }
        }
        d
    }
}
