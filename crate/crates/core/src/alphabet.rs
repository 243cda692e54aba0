//! The (action, augmented observation) alphabet shared by data, models and
//! planners.

use std::fmt;

/// One step of a history or test: an action and the augmented observation
/// that followed it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActObs {
    pub action: usize,
    pub obs: usize,
}

impl ActObs {
    pub fn new(action: usize, obs: usize) -> Self {
        ActObs { action, obs }
    }
}

impl fmt::Display for ActObs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.action, self.obs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    pub action_names: Vec<String>,
    pub obs_names: Vec<String>,
}

impl Alphabet {
    pub fn new(action_names: Vec<String>, obs_names: Vec<String>) -> Self {
        Alphabet {
            action_names,
            obs_names,
        }
    }

    /// Anonymous alphabet with numbered symbols.
    pub fn numbered(n_actions: usize, n_obs: usize) -> Self {
        Alphabet {
            action_names: (0..n_actions).map(|a| format!("a{a}")).collect(),
            obs_names: (0..n_obs).map(|o| format!("o{o}")).collect(),
        }
    }

    pub fn n_actions(&self) -> usize {
        self.action_names.len()
    }

    pub fn n_obs(&self) -> usize {
        self.obs_names.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.n_actions() * self.n_obs()
    }

    /// Dense index of a pair, action-major.
    pub fn pair_index(&self, p: ActObs) -> usize {
        p.action * self.n_obs() + p.obs
    }

    pub fn pair(&self, index: usize) -> ActObs {
        ActObs::new(index / self.n_obs(), index % self.n_obs())
    }

    pub fn pairs(&self) -> impl Iterator<Item = ActObs> + '_ {
        (0..self.n_pairs()).map(|i| self.pair(i))
    }

    pub fn contains(&self, p: ActObs) -> bool {
        p.action < self.n_actions() && p.obs < self.n_obs()
    }

    pub fn pair_name(&self, p: ActObs) -> String {
        format!("{}/{}", self.action_names[p.action], self.obs_names[p.obs])
    }
}
