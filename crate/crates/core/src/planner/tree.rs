//! Search tree statistics and the UCB / greedy action rules.

use rand::Rng;

use crate::rng::SimRng;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ActionStats {
    /// N(h,a).
    pub visits: u64,
    /// V(h,a), running mean of simulation returns.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchNode {
    /// N(h).
    pub visits: u64,
    pub actions: Vec<ActionStats>,
    /// Reached through a terminal promoted observation.
    pub terminal: bool,
    children: Vec<((usize, usize), NodeId)>,
}

impl SearchNode {
    fn new(n_actions: usize, terminal: bool) -> Self {
        SearchNode {
            visits: 0,
            actions: vec![ActionStats::default(); n_actions],
            terminal,
            children: Vec::new(),
        }
    }

    pub fn child(&self, a: usize, o: usize) -> Option<NodeId> {
        self.children.iter().find(|(k, _)| *k == (a, o)).map(|&(_, id)| id)
    }

    pub fn children(&self) -> impl Iterator<Item = ((usize, usize), NodeId)> + '_ {
        self.children.iter().copied()
    }

    /// Records one simulation return for action `a`.
    pub fn update(&mut self, a: usize, r: f64) {
        self.visits += 1;
        let s = &mut self.actions[a];
        s.visits += 1;
        s.value += (r - s.value) / s.visits as f64;
    }
}

/// Arena-allocated search tree rooted at the current real history.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchTree {
    nodes: Vec<SearchNode>,
    n_actions: usize,
}

impl SearchTree {
    pub fn new(n_actions: usize) -> Self {
        SearchTree {
            nodes: vec![SearchNode::new(n_actions, false)],
            n_actions,
        }
    }

    pub const ROOT: NodeId = 0;

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> &SearchNode {
        &self.nodes[Self::ROOT]
    }

    pub fn node(&self, id: NodeId) -> &SearchNode {
        &self.nodes[id]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut SearchNode {
        &mut self.nodes[id]
    }

    pub fn add_child(&mut self, parent: NodeId, a: usize, o: usize, terminal: bool) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(SearchNode::new(self.n_actions, terminal));
        self.nodes[parent].children.push(((a, o), id));
        id
    }

    /// Makes the child under (a, o) the new root and drops everything else.
    /// Returns false (and leaves a fresh root) when that child does not exist.
    pub fn advance(&mut self, a: usize, o: usize) -> bool {
        let Some(start) = self.root().child(a, o) else {
            *self = SearchTree::new(self.n_actions);
            return false;
        };
        let mut old = std::mem::take(&mut self.nodes);
        let mut new_nodes = Vec::new();
        let mut queue = vec![start];
        let mut remap = std::collections::HashMap::new();
        remap.insert(start, 0);
        while let Some(id) = queue.pop() {
            let mut node = std::mem::replace(&mut old[id], SearchNode::new(0, false));
            for (_, c) in node.children.iter_mut() {
                let next = remap.len();
                remap.insert(*c, next);
                queue.push(*c);
                *c = next;
            }
            let slot = remap[&id];
            if new_nodes.len() <= slot {
                new_nodes.resize_with(slot + 1, || SearchNode::new(0, false));
            }
            new_nodes[slot] = node;
        }
        self.nodes = new_nodes;
        true
    }
}

fn argmax_uniform(n: usize, score: impl Fn(usize) -> Option<f64>, rng: &mut SimRng) -> Option<usize> {
    let mut best = f64::NEG_INFINITY;
    let mut ties: Vec<usize> = Vec::new();
    for a in 0..n {
        let Some(v) = score(a) else { continue };
        if v > best {
            best = v;
            ties.clear();
            ties.push(a);
        } else if v == best {
            ties.push(a);
        }
    }
    match ties.len() {
        0 => None,
        1 => Some(ties[0]),
        k => Some(ties[rng.random_range(0..k)]),
    }
}

/// UCB1: untried actions first (uniformly), then the largest
/// V(h,a) + c sqrt(ln N(h) / N(h,a)); ties broken uniformly.
pub fn ucb_select(node: &SearchNode, c: f64, rng: &mut SimRng) -> usize {
    let n = node.actions.len();
    let untried: Vec<usize> = (0..n).filter(|&a| node.actions[a].visits == 0).collect();
    if !untried.is_empty() {
        return untried[rng.random_range(0..untried.len())];
    }
    let log_n = (node.visits.max(1) as f64).ln();
    argmax_uniform(
        n,
        |a| {
            let s = node.actions[a];
            Some(s.value + c * (log_n / s.visits as f64).sqrt())
        },
        rng,
    )
    .expect("nodes have at least one action")
}

/// Largest V(h,a) among tried actions, ties uniform; uniform over all
/// actions when none has been tried.
pub fn greedy_action(node: &SearchNode, rng: &mut SimRng) -> usize {
    let n = node.actions.len();
    argmax_uniform(n, |a| (node.actions[a].visits > 0).then_some(node.actions[a].value), rng)
        .unwrap_or_else(|| rng.random_range(0..n))
}
