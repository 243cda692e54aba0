//! RockSample(n, k).
//!
//! A robot on an n x n grid with k rocks of unknown quality. Moves are
//! deterministic; bumping into the north, south or west wall is a no-op and
//! moving east off the grid enters the terminal exit state (+10). Sampling a
//! good rock pays +10 and turns it bad; sampling a bad rock or an empty cell
//! pays -10. Checking rock i reports its quality correctly with probability
//! 0.5 * (1 + 2^(-d / d0)), d the Euclidean distance to the rock.

use crate::error::{Error, Result};
use crate::rng::derive_seed;

use super::{PomdpSpec, PromotedReward, PromotionMode, RewardObservationMap, SpecTables, Transition};

pub const NORTH: usize = 0;
pub const SOUTH: usize = 1;
pub const EAST: usize = 2;
pub const WEST: usize = 3;
pub const SAMPLE: usize = 4;

pub const NONE: usize = 0;
pub const GOOD: usize = 1;
pub const BAD: usize = 2;

pub fn check(i: usize) -> usize {
    5 + i
}

/// Grid size, rock cells `(x, y)` and the robot's start cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RockSampleLayout {
    pub size: usize,
    pub rocks: Vec<(usize, usize)>,
    pub start: (usize, usize),
}

impl RockSampleLayout {
    pub fn new(size: usize, rocks: Vec<(usize, usize)>) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidSpec("empty grid".into()));
        }
        if rocks.len() > 16 {
            return Err(Error::InvalidSpec("at most 16 rocks are supported".into()));
        }
        for (i, &(x, y)) in rocks.iter().enumerate() {
            if x >= size || y >= size {
                return Err(Error::InvalidSpec(format!("rock {i} at ({x},{y}) off the grid")));
            }
            if rocks[..i].contains(&(x, y)) {
                return Err(Error::InvalidSpec(format!("two rocks at ({x},{y})")));
            }
        }
        Ok(RockSampleLayout {
            size,
            rocks,
            start: (0, size / 2),
        })
    }

    /// Fixed pseudo-random layout: distinct cells, none on the start cell.
    pub fn generate(size: usize, k: usize) -> Result<Self> {
        let start = (0, size / 2);
        let mut cells: Vec<(usize, usize)> = (0..size)
            .flat_map(|y| (0..size).map(move |x| (x, y)))
            .filter(|&c| c != start)
            .collect();
        if k > cells.len() {
            return Err(Error::InvalidSpec(format!("{k} rocks do not fit on a {size}x{size} grid")));
        }
        let mut state = derive_seed(size as u64, &[k as u64, 0x726f636b]);
        for i in (1..cells.len()).rev() {
            state = derive_seed(state, &[i as u64]);
            let j = (state % (i as u64 + 1)) as usize;
            cells.swap(i, j);
        }
        cells.truncate(k);
        Self::new(size, cells)
    }
}

pub fn rocksample(
    layout: &RockSampleLayout,
    sensor_d0: f64,
    discount: f64,
) -> Result<(PomdpSpec, RewardObservationMap)> {
    let n = layout.size;
    let k = layout.rocks.len();
    let masks = 1usize << k;
    let terminal_state = n * n * masks;
    let n_states = terminal_state + 1;
    let n_actions = 5 + k;
    let index = |x: usize, y: usize, mask: usize| ((y * n + x) << k) | mask;

    let mut transitions = Vec::with_capacity(n_states * n_actions);
    let mut observations = vec![Vec::new(); n_actions * n_states];
    for s in 0..n_states {
        if s == terminal_state {
            for _ in 0..n_actions {
                transitions.push(vec![Transition {
                    next: s,
                    prob: 1.0,
                    reward: 0.0,
                }]);
            }
            continue;
        }
        let mask = s & (masks - 1);
        let cell = s >> k;
        let (x, y) = (cell % n, cell / n);
        for a in 0..n_actions {
            let (next, reward) = match a {
                NORTH => (index(x, (y + 1).min(n - 1), mask), 0.0),
                SOUTH => (index(x, y.saturating_sub(1), mask), 0.0),
                EAST if x + 1 == n => (terminal_state, 10.0),
                EAST => (index(x + 1, y, mask), 0.0),
                WEST => (index(x.saturating_sub(1), y, mask), 0.0),
                SAMPLE => match layout.rocks.iter().position(|&r| r == (x, y)) {
                    Some(i) if mask & (1 << i) != 0 => (index(x, y, mask & !(1 << i)), 10.0),
                    _ => (s, -10.0),
                },
                _ => (s, 0.0),
            };
            transitions.push(vec![Transition {
                next,
                prob: 1.0,
                reward,
            }]);
        }
    }
    for a in 0..n_actions {
        for next in 0..n_states {
            let row = if a >= 5 && next != terminal_state {
                let i = a - 5;
                let cell = next >> k;
                let (x, y) = ((cell % n) as f64, (cell / n) as f64);
                let (rx, ry) = (layout.rocks[i].0 as f64, layout.rocks[i].1 as f64);
                let dist = ((x - rx).powi(2) + (y - ry).powi(2)).sqrt();
                let accuracy = 0.5 * (1.0 + (-dist / sensor_d0).exp2());
                let good = next & (1 << i) != 0;
                let (right, wrong) = if good { (GOOD, BAD) } else { (BAD, GOOD) };
                if accuracy >= 1.0 {
                    vec![(right, 1.0)]
                } else {
                    vec![(right, accuracy), (wrong, 1.0 - accuracy)]
                }
            } else {
                vec![(NONE, 1.0)]
            };
            observations[a * n_states + next] = row;
        }
    }

    let mut state_names = Vec::with_capacity(n_states);
    for s in 0..terminal_state {
        let cell = s >> k;
        state_names.push(format!("({},{})#{:0k$b}", cell % n, cell / n, s & (masks - 1)));
    }
    state_names.push("exit".into());
    let mut action_names: Vec<String> =
        ["north", "south", "east", "west", "sample"].iter().map(|s| s.to_string()).collect();
    action_names.extend((0..k).map(|i| format!("check{i}")));

    let mut initial = vec![0.0; n_states];
    let (sx, sy) = layout.start;
    for mask in 0..masks {
        initial[index(sx, sy, mask)] = 1.0 / masks as f64;
    }
    let mut terminal = vec![false; n_states];
    terminal[terminal_state] = true;

    let spec = PomdpSpec::new(SpecTables {
        name: format!("rocksample({n},{k})"),
        state_names,
        action_names,
        obs_names: vec!["none".into(), "good".into(), "bad".into()],
        transitions,
        observations,
        action_cost: vec![0.0; n_actions],
        initial,
        terminal,
        discount,
    })?;
    let map = RewardObservationMap::new(
        &spec,
        PromotionMode::Replace,
        vec![
            PromotedReward {
                value: 10.0,
                label: "r+10".into(),
            },
            PromotedReward {
                value: -10.0,
                label: "r-10".into(),
            },
        ],
        &[(EAST, 0)],
    )?;
    Ok((spec, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{reset, step, DomainConfig, HiddenState};
    use crate::rng::rng_from;

    #[test]
    fn state_count() {
        for (n, k) in [(3, 2), (5, 5), (5, 7)] {
            let env = DomainConfig::rocksample(n, k).build().unwrap();
            assert_eq!(env.spec.n_states(), n * n * (1 << k) + 1);
        }
        assert_eq!(DomainConfig::rocksample(3, 2).build().unwrap().spec.n_states(), 37);
    }

    #[test]
    fn reset_fixes_robot_and_flips_fair_coins() {
        let env = DomainConfig::rocksample(5, 5).build().unwrap();
        let start = 5 / 2 * 5;
        let mut good = [0usize; 5];
        let trials = 10_000;
        for seed in 0..trials {
            let s = reset(&env.spec, seed).0;
            assert_eq!(s >> 5, start);
            for (i, g) in good.iter_mut().enumerate() {
                *g += (s >> i) & 1;
            }
        }
        for g in good {
            assert!((g as f64 / trials as f64 - 0.5).abs() < 0.02);
        }
    }

    #[test]
    fn exit_terminates_and_sampling_spoils_rock() {
        let layout = RockSampleLayout::new(3, vec![(1, 1), (2, 0)]).unwrap();
        let (spec, map) = rocksample(&layout, 20.0, 0.95).unwrap();
        let mut rng = rng_from(0, &[]);
        // Robot at (1,1) with both rocks good.
        let s = HiddenState(((1 * 3 + 1) << 2) | 0b11);
        let out = step(&spec, s, SAMPLE, &mut rng).unwrap();
        assert_eq!(out.reward, 10.0);
        assert_eq!(out.next.0 & 1, 0);
        let again = step(&spec, out.next, SAMPLE, &mut rng).unwrap();
        assert_eq!(again.reward, -10.0);
        let mut s = out.next;
        let mut last = None;
        for _ in 0..2 {
            let o = step(&spec, s, EAST, &mut rng).unwrap();
            s = o.next;
            last = Some(o);
        }
        let o = last.unwrap();
        assert!(o.terminal);
        assert_eq!(o.reward, 10.0);
        let sym = map.augment(EAST, o.obs, o.state_reward).unwrap();
        assert!(map.is_terminal(EAST, sym));
        assert!(!map.is_terminal(SAMPLE, sym));
    }

    #[test]
    fn check_accuracy_decays_with_distance() {
        let layout = RockSampleLayout::new(5, vec![(4, 2)]).unwrap();
        let (spec, _) = rocksample(&layout, 20.0, 0.95).unwrap();
        let at = |x: usize, y: usize| ((y * 5 + x) << 1) | 1;
        let acc = |s: usize| {
            spec.observations(check(0), s)
                .iter()
                .find(|o| o.0 == GOOD)
                .map(|o| o.1)
                .unwrap()
        };
        assert!((acc(at(4, 2)) - 1.0).abs() < 1e-12);
        let far = acc(at(0, 2));
        assert!((far - 0.5 * (1.0 + 2f64.powf(-4.0 / 20.0))).abs() < 1e-12);
        assert!(far < acc(at(2, 2)));
    }
}
