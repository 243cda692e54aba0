//! Flat `key = value` experiment configuration.
//!
//! Keys are grouped by prefix: `env.*` (domain), `data.*` (corpus and
//! Hankel sets), `psr.*` (learning), `planner.*` (search) and
//! `experiment.*` (episodes, methods, seeds). Blank lines and `#` comments
//! are ignored. Lists are comma separated.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::data::{PairSelection, SetOptions};
use crate::envs::DomainConfig;
use crate::error::{Error, Result};
use crate::planner::PlannerConfig;
use crate::psr::RankRule;

/// A planner evaluated by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    PsrMcts,
    /// PSR-MCTS restricted to the pairs seen in the training corpus.
    PsrMctsRo,
    PomcpTrue,
    Random,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::PsrMcts, Method::PsrMctsRo, Method::PomcpTrue, Method::Random];

    pub fn name(self) -> &'static str {
        match self {
            Method::PsrMcts => "psr-mcts",
            Method::PsrMctsRo => "psr-mcts-ro",
            Method::PomcpTrue => "pomcp-true",
            Method::Random => "random",
        }
    }

    pub fn needs_model(self) -> bool {
        matches!(self, Method::PsrMcts | Method::PsrMctsRo)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}` (expected one of psr-mcts, psr-mcts-ro, pomcp-true, random)")))
    }
}

/// Which return the summary averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SummaryReturn {
    Undiscounted,
    Discounted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub domain: DomainConfig,
    pub trajectories: usize,
    pub trajectory_length: usize,
    pub sets: SetOptions,
    /// Posterior samples per history occurrence in the rejection estimator.
    pub repeats: usize,
    pub rank: RankRule,
    pub n_sims: Vec<usize>,
    pub c: f64,
    pub max_depth: usize,
    pub gamma: f64,
    pub episodes: usize,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub summary_return: SummaryReturn,
}

const ENV_KEYS_TIGER: &[&str] = &["env.listen_accuracy", "env.discount"];
const ENV_KEYS_POSYADMIN: &[&str] = &["env.computers", "env.fail_prob", "env.discount"];
const ENV_KEYS_ROCKSAMPLE: &[&str] = &["env.size", "env.rocks", "env.sensor_d0", "env.discount", "env.layout"];

const COMMON_KEYS: &[&str] = &[
    "env.domain",
    "data.trajectories",
    "data.length",
    "data.test_length",
    "data.repeats",
    "data.max_histories",
    "data.test_pairs",
    "data.ao_pairs",
    "psr.rank",
    "planner.n_sims",
    "planner.c",
    "planner.max_depth",
    "planner.gamma",
    "experiment.episodes",
    "experiment.methods",
    "experiment.seeds",
    "experiment.summary_return",
];

/// Every key accepted by some domain.
pub fn known_keys() -> Vec<&'static str> {
    let mut keys: Vec<&str> = COMMON_KEYS.to_vec();
    for k in ENV_KEYS_TIGER.iter().chain(ENV_KEYS_POSYADMIN).chain(ENV_KEYS_ROCKSAMPLE) {
        if !keys.contains(k) {
            keys.push(k);
        }
    }
    keys
}

fn domain_keys(domain: &str) -> Result<&'static [&'static str]> {
    match domain {
        "tiger" => Ok(ENV_KEYS_TIGER),
        "posyadmin" => Ok(ENV_KEYS_POSYADMIN),
        "rocksample" => Ok(ENV_KEYS_ROCKSAMPLE),
        other => Err(Error::Config(format!("unknown domain `{other}` (expected tiger, posyadmin or rocksample)"))),
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn pair_selection_name(s: PairSelection) -> &'static str {
    match s {
        PairSelection::Full => "full",
        PairSelection::Observed => "observed",
    }
}

fn rank_text(r: RankRule) -> String {
    match r {
        RankRule::Fixed(k) => k.to_string(),
        RankRule::Relative(t) => format!("relative:{t:?}"),
        RankRule::Gap(t) => format!("gap:{t:?}"),
    }
}

/// Parses `gap:TOL`, `relative:TOL` or a fixed rank.
pub fn parse_rank(s: &str) -> Result<RankRule> {
    let bad = || Error::Config(format!("bad rank `{s}` (expected an integer, relative:TOL or gap:TOL)"));
    let tol = |t: &str| -> Result<f64> {
        let v: f64 = t.parse().map_err(|_| bad())?;
        if v > 0.0 && v < 1.0 {
            Ok(v)
        } else {
            Err(bad())
        }
    };
    match s.split_once(':') {
        Some(("gap", t)) => Ok(RankRule::Gap(tol(t)?)),
        Some(("relative", t)) => Ok(RankRule::Relative(tol(t)?)),
        Some(_) => Err(bad()),
        None => s.parse().map(RankRule::Fixed).map_err(|_| bad()),
    }
}

fn layout_text(cells: &[(usize, usize)]) -> String {
    cells.iter().map(|(x, y)| format!("{x},{y}")).collect::<Vec<_>>().join(";")
}

fn parse_layout(s: &str) -> Result<Vec<(usize, usize)>> {
    s.split(';')
        .map(|cell| {
            cell.split_once(',')
                .and_then(|(x, y)| Some((x.trim().parse().ok()?, y.trim().parse().ok()?)))
                .ok_or_else(|| Error::Config(format!("bad rock cell `{cell}` in env.layout (expected x,y)")))
        })
        .collect()
}

/// Ordered key/value view of a configuration.
pub type ConfigMap = BTreeMap<String, String>;

/// Parses `key = value` lines. Duplicate keys are an error.
pub fn parse_pairs(text: &str) -> Result<ConfigMap> {
    let mut out = ConfigMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, format!("expected key = value, got `{line}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::parse(i + 1, "empty key"));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::parse(i + 1, format!("duplicate key `{k}`")));
        }
    }
    Ok(out)
}

fn get<T: FromStr>(map: &mut ConfigMap, key: &str, default: T) -> Result<T> {
    match map.remove(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| Error::Config(format!("bad value `{v}` for {key}"))),
    }
}

fn get_list<T: FromStr>(map: &mut ConfigMap, key: &str, default: Vec<T>) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    match map.remove(key) {
        None => Ok(default),
        Some(v) => v
            .split(',')
            .map(|t| {
                let t = t.trim();
                t.parse()
                    .map_err(|e| Error::Config(format!("bad list item `{t}` for {key}: {e}")))
            })
            .collect(),
    }
}

fn get_pairs(map: &mut ConfigMap, key: &str, default: PairSelection) -> Result<PairSelection> {
    match map.remove(key).as_deref() {
        None => Ok(default),
        Some("full") => Ok(PairSelection::Full),
        Some("observed") => Ok(PairSelection::Observed),
        Some(v) => Err(Error::Config(format!("bad value `{v}` for {key} (expected full or observed)"))),
    }
}

impl ExperimentConfig {
    /// Defaults for a domain: reward-range exploration constant, episode
    /// horizon as search depth, every method.
    pub fn for_domain(domain: DomainConfig) -> Result<Self> {
        let env = domain.build()?;
        let (lo, hi) = env.spec.reward_range();
        Ok(ExperimentConfig {
            trajectories: 200,
            trajectory_length: 6,
            sets: SetOptions::default(),
            repeats: 50,
            rank: RankRule::default(),
            n_sims: vec![1000],
            c: hi - lo,
            max_depth: env.max_steps(),
            gamma: 0.95,
            episodes: 100,
            methods: Method::ALL.to_vec(),
            seeds: vec![1],
            summary_return: SummaryReturn::Undiscounted,
            domain,
        })
    }

    pub fn planner(&self, n_sims: usize) -> PlannerConfig {
        PlannerConfig {
            n_sims,
            max_depth: self.max_depth,
            c: self.c,
            gamma: self.gamma,
        }
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        self.domain.build()?;
        if self.episodes == 0 {
            return Err(Error::Config("experiment.episodes must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("experiment.methods is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("experiment.seeds is empty".into()));
        }
        if self.n_sims.is_empty() {
            return Err(Error::Config("planner.n_sims is empty".into()));
        }
        for &n in &self.n_sims {
            self.planner(n).validate()?;
        }
        if self.methods.iter().any(|m| m.needs_model()) {
            if self.trajectories == 0 || self.trajectory_length == 0 {
                return Err(Error::Config("learning needs data.trajectories and data.length >= 1".into()));
            }
            if !(1..=2).contains(&self.sets.test_length) {
                return Err(Error::InvalidTestLength(self.sets.test_length));
            }
            if self.repeats == 0 {
                return Err(Error::Config("data.repeats must be at least 1".into()));
            }
            if self.sets.max_histories == 0 {
                return Err(Error::Config("data.max_histories must be at least 1".into()));
            }
            if self.rank == RankRule::Fixed(0) {
                return Err(Error::Config("psr.rank must be at least 1".into()));
            }
        }
        Ok(())
    }

    pub fn env_pairs(&self) -> ConfigMap {
        let mut m = ConfigMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        match &self.domain {
            DomainConfig::Tiger {
                listen_accuracy,
                discount,
            } => {
                put("env.domain", "tiger".into());
                put("env.listen_accuracy", format!("{listen_accuracy:?}"));
                put("env.discount", format!("{discount:?}"));
            }
            DomainConfig::PoSysadmin {
                computers,
                fail_prob,
                discount,
            } => {
                put("env.domain", "posyadmin".into());
                put("env.computers", computers.to_string());
                put("env.fail_prob", format!("{fail_prob:?}"));
                put("env.discount", format!("{discount:?}"));
            }
            DomainConfig::RockSample {
                size,
                rocks,
                sensor_d0,
                discount,
                layout,
            } => {
                put("env.domain", "rocksample".into());
                put("env.size", size.to_string());
                put("env.rocks", rocks.to_string());
                put("env.sensor_d0", format!("{sensor_d0:?}"));
                put("env.discount", format!("{discount:?}"));
                if let Some(cells) = layout {
                    put("env.layout", layout_text(cells));
                }
            }
        }
        m
    }

    pub fn to_pairs(&self) -> ConfigMap {
        let mut m = self.env_pairs();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("data.trajectories", self.trajectories.to_string());
        put("data.length", self.trajectory_length.to_string());
        put("data.test_length", self.sets.test_length.to_string());
        put("data.repeats", self.repeats.to_string());
        put("data.max_histories", self.sets.max_histories.to_string());
        put("data.test_pairs", pair_selection_name(self.sets.test_pairs).into());
        put("data.ao_pairs", pair_selection_name(self.sets.ao_pairs).into());
        put("psr.rank", rank_text(self.rank));
        put("planner.n_sims", join(&self.n_sims));
        put("planner.c", format!("{:?}", self.c));
        put("planner.max_depth", self.max_depth.to_string());
        put("planner.gamma", format!("{:?}", self.gamma));
        put("experiment.episodes", self.episodes.to_string());
        put("experiment.methods", join(&self.methods));
        put("experiment.seeds", join(&self.seeds));
        put(
            "experiment.summary_return",
            match self.summary_return {
                SummaryReturn::Undiscounted => "undiscounted".into(),
                SummaryReturn::Discounted => "discounted".into(),
            },
        );
        m
    }

    pub fn to_text(&self) -> String {
        self.to_pairs()
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Builds a config from key/value pairs. `env.domain` is required; every
    /// other key falls back to the domain defaults. Unknown keys, and keys
    /// belonging to another domain, are errors.
    pub fn from_pairs(pairs: &ConfigMap) -> Result<Self> {
        let mut map = pairs.clone();
        let domain_name = map
            .remove("env.domain")
            .ok_or_else(|| Error::Config("missing env.domain".into()))?;
        let allowed = domain_keys(&domain_name)?;
        for k in map.keys() {
            if k.starts_with("env.") && !allowed.contains(&k.as_str()) {
                if known_keys().contains(&k.as_str()) {
                    return Err(Error::Config(format!("{k} does not apply to domain {domain_name}")));
                }
                return Err(Error::Config(format!("unknown key {k}")));
            }
        }

        let domain = match domain_name.as_str() {
            "tiger" => {
                let DomainConfig::Tiger {
                    listen_accuracy,
                    discount,
                } = DomainConfig::tiger()
                else {
                    unreachable!()
                };
                DomainConfig::Tiger {
                    listen_accuracy: get(&mut map, "env.listen_accuracy", listen_accuracy)?,
                    discount: get(&mut map, "env.discount", discount)?,
                }
            }
            "posyadmin" => {
                let computers = get(&mut map, "env.computers", 3)?;
                let DomainConfig::PoSysadmin {
                    fail_prob, discount, ..
                } = DomainConfig::posyadmin(computers)
                else {
                    unreachable!()
                };
                DomainConfig::PoSysadmin {
                    computers,
                    fail_prob: get(&mut map, "env.fail_prob", fail_prob)?,
                    discount: get(&mut map, "env.discount", discount)?,
                }
            }
            _ => {
                let size = get(&mut map, "env.size", 5)?;
                let rocks = get(&mut map, "env.rocks", 5)?;
                let DomainConfig::RockSample {
                    sensor_d0, discount, ..
                } = DomainConfig::rocksample(size, rocks)
                else {
                    unreachable!()
                };
                let layout = match map.remove("env.layout") {
                    Some(s) => Some(parse_layout(&s)?),
                    None => None,
                };
                DomainConfig::RockSample {
                    size,
                    rocks,
                    sensor_d0: get(&mut map, "env.sensor_d0", sensor_d0)?,
                    discount: get(&mut map, "env.discount", discount)?,
                    layout,
                }
            }
        };

        let d = ExperimentConfig::for_domain(domain.clone())?;
        let rank = match map.remove("psr.rank") {
            Some(s) => parse_rank(&s)?,
            None => d.rank,
        };
        let summary_return = match map.remove("experiment.summary_return").as_deref() {
            None | Some("undiscounted") => SummaryReturn::Undiscounted,
            Some("discounted") => SummaryReturn::Discounted,
            Some(v) => {
                return Err(Error::Config(format!(
                    "bad value `{v}` for experiment.summary_return (expected undiscounted or discounted)"
                )))
            }
        };
        let cfg = ExperimentConfig {
            domain,
            trajectories: get(&mut map, "data.trajectories", d.trajectories)?,
            trajectory_length: get(&mut map, "data.length", d.trajectory_length)?,
            sets: SetOptions {
                test_length: get(&mut map, "data.test_length", d.sets.test_length)?,
                max_histories: get(&mut map, "data.max_histories", d.sets.max_histories)?,
                test_pairs: get_pairs(&mut map, "data.test_pairs", d.sets.test_pairs)?,
                ao_pairs: get_pairs(&mut map, "data.ao_pairs", d.sets.ao_pairs)?,
            },
            repeats: get(&mut map, "data.repeats", d.repeats)?,
            rank,
            n_sims: get_list(&mut map, "planner.n_sims", d.n_sims)?,
            c: get(&mut map, "planner.c", d.c)?,
            max_depth: get(&mut map, "planner.max_depth", d.max_depth)?,
            gamma: get(&mut map, "planner.gamma", d.gamma)?,
            episodes: get(&mut map, "experiment.episodes", d.episodes)?,
            methods: get_list(&mut map, "experiment.methods", d.methods)?,
            seeds: get_list(&mut map, "experiment.seeds", d.seeds)?,
            summary_return,
        };
        if let Some(k) = map.keys().next() {
            return Err(Error::Config(format!("unknown key {k}")));
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_pairs(&parse_pairs(text)?)
    }

    /// Applies `key=value` overrides. Switching `env.domain` drops the old
    /// domain's parameters.
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<Self> {
        let known = known_keys();
        let mut map = self.to_pairs();
        for (k, v) in overrides {
            if !known.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown key {k}")));
            }
            if k == "env.domain" && map.get(k) != Some(v) {
                map.retain(|key, _| !key.starts_with("env."));
            }
        }
        for (k, v) in overrides {
            map.insert(k.clone(), v.clone());
        }
        Self::from_pairs(&map)
    }
}

/// Splits `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(Error::Config(format!("override `{s}` is not key=value"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_domain() {
        let t = ExperimentConfig::for_domain(DomainConfig::tiger()).unwrap();
        assert_eq!(t.c, 110.0);
        assert_eq!(t.max_depth, 20);
        let r = ExperimentConfig::for_domain(DomainConfig::rocksample(5, 5)).unwrap();
        assert_eq!(r.c, 20.0);
        assert_eq!(r.max_depth, 30);
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = ExperimentConfig::for_domain(DomainConfig::RockSample {
            size: 3,
            rocks: 2,
            sensor_d0: 2.5,
            discount: 0.9,
            layout: Some(vec![(0, 0), (2, 1)]),
        })
        .unwrap();
        cfg.rank = RankRule::Gap(1e-6);
        cfg.n_sims = vec![10, 20];
        cfg.seeds = vec![3, 4, 5];
        cfg.methods = vec![Method::PsrMctsRo, Method::Random];
        cfg.summary_return = SummaryReturn::Discounted;
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn comments_and_defaults() {
        let cfg = ExperimentConfig::parse("# tiger\nenv.domain = tiger  # inline\n\nplanner.n_sims=5,6\n").unwrap();
        assert_eq!(cfg.n_sims, vec![5, 6]);
        assert_eq!(cfg.domain, DomainConfig::tiger());
    }

    #[test]
    fn bad_configs() {
        let err = |t: &str| ExperimentConfig::parse(t).unwrap_err().to_string();
        assert!(err("planner.c = 1").contains("missing env.domain"));
        assert!(err("env.domain = chess").contains("unknown domain"));
        assert!(err("env.domain = tiger\nenv.computers = 3").contains("does not apply"));
        assert!(err("env.domain = tiger\nplanner.speed = 3").contains("unknown key"));
        assert!(err("env.domain = tiger\nplanner.n_sims = 1,x").contains("bad list item"));
        assert!(err("env.domain = tiger\nexperiment.methods = alpha").contains("unknown method"));
        assert!(err("env.domain = tiger\nenv.domain = tiger").contains("duplicate"));
        assert!(matches!(ExperimentConfig::parse("oops"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn ranks() {
        assert_eq!(parse_rank("50").unwrap(), RankRule::Fixed(50));
        assert_eq!(parse_rank("gap:1e-6").unwrap(), RankRule::Gap(1e-6));
        assert_eq!(parse_rank("relative:0.001").unwrap(), RankRule::Relative(0.001));
        assert!(parse_rank("gap:2").is_err());
        assert!(parse_rank("svd").is_err());
    }

    #[test]
    fn overrides() {
        let cfg = ExperimentConfig::for_domain(DomainConfig::tiger()).unwrap();
        let o = |s: &str| parse_override(s).unwrap();
        let got = cfg.with_overrides(&[o("experiment.episodes=7"), o("planner.n_sims = 9")]).unwrap();
        assert_eq!((got.episodes, got.n_sims.clone()), (7, vec![9]));
        let switched = cfg
            .with_overrides(&[o("env.domain=posyadmin"), o("env.computers=2")])
            .unwrap();
        assert_eq!(switched.domain, DomainConfig::posyadmin(2));
        assert!(cfg.with_overrides(&[o("planner.nsims=9")]).is_err());
        assert!(parse_override("novalue").is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::for_domain(DomainConfig::tiger()).unwrap();
        cfg.validate().unwrap();
        cfg.episodes = 0;
        assert!(cfg.validate().is_err());
        cfg.episodes = 1;
        cfg.n_sims = vec![0];
        assert!(cfg.validate().is_err());
        cfg.n_sims = vec![1];
        cfg.rank = RankRule::Fixed(0);
        assert!(cfg.validate().is_err());
        cfg.methods = vec![Method::Random];
        cfg.validate().unwrap();
    }
}
