//! Experiment orchestration: corpus generation, model learning, planning
//! runs over seeds and simulation budgets, and aggregated metrics.

mod config;
mod diagnostics;
mod metrics;

pub use config::{known_keys, parse_override, parse_pairs, parse_rank, ConfigMap, ExperimentConfig, Method, SummaryReturn};
pub use diagnostics::{model_diagnostics, reachable_histories, DiagnosticsReport, Probes};
pub use metrics::{
    mean_stderr, read_metrics, summarize, write_metrics, write_summary, MetricsRow, SummaryRow, METRICS_HEADER,
    SUMMARY_HEADER,
};

use rayon::prelude::*;

use crate::alphabet::ActObs;
use crate::data::{
    build_test_history_sets, estimate_hankel, generate_trajectories, observed_pairs, PairSelection, Trajectory,
};
use crate::envs::{DomainConfig, Environment};
use crate::error::{Error, Result};
use crate::planner::{plan_episode, pomcp_baseline, random_baseline};
use crate::psr::{learn, PsrModel, RankRule};
use crate::rng::{derive_seed, rng_from, tag};

/// Environment variable capping the worker count.
pub const THREADS_VAR: &str = "PSRPLAN_THREADS";

/// Model meta key listing the pairs seen in the training corpus.
pub const OBSERVED_PAIRS_KEY: &str = "observed_pairs";

pub const PRESETS: &[&str] = &[
    "tiger-full",
    "posyadmin3-full",
    "posyadmin6-full",
    "rocksample55-full",
    "rocksample57-full",
    "tiger-desk",
    "posyadmin3-desk",
    "posyadmin6-desk",
    "rocksample32-desk",
    "rocksample55-desk",
    "rocksample57-smoke",
];

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    use Method::*;
    let desk = |mut c: ExperimentConfig| {
        c.episodes = (c.episodes / 10).max(1);
        c
    };
    let cfg = match name {
        "tiger-full" => {
            let mut c = ExperimentConfig::for_domain(DomainConfig::tiger())?;
            c.trajectories = 200;
            c.trajectory_length = 6;
            c.rank = RankRule::Gap(1e-6);
            c.n_sims = vec![1000, 10000];
            c.episodes = 10_000;
            c
        }
        "posyadmin3-full" => {
            let mut c = ExperimentConfig::for_domain(DomainConfig::posyadmin(3))?;
            c.trajectories = 300;
            c.trajectory_length = 8;
            c.sets.test_pairs = PairSelection::Observed;
            c.sets.max_histories = 1000;
            c.rank = RankRule::Fixed(50);
            c.n_sims = vec![100];
            c.episodes = 1000;
            c
        }
        "posyadmin6-full" => {
            let mut c = ExperimentConfig::for_domain(DomainConfig::posyadmin(6))?;
            c.trajectories = 1000;
            c.trajectory_length = 14;
            c.sets.test_length = 1;
            c.sets.test_pairs = PairSelection::Observed;
            c.sets.ao_pairs = PairSelection::Observed;
            c.rank = RankRule::Fixed(50);
            c.n_sims = vec![100, 300, 500, 700, 1000];
            c.episodes = 100;
            c.methods = vec![PsrMctsRo, PomcpTrue, Random];
            c
        }
        "rocksample55-full" => rocksample(5, 5, 600, 20, 70, 1000)?,
        "rocksample57-full" => rocksample(5, 7, 7000, 23, 75, 1000)?,
        "tiger-desk" => desk(preset("tiger-full")?),
        "posyadmin3-desk" => desk(preset("posyadmin3-full")?),
        "posyadmin6-desk" => desk(preset("posyadmin6-full")?),
        "rocksample32-desk" => desk(rocksample(3, 2, 300, 20, 30, 1000)?),
        "rocksample55-desk" => desk(preset("rocksample55-full")?),
        "rocksample57-smoke" => {
            let mut c = rocksample(5, 7, 100, 23, 20, 2)?;
            c.sets.max_histories = 300;
            c.n_sims = vec![50];
            c
        }
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}` (available: {})",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(cfg)
}

fn rocksample(size: usize, rocks: usize, trajectories: usize, length: usize, rank: usize, episodes: usize) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig::for_domain(DomainConfig::rocksample(size, rocks))?;
    c.trajectories = trajectories;
    c.trajectory_length = length;
    c.sets.test_pairs = PairSelection::Observed;
    c.sets.ao_pairs = PairSelection::Observed;
    c.rank = RankRule::Fixed(rank);
    c.n_sims = vec![1000];
    c.episodes = episodes;
    c.methods = vec![Method::PsrMctsRo, Method::PomcpTrue, Method::Random];
    Ok(c)
}

/// Corpus for `seed`; identical for every method and budget.
pub fn training_corpus(cfg: &ExperimentConfig, env: &Environment, seed: u64) -> Result<Vec<Trajectory>> {
    generate_trajectories(env, cfg.trajectories, cfg.trajectory_length, derive_seed(seed, &[tag("data")]))
}

/// Learns a model from `corpus`. The model's meta records the environment
/// and the corpus pairs, so it can be diagnosed or restricted later.
pub fn learn_from_corpus(cfg: &ExperimentConfig, env: &Environment, corpus: &[Trajectory], seed: u64) -> Result<PsrModel> {
    let sets = build_test_history_sets(corpus, &env.alphabet(), &cfg.sets)?;
    log::info!(
        "{}: {} histories x {} tests, {} operator pairs",
        env.label(),
        sets.histories.len(),
        sets.tests.len(),
        sets.pairs.len()
    );
    let est = estimate_hankel(env, &sets, cfg.repeats, derive_seed(seed, &[tag("hankel")]))?;
    let mut model = learn(&est, cfg.rank)?;
    model.meta.extend(cfg.env_pairs());
    let seen: Vec<String> = observed_pairs(corpus).iter().map(ActObs::to_string).collect();
    model.meta.insert(OBSERVED_PAIRS_KEY.into(), seen.join(" "));
    model.meta.insert("seed".into(), seed.to_string());
    log::info!("{}: learned rank {} model", env.label(), model.rank());
    Ok(model)
}

pub fn train(cfg: &ExperimentConfig, env: &Environment, seed: u64) -> Result<PsrModel> {
    learn_from_corpus(cfg, env, &training_corpus(cfg, env, seed)?, seed)
}

/// The model restricted to the corpus pairs recorded in its meta.
pub fn reduced_model(model: &PsrModel) -> Result<PsrModel> {
    let listed = model
        .meta
        .get(OBSERVED_PAIRS_KEY)
        .ok_or_else(|| Error::Config(format!("model has no `{OBSERVED_PAIRS_KEY}` meta entry")))?;
    let pairs = listed
        .split_whitespace()
        .map(|t| {
            t.split_once(':')
                .and_then(|(a, o)| Some(ActObs::new(a.parse().ok()?, o.parse().ok()?)))
                .ok_or_else(|| Error::Config(format!("bad pair `{t}` in model meta")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(model.restrict_to_pairs(&pairs))
}

/// Domain recorded in a model's meta by [`learn_from_corpus`].
pub fn model_domain(model: &PsrModel) -> Result<DomainConfig> {
    let env: ConfigMap = model
        .meta
        .iter()
        .filter(|(k, _)| k.starts_with("env."))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    Ok(ExperimentConfig::from_pairs(&env)?.domain)
}

/// Runs `f` on a pool capped by `PSRPLAN_THREADS` when it is set.
pub fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| Error::Config(format!("{THREADS_VAR} must be a positive integer, got `{v}`")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

/// Plays one episode. The environment stream depends only on (seed,
/// episode), so every method faces the same sequence of hidden draws.
pub fn run_episode(
    cfg: &ExperimentConfig,
    env: &Environment,
    method: Method,
    model: Option<&PsrModel>,
    n_sims: usize,
    seed: u64,
    episode: usize,
) -> Result<MetricsRow> {
    let planner = cfg.planner(n_sims);
    let mut env_rng = rng_from(seed, &[tag("env"), episode as u64]);
    let mut rng = rng_from(seed, &[tag(method.name()), n_sims as u64, episode as u64]);
    let record = match method {
        Method::PsrMcts | Method::PsrMctsRo => {
            let model = model.ok_or_else(|| Error::Config(format!("{method} needs a model")))?;
            plan_episode(model, env, &planner, &mut env_rng, &mut rng)?
        }
        Method::PomcpTrue => pomcp_baseline(env, &planner, &mut env_rng, &mut rng)?,
        Method::Random => random_baseline(env, &mut env_rng, &mut rng)?,
    };
    Ok(MetricsRow {
        method: method.name().into(),
        domain: env.label(),
        n_sims,
        seed,
        episode,
        return_undiscounted: record.return_undiscounted(),
        return_discounted: record.return_discounted(cfg.gamma),
        mean_action_seconds: record.mean_action_seconds(),
        fallback_count: record.fallback_count,
        reset_count: record.reset_count,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<MetricsRow>,
    pub summary: Vec<SummaryRow>,
}

/// Full pipeline for every seed, budget and method. Rows are ordered by
/// seed, then budget, then method, then episode.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_with_model(cfg, None)
}

/// As [`run_experiment`], but PSR methods use `model` (and its reduced
/// form) for every seed instead of learning one per seed.
pub fn run_with_model(cfg: &ExperimentConfig, model: Option<&PsrModel>) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let env = cfg.domain.build()?;
    if let Some(m) = model {
        if m.alphabet().n_actions() != env.spec.n_actions() || m.alphabet().n_obs() != env.reward_map.n_symbols() {
            return Err(Error::Config(format!("model alphabet does not match domain {}", env.label())));
        }
        if cfg.methods.contains(&Method::PsrMctsRo) {
            reduced_model(m)?;
        }
    }
    with_thread_cap(|| {
        let mut rows = Vec::new();
        for &seed in &cfg.seeds {
            let full = match (model, cfg.methods.iter().any(|m| m.needs_model())) {
                (Some(m), _) => Some(m.clone()),
                (None, true) => Some(train(cfg, &env, seed)?),
                (None, false) => None,
            };
            let reduced = match (&full, cfg.methods.contains(&Method::PsrMctsRo)) {
                (Some(m), true) => Some(reduced_model(m)?),
                _ => None,
            };
            for &n_sims in &cfg.n_sims {
                for &method in &cfg.methods {
                    let m = match method {
                        Method::PsrMcts => full.as_ref(),
                        Method::PsrMctsRo => reduced.as_ref(),
                        _ => None,
                    };
                    let cell = (0..cfg.episodes)
                        .into_par_iter()
                        .map(|e| run_episode(cfg, &env, method, m, n_sims, seed, e))
                        .collect::<Result<Vec<_>>>()?;
                    log::info!(
                        "{} {method} n_sims={n_sims} seed={seed}: mean return {:.3}",
                        env.label(),
                        cell.iter().map(|r| r.return_undiscounted).sum::<f64>() / cell.len() as f64
                    );
                    rows.extend(cell);
                }
            }
        }
        let summary = summarize(&rows, cfg.summary_return)?;
        Ok(ExperimentOutput { rows, summary })
    })?
}
