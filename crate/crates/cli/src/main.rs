use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use psrplan_core::data::io::{read_corpus, validate_corpus, write_corpus};
use psrplan_core::envs::Environment;
use psrplan_core::harness::{
    learn_from_corpus, model_diagnostics, model_domain, parse_override, preset, reduced_model, run_experiment,
    run_with_model, training_corpus, write_metrics, write_summary, ExperimentConfig, ExperimentOutput, Probes,
    PRESETS,
};
use psrplan_core::psr::io::{read_model, write_model};
use psrplan_core::psr::PsrModel;
use psrplan_core::{Error, Result};

/// Learn predictive state models offline and plan with them online.
#[derive(Debug, Parser)]
#[command(name = "psrplan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a training corpus under the uniform policy.
    GenData(Common),
    /// Learn a model from a generated (or given) corpus.
    Learn {
        #[command(flatten)]
        common: Common,
        /// Learn from this corpus instead of generating one.
        #[arg(long, value_name = "PATH")]
        data: Option<PathBuf>,
    },
    /// One-step prediction error and rollout health of a model.
    Diagnose {
        #[command(flatten)]
        common: Common,
        /// Longest probe history.
        #[arg(long, default_value_t = 3)]
        max_len: usize,
        /// Number of probe rollouts.
        #[arg(long, default_value_t = 200)]
        rollouts: usize,
        /// Diagnose the model restricted to its training pairs.
        #[arg(long)]
        reduced: bool,
    },
    /// Run planning episodes, optionally with a saved model.
    Plan(Common),
    /// Run the full pipeline and write per-episode and summary CSVs.
    Experiment(Common),
    /// List presets, or print one with --preset.
    Presets(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Config file, or the name of a preset.
    #[arg(long, value_name = "PATH")]
    config: Option<String>,
    /// Preset name (alternative to --config).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Output file or directory.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Saved model.
    #[arg(long, value_name = "PATH")]
    model: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long = "n-sims", value_name = "N")]
    n_sims: Vec<usize>,
    /// psr-mcts, psr-mcts-ro, pomcp-true or random.
    #[arg(long = "method", value_name = "NAME")]
    methods: Vec<String>,
    /// Config overrides.
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn has_source(&self) -> bool {
        self.config.is_some() || self.preset.is_some()
    }

    fn overrides(&self) -> Result<Vec<(String, String)>> {
        let mut out = self
            .overrides
            .iter()
            .map(|s| parse_override(s))
            .collect::<Result<Vec<_>>>()?;
        if let Some(seed) = self.seed {
            out.push(("experiment.seeds".into(), seed.to_string()));
        }
        if let Some(e) = self.episodes {
            out.push(("experiment.episodes".into(), e.to_string()));
        }
        if !self.n_sims.is_empty() {
            let list: Vec<String> = self.n_sims.iter().map(usize::to_string).collect();
            out.push(("planner.n_sims".into(), list.join(",")));
        }
        if !self.methods.is_empty() {
            out.push(("experiment.methods".into(), self.methods.join(",")));
        }
        Ok(out)
    }

    /// Config from --config (file or preset) or --preset, with flags and
    /// overrides applied.
    fn load(&self) -> Result<ExperimentConfig> {
        let base = match (&self.config, &self.preset) {
            (Some(_), Some(_)) => return Err(Error::Config("give either --config or --preset, not both".into())),
            (None, Some(name)) => preset(name)?,
            (Some(c), None) if Path::new(c).exists() => ExperimentConfig::parse(&fs::read_to_string(c)?)?,
            (Some(c), None) if PRESETS.contains(&c.as_str()) => preset(c)?,
            (Some(c), None) => return Err(Error::Config(format!("config file `{c}` not found and not a preset"))),
            (None, None) => return Err(Error::Config("missing --config".into())),
        };
        base.with_overrides(&self.overrides()?)
    }

    fn seed(&self, cfg: &ExperimentConfig) -> u64 {
        self.seed.unwrap_or(cfg.seeds[0])
    }

    fn out_or(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}

fn load_model(path: &Path) -> Result<PsrModel> {
    read_model(BufReader::new(File::open(path).map_err(|e| with_path(e, path))?))
}

fn with_path(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| with_path(e, path))?))
}

fn write_outputs(out: &ExperimentOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| with_path(e, dir))?;
    let metrics = dir.join("metrics.csv");
    let summary = dir.join("summary.csv");
    write_metrics(create(&metrics)?, &out.rows)?;
    write_summary(create(&summary)?, &out.summary)?;
    write_summary(std::io::stdout().lock(), &out.summary)?;
    log::info!("wrote {} and {}", metrics.display(), summary.display());
    Ok(())
}

fn gen_data(c: &Common) -> Result<()> {
    let cfg = c.load()?;
    let env = cfg.domain.build()?;
    let seed = c.seed(&cfg);
    let corpus = training_corpus(&cfg, &env, seed)?;
    let path = c.out_or("corpus.txt");
    let mut w = create(&path)?;
    writeln!(w, "# {} trajectories, domain {}, seed {seed}", corpus.len(), env.label())?;
    write_corpus(&mut w, &corpus)?;
    w.flush()?;
    println!("wrote {} trajectories to {}", corpus.len(), path.display());
    Ok(())
}

fn learn(c: &Common, data: Option<&Path>) -> Result<()> {
    let cfg = c.load()?;
    let env = cfg.domain.build()?;
    let seed = c.seed(&cfg);
    let corpus = match data {
        Some(p) => {
            let corpus = read_corpus(BufReader::new(File::open(p).map_err(|e| with_path(e, p))?))?;
            validate_corpus(&corpus, &env.alphabet())?;
            corpus
        }
        None => training_corpus(&cfg, &env, seed)?,
    };
    let model = learn_from_corpus(&cfg, &env, &corpus, seed)?;
    let path = c.out_or("model.psr");
    let mut w = create(&path)?;
    write_model(&mut w, &model)?;
    w.flush()?;
    println!("wrote rank {} model ({} pairs) to {}", model.rank(), model.pairs().len(), path.display());
    Ok(())
}

fn diagnose(c: &Common, max_len: usize, rollouts: usize, reduced: bool) -> Result<()> {
    let (model, env): (PsrModel, Environment) = match &c.model {
        Some(p) => {
            let model = load_model(p)?;
            let domain = if c.has_source() {
                c.load()?.domain
            } else {
                model_domain(&model)?
            };
            (model, domain.build()?)
        }
        None => {
            let cfg = c.load()?;
            let env = cfg.domain.build()?;
            let model = learn_from_corpus(&cfg, &env, &training_corpus(&cfg, &env, c.seed(&cfg))?, c.seed(&cfg))?;
            (model, env)
        }
    };
    let model = if reduced { reduced_model(&model)? } else { model };
    let report = model_diagnostics(&model, &env, &Probes::standard(&env, max_len, rollouts, c.seed.unwrap_or(0)));
    let text = format!("domain {}\n{report}\n", env.label());
    print!("{text}");
    if let Some(p) = &c.out {
        let mut w = create(p)?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
    }
    Ok(())
}

fn plan(c: &Common) -> Result<()> {
    let cfg = c.load()?;
    let out = match &c.model {
        Some(p) => run_with_model(&cfg, Some(&load_model(p)?))?,
        None => run_experiment(&cfg)?,
    };
    write_outputs(&out, &c.out_or("."))
}

fn experiment(c: &Common) -> Result<()> {
    if c.model.is_some() {
        return Err(Error::Config("experiment learns its own models; use `plan --model`".into()));
    }
    let cfg = c.load()?;
    write_outputs(&run_experiment(&cfg)?, &c.out_or("."))
}

fn presets(c: &Common) -> Result<()> {
    if !c.has_source() {
        for name in PRESETS {
            println!("{name}");
        }
        return Ok(());
    }
    let text = c.load()?.to_text();
    match &c.out {
        Some(p) => {
            let mut w = create(p)?;
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(c) => gen_data(&c),
        Command::Learn { common, data } => learn(&common, data.as_deref()),
        Command::Diagnose {
            common,
            max_len,
            rollouts,
            reduced,
        } => diagnose(&common, max_len, rollouts, reduced),
        Command::Plan(c) => plan(&c),
        Command::Experiment(c) => experiment(&c),
        Command::Presets(c) => presets(&c),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
