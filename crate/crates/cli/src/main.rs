//! `qrl`: train, baseline and evaluate the quantum PPO agent on CartPole.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qrl_core::io::{self, config_hash, Checkpoint, RunManifest};
use qrl_core::ppo::{self, mean_std, EpisodeRecord, EvalMode, TdTargetMode, TrainerConfig};

#[derive(Parser, Debug)]
#[command(name = "qrl", version, about = "Quantum policy PPO on CartPole-v0")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train the variational policy with PPO, one run per seed.
    Train(RunArgs),
    /// Random-parameter baseline: a fresh parameter block every step, no learning.
    Baseline(RunArgs),
    /// Evaluate a saved checkpoint.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TdTarget {
    #[value(name = "critic_v")]
    CriticV,
    #[value(name = "max_q")]
    MaxQ,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Sample,
    Argmax,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, default_value_t = 0.98)]
    gamma: f64,
    #[arg(long, default_value_t = 0.95)]
    lam: f64,
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    clip_eps: f64,
    #[arg(long, default_value_t = 1e-3)]
    lr_actor: f64,
    #[arg(long, default_value_t = 1e-5)]
    lr_critic: f64,
    #[arg(long, default_value_t = 10)]
    k_epochs: usize,
    #[arg(long, default_value_t = 2000)]
    episodes: usize,
    /// One or more seeds, comma separated; each seed is an independent run.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seed: Vec<u64>,
    #[arg(long, value_enum, default_value_t = TdTarget::CriticV)]
    td_target: TdTarget,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    /// Probability of a uniformly random action (0 disables).
    #[arg(long, default_value_t = 0.0)]
    epsilon_greedy: f64,
    /// Also run an update phase every N steps within an episode (0: episode end only).
    #[arg(long, default_value_t = 0)]
    update_every: usize,
    #[arg(long, default_value = "runs/latest")]
    out: PathBuf,
    /// Reuse config and seeds from an earlier run's manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Print progress every N episodes (0 disables).
    #[arg(long, default_value_t = 50)]
    log_every: usize,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, default_value_t = 100)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Sample)]
    mode: Mode,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<qrl_core::Error> for CliError {
    fn from(e: qrl_core::Error) -> Self {
        match e {
            qrl_core::Error::Config(_) | qrl_core::Error::Usage(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

impl RunArgs {
    fn config(&self, seed: u64) -> TrainerConfig {
        TrainerConfig {
            gamma: self.gamma,
            lam: self.lam,
            clip_eps: self.clip_eps,
            lr_actor: self.lr_actor,
            lr_critic: self.lr_critic,
            k_epochs: self.k_epochs,
            episodes: self.episodes,
            seed,
            td_target_mode: match self.td_target {
                TdTarget::CriticV => TdTargetMode::CriticV,
                TdTarget::MaxQ => TdTargetMode::MaxQ,
            },
            softmax_temperature: self.temperature,
            epsilon_greedy: self.epsilon_greedy,
            update_every: self.update_every,
        }
    }

    /// Base config plus seed list, from the manifest when one is given.
    fn resolve(&self) -> Result<(TrainerConfig, Vec<u64>), CliError> {
        let (config, seeds) = match &self.manifest {
            Some(path) => {
                let m = RunManifest::load(path)
                    .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
                (m.config, m.seeds)
            }
            None => (self.config(self.seed[0]), self.seed.clone()),
        };
        config.validate()?;
        if seeds.is_empty() {
            return Err(CliError::Usage("at least one seed is required".into()));
        }
        Ok((config, seeds))
    }
}

fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed_{seed}"))
}

fn timing_csv(records: &[EpisodeRecord]) -> String {
    let mut s = String::from("episode,wall_seconds\n");
    for r in records {
        s.push_str(&format!("{},{}\n", r.episode, r.wall_seconds));
    }
    s
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

fn run(args: &RunArgs, learn: bool) -> Result<(), CliError> {
    let (base, seeds) = args.resolve()?;
    let command = if learn { "train" } else { "baseline" };

    fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;
    let mut artifacts = vec![args.out.join("summary.csv"), args.out.join("stats.csv")];
    for &seed in &seeds {
        let dir = seed_dir(&args.out, seed);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        artifacts.push(dir.join("curve.csv"));
        artifacts.push(dir.join("timing.csv"));
        if learn {
            artifacts.push(dir.join("checkpoint.json"));
        }
    }
    let manifest = RunManifest {
        command: command.to_string(),
        config: base.clone(),
        seeds: seeds.clone(),
        start_time: chrono::Utc::now().to_rfc3339(),
        artifacts,
        config_hash: config_hash(&base),
    };
    let manifest_path = args.out.join("manifest.json");
    manifest
        .save(&manifest_path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", manifest_path.display())))?;

    let log_every = args.log_every;
    let results: Vec<Result<Vec<EpisodeRecord>, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let config = TrainerConfig { seed, ..base.clone() };
                let out = &args.out;
                scope.spawn(move || run_seed(&config, out, learn, log_every))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(CliError::Runtime("worker panicked".into()))))
            .collect()
    });
    let curves = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    write(&args.out.join("summary.csv"), &io::summary_csv(&curves))?;
    write(&args.out.join("stats.csv"), &io::stats_csv(&seeds, &curves))?;

    for (seed, curve) in seeds.iter().zip(&curves) {
        let returns: Vec<f64> = curve.iter().map(|r| r.total_return).collect();
        let (m, s) = mean_std(&returns);
        let tail = &returns[returns.len().saturating_sub(ppo::MOVING_AVG_WINDOW)..];
        let (tm, ts) = mean_std(tail);
        println!(
            "{command} seed {seed}: {} episodes, mean return {m:.2} ± {s:.2}, last {} {tm:.2} ± {ts:.2}",
            returns.len(),
            tail.len()
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn run_seed(
    config: &TrainerConfig,
    out: &Path,
    learn: bool,
    log_every: usize,
) -> Result<Vec<EpisodeRecord>, CliError> {
    let dir = seed_dir(out, config.seed);
    let seed = config.seed;
    let records = if learn {
        let run = ppo::train_with(config, |r, stats| {
            if log_every > 0 && r.episode % log_every == 0 {
                let last = stats.last().cloned().unwrap_or_default();
                eprintln!(
                    "seed {seed} ep {:>5} return {:>5} avg100 {:>7.2} actor {:+.4} critic {:.4} clip {:.2}",
                    r.episode, r.total_return, r.moving_avg, last.actor_loss, last.critic_loss, last.clip_fraction
                );
            }
        })?;
        let ckpt = Checkpoint::new(&run.agent, config, run.records.len());
        write(&dir.join("checkpoint.json"), &ckpt.to_json())?;
        run.records
    } else {
        ppo::random_baseline(config)?
    };
    write(&dir.join("curve.csv"), &io::curve_csv(&records))?;
    write(&dir.join("timing.csv"), &timing_csv(&records))?;
    Ok(records)
}

fn eval(args: &EvalArgs) -> Result<(), CliError> {
    if args.episodes == 0 {
        return Err(CliError::Usage("--episodes must be at least 1".into()));
    }
    if !(args.temperature.is_finite() && args.temperature > 0.0) {
        return Err(CliError::Usage("--temperature must be > 0".into()));
    }
    let ckpt = Checkpoint::load(&args.checkpoint)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", args.checkpoint.display())))?;
    let mode = match args.mode {
        Mode::Sample => EvalMode::Sample,
        Mode::Argmax => EvalMode::Argmax,
    };
    let returns = ppo::evaluate(&ckpt.policy.values, args.temperature, args.episodes, args.seed, mode)?;
    let (m, s) = mean_std(&returns);
    println!("eval {} episodes ({:?}): mean return {m} ± {s}", returns.len(), args.mode);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Train(a) => run(a, true),
        Command::Baseline(a) => run(a, false),
        Command::Eval(a) => eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `qrl --help` for usage");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
