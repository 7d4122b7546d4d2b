//! `twinsync` command line: train, eval, sweep and baseline runs.
//!
//! Exit codes: 0 success, 1 simulation failure, 2 bad configuration or
//! arguments, 3 I/O failure (including unreadable checkpoints), 4 checkpoint
//! trained under a different configuration. Failures print one line to
//! stderr of the form `error kind=<kind> code=<n> message="<text>"`.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;
use twinsync::agent::PolicyCheckpoint;
use twinsync::report::{self, Provenance};
use twinsync::sim::{self, FixedPolicy, Policy, TradeoffPoint};
use twinsync::{Action, RunConfig};

pub use config::{apply_override, load_config};

#[derive(Debug, Parser)]
#[command(
    name = "twinsync",
    version,
    about = "Digital-twin sampling/prediction co-design simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the constrained Q-learning agent; writes policy.ckpt and learning_curve.csv.
    Train(CommonArgs),
    /// Evaluate a trained checkpoint greedily; writes eval.csv.
    Eval(EvalArgs),
    /// Evaluate every fixed (rate, horizon) action; writes tradeoff.csv and frontier.csv.
    Sweep(CommonArgs),
    /// Evaluate the four corner fixed policies; writes baseline.csv.
    Baseline(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides `seed`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for parallel episodes; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override a config leaf by dotted path, e.g. `--set channel.p_loss=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Number of evaluation episodes (default: `eval.episodes`).
    #[arg(short = 'n', long = "episodes")]
    pub episodes: Option<usize>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    HashMismatch(String),
    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Run(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::HashMismatch(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Run(_) => "run",
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::HashMismatch(_) => "hash_mismatch",
        }
    }

    /// The single machine-readable stderr line.
    pub fn line(&self) -> String {
        format!(
            "error kind={} code={} message={:?}",
            self.kind(),
            self.exit_code(),
            self.to_string()
        )
    }
}

impl From<twinsync::Error> for CliError {
    fn from(e: twinsync::Error) -> Self {
        use twinsync::Error as E;
        match e {
            E::Config(_) | E::Domain(_) | E::Load { .. } => CliError::Config(e.to_string()),
            E::Io(_) | E::Checkpoint(_) => CliError::Io(e.to_string()),
            E::HashMismatch { .. } => CliError::HashMismatch(e.to_string()),
            E::EpisodeEnd(_) => CliError::Run(e.to_string()),
        }
    }
}

/// Corner policies of the action grid: cheapest and dearest rate, each with
/// the shortest and longest horizon.
pub fn baseline_actions() -> [Action; 4] {
    [(10, 0), (10, 100), (1000, 0), (1000, 100)]
        .map(|(r, h)| Action::new(r, h).expect("corner actions are in the grid"))
}

/// Parses arguments and runs; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.line());
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let common = match &cli.command {
        Command::Train(c) | Command::Sweep(c) | Command::Baseline(c) => c,
        Command::Eval(e) => &e.common,
    };
    let cfg = resolve_config(common)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs)
        .build()
        .map_err(|e| CliError::Run(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Train(_) => cmd_train(&cfg),
        Command::Eval(args) => cmd_eval(&cfg, &args.checkpoint, args.episodes),
        Command::Sweep(_) => cmd_sweep(&cfg),
        Command::Baseline(_) => cmd_baseline(&cfg),
    })
}

fn resolve_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = load_config(args.config.as_deref(), &args.overrides)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn provenance(cfg: &RunConfig) -> Provenance {
    Provenance::new(cfg.content_hash(), cfg.seed)
}

pub fn cmd_train(cfg: &RunConfig) -> Result<(), CliError> {
    let report = sim::train(cfg)?;
    let dir = &cfg.output_dir;
    write(dir, "policy.ckpt", &report.checkpoint.to_text())?;
    write(
        dir,
        "learning_curve.csv",
        &report::learning_curve_csv(&provenance(cfg), &report.curve),
    )?;
    let (load, mse) = report.validation;
    println!(
        "train: episodes={} selected_episode={} validation_load={} validation_mse={} feasible={} lambda={}",
        report.curve.len(),
        report.selected_episode,
        report::fmt_float(load),
        report::fmt_float(mse),
        report.feasible,
        report::fmt_float(report.checkpoint.lambda),
    );
    Ok(())
}

pub fn cmd_eval(
    cfg: &RunConfig,
    checkpoint: &Path,
    episodes: Option<usize>,
) -> Result<(), CliError> {
    let n = episodes.unwrap_or(cfg.eval.episodes);
    if n == 0 {
        return Err(CliError::Config(
            "evaluation needs at least one episode (n = 0)".into(),
        ));
    }
    let ck = PolicyCheckpoint::load(checkpoint)
        .map_err(|e| CliError::Io(format!("{}: {e}", checkpoint.display())))?;
    let summary = sim::evaluate(&ck, cfg, n)?;
    // The episode count is part of what produced this file.
    let mut effective = cfg.clone();
    effective.eval.episodes = n;
    let prov = provenance(&effective).with_checkpoint(ck.digest());
    write(
        &cfg.output_dir,
        "eval.csv",
        &report::eval_csv(&prov, &summary),
    )?;
    println!(
        "eval: episodes={n} load_mean={} load_std={} mse_mean={} mse_std={} e_max_mse={} feasible={}",
        report::fmt_float(summary.load_mean),
        report::fmt_float(summary.load_std),
        report::fmt_float(summary.mse_mean),
        report::fmt_float(summary.mse_std),
        report::fmt_float(cfg.mse_threshold()),
        if summary.feasible { "yes" } else { "no" },
    );
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let table = sim::sweep_fixed_policies(cfg)?;
    let prov = provenance(cfg);
    write(
        &cfg.output_dir,
        "tradeoff.csv",
        &report::tradeoff_csv(&prov, &table.points),
    )?;
    write(
        &cfg.output_dir,
        "frontier.csv",
        &report::frontier_csv(&prov, &table.frontier),
    )?;
    for &p in &cfg.sweep.p_loss {
        match table.best_feasible(p, cfg.mse_threshold()) {
            Some(best) => println!(
                "sweep: p_loss={} best_feasible={} load={} mse={}",
                report::fmt_float(p),
                best.action,
                report::fmt_float(best.avg_load),
                report::fmt_float(best.avg_mse)
            ),
            None => println!("sweep: p_loss={} best_feasible=none", report::fmt_float(p)),
        }
    }
    Ok(())
}

pub fn cmd_baseline(cfg: &RunConfig) -> Result<(), CliError> {
    let n = cfg.eval.episodes;
    let mut points = Vec::new();
    for action in baseline_actions() {
        let summary =
            sim::evaluate_policy(cfg, n, || Box::new(FixedPolicy(action)) as Box<dyn Policy>)?;
        println!(
            "baseline: action={action} load={} mse={}",
            report::fmt_float(summary.load_mean),
            report::fmt_float(summary.mse_mean)
        );
        points.push(TradeoffPoint {
            action,
            p_loss: cfg.channel.p_loss,
            avg_mse: summary.mse_mean,
            avg_load: summary.load_mean,
        });
    }
    write(
        &cfg.output_dir,
        "baseline.csv",
        &report::tradeoff_csv(&provenance(cfg), &points),
    )?;
    Ok(())
}
