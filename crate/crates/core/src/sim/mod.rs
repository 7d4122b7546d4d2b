//! Closed-loop orchestration: epochs, episodes, training, evaluation and
//! the fixed-policy sweep.

mod evaluate;
mod policy;
mod sweep;
mod train;
mod world;

use crate::agent::{AgentState, StateEncoder};
use crate::channel::Channel;
use crate::config::RunConfig;
use crate::error::Result;
use crate::metrics::normalized_load;
use crate::predictor::PredictorState;
use crate::trajectory;

pub use evaluate::{evaluate, evaluate_policy, EvalSummary};
pub use policy::{all_fixed_policies, FixedPolicy, GreedyPolicy, LearningAgent, Policy};
pub use sweep::{frontier, sweep_fixed_policies, FrontierPoint, TradeoffPoint, TradeoffTable};
pub use train::{train, CurveRow, TrainReport};
pub use world::{EpochOutcome, EpochResult, World};

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub epochs: Vec<EpochResult>,
    /// Means over scored (post-warm-up) epochs.
    pub avg_load: f64,
    pub avg_mse: f64,
    pub lambda_end: Option<f64>,
    pub seed: u64,
    pub config_hash: String,
}

impl EpisodeLog {
    pub fn scored(&self) -> impl Iterator<Item = &EpochResult> {
        self.epochs.iter().filter(|e| e.metrics.is_scored())
    }
}

/// Builds the world for one episode.
pub fn build_world(cfg: &RunConfig, episode_seed: u64) -> Result<World> {
    let traj = trajectory::generate(&cfg.trajectory_config(episode_seed))?;
    let channel = Channel::new(cfg.channel_config(episode_seed))?;
    let predictor = PredictorState::from_params(&cfg.predictor)?;
    Ok(World::new(
        traj,
        channel,
        predictor,
        cfg.timing.epoch_ms,
        cfg.timing.warmup_ms,
    ))
}

/// Runs one episode under `policy`. `episode` is the index passed to the
/// policy's `begin_episode` (it keys the exploration stream).
pub fn run_episode(
    cfg: &RunConfig,
    policy: &mut dyn Policy,
    episode: usize,
    episode_seed: u64,
) -> Result<EpisodeLog> {
    cfg.validate()?;
    run_episode_unchecked(cfg, policy, episode, episode_seed)
}

pub(crate) fn run_episode_unchecked(
    cfg: &RunConfig,
    policy: &mut dyn Policy,
    episode: usize,
    episode_seed: u64,
) -> Result<EpisodeLog> {
    let encoder = StateEncoder::new(cfg.agent.bins, cfg.agent.mse_lo, cfg.agent.mse_hi)?;
    let mut world = build_world(cfg, episode_seed)?;
    let top = AgentState(encoder.bins() - 1);

    policy.begin_episode(episode);
    let mut state = top;
    let mut epochs = Vec::with_capacity((cfg.timing.episode_ms / cfg.timing.epoch_ms) as usize);
    while !world.is_exhausted() {
        let action = policy.act(state);
        let out = world.run_epoch(action)?;
        let observed = if out.metrics.is_scored() {
            Some(out.metrics.mse_deg2)
        } else {
            out.feedback_mse
        };
        let next = observed.map_or(top, |m| encoder.encode(m));
        let result = EpochResult {
            epoch_index: out.epoch_index,
            action,
            metrics: out.metrics,
            state_before: state,
            state_after: next,
        };
        policy.observe(&result);
        epochs.push(result);
        state = next;
    }

    // Load is weighted by duration, i.e. total packets over total time.
    let (mut sent, mut mse, mut n) = (0u64, 0.0, 0u64);
    for e in epochs.iter().filter(|e| e.metrics.is_scored()) {
        sent += e.metrics.packets_sent;
        mse += e.metrics.mse_deg2;
        n += 1;
    }
    let (avg_load, avg_mse) = match n {
        0 => (0.0, 0.0),
        _ => (
            normalized_load(sent, n * cfg.timing.epoch_ms),
            mse / n as f64,
        ),
    };
    let mut log = EpisodeLog {
        epochs,
        avg_load,
        avg_mse,
        lambda_end: None,
        seed: episode_seed,
        config_hash: cfg.content_hash(),
    };
    policy.end_episode(&log);
    log.lambda_end = policy.lambda();
    Ok(log)
}

/// Mean and sample standard deviation.
pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
