use rayon::prelude::*;

use super::{mean_std, run_episode_unchecked, GreedyPolicy, Policy};
use crate::agent::PolicyCheckpoint;
use crate::config::{RunConfig, SeedDomain};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    /// Per-episode (avg load, avg mse), in episode order.
    pub episodes: Vec<(f64, f64)>,
    pub load_mean: f64,
    pub load_std: f64,
    pub mse_mean: f64,
    pub mse_std: f64,
    /// Mean MSE within the constraint threshold.
    pub feasible: bool,
}

/// Greedy rollouts of a frozen policy on `n_episodes` evaluation seeds.
/// Refuses a checkpoint trained under a different configuration.
pub fn evaluate(ck: &PolicyCheckpoint, cfg: &RunConfig, n_episodes: usize) -> Result<EvalSummary> {
    let hash = cfg.policy_hash();
    if ck.policy_hash != hash {
        return Err(Error::HashMismatch {
            checkpoint: ck.policy_hash.clone(),
            config: hash,
        });
    }
    if ck.encoder.bins() != cfg.agent.bins {
        return Err(Error::Checkpoint(format!(
            "checkpoint has {} states, config {}",
            ck.encoder.bins(),
            cfg.agent.bins
        )));
    }
    let policy = GreedyPolicy::from_checkpoint(ck);
    evaluate_policy(cfg, n_episodes, || Box::new(policy.clone()))
}

/// Evaluates any non-learning policy; episodes run in parallel on the
/// current rayon pool and are reported in seed order.
pub fn evaluate_policy<F>(cfg: &RunConfig, n_episodes: usize, make_policy: F) -> Result<EvalSummary>
where
    F: Fn() -> Box<dyn Policy> + Sync,
{
    cfg.validate()?;
    if n_episodes == 0 {
        return Err(Error::config("evaluation needs at least one episode"));
    }
    let episodes: Vec<(f64, f64)> = (0..n_episodes)
        .into_par_iter()
        .map(|i| {
            let mut policy = make_policy();
            let seed = cfg.episode_seed(SeedDomain::Eval, i);
            run_episode_unchecked(cfg, policy.as_mut(), i, seed)
                .map(|log| (log.avg_load, log.avg_mse))
        })
        .collect::<Result<_>>()?;
    let loads: Vec<f64> = episodes.iter().map(|e| e.0).collect();
    let mses: Vec<f64> = episodes.iter().map(|e| e.1).collect();
    let (load_mean, load_std) = mean_std(&loads);
    let (mse_mean, mse_std) = mean_std(&mses);
    Ok(EvalSummary {
        episodes,
        load_mean,
        load_std,
        mse_mean,
        mse_std,
        feasible: mse_mean <= cfg.mse_threshold(),
    })
}
