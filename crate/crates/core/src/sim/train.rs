use std::collections::HashMap;

use super::{run_episode_unchecked, GreedyPolicy, LearningAgent};
use crate::agent::{PolicyCheckpoint, QTable, StateEncoder};
use crate::config::{RunConfig, SeedDomain, TOOL_VERSION};
use crate::error::Result;

/// One learning-curve row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub episode: usize,
    pub avg_load: f64,
    pub avg_mse: f64,
    /// Multiplier after this episode's dual step.
    pub lambda: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub checkpoint: PolicyCheckpoint,
    pub curve: Vec<CurveRow>,
    /// Episode whose table was frozen.
    pub selected_episode: usize,
    /// Greedy validation result of the frozen table: (avg load, avg mse).
    pub validation: (f64, f64),
    pub feasible: bool,
}

struct Candidate {
    episode: usize,
    q: QTable,
    lambda: f64,
    load: f64,
    mse: f64,
}

/// Trains the primal-dual agent for `cfg.agent.episodes` episodes.
///
/// The tables of the last `select_window` episodes are each rolled out
/// greedily on a fixed set of validation seeds; the frozen policy is the
/// feasible one (validation MSE within the threshold) with the lowest load,
/// or the lowest-MSE one if none is feasible.
pub fn train(cfg: &RunConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let params = &cfg.agent;
    let e_max = cfg.mse_threshold();
    let mut agent = LearningAgent::new(params.clone(), e_max, cfg.seed);
    let mut curve = Vec::with_capacity(params.episodes);
    let mut validated: HashMap<Vec<usize>, (f64, f64)> = HashMap::new();
    let mut candidates = Vec::new();
    let select_from = params.episodes - params.select_window;

    for episode in 0..params.episodes {
        let epsilon = params.epsilon(episode);
        agent.set_epsilon(epsilon);
        let seed = cfg.episode_seed(SeedDomain::Train, episode);
        let log = run_episode_unchecked(cfg, &mut agent, episode, seed)?;
        curve.push(CurveRow {
            episode,
            avg_load: log.avg_load,
            avg_mse: log.avg_mse,
            lambda: agent.dual().lambda,
            epsilon,
        });

        if episode >= select_from {
            let q = agent.frozen_q();
            let key = q.greedy_map();
            let (load, mse) = match validated.get(&key) {
                Some(v) => *v,
                None => {
                    let v = validate(cfg, &q)?;
                    validated.insert(key, v);
                    v
                }
            };
            candidates.push(Candidate {
                episode,
                q,
                lambda: agent.dual().lambda,
                load,
                mse,
            });
        }
    }

    let feasible = candidates.iter().any(|c| c.mse <= e_max);
    let best = if feasible {
        candidates.iter().filter(|c| c.mse <= e_max).min_by(|a, b| {
            a.load
                .total_cmp(&b.load)
                .then(a.mse.total_cmp(&b.mse))
                .then(b.episode.cmp(&a.episode))
        })
    } else {
        candidates
            .iter()
            .min_by(|a, b| a.mse.total_cmp(&b.mse).then(b.episode.cmp(&a.episode)))
    }
    .expect("select_window >= 1");

    let checkpoint = PolicyCheckpoint {
        tool_version: TOOL_VERSION.to_string(),
        config_hash: cfg.content_hash(),
        policy_hash: cfg.policy_hash(),
        seed: cfg.seed,
        encoder: StateEncoder::new(params.bins, params.mse_lo, params.mse_hi)?,
        q: best.q.clone(),
        lambda: best.lambda,
    };
    Ok(TrainReport {
        checkpoint,
        curve,
        selected_episode: best.episode,
        validation: (best.load, best.mse),
        feasible,
    })
}

fn validate(cfg: &RunConfig, q: &QTable) -> Result<(f64, f64)> {
    let n = cfg.agent.validation_episodes;
    let (mut load, mut mse) = (0.0, 0.0);
    for i in 0..n {
        let mut policy = GreedyPolicy::new(q.clone());
        let seed = cfg.episode_seed(SeedDomain::Validate, i);
        let log = run_episode_unchecked(cfg, &mut policy, i, seed)?;
        load += log.avg_load;
        mse += log.avg_mse;
    }
    Ok((load / n as f64, mse / n as f64))
}
