//! Run configuration: every knob of a train / eval / sweep run.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::AgentParams;
use crate::channel::ChannelConfig;
use crate::error::{Error, Result};
use crate::metrics::ConstraintMode;
use crate::predictor::PredictorParams;
use crate::predictor::PredictorRegistry;
use crate::rng::{self, Purpose};
use crate::sampling::RATES_HZ;
use crate::trajectory::{self, TrajectoryConfig, TrajectoryParams};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingParams {
    pub epoch_ms: u64,
    pub episode_ms: u64,
    /// Ticks at the start of each episode excluded from the MSE.
    pub warmup_ms: u64,
}

impl Default for TimingParams {
    fn default() -> Self {
        Self {
            epoch_ms: 100,
            episode_ms: 30_000,
            warmup_ms: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepParams {
    pub p_loss: Vec<f64>,
    /// Seeded episodes averaged per (action, p_loss) cell.
    pub episodes: usize,
    /// Error budgets (deg²) at which the frontier is evaluated.
    pub budgets: Vec<f64>,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            p_loss: vec![0.0, 0.1],
            episodes: 10,
            budgets: vec![
                1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 3e-3, 5e-3, 7e-3, 1e-2, 2e-2, 5e-2, 0.1, 0.2, 0.5,
                1.0, 2.0, 5.0, 10.0,
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalParams {
    pub episodes: usize,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self { episodes: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Average tracking-error threshold; see `constraint`.
    pub e_max: f64,
    pub constraint: ConstraintMode,
    pub output_dir: PathBuf,
    pub timing: TimingParams,
    pub trajectory: TrajectoryParams,
    pub channel: ChannelConfig,
    pub predictor: PredictorParams,
    pub agent: AgentParams,
    pub sweep: SweepParams,
    pub eval: EvalParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            e_max: 0.007,
            constraint: ConstraintMode::Mse,
            output_dir: PathBuf::from("out"),
            timing: TimingParams::default(),
            trajectory: TrajectoryParams::default(),
            channel: ChannelConfig::default(),
            predictor: PredictorParams::default(),
            agent: AgentParams::default(),
            sweep: SweepParams::default(),
            eval: EvalParams::default(),
        }
    }
}

/// Seed domains; episodes of different kinds never share a seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedDomain {
    Train = 0,
    Validate = 1,
    Eval = 2,
    Sweep = 3,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let t = &self.timing;
        if t.epoch_ms == 0
            || RATES_HZ
                .iter()
                .any(|r| !t.epoch_ms.is_multiple_of(1000 / *r as u64))
        {
            return Err(Error::config(format!(
                "epoch_ms {} must be a positive multiple of every sampling period",
                t.epoch_ms
            )));
        }
        if !t.episode_ms.is_multiple_of(t.epoch_ms) {
            return Err(Error::config(format!(
                "episode_ms {} is not a multiple of epoch_ms {}",
                t.episode_ms, t.epoch_ms
            )));
        }
        if t.warmup_ms >= t.episode_ms {
            return Err(Error::config("warmup_ms must be shorter than the episode"));
        }
        if !(self.e_max > 0.0 && self.e_max.is_finite()) {
            return Err(Error::config(format!(
                "e_max must be positive, got {}",
                self.e_max
            )));
        }
        trajectory::validate(&self.trajectory_config(0))?;
        self.channel.validate()?;
        PredictorRegistry::with_builtins().create(&self.predictor)?;
        self.agent.validate()?;

        let s = &self.sweep;
        if let Some(p) = s.p_loss.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::config(format!("sweep p_loss {p} outside [0, 1]")));
        }
        if s.p_loss.is_empty() || s.episodes == 0 {
            return Err(Error::config(
                "sweep needs at least one p_loss and one episode",
            ));
        }
        if s.budgets.is_empty()
            || s.budgets
                .iter()
                .any(|b| b.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater))
            || s.budgets.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::config(
                "sweep budgets must be positive and strictly increasing",
            ));
        }
        Ok(())
    }

    /// Constraint threshold in deg² of MSE.
    pub fn mse_threshold(&self) -> f64 {
        self.constraint.mse_threshold(self.e_max)
    }

    pub fn trajectory_config(&self, episode_seed: u64) -> TrajectoryConfig {
        TrajectoryConfig {
            params: self.trajectory.clone(),
            duration_ms: self.timing.episode_ms,
            seed: episode_seed,
        }
    }

    pub fn channel_config(&self, episode_seed: u64) -> ChannelConfig {
        ChannelConfig {
            seed: episode_seed,
            ..self.channel.clone()
        }
    }

    pub fn episode_seed(&self, domain: SeedDomain, index: usize) -> u64 {
        let base = rng::derive_seed(self.seed, Purpose::Episode, domain as u64);
        rng::derive_seed(base, Purpose::Episode, index as u64)
    }

    /// Hash of every setting except the seed and the output location.
    /// Outputs embed it next to the seed.
    pub fn content_hash(&self) -> String {
        self.hash_without(&["seed", "output_dir"])
    }

    /// Hash of the settings that shape a trained policy: [`content_hash`]
    /// without the sweep and evaluation tables. A checkpoint can be
    /// evaluated under any config with the same policy hash.
    ///
    /// [`content_hash`]: Self::content_hash
    pub fn policy_hash(&self) -> String {
        self.hash_without(&["seed", "output_dir", "sweep", "eval"])
    }

    fn hash_without(&self, keys: &[&str]) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            for key in keys {
                map.remove(*key);
            }
        }
        short_digest(value.to_string().as_bytes())
    }
}

/// First 8 bytes of the SHA-256 of `bytes`, as 16 hex digits.
pub fn short_digest(bytes: &[u8]) -> String {
    hex::encode(&Sha256::digest(bytes)[..8])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn hashes_ignore_seed_and_output() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.seed = 77;
        b.output_dir = "elsewhere".into();
        assert_eq!(a.content_hash(), b.content_hash());
        assert_eq!(a.content_hash().len(), 16);

        b.sweep.episodes = 3;
        b.eval.episodes = 4;
        assert_ne!(a.content_hash(), b.content_hash());
        assert_eq!(a.policy_hash(), b.policy_hash());

        b.channel.p_loss = 0.1;
        assert_ne!(a.policy_hash(), b.policy_hash());
    }

    #[test]
    fn rejects_inconsistent_timing() {
        let mut c = RunConfig::default();
        c.timing.episode_ms = 30_050;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.timing.epoch_ms = 50;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.sweep.budgets = vec![0.1, 0.01];
        assert!(c.validate().is_err());
    }

    #[test]
    fn seed_domains_differ() {
        let c = RunConfig::default();
        assert_ne!(
            c.episode_seed(SeedDomain::Train, 0),
            c.episode_seed(SeedDomain::Eval, 0)
        );
        assert_ne!(
            c.episode_seed(SeedDomain::Train, 0),
            c.episode_seed(SeedDomain::Train, 1)
        );
        assert_eq!(
            c.episode_seed(SeedDomain::Sweep, 4),
            c.episode_seed(SeedDomain::Sweep, 4)
        );
    }
}
