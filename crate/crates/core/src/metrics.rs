//! Tracking error and normalized communication load.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Packet rate without decimation; the load normalizer.
pub const REFERENCE_RATE_PPS: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    /// Mean squared tracking error over the included ticks, deg².
    pub mse_deg2: f64,
    /// Ticks that entered the MSE; zero for epochs inside the warm-up.
    pub included_ticks: u32,
    /// Packets handed to the channel, lost or not.
    pub packets_sent: u64,
    pub packets_delivered: u64,
    pub load_norm: f64,
}

impl EpochMetrics {
    pub fn is_scored(&self) -> bool {
        self.included_ticks > 0
    }
}

/// Mean of `(truth - twin)^2` over the two slices.
pub fn tracking_mse(truth: &[f64], twin: &[f64]) -> Result<f64> {
    if truth.len() != twin.len() {
        return Err(Error::domain(format!(
            "signal lengths differ: {} vs {}",
            truth.len(),
            twin.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::domain("empty MSE window"));
    }
    let sum: f64 = truth.iter().zip(twin).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / truth.len() as f64)
}

/// Sender packet rate over `duration_ms` divided by the 1000 packets/s
/// reference.
pub fn normalized_load(packets_sent: u64, duration_ms: u64) -> f64 {
    assert!(duration_ms > 0, "load over an empty interval");
    let pps = packets_sent as f64 * 1000.0 / duration_ms as f64;
    pps / REFERENCE_RATE_PPS
}

/// How the tracking-error threshold is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintMode {
    /// Threshold is an MSE in deg².
    #[default]
    Mse,
    /// Threshold is an RMSE in degrees; compared as its square.
    Rmse,
}

impl ConstraintMode {
    /// Threshold expressed in deg² of MSE.
    pub fn mse_threshold(self, e_max: f64) -> f64 {
        match self {
            ConstraintMode::Mse => e_max,
            ConstraintMode::Rmse => e_max * e_max,
        }
    }
}
