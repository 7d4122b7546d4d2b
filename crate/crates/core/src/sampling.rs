//! Decimation of the 1 kHz trajectory into transmitted packets.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{Trajectory, TICK_RATE_HZ};

/// Admissible sampling rates, Hz. Every entry divides 1000.
pub const RATES_HZ: [u32; 7] = [10, 20, 50, 100, 200, 500, 1000];

/// One decimated measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePacket {
    pub seq: u64,
    pub measure_tick: u64,
    pub angle_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct SamplingRate(u32);

impl SamplingRate {
    pub fn new(rate_hz: u32) -> Result<Self> {
        if RATES_HZ.contains(&rate_hz) {
            Ok(Self(rate_hz))
        } else {
            Err(Error::domain(format!(
                "sampling rate {rate_hz} Hz not in {RATES_HZ:?}"
            )))
        }
    }

    pub fn from_index(i: usize) -> Self {
        Self(RATES_HZ[i])
    }

    pub fn index(self) -> usize {
        RATES_HZ
            .iter()
            .position(|&r| r == self.0)
            .expect("validated on construction")
    }

    pub fn hz(self) -> u32 {
        self.0
    }

    /// Inter-sample period in ticks.
    pub fn period_ticks(self) -> u64 {
        (TICK_RATE_HZ / self.0) as u64
    }

    pub fn all() -> impl Iterator<Item = SamplingRate> {
        RATES_HZ.into_iter().map(SamplingRate)
    }
}

impl TryFrom<u32> for SamplingRate {
    type Error = Error;
    fn try_from(v: u32) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SamplingRate> for u32 {
    fn from(r: SamplingRate) -> u32 {
        r.0
    }
}

impl fmt::Display for SamplingRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} Hz", self.0)
    }
}

/// Emits one packet every `rate.period_ticks()` ticks of `[start, end)`,
/// starting at `start`. Sequence numbers continue from `first_seq`.
pub fn decimate(
    traj: &Trajectory,
    (start, end): (u64, u64),
    rate: SamplingRate,
    first_seq: u64,
) -> Result<Vec<SamplePacket>> {
    if start > end || end > traj.len() {
        return Err(Error::domain(format!(
            "window [{start}, {end}) outside trajectory of {} ticks",
            traj.len()
        )));
    }
    let period = rate.period_ticks();
    if (end - start) % period != 0 {
        return Err(Error::domain(format!(
            "window length {} is not a multiple of the {period}-tick period",
            end - start
        )));
    }
    Ok((start..end)
        .step_by(period as usize)
        .zip(first_seq..)
        .map(|(tick, seq)| SamplePacket {
            seq,
            measure_tick: tick,
            angle_deg: traj.at(tick),
        })
        .collect())
}
