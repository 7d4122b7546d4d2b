use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::agent::{Action, AgentState};
use crate::channel::{Channel, DeliveryOutcome};
use crate::error::{Error, Result};
use crate::metrics::{normalized_load, EpochMetrics};
use crate::predictor::PredictorState;
use crate::sampling::{decimate, SamplePacket};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochResult {
    pub epoch_index: usize,
    pub action: Action,
    pub metrics: EpochMetrics,
    pub state_before: AgentState,
    pub state_after: AgentState,
}

/// What the world reports about one epoch before state encoding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochOutcome {
    pub epoch_index: usize,
    pub action: Action,
    pub metrics: EpochMetrics,
    /// MSE over the epoch's ticks at which the twin had data, whether or not
    /// they are scored. `None` if the twin had nothing yet.
    pub feedback_mse: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct InFlight {
    arrival_tick: u64,
    pkt: SamplePacket,
}

impl Eq for InFlight {}

impl Ord for InFlight {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.arrival_tick, self.pkt.seq).cmp(&(other.arrival_tick, other.pkt.seq))
    }
}

impl PartialOrd for InFlight {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// One episode's closed loop: trajectory position, link, and twin.
#[derive(Debug, Clone)]
pub struct World {
    traj: Trajectory,
    channel: Channel,
    predictor: PredictorState,
    in_flight: BinaryHeap<Reverse<InFlight>>,
    cursor: u64,
    next_seq: u64,
    epoch_index: usize,
    epoch_ms: u64,
    warmup_ms: u64,
}

impl World {
    pub fn new(
        traj: Trajectory,
        channel: Channel,
        predictor: PredictorState,
        epoch_ms: u64,
        warmup_ms: u64,
    ) -> Self {
        Self {
            traj,
            channel,
            predictor,
            in_flight: BinaryHeap::new(),
            cursor: 0,
            next_seq: 0,
            epoch_index: 0,
            epoch_ms,
            warmup_ms,
        }
    }

    pub fn cursor(&self) -> u64 {
        self.cursor
    }

    pub fn is_exhausted(&self) -> bool {
        self.cursor + self.epoch_ms > self.traj.len()
    }

    pub fn predictor(&self) -> &PredictorState {
        &self.predictor
    }

    /// Runs the next epoch under `action`: decimate, transmit, deliver
    /// arrivals tick by tick, and score the twin against the truth. Packets
    /// arriving after the epoch stay queued for later epochs.
    pub fn run_epoch(&mut self, action: Action) -> Result<EpochOutcome> {
        if self.is_exhausted() {
            return Err(Error::EpisodeEnd(self.cursor));
        }
        let (start, end) = (self.cursor, self.cursor + self.epoch_ms);
        let packets = decimate(&self.traj, (start, end), action.rate, self.next_seq)?;
        self.next_seq += packets.len() as u64;

        let mut delivered = 0u64;
        for pkt in &packets {
            if let DeliveryOutcome::Delivered { arrival_tick } = self.channel.transmit(pkt) {
                delivered += 1;
                self.in_flight.push(Reverse(InFlight {
                    arrival_tick,
                    pkt: *pkt,
                }));
            }
        }

        self.predictor
            .set_period_ms(action.rate.period_ticks() as f64);
        let (mut sq_sum, mut n) = (0.0, 0u32);
        let (mut fb_sum, mut fb_n) = (0.0, 0u32);
        for tick in start..end {
            while let Some(Reverse(next)) = self.in_flight.peek() {
                if next.arrival_tick > tick {
                    break;
                }
                let Reverse(f) = self.in_flight.pop().expect("peeked");
                self.predictor.ingest(f.arrival_tick, &f.pkt);
            }
            let twin = self.predictor.twin_value(action.horizon);
            let err = self.traj.at(tick) - twin;
            if !self.predictor.history().is_empty() {
                fb_sum += err * err;
                fb_n += 1;
            }
            if tick >= self.warmup_ms {
                sq_sum += err * err;
                n += 1;
            }
        }

        let metrics = EpochMetrics {
            mse_deg2: if n > 0 { sq_sum / n as f64 } else { 0.0 },
            included_ticks: n,
            packets_sent: packets.len() as u64,
            packets_delivered: delivered,
            load_norm: normalized_load(packets.len() as u64, self.epoch_ms),
        };
        let outcome = EpochOutcome {
            epoch_index: self.epoch_index,
            action,
            metrics,
            feedback_mse: (fb_n > 0).then(|| fb_sum / fb_n as f64),
        };
        self.cursor = end;
        self.epoch_index += 1;
        Ok(outcome)
    }
}
