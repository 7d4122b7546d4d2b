//! Bernoulli-loss, uniform-jitter packet channel.
//!
//! Each packet's fate is a pure function of `(seed, seq)`: loss and jitter are
//! drawn from separate keyed streams, so changing `p_loss` never changes the
//! delay of a packet that survives under both settings.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Purpose, StreamFamily};
use crate::sampling::SamplePacket;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub p_loss: f64,
    pub base_delay_ms: u64,
    /// Jitter is uniform on `{0, ..., jitter_ms}`.
    pub jitter_ms: u64,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            p_loss: 0.0,
            base_delay_ms: 10,
            jitter_ms: 5,
            seed: 0,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_loss) {
            return Err(Error::config(format!(
                "p_loss must lie in [0, 1], got {}",
                self.p_loss
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeliveryOutcome {
    Lost,
    Delivered { arrival_tick: u64 },
}

/// A channel instance with its keyed streams set up.
#[derive(Debug, Clone)]
pub struct Channel {
    cfg: ChannelConfig,
    loss: StreamFamily,
    jitter: StreamFamily,
}

impl Channel {
    pub fn new(cfg: ChannelConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            loss: StreamFamily::new(cfg.seed, Purpose::Loss),
            jitter: StreamFamily::new(cfg.seed, Purpose::Jitter),
            cfg,
        })
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.cfg
    }

    pub fn transmit(&self, pkt: &SamplePacket) -> DeliveryOutcome {
        if self.loss.stream(pkt.seq).random_bool(self.cfg.p_loss) {
            return DeliveryOutcome::Lost;
        }
        DeliveryOutcome::Delivered {
            arrival_tick: pkt.measure_tick + self.cfg.base_delay_ms + self.jitter_draw(pkt.seq),
        }
    }

    /// The jitter a packet with this sequence number would see if delivered.
    pub fn jitter_draw(&self, seq: u64) -> u64 {
        if self.cfg.jitter_ms == 0 {
            0
        } else {
            self.jitter.stream(seq).random_range(0..=self.cfg.jitter_ms)
        }
    }

    /// Drops lost packets and orders survivors by `(arrival_tick, seq)`.
    pub fn simulate_link(&self, packets: &[SamplePacket]) -> Vec<(u64, SamplePacket)> {
        let mut out: Vec<(u64, SamplePacket)> = packets
            .iter()
            .filter_map(|p| match self.transmit(p) {
                DeliveryOutcome::Lost => None,
                DeliveryOutcome::Delivered { arrival_tick } => Some((arrival_tick, *p)),
            })
            .collect();
        out.sort_by_key(|(arrival, p)| (*arrival, p.seq));
        out
    }
}

/// Fate of a single packet on a channel configured by `cfg`.
pub fn transmit(pkt: &SamplePacket, cfg: &ChannelConfig) -> Result<DeliveryOutcome> {
    Ok(Channel::new(cfg.clone())?.transmit(pkt))
}

pub fn simulate_link(
    packets: &[SamplePacket],
    cfg: &ChannelConfig,
) -> Result<Vec<(u64, SamplePacket)>> {
    Ok(Channel::new(cfg.clone())?.simulate_link(packets))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn packets(n: u64, period: u64) -> Vec<SamplePacket> {
        (0..n)
            .map(|i| SamplePacket {
                seq: i,
                measure_tick: i * period,
                angle_deg: i as f64,
            })
            .collect()
    }

    fn cfg(p_loss: f64, delay: u64, jitter: u64, seed: u64) -> ChannelConfig {
        ChannelConfig {
            p_loss,
            base_delay_ms: delay,
            jitter_ms: jitter,
            seed,
        }
    }

    #[test]
    fn lossless_delivers_everything() {
        let ch = Channel::new(cfg(0.0, 10, 5, 3)).unwrap();
        for p in packets(5000, 1) {
            match ch.transmit(&p) {
                DeliveryOutcome::Delivered { arrival_tick } => {
                    assert!(arrival_tick >= p.measure_tick + 10);
                    assert!(arrival_tick <= p.measure_tick + 15);
                }
                DeliveryOutcome::Lost => panic!("lost packet at p_loss = 0"),
            }
        }
    }

    #[test]
    fn total_loss_drops_everything() {
        let ch = Channel::new(cfg(1.0, 10, 5, 3)).unwrap();
        assert!(packets(5000, 1)
            .iter()
            .all(|p| ch.transmit(p) == DeliveryOutcome::Lost));
        assert!(ch.simulate_link(&packets(100, 1)).is_empty());
    }

    #[test]
    fn constant_delay_preserves_order() {
        let ch = Channel::new(cfg(0.0, 7, 0, 1)).unwrap();
        let pkts = packets(50, 2);
        let out = ch.simulate_link(&pkts);
        let seqs: Vec<u64> = out.iter().map(|(_, p)| p.seq).collect();
        assert_eq!(seqs, (0..50).collect::<Vec<_>>());
        assert!(out.iter().all(|(a, p)| *a == p.measure_tick + 7));
    }

    #[test]
    fn jitter_can_reorder_and_output_is_sorted() {
        let ch = Channel::new(cfg(0.0, 0, 20, 9)).unwrap();
        let pkts = packets(500, 1);
        let out = ch.simulate_link(&pkts);
        assert_eq!(out.len(), 500);
        assert!(out
            .windows(2)
            .all(|w| (w[0].0, w[0].1.seq) < (w[1].0, w[1].1.seq)));
        let swapped = out.windows(2).any(|w| w[0].1.seq > w[1].1.seq);
        assert!(
            swapped,
            "expected at least one reordering with 20 ms jitter"
        );
    }

    #[test]
    fn link_matches_packet_by_packet_oracle() {
        let c = cfg(0.1, 10, 5, 1234);
        let pkts = packets(1000, 1);
        let link = simulate_link(&pkts, &c).unwrap();
        let mut oracle: Vec<(u64, u64)> = pkts
            .iter()
            .filter_map(|p| match transmit(p, &c).unwrap() {
                DeliveryOutcome::Delivered { arrival_tick } => Some((arrival_tick, p.seq)),
                DeliveryOutcome::Lost => None,
            })
            .collect();
        oracle.sort();
        let got: Vec<(u64, u64)> = link.iter().map(|(a, p)| (*a, p.seq)).collect();
        assert_eq!(got, oracle);
        assert!(got.len() > 850 && got.len() < 950);
    }

    #[test]
    fn survivor_delays_do_not_depend_on_loss() {
        let pkts = packets(2000, 1);
        let lossless = Channel::new(cfg(0.0, 10, 5, 42))
            .unwrap()
            .simulate_link(&pkts);
        let lossy = Channel::new(cfg(0.3, 10, 5, 42))
            .unwrap()
            .simulate_link(&pkts);
        let arrival_by_seq: std::collections::HashMap<u64, u64> =
            lossless.iter().map(|(a, p)| (p.seq, *a)).collect();
        for (a, p) in &lossy {
            assert_eq!(arrival_by_seq[&p.seq], *a);
        }
        // survivors are a subset of the sent packets
        assert!(lossy.iter().all(|(_, p)| p.seq < 2000));
    }

    #[test]
    fn rejects_invalid_probability() {
        assert!(Channel::new(cfg(1.5, 0, 0, 0)).is_err());
        assert!(Channel::new(cfg(-0.1, 0, 0, 0)).is_err());
    }
}
