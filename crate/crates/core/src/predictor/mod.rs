//! Twin-side reconstruction of the trajectory from received packets.
//!
//! Extrapolation methods implement [`Extrapolator`] and are looked up by name
//! in a [`PredictorRegistry`]. The built-ins form a fallback chain:
//! `ar` falls back to `linear`, which falls back to `zoh`.

mod ar;
mod linear;
mod zoh;

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::SamplePacket;

pub use ar::{fit_ar, forecast_ar, resample_uniform, ArExtrapolator, FitError};
pub use linear::LinearExtrapolator;
pub use zoh::ZeroOrderHold;

/// Admissible prediction horizons, ms.
pub const HORIZONS_MS: [u32; 6] = [0, 5, 10, 20, 50, 100];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Horizon(u32);

impl Horizon {
    pub fn new(horizon_ms: u32) -> Result<Self> {
        if HORIZONS_MS.contains(&horizon_ms) {
            Ok(Self(horizon_ms))
        } else {
            Err(Error::domain(format!(
                "horizon {horizon_ms} ms not in {HORIZONS_MS:?}"
            )))
        }
    }

    pub fn from_index(i: usize) -> Self {
        Self(HORIZONS_MS[i])
    }

    pub fn index(self) -> usize {
        HORIZONS_MS
            .iter()
            .position(|&h| h == self.0)
            .expect("validated on construction")
    }

    pub fn ms(self) -> u32 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Horizon> {
        HORIZONS_MS.into_iter().map(Horizon)
    }
}

impl TryFrom<u32> for Horizon {
    type Error = Error;
    fn try_from(v: u32) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Horizon> for u32 {
    fn from(h: Horizon) -> u32 {
        h.0
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ms", self.0)
    }
}

/// Last `capacity` received samples as `(measure_tick, angle_deg)`, oldest
/// first, with strictly increasing ticks.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    samples: VecDeque<(u64, f64)>,
    capacity: usize,
}

impl History {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "history capacity must be positive");
        Self {
            samples: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn from_samples(capacity: usize, samples: &[(u64, f64)]) -> Self {
        let mut h = Self::new(capacity);
        for &(t, v) in samples {
            h.push(t, v);
        }
        h
    }

    /// Appends a sample; returns false (and changes nothing) if it is not
    /// newer than the newest stored one.
    pub fn push(&mut self, tick: u64, angle: f64) -> bool {
        if let Some(&(newest, _)) = self.samples.back() {
            if tick <= newest {
                return false;
            }
        }
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back((tick, angle));
        true
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn newest(&self) -> Option<(u64, f64)> {
        self.samples.back().copied()
    }

    /// `k`-th newest sample (0 is the newest).
    pub fn nth_newest(&self, k: usize) -> Option<(u64, f64)> {
        self.samples
            .len()
            .checked_sub(k + 1)
            .map(|i| self.samples[i])
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (u64, f64)> + ExactSizeIterator + '_ {
        self.samples.iter().copied()
    }
}

/// Maps a non-empty history to the angle at `newest tick + horizon_ms`.
///
/// `period_ms` is the current inter-sample period; methods that work on a
/// uniform grid use it as their step.
pub trait Extrapolator: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn extrapolate(&self, history: &History, horizon_ms: f64, period_ms: f64) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictorParams {
    pub method: String,
    pub ar_order: usize,
    pub ar_window: usize,
    pub ridge: f64,
}

impl Default for PredictorParams {
    fn default() -> Self {
        Self {
            method: "linear".into(),
            ar_order: 4,
            ar_window: 32,
            ridge: 1e-8,
        }
    }
}

type Factory = Box<dyn Fn(&PredictorParams) -> Result<Arc<dyn Extrapolator>> + Send + Sync>;

/// Name-keyed table of extrapolation methods.
pub struct PredictorRegistry {
    factories: BTreeMap<&'static str, Factory>,
}

impl PredictorRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register("zoh", |_| Ok(Arc::new(ZeroOrderHold)));
        reg.register("linear", |_| Ok(Arc::new(LinearExtrapolator)));
        reg.register("ar", |p| {
            if p.ar_order == 0 {
                return Err(Error::config("ar_order must be at least 1"));
            }
            if p.ar_window < 2 * p.ar_order + 1 {
                return Err(Error::config(format!(
                    "ar_window {} too short for order {} (need >= {})",
                    p.ar_window,
                    p.ar_order,
                    2 * p.ar_order + 1
                )));
            }
            if !(p.ridge >= 0.0 && p.ridge.is_finite()) {
                return Err(Error::config("ridge must be finite and non-negative"));
            }
            Ok(Arc::new(ArExtrapolator::new(
                p.ar_order,
                p.ar_window,
                p.ridge,
            )))
        });
        reg
    }

    pub fn register<F>(&mut self, name: &'static str, factory: F)
    where
        F: Fn(&PredictorParams) -> Result<Arc<dyn Extrapolator>> + Send + Sync + 'static,
    {
        self.factories.insert(name, Box::new(factory));
    }

    pub fn create(&self, params: &PredictorParams) -> Result<Arc<dyn Extrapolator>> {
        let factory = self.factories.get(params.method.as_str()).ok_or_else(|| {
            Error::config(format!(
                "unknown predictor method `{}` (known: {})",
                params.method,
                self.names().join(", ")
            ))
        })?;
        factory(params)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }
}

/// The twin's view: received history plus the extrapolation method.
#[derive(Debug, Clone)]
pub struct PredictorState {
    history: History,
    method: Arc<dyn Extrapolator>,
    period_ms: f64,
    cached: Option<(u32, f64)>,
}

impl PredictorState {
    pub fn new(method: Arc<dyn Extrapolator>, window: usize) -> Self {
        Self {
            history: History::new(window.max(2)),
            method,
            period_ms: 1.0,
            cached: None,
        }
    }

    pub fn from_params(params: &PredictorParams) -> Result<Self> {
        let method = PredictorRegistry::with_builtins().create(params)?;
        Ok(Self::new(method, params.ar_window))
    }

    pub fn method(&self) -> &dyn Extrapolator {
        self.method.as_ref()
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    /// Sets the sampling period used by grid-based methods.
    pub fn set_period_ms(&mut self, period_ms: f64) {
        if period_ms != self.period_ms {
            self.period_ms = period_ms;
            self.cached = None;
        }
    }

    /// Adds a received packet. Packets not newer than the newest stored one
    /// are stale and are dropped; returns whether the packet was kept.
    pub fn ingest(&mut self, _arrival_tick: u64, pkt: &SamplePacket) -> bool {
        let kept = self.history.push(pkt.measure_tick, pkt.angle_deg);
        if kept {
            self.cached = None;
        }
        kept
    }

    /// Displayed twin angle: the history extrapolated `horizon` past its
    /// newest sample, or 0 before anything has arrived.
    pub fn twin_value(&mut self, horizon: Horizon) -> f64 {
        match self.cached {
            Some((h, v)) if h == horizon.ms() => v,
            _ => {
                let v = self.value_at(horizon.ms() as f64);
                self.cached = Some((horizon.ms(), v));
                v
            }
        }
    }

    /// Real-valued horizon version of [`twin_value`](Self::twin_value), uncached.
    pub fn value_at(&self, horizon_ms: f64) -> f64 {
        if self.history.is_empty() {
            return 0.0;
        }
        self.method
            .extrapolate(&self.history, horizon_ms, self.period_ms)
    }
}
