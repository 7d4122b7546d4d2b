use super::{Extrapolator, History};

/// Holds the newest received value.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroOrderHold;

impl Extrapolator for ZeroOrderHold {
    fn name(&self) -> &'static str {
        "zoh"
    }

    fn extrapolate(&self, history: &History, _horizon_ms: f64, _period_ms: f64) -> f64 {
        history.newest().map_or(0.0, |(_, v)| v)
    }
}
