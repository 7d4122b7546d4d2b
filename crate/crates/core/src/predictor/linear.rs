use super::{Extrapolator, History, ZeroOrderHold};

/// Line through the two newest samples; zero-order hold with fewer.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearExtrapolator;

impl Extrapolator for LinearExtrapolator {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn extrapolate(&self, history: &History, horizon_ms: f64, period_ms: f64) -> f64 {
        match (history.nth_newest(0), history.nth_newest(1)) {
            (Some((t1, y1)), Some((t0, y0))) => {
                let slope = (y1 - y0) / (t1 - t0) as f64;
                y1 + slope * horizon_ms
            }
            _ => ZeroOrderHold.extrapolate(history, horizon_ms, period_ms),
        }
    }
}
