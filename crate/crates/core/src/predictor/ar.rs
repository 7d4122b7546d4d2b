//! Least-squares autoregressive extrapolation.
//!
//! The received history is resampled onto a uniform grid with the current
//! sampling period (newest sample anchored, linear interpolation between
//! received points), an AR(p) model is fitted by ridge-regularized normal
//! equations, and the recursion is run forward to the horizon. Fractional
//! step counts interpolate between neighbouring forecast steps so the output
//! is continuous in the horizon.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::{Extrapolator, History, LinearExtrapolator};
use crate::trajectory::MAX_ABS_ANGLE_DEG;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FitError {
    #[error("window of {len} samples too short for order {order}")]
    TooShort { len: usize, order: usize },
    #[error("normal equations are singular")]
    Singular,
}

/// Coefficients `a` minimizing `sum_k (x_k - sum_i a_i x_{k-i})^2 + ridge * |a|^2`
/// over the window; `a[0]` multiplies the most recent lag.
pub fn fit_ar(window: &[f64], order: usize, ridge: f64) -> Result<Vec<f64>, FitError> {
    if order == 0 || window.len() < 2 * order + 1 {
        return Err(FitError::TooShort {
            len: window.len(),
            order,
        });
    }
    let rows = window.len() - order;
    let design = DMatrix::from_fn(rows, order, |r, c| window[r + order - 1 - c]);
    let target = DVector::from_iterator(rows, window[order..].iter().copied());

    let mut normal = design.transpose() * &design;
    for i in 0..order {
        normal[(i, i)] += ridge;
    }
    let rhs = design.transpose() * target;
    let chol = normal.cholesky().ok_or(FitError::Singular)?;
    let coeffs = chol.solve(&rhs);
    if coeffs.iter().all(|c| c.is_finite()) {
        Ok(coeffs.iter().copied().collect())
    } else {
        Err(FitError::Singular)
    }
}

/// Runs the recursion `steps` (possibly fractional) steps past the end of
/// `series`.
pub fn forecast_ar(series: &[f64], coeffs: &[f64], steps: f64) -> f64 {
    let order = coeffs.len();
    let last = *series.last().expect("non-empty series");
    if steps <= 0.0 {
        return last;
    }
    let whole = steps.ceil() as usize;
    // lags[0] is the most recent value
    let mut lags: Vec<f64> = series.iter().rev().take(order).copied().collect();
    let mut prev = last;
    let mut next = last;
    for _ in 0..whole {
        prev = lags[0];
        next = coeffs.iter().zip(&lags).map(|(a, x)| a * x).sum();
        lags.rotate_right(1);
        lags[0] = next;
    }
    let frac = steps - (whole - 1) as f64;
    prev + (next - prev) * frac
}

/// Up to `max_points` values on the grid `newest - k * period`, oldest first,
/// linearly interpolated from the history.
pub fn resample_uniform(history: &History, period_ms: f64, max_points: usize) -> Vec<f64> {
    let Some((newest, _)) = history.newest() else {
        return Vec::new();
    };
    let oldest = history.iter().next().map(|(t, _)| t).unwrap_or(newest);
    let span = (newest - oldest) as f64;
    let count = ((span / period_ms).floor() as usize + 1).min(max_points);

    let points: Vec<(u64, f64)> = history.iter().collect();
    let mut out = Vec::with_capacity(count);
    // walk backwards from the newest sample
    let mut hi = points.len() - 1;
    for k in 0..count {
        let t = newest as f64 - k as f64 * period_ms;
        while hi > 0 && points[hi - 1].0 as f64 >= t {
            hi -= 1;
        }
        let (t1, y1) = points[hi];
        let v = if t1 as f64 == t || hi == 0 {
            y1
        } else {
            let (t0, y0) = points[hi - 1];
            y0 + (y1 - y0) * (t - t0 as f64) / (t1 - t0) as f64
        };
        out.push(v);
    }
    out.reverse();
    out
}

#[derive(Debug, Clone)]
pub struct ArExtrapolator {
    order: usize,
    window: usize,
    ridge: f64,
}

impl ArExtrapolator {
    pub fn new(order: usize, window: usize, ridge: f64) -> Self {
        Self {
            order,
            window,
            ridge,
        }
    }
}

impl Extrapolator for ArExtrapolator {
    fn name(&self) -> &'static str {
        "ar"
    }

    fn extrapolate(&self, history: &History, horizon_ms: f64, period_ms: f64) -> f64 {
        let fallback = || LinearExtrapolator.extrapolate(history, horizon_ms, period_ms);
        let series = resample_uniform(history, period_ms, self.window);
        let Ok(coeffs) = fit_ar(&series, self.order, self.ridge) else {
            return fallback();
        };
        let v = forecast_ar(&series, &coeffs, horizon_ms / period_ms);
        if v.is_finite() && v.abs() <= MAX_ABS_ANGLE_DEG {
            v
        } else {
            fallback()
        }
    }
}
