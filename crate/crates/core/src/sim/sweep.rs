//! Brute-force evaluation of every fixed (rate, horizon) action and the
//! resulting load/error frontier.

use rayon::prelude::*;

use super::{run_episode_unchecked, FixedPolicy};
use crate::agent::{Action, ACTION_COUNT};
use crate::config::{RunConfig, SeedDomain};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffPoint {
    pub action: Action,
    pub p_loss: f64,
    pub avg_mse: f64,
    pub avg_load: f64,
}

/// Minimum load achievable by a fixed action within an error budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierPoint {
    pub e_budget: f64,
    pub p_loss: f64,
    /// `None` when no action meets the budget.
    pub min_load: Option<f64>,
    pub argmin: Option<Action>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffTable {
    /// Ordered by p_loss (config order), then action index.
    pub points: Vec<TradeoffPoint>,
    /// Ordered by budget ascending, then p_loss (config order).
    pub frontier: Vec<FrontierPoint>,
}

impl TradeoffTable {
    pub fn points_for(&self, p_loss: f64) -> impl Iterator<Item = &TradeoffPoint> {
        self.points.iter().filter(move |p| p.p_loss == p_loss)
    }

    pub fn frontier_for(&self, p_loss: f64) -> impl Iterator<Item = &FrontierPoint> {
        self.frontier.iter().filter(move |f| f.p_loss == p_loss)
    }

    /// Cheapest fixed action whose mean MSE at `p_loss` is within `budget`.
    pub fn best_feasible(&self, p_loss: f64, budget: f64) -> Option<TradeoffPoint> {
        let pts: Vec<TradeoffPoint> = self.points_for(p_loss).copied().collect();
        frontier_argmin(&pts, budget)
    }
}

fn frontier_argmin(points: &[TradeoffPoint], budget: f64) -> Option<TradeoffPoint> {
    points
        .iter()
        .filter(|p| p.avg_mse <= budget)
        .min_by(|a, b| {
            a.avg_load
                .total_cmp(&b.avg_load)
                .then(a.avg_mse.total_cmp(&b.avg_mse))
                .then(a.action.index().cmp(&b.action.index()))
        })
        .copied()
}

/// Frontier of one p_loss slice over the given budgets.
pub fn frontier(points: &[TradeoffPoint], p_loss: f64, budgets: &[f64]) -> Vec<FrontierPoint> {
    budgets
        .iter()
        .map(|&e_budget| {
            let best = frontier_argmin(points, e_budget);
            FrontierPoint {
                e_budget,
                p_loss,
                min_load: best.map(|b| b.avg_load),
                argmin: best.map(|b| b.action),
            }
        })
        .collect()
}

/// Runs every fixed action for `cfg.sweep.episodes` episodes at each
/// `cfg.sweep.p_loss`. Episode `i` uses the same seed in every cell, so
/// cells differ only in action and loss probability.
pub fn sweep_fixed_policies(cfg: &RunConfig) -> Result<TradeoffTable> {
    cfg.validate()?;
    let sweep = &cfg.sweep;
    let n = sweep.episodes;
    let cells: Vec<(usize, usize, usize)> = (0..sweep.p_loss.len())
        .flat_map(|p| (0..ACTION_COUNT).flat_map(move |a| (0..n).map(move |i| (p, a, i))))
        .collect();

    let results: Vec<(f64, f64)> = cells
        .par_iter()
        .map(|&(p, a, i)| {
            let mut cell_cfg = cfg.clone();
            cell_cfg.channel.p_loss = sweep.p_loss[p];
            let mut policy = FixedPolicy(Action::from_index(a));
            let seed = cfg.episode_seed(SeedDomain::Sweep, i);
            run_episode_unchecked(&cell_cfg, &mut policy, i, seed).map(|l| (l.avg_load, l.avg_mse))
        })
        .collect::<Result<_>>()?;

    let mut points = Vec::with_capacity(sweep.p_loss.len() * ACTION_COUNT);
    for (cell, chunk) in results.chunks(n).enumerate() {
        let (p, a) = (cell / ACTION_COUNT, cell % ACTION_COUNT);
        points.push(TradeoffPoint {
            action: Action::from_index(a),
            p_loss: sweep.p_loss[p],
            avg_load: chunk.iter().map(|c| c.0).sum::<f64>() / n as f64,
            avg_mse: chunk.iter().map(|c| c.1).sum::<f64>() / n as f64,
        });
    }

    let mut frontier_pts = Vec::new();
    for (pi, &p) in sweep.p_loss.iter().enumerate() {
        let slice = &points[pi * ACTION_COUNT..(pi + 1) * ACTION_COUNT];
        frontier_pts.extend(
            frontier(slice, p, &sweep.budgets)
                .into_iter()
                .map(|f| (pi, f)),
        );
    }
    frontier_pts.sort_by(|(pa, a), (pb, b)| a.e_budget.total_cmp(&b.e_budget).then(pa.cmp(pb)));

    Ok(TradeoffTable {
        points,
        frontier: frontier_pts.into_iter().map(|(_, f)| f).collect(),
    })
}
