//! Lagrangian primal-dual tabular Q-learning over (sampling rate, horizon).
//!
//! The agent minimizes the per-epoch cost `load + lambda * mse`; `lambda`
//! prices the average tracking-error constraint and is raised or lowered by
//! projected dual ascent once per episode.

mod checkpoint;

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::REFERENCE_RATE_PPS;
use crate::predictor::{Horizon, HORIZONS_MS};
use crate::sampling::{SamplingRate, RATES_HZ};

pub use checkpoint::{PolicyCheckpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};

pub const ACTION_COUNT: usize = RATES_HZ.len() * HORIZONS_MS.len();

/// Joint (rate, horizon) choice. Index is `rate_index * 6 + horizon_index`,
/// so lower indices are cheaper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Action {
    pub rate: SamplingRate,
    pub horizon: Horizon,
}

impl Action {
    pub fn new(rate_hz: u32, horizon_ms: u32) -> Result<Self> {
        Ok(Self {
            rate: SamplingRate::new(rate_hz)?,
            horizon: Horizon::new(horizon_ms)?,
        })
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < ACTION_COUNT, "action index {index} out of range");
        Self {
            rate: SamplingRate::from_index(index / HORIZONS_MS.len()),
            horizon: Horizon::from_index(index % HORIZONS_MS.len()),
        }
    }

    pub fn index(self) -> usize {
        self.rate.index() * HORIZONS_MS.len() + self.horizon.index()
    }

    pub fn all() -> impl Iterator<Item = Action> {
        (0..ACTION_COUNT).map(Action::from_index)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Hz/{}ms", self.rate.hz(), self.horizon.ms())
    }
}

/// Discretized previous-epoch MSE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentState(pub usize);

/// Logarithmic MSE binning with an underflow bin below `lo` and an overflow
/// bin at or above `hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEncoder {
    edges: Vec<f64>,
}

impl StateEncoder {
    pub fn new(bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if bins < 3 {
            return Err(Error::config(format!(
                "need at least 3 state bins, got {bins}"
            )));
        }
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::config(format!("bad MSE bin range [{lo}, {hi}]")));
        }
        let interior = bins - 2;
        let decades = (hi / lo).log10();
        let mut edges: Vec<f64> = (0..=interior)
            .map(|k| lo * 10f64.powf(decades * k as f64 / interior as f64))
            .collect();
        edges[0] = lo;
        edges[interior] = hi;
        Ok(Self { edges })
    }

    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2
            || edges
                .windows(2)
                .any(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less))
            || edges[0].partial_cmp(&0.0) != Some(Ordering::Greater)
        {
            return Err(Error::Checkpoint(
                "bin edges must be positive and increasing".into(),
            ));
        }
        Ok(Self { edges })
    }

    pub fn bins(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn encode(&self, mse_deg2: f64) -> AgentState {
        if mse_deg2.is_nan() {
            return AgentState(self.bins() - 1);
        }
        AgentState(self.edges.partition_point(|&e| e <= mse_deg2))
    }

    /// Geometric centre of a bin; the two open-ended bins are treated as one
    /// ratio-width beyond their finite edge.
    pub fn geometric_midpoint(&self, bin: usize) -> f64 {
        let n = self.edges.len();
        let ratio = self.edges[1] / self.edges[0];
        match bin {
            0 => self.edges[0] / ratio.sqrt(),
            b if b == n => self.edges[n - 1] * ratio.sqrt(),
            b => (self.edges[b - 1] * self.edges[b]).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    pub lambda: f64,
    pub kappa: f64,
    /// Constraint threshold, deg² of MSE.
    pub e_max: f64,
    pub lambda_max: f64,
}

impl DualState {
    /// Projected ascent step `lambda <- clamp(lambda + kappa * (avg_mse - e_max), 0, lambda_max)`.
    pub fn update(&mut self, episode_avg_mse: f64) {
        let stepped = self.lambda + self.kappa * (episode_avg_mse - self.e_max);
        self.lambda = stepped.clamp(0.0, self.lambda_max);
    }
}

pub fn update_dual(dual: DualState, episode_avg_mse: f64) -> DualState {
    let mut next = dual;
    next.update(episode_avg_mse);
    next
}

pub fn lagrangian_cost(load_norm: f64, mse_deg2: f64, dual: &DualState) -> f64 {
    load_norm + dual.lambda * mse_deg2
}

/// Cost-to-go estimates, one row per state.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    states: usize,
    values: Vec<f64>,
    visits: Vec<u64>,
}

impl QTable {
    pub fn new(states: usize) -> Self {
        Self::filled(states, 0.0)
    }

    /// Table with every entry set to `value` and no visits.
    pub fn filled(states: usize, value: f64) -> Self {
        Self {
            states,
            values: vec![value; states * ACTION_COUNT],
            visits: vec![0; states * ACTION_COUNT],
        }
    }

    pub fn from_parts(states: usize, values: Vec<f64>, visits: Vec<u64>) -> Result<Self> {
        if values.len() != states * ACTION_COUNT || visits.len() != values.len() {
            return Err(Error::Checkpoint("Q table dimensions do not match".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Checkpoint("Q table holds non-finite values".into()));
        }
        Ok(Self {
            states,
            values,
            visits,
        })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn get(&self, s: AgentState, a: Action) -> f64 {
        self.values[s.0 * ACTION_COUNT + a.index()]
    }

    pub fn set(&mut self, s: AgentState, a: Action, v: f64) {
        self.values[s.0 * ACTION_COUNT + a.index()] = v;
    }

    pub fn visits(&self, s: AgentState, a: Action) -> u64 {
        self.visits[s.0 * ACTION_COUNT + a.index()]
    }

    pub fn row(&self, s: AgentState) -> &[f64] {
        &self.values[s.0 * ACTION_COUNT..(s.0 + 1) * ACTION_COUNT]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn visit_counts(&self) -> &[u64] {
        &self.visits
    }

    /// Lowest-cost action in `s`; ties go to the lowest index.
    pub fn greedy(&self, s: AgentState) -> Action {
        Action::from_index(argmin(self.row(s)))
    }

    pub fn min_value(&self, s: AgentState) -> f64 {
        self.row(s).iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Greedy action of every state, as action indices.
    pub fn greedy_map(&self) -> Vec<usize> {
        (0..self.states)
            .map(|s| self.greedy(AgentState(s)).index())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Index of the smallest entry; ties go to the lowest index.
pub fn argmin(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v < row[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy over a row of cost-to-go values.
pub fn epsilon_greedy(row: &[f64], epsilon: f64, rng: &mut impl Rng) -> Action {
    if epsilon > 0.0 && rng.random_bool(epsilon.clamp(0.0, 1.0)) {
        Action::from_index(rng.random_range(0..ACTION_COUNT))
    } else {
        Action::from_index(argmin(row))
    }
}

/// Epsilon-greedy choice over all actions.
pub fn select_action(q: &QTable, s: AgentState, epsilon: f64, rng: &mut impl Rng) -> Action {
    epsilon_greedy(q.row(s), epsilon, rng)
}

/// `Q(s,a) <- (1-alpha) Q(s,a) + alpha (cost + gamma * bootstrap)`.
pub fn backup(
    q: &mut QTable,
    s: AgentState,
    a: Action,
    cost: f64,
    bootstrap: f64,
    alpha: f64,
    gamma: f64,
) {
    let i = s.0 * ACTION_COUNT + a.index();
    q.values[i] = (1.0 - alpha) * q.values[i] + alpha * (cost + gamma * bootstrap);
    q.visits[i] += 1;
}

/// One-step backup `Q(s,a) <- (1-alpha) Q(s,a) + alpha (cost + gamma min_b Q(s',b))`.
pub fn update_q(
    q: &mut QTable,
    s: AgentState,
    a: Action,
    cost: f64,
    s_next: AgentState,
    alpha: f64,
    gamma: f64,
) {
    let bootstrap = q.min_value(s_next);
    backup(q, s, a, cost, bootstrap, alpha, gamma);
}

/// Lagrangian action values kept as separate load and MSE cost-to-go
/// tables, `Q = Q_load + lambda * Q_mse`.
///
/// Both tables bootstrap from the action that is greedy for the combined
/// values, so for a fixed multiplier an update is exactly [`update_q`] on the
/// combined table with cost `load + lambda * mse`. Keeping the parts apart
/// lets the combined values follow a new multiplier immediately.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianQ {
    load: QTable,
    mse: QTable,
}

impl LagrangianQ {
    pub fn new(states: usize) -> Self {
        Self::with_initial(states, 0.0, 0.0)
    }

    /// Tables starting at the given cost-to-go values.
    pub fn with_initial(states: usize, load: f64, mse: f64) -> Self {
        Self {
            load: QTable::filled(states, load),
            mse: QTable::filled(states, mse),
        }
    }

    pub fn load_table(&self) -> &QTable {
        &self.load
    }

    pub fn mse_table(&self) -> &QTable {
        &self.mse
    }

    pub fn combined_row(&self, s: AgentState, lambda: f64) -> [f64; ACTION_COUNT] {
        let mut row = [0.0; ACTION_COUNT];
        for ((out, l), m) in row.iter_mut().zip(self.load.row(s)).zip(self.mse.row(s)) {
            *out = l + lambda * m;
        }
        row
    }

    pub fn greedy(&self, s: AgentState, lambda: f64) -> Action {
        Action::from_index(argmin(&self.combined_row(s, lambda)))
    }

    /// Materialized `Q_load + lambda * Q_mse`, with the load table's visit counts.
    pub fn combined(&self, lambda: f64) -> QTable {
        let values = self
            .load
            .values
            .iter()
            .zip(&self.mse.values)
            .map(|(l, m)| l + lambda * m)
            .collect();
        QTable {
            states: self.load.states,
            values,
            visits: self.load.visits.clone(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn update(
        &mut self,
        s: AgentState,
        a: Action,
        load: f64,
        mse: f64,
        s_next: AgentState,
        lambda: f64,
        alpha: f64,
        gamma: f64,
    ) {
        let next = self.greedy(s_next, lambda);
        let (boot_load, boot_mse) = (self.load.get(s_next, next), self.mse.get(s_next, next));
        backup(&mut self.load, s, a, load, boot_load, alpha, gamma);
        backup(&mut self.mse, s, a, mse, boot_mse, alpha, gamma);
    }

    pub fn visits(&self, s: AgentState, a: Action) -> u64 {
        self.load.visits(s, a)
    }

    /// Combined table for a frozen greedy policy: never-tried actions are
    /// priced at `untried_cost`, and a state with no experience at all
    /// borrows the row of the nearest state that has some (the higher bin on
    /// a tie).
    pub fn frozen(&self, lambda: f64, untried_cost: f64) -> QTable {
        let mut q = self.combined(lambda);
        let states = q.states;
        let tried = |s: usize| {
            q.visits[s * ACTION_COUNT..(s + 1) * ACTION_COUNT]
                .iter()
                .any(|&n| n > 0)
        };
        let visited: Vec<bool> = (0..states).map(tried).collect();
        for (v, n) in q.values.iter_mut().zip(&q.visits) {
            if *n == 0 {
                *v = untried_cost;
            }
        }
        if visited.iter().any(|&v| v) {
            let source: Vec<usize> = (0..states)
                .map(|s| {
                    (0..states)
                        .filter(|&t| visited[t])
                        .min_by_key(|&t| (t.abs_diff(s), std::cmp::Reverse(t)))
                        .expect("some state visited")
                })
                .collect();
            let snapshot = q.values.clone();
            for (s, &src) in source.iter().enumerate() {
                if src != s {
                    q.values[s * ACTION_COUNT..(s + 1) * ACTION_COUNT]
                        .copy_from_slice(&snapshot[src * ACTION_COUNT..(src + 1) * ACTION_COUNT]);
                }
            }
        }
        q
    }
}

/// Hyperparameters of the learning agent, as read from `[agent]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentParams {
    pub gamma: f64,
    pub alpha: f64,
    /// Use `max(alpha, 1/visits)` as the step size.
    pub alpha_decay: bool,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub kappa: f64,
    pub lambda0: f64,
    pub lambda_max: f64,
    pub bins: usize,
    pub mse_lo: f64,
    pub mse_hi: f64,
    /// Per-epoch MSE is clipped here before entering the cost.
    pub mse_cap: f64,
    pub episodes: usize,
    /// Snapshots from this many final episodes compete for the frozen policy.
    pub select_window: usize,
    pub validation_episodes: usize,
}

impl Default for AgentParams {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            alpha: 0.1,
            alpha_decay: true,
            epsilon_start: 0.5,
            epsilon_end: 0.02,
            kappa: 1.0,
            lambda0: 1.0,
            lambda_max: 1e4,
            bins: 24,
            mse_lo: 1e-7,
            mse_hi: 10.0,
            mse_cap: 10.0,
            episodes: 500,
            select_window: 50,
            validation_episodes: 2,
        }
    }
}

impl AgentParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::config(msg));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1), got {}", self.gamma));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        for (name, eps) in [
            ("epsilon_start", self.epsilon_start),
            ("epsilon_end", self.epsilon_end),
        ] {
            if !(0.0..=1.0).contains(&eps) {
                return bad(format!("{name} must lie in [0, 1], got {eps}"));
            }
        }
        if !(self.kappa >= 0.0 && self.lambda0 >= 0.0 && self.lambda_max >= self.lambda0) {
            return bad("need kappa >= 0 and 0 <= lambda0 <= lambda_max".into());
        }
        if !(self.mse_cap > 0.0 && self.mse_cap.is_finite()) {
            return bad(format!("mse_cap must be positive, got {}", self.mse_cap));
        }
        if self.episodes == 0 {
            return bad("episodes must be positive".into());
        }
        if self.select_window == 0 || self.select_window > self.episodes {
            return bad(format!(
                "select_window must lie in [1, episodes], got {}",
                self.select_window
            ));
        }
        if self.validation_episodes == 0 {
            return bad("validation_episodes must be positive".into());
        }
        StateEncoder::new(self.bins, self.mse_lo, self.mse_hi).map(|_| ())
    }

    /// Exploration rate for `episode`, linear from start to end over training.
    pub fn epsilon(&self, episode: usize) -> f64 {
        if self.episodes <= 1 {
            return self.epsilon_end;
        }
        let frac = episode.min(self.episodes - 1) as f64 / (self.episodes - 1) as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }

    /// Load cost-to-go of always sampling at the slowest rate.
    pub fn load_floor(&self) -> f64 {
        f64::from(RATES_HZ[0]) / REFERENCE_RATE_PPS / (1.0 - self.gamma)
    }

    /// Analytic bound on |Q| for per-step costs clipped at `mse_cap`.
    pub fn q_bound(&self) -> f64 {
        (1.0 + self.lambda_max * self.mse_cap) / (1.0 - self.gamma)
    }
}
