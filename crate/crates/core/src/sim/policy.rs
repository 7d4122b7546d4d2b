//! Decision makers for the closed loop. A run picks one at runtime: a fixed
//! action, a frozen greedy table, or the learning agent.

use rand_chacha::ChaCha8Rng;

use super::{EpisodeLog, EpochResult};
use crate::agent::{
    epsilon_greedy, Action, AgentParams, AgentState, DualState, LagrangianQ, PolicyCheckpoint,
    QTable, ACTION_COUNT,
};
use crate::rng::{Purpose, StreamFamily};

pub trait Policy: Send {
    fn name(&self) -> String;

    fn begin_episode(&mut self, _episode: usize) {}

    fn act(&mut self, state: AgentState) -> Action;

    /// Called after every epoch with the realized result.
    fn observe(&mut self, _epoch: &EpochResult) {}

    fn end_episode(&mut self, _log: &EpisodeLog) {}

    /// Current Lagrange multiplier, for policies that keep one.
    fn lambda(&self) -> Option<f64> {
        None
    }
}

/// Always the same action.
#[derive(Debug, Clone, Copy)]
pub struct FixedPolicy(pub Action);

impl Policy for FixedPolicy {
    fn name(&self) -> String {
        format!("fixed:{}", self.0)
    }

    fn act(&mut self, _state: AgentState) -> Action {
        self.0
    }
}

/// Frozen table, acting greedily.
#[derive(Debug, Clone)]
pub struct GreedyPolicy {
    q: QTable,
}

impl GreedyPolicy {
    pub fn new(q: QTable) -> Self {
        Self { q }
    }

    pub fn from_checkpoint(ck: &PolicyCheckpoint) -> Self {
        Self::new(ck.q.clone())
    }

    /// The single action this policy takes in every state, if it has one.
    pub fn constant_action(&self) -> Option<Action> {
        let map = self.q.greedy_map();
        map.iter()
            .all(|&a| a == map[0])
            .then(|| Action::from_index(map[0]))
    }
}

impl Policy for GreedyPolicy {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn act(&mut self, state: AgentState) -> Action {
        self.q.greedy(state)
    }
}

/// Epsilon-greedy primal-dual Q-learner.
///
/// Q is updated after every scored epoch with cost `load + lambda * mse`
/// (MSE clipped at `mse_cap`), through the split representation of
/// [`LagrangianQ`]. At the end of an episode lambda takes one
/// projected ascent step on the mean MSE of the epochs in which the agent
/// acted greedily; exploratory epochs do not move the multiplier.
#[derive(Debug, Clone)]
pub struct LearningAgent {
    params: AgentParams,
    q: LagrangianQ,
    dual: DualState,
    epsilon: f64,
    explore: StreamFamily,
    rng: Option<ChaCha8Rng>,
    last_explored: bool,
    greedy_mse_sum: f64,
    greedy_epochs: usize,
}

impl LearningAgent {
    pub fn new(params: AgentParams, e_max_mse: f64, seed: u64) -> Self {
        Self {
            // Cheapest possible load cost-to-go: still optimistic, but no
            // untried action looks better than always sampling slowest.
            q: LagrangianQ::with_initial(params.bins, params.load_floor(), 0.0),
            dual: DualState {
                lambda: params.lambda0,
                kappa: params.kappa,
                e_max: e_max_mse,
                lambda_max: params.lambda_max,
            },
            epsilon: params.epsilon_start,
            explore: StreamFamily::new(seed, Purpose::Explore),
            rng: None,
            last_explored: false,
            greedy_mse_sum: 0.0,
            greedy_epochs: 0,
            params,
        }
    }

    pub fn lagrangian_q(&self) -> &LagrangianQ {
        &self.q
    }

    /// Combined table at the current multiplier.
    pub fn q(&self) -> QTable {
        self.q.combined(self.dual.lambda)
    }

    /// Table to freeze for greedy use; untried actions are priced at the
    /// analytic cost-to-go bound so they are never chosen over tried ones.
    pub fn frozen_q(&self) -> QTable {
        self.q.frozen(self.dual.lambda, self.params.q_bound())
    }

    pub fn dual(&self) -> &DualState {
        &self.dual
    }

    pub fn set_epsilon(&mut self, epsilon: f64) {
        self.epsilon = epsilon;
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

impl Policy for LearningAgent {
    fn name(&self) -> String {
        "q-learning".into()
    }

    fn begin_episode(&mut self, episode: usize) {
        self.rng = Some(self.explore.stream(episode as u64));
        self.greedy_mse_sum = 0.0;
        self.greedy_epochs = 0;
    }

    fn act(&mut self, state: AgentState) -> Action {
        let rng = self.rng.get_or_insert_with(|| self.explore.stream(0));
        let row = self.q.combined_row(state, self.dual.lambda);
        let action = epsilon_greedy(&row, self.epsilon, rng);
        self.last_explored = action != self.q.greedy(state, self.dual.lambda);
        action
    }

    fn observe(&mut self, epoch: &EpochResult) {
        let m = &epoch.metrics;
        if !m.is_scored() {
            return;
        }
        let mse = m.mse_deg2.min(self.params.mse_cap);
        let alpha = if self.params.alpha_decay {
            let n = self.q.visits(epoch.state_before, epoch.action) + 1;
            self.params.alpha.max(1.0 / n as f64)
        } else {
            self.params.alpha
        };
        self.q.update(
            epoch.state_before,
            epoch.action,
            m.load_norm,
            mse,
            epoch.state_after,
            self.dual.lambda,
            alpha,
            self.params.gamma,
        );
        if !self.last_explored {
            self.greedy_mse_sum += mse;
            self.greedy_epochs += 1;
        }
    }

    fn end_episode(&mut self, log: &EpisodeLog) {
        let avg = if self.greedy_epochs > 0 {
            self.greedy_mse_sum / self.greedy_epochs as f64
        } else {
            log.avg_mse.min(self.params.mse_cap)
        };
        self.dual.update(avg);
    }

    fn lambda(&self) -> Option<f64> {
        Some(self.dual.lambda)
    }
}

/// Every fixed policy, in action-index order.
pub fn all_fixed_policies() -> Vec<FixedPolicy> {
    (0..ACTION_COUNT)
        .map(|i| FixedPolicy(Action::from_index(i)))
        .collect()
}
