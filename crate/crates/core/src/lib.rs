//! Digital-twin synchronization simulator.
//!
//! A 1 kHz joint-angle trajectory is decimated at a chosen sampling rate,
//! sent over a lossy, jittery link, and reconstructed at the twin by
//! extrapolating to a chosen prediction horizon. A primal-dual Q-learning
//! agent picks (rate, horizon) each epoch to minimize the normalized packet
//! load subject to an average tracking-error (MSE) constraint.

pub mod agent;
pub mod channel;
pub mod config;
pub mod error;
pub mod metrics;
pub mod predictor;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod sim;
pub mod trajectory;

pub use agent::{Action, AgentState, DualState, PolicyCheckpoint, QTable, StateEncoder};
pub use channel::{Channel, ChannelConfig, DeliveryOutcome};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use metrics::EpochMetrics;
pub use predictor::{Horizon, PredictorState};
pub use sampling::{SamplePacket, SamplingRate};
pub use trajectory::{Trajectory, TrajectoryConfig};
