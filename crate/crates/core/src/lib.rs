//! Multi-player reach-avoid games on finite-horizon MDPs.
//!
//! Players share a state space and each wants to reach its own target set at
//! the final time without ever occupying the same state as another player.
//! The probability that everyone succeeds is a potential function, so
//! iterating best responses climbs towards a Nash equilibrium.

pub mod best_response;
pub mod error;
pub mod game;
pub mod gridworld;
pub mod ibr;
pub mod joint;
pub mod joint_value;
pub mod metrics;
pub mod occupancy;
pub mod oracle;

pub use best_response::{best_response, BestResponseResult};
pub use error::{Error, Result};
pub use game::{validate_game, GameSpec, PlayerMdp, Policy, TransitionMatrix, ValidationReport, Violation};
pub use ibr::{run_ibr, run_ibr_with, shortest_path_policy, IbrConfig, IbrOutcome, IbrRecord, IbrTrace, InitialPolicy};
pub use joint_value::potential_value;
pub use metrics::{evaluate, MetricMethod, MetricsRecord};
pub use occupancy::EpsilonSchedule;
pub use oracle::{verify_nash, DeviationStrategy, NashReport};
