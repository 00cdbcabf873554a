//! Deterministic Vicsek flock simulation with soft control through a single
//! shill agent.
//!
//! The crate is split along the lines of the problem:
//!
//! - [`model`]: neighborhoods, vector-sum heading averaging and the
//!   synchronous one-tick transition.
//! - [`control`]: the shill's command generation (`u_beta`), the worst agent
//!   and the distance-to-objective metric, plus manual command validation.
//! - [`analysis`]: the per-window heading-gain bound and post-hoc run
//!   certification.
//! - [`scenario`], [`trajectory`], [`harness`]: reproducible experiments and
//!   their on-disk artifacts.
//! - `live` (feature `serve`): the real-time steering session server.

pub mod analysis;
pub mod angle;
pub mod control;
pub mod error;
pub mod grid;
pub mod harness;
#[cfg(feature = "serve")]
pub mod live;
pub mod model;
pub mod scenario;
pub mod trajectory;

pub use analysis::{certify_run, delta_bound, eta, eta_table, Certifier, ConvergenceCertificate, EtaTable};
pub use control::{delta, u_beta, validate_manual, worst_agent, CommandSource, ControlCommand, UBetaParams};
pub use error::{Error, Result};
pub use harness::{run_batch, run_simulation, BatchReport, ControlMode, RunConfig, RunSummary};
pub use model::{
    mean_heading, neighbors, step, AgentState, AveragingRule, ModelParams, ShillConstraint, StepOutcome,
    SwarmState,
};
pub use scenario::{generate_scenario, ScenarioKind, ScenarioSpec};
