//! Deterministic round-based MANET simulator with routing attacks and
//! defenses, coupled to a genetic link-weight optimizer.
//!
//! The pieces, bottom up: [`netmodel`] (topology, mobility, clustering),
//! [`routing`] (discovery, freshness, relay selection), [`adversary`] and
//! [`sentinel`] (attacks and their detectors), [`gaopt`] (link-weight
//! search and backup paths), [`engine`] (the step loop and metrics), and
//! [`scenario`], [`report`], [`cli`] around them.

pub mod adversary;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod gaopt;
pub mod netmodel;
pub mod report;
pub mod routing;
pub mod scenario;
pub mod sentinel;

pub use engine::{compute_metrics, run, EventLog, MetricsReport, SimOutcome};
pub use error::{GaError, NetError, ScenarioError, SimError};
pub use scenario::{parse_scenario, render, Scenario};
