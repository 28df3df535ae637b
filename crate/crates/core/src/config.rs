//! Run configuration shared by the engine and the scenario format.

use std::collections::BTreeSet;

use crate::netmodel::{ElectionWeights, LinkKey, NodeId};
use crate::sentinel::Detector;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum FailureTarget {
    Link(LinkKey),
    /// Every incident link fails.
    Node(NodeId),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub target: FailureTarget,
    pub step: u64,
}

/// Weights used when precomputing backup paths.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum WeightSource {
    Unit,
    /// Run the optimizer on the initial topology first.
    Optimized,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub steps: u64,
    pub seed: u64,
    /// DATA packets per step per commodity; fractional rates accumulate.
    pub data_rate: f64,
    pub failures: Vec<Failure>,
    /// Link advertisement period in steps; 0 disables advertisements.
    pub hello_interval: u64,
    /// Steps a discovery may stay open without an installed route.
    pub discovery_timeout: u64,
    pub weights: WeightSource,
    pub election: ElectionWeights,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            steps: 100,
            seed: 1,
            data_rate: 1.0,
            failures: Vec::new(),
            hello_interval: 5,
            discovery_timeout: 20,
            weights: WeightSource::Unit,
            election: ElectionWeights::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DefenseConfig {
    /// Master switch. Individual detectors only run when this is set.
    pub enabled: bool,
    pub blacklist: bool,
    pub confirm: bool,
    pub quorum: bool,
    pub ack: bool,
    pub linkcheck: bool,
    pub flood_window: u64,
    pub flood_threshold: u64,
    pub confirm_timeout: u64,
    pub quorum_min: usize,
    pub quorum_wait: u64,
    pub ack_k: usize,
    /// Explicit slack for link-length checks; derived from speeds when absent.
    pub gps_slack: Option<f64>,
    /// How old a position fix may be, in steps; defaults to the hello period.
    pub gps_staleness: Option<u64>,
    /// Nodes without a position source.
    pub gps_missing: BTreeSet<NodeId>,
}

impl Default for DefenseConfig {
    fn default() -> Self {
        DefenseConfig {
            enabled: false,
            blacklist: true,
            confirm: true,
            quorum: true,
            ack: true,
            linkcheck: true,
            flood_window: 10,
            flood_threshold: 10,
            confirm_timeout: 10,
            quorum_min: 2,
            quorum_wait: 10,
            ack_k: 1,
            gps_slack: None,
            gps_staleness: None,
            gps_missing: BTreeSet::new(),
        }
    }
}

impl DefenseConfig {
    pub fn toggle(&self, d: Detector) -> bool {
        match d {
            Detector::Blacklist => self.blacklist,
            Detector::Confirm => self.confirm,
            Detector::Quorum => self.quorum,
            Detector::Ack => self.ack,
            Detector::LinkCheck => self.linkcheck,
        }
    }

    pub fn active(&self, d: Detector) -> bool {
        self.enabled && self.toggle(d)
    }

    pub fn active_set(&self) -> BTreeSet<Detector> {
        Detector::ALL
            .into_iter()
            .filter(|&d| self.active(d))
            .collect()
    }
}
