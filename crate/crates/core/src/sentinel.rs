//! Countermeasures against the routing attacks: RREQ-rate blacklisting,
//! route confirmation, multi-reply quorum, acknowledgement auditing and
//! position-based link checks.

use std::collections::{BTreeMap, BTreeSet};

use crate::adversary::AttackClass;
use crate::netmodel::{LinkKey, NodeId, Topology};
use crate::routing::PositionStamp;

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Detector {
    Blacklist,
    Confirm,
    Quorum,
    Ack,
    LinkCheck,
}

impl Detector {
    pub const ALL: [Detector; 5] = [
        Detector::Blacklist,
        Detector::Confirm,
        Detector::Quorum,
        Detector::Ack,
        Detector::LinkCheck,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Detector::Blacklist => "blacklist",
            Detector::Confirm => "confirm",
            Detector::Quorum => "quorum",
            Detector::Ack => "ack",
            Detector::LinkCheck => "linkcheck",
        }
    }

    /// The attack family this detector is meant to catch.
    pub fn targets(self) -> AttackClass {
        match self {
            Detector::Blacklist => AttackClass::Flooding,
            Detector::Confirm | Detector::Quorum => AttackClass::Blackhole,
            Detector::Ack => AttackClass::Misrelay,
            Detector::LinkCheck => AttackClass::LinkSpoof,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum RateVerdict {
    Ok,
    /// `new` is true only on the RREQ that crossed the threshold.
    Blacklisted { new: bool },
}

/// Per-observer RREQ rate monitor.
#[derive(Clone, Debug)]
pub struct BlacklistState {
    pub window_len: u64,
    pub threshold: u64,
    counters: BTreeMap<NodeId, u64>,
    window: u64,
    pub blacklist: BTreeSet<NodeId>,
}

impl BlacklistState {
    pub fn new(window_len: u64, threshold: u64) -> Self {
        BlacklistState {
            window_len: window_len.max(1),
            threshold,
            counters: BTreeMap::new(),
            window: 0,
            blacklist: BTreeSet::new(),
        }
    }

    /// Count one RREQ from `origin` heard at step `clock` (1-based).
    pub fn monitor_rreq_rate(&mut self, origin: NodeId, clock: u64) -> RateVerdict {
        if self.blacklist.contains(&origin) {
            return RateVerdict::Blacklisted { new: false };
        }
        let window = clock.saturating_sub(1) / self.window_len;
        if window != self.window {
            self.window = window;
            self.counters.clear();
        }
        let count = self.counters.entry(origin).or_insert(0);
        *count += 1;
        if *count > self.threshold {
            self.blacklist.insert(origin);
            RateVerdict::Blacklisted { new: true }
        } else {
            RateVerdict::Ok
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ConfirmVerdict {
    Confirmed,
    Mismatch,
    Timeout,
}

/// Compare an advertised route with the route a confirmation reply vouches
/// for. A missing reply is a timeout.
pub fn confirm_route(rrep_route: &[NodeId], crep_path: Option<&[NodeId]>) -> ConfirmVerdict {
    match crep_path {
        None => ConfirmVerdict::Timeout,
        Some(p) if p == rrep_route => ConfirmVerdict::Confirmed,
        Some(_) => ConfirmVerdict::Mismatch,
    }
}

/// Identifies one reply awaiting confirmation.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConfirmKey {
    pub dest: NodeId,
    pub discovery: u64,
    pub replier: NodeId,
}

#[derive(Clone, Debug)]
struct PendingConfirm {
    route: Vec<NodeId>,
    deadline: u64,
}

/// Source-side bookkeeping for replies produced from intermediate caches.
#[derive(Clone, Debug)]
pub struct ConfirmationState {
    pub timeout: u64,
    pending: BTreeMap<ConfirmKey, PendingConfirm>,
}

impl ConfirmationState {
    pub fn new(timeout: u64) -> Self {
        ConfirmationState {
            timeout,
            pending: BTreeMap::new(),
        }
    }

    /// Start waiting for a confirmation of `route` (source first).
    pub fn expect(&mut self, key: ConfirmKey, route: Vec<NodeId>, now: u64) {
        self.pending.insert(
            key,
            PendingConfirm {
                route,
                deadline: now + self.timeout,
            },
        );
    }

    pub fn is_pending(&self, key: &ConfirmKey) -> bool {
        self.pending.contains_key(key)
    }

    /// Match a CREP against the reply it confirms. The replier is the node
    /// just before the CREP's sender on the vouched path.
    pub fn resolve(
        &mut self,
        crep_sender: NodeId,
        discovery: u64,
        crep_path: &[NodeId],
    ) -> Option<(ConfirmKey, Vec<NodeId>, ConfirmVerdict)> {
        let dest = *crep_path.last()?;
        let replier = crate::routing::prev_along(crep_path, crep_sender)?;
        let key = ConfirmKey {
            dest,
            discovery,
            replier,
        };
        let pending = self.pending.remove(&key)?;
        let verdict = confirm_route(&pending.route, Some(crep_path));
        Some((key, pending.route, verdict))
    }

    /// Remove and return every reply whose deadline has passed.
    pub fn expire(&mut self, now: u64) -> Vec<(ConfirmKey, Vec<NodeId>)> {
        let due: Vec<ConfirmKey> = self
            .pending
            .iter()
            .filter(|(_, p)| p.deadline <= now)
            .map(|(k, _)| *k)
            .collect();
        due.into_iter()
            .map(|k| {
                let p = self.pending.remove(&k).expect("key listed above");
                (k, p.route)
            })
            .collect()
    }

    pub fn clear_discovery(&mut self, dest: NodeId, discovery: u64) {
        self.pending
            .retain(|k, _| !(k.dest == dest && k.discovery == discovery));
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum QuorumVerdict {
    Waiting,
    Safe,
    Unsafe,
}

/// Replies collected per discovery, for the shared-hop check.
#[derive(Clone, Debug)]
pub struct RrepQuorumState {
    pub min_count: usize,
    collected: BTreeMap<(NodeId, u64), Vec<Vec<NodeId>>>,
}

fn interior(path: &[NodeId]) -> &[NodeId] {
    if path.len() <= 2 {
        &[]
    } else {
        &path[1..path.len() - 1]
    }
}

impl RrepQuorumState {
    pub fn new(min_count: usize) -> Self {
        RrepQuorumState {
            min_count: min_count.max(2),
            collected: BTreeMap::new(),
        }
    }

    /// Record a route (source first, destination last) for a discovery.
    pub fn collect(&mut self, key: (NodeId, u64), route: Vec<NodeId>) {
        self.collected.entry(key).or_default().push(route);
    }

    pub fn collected(&self, key: (NodeId, u64)) -> &[Vec<NodeId>] {
        self.collected.get(&key).map_or(&[], Vec::as_slice)
    }

    pub fn forget(&mut self, key: (NodeId, u64)) {
        self.collected.remove(&key);
    }

    /// Indices of collected routes sharing an interior node with some other route.
    pub fn corroborated(&self, key: (NodeId, u64)) -> Vec<usize> {
        let paths = self.collected(key);
        (0..paths.len())
            .filter(|&i| {
                let mine: BTreeSet<NodeId> = interior(&paths[i]).iter().copied().collect();
                paths
                    .iter()
                    .enumerate()
                    .any(|(j, p)| j != i && interior(p).iter().any(|n| mine.contains(n)))
            })
            .collect()
    }

    pub fn quorum_check(&self, key: (NodeId, u64)) -> QuorumVerdict {
        if self.collected(key).len() < self.min_count {
            QuorumVerdict::Waiting
        } else if self.corroborated(key).is_empty() {
            QuorumVerdict::Unsafe
        } else {
            QuorumVerdict::Safe
        }
    }
}

#[derive(Clone, Debug)]
struct WatchedPacket {
    path: Vec<NodeId>,
    deadline: u64,
}

/// Packets an auditor (the traffic source) is waiting to see acknowledged.
#[derive(Clone, Debug)]
pub struct AckWatch {
    pub auditor: NodeId,
    /// Transmission-power multiplier: the auditor overhears nodes up to this many hops away.
    pub overhear_k: usize,
    pending: BTreeMap<u64, WatchedPacket>,
}

impl AckWatch {
    pub fn new(auditor: NodeId, overhear_k: usize) -> Self {
        AckWatch {
            auditor,
            overhear_k: overhear_k.max(1),
            pending: BTreeMap::new(),
        }
    }

    pub fn watch(&mut self, payload_id: u64, path: Vec<NodeId>, deadline: u64) {
        self.pending
            .insert(payload_id, WatchedPacket { path, deadline });
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Settle every watched packet whose deadline is `now` or earlier.
    ///
    /// Walking the route from the auditor, each relay that received the
    /// packet is expected to forward it. The first relay within
    /// `overhear_k` hops with no overheard forward is suspected, unless
    /// the end-to-end ACK arrived. Relays beyond `overhear_k` hops cannot
    /// be observed and are never suspected.
    pub fn ack_audit(
        &mut self,
        observed_forwards: &BTreeSet<(u64, NodeId)>,
        received_acks: &BTreeSet<u64>,
        topo: &Topology,
        now: u64,
    ) -> BTreeSet<NodeId> {
        let due: Vec<u64> = self
            .pending
            .iter()
            .filter(|(_, w)| w.deadline <= now)
            .map(|(&p, _)| p)
            .collect();
        if due.is_empty() {
            return BTreeSet::new();
        }
        let hops = topo.hop_distances(self.auditor);
        let mut suspects = BTreeSet::new();
        for payload in due {
            let w = self.pending.remove(&payload).expect("listed above");
            if received_acks.contains(&payload) {
                continue;
            }
            let relays = interior(&w.path);
            for &relay in relays {
                let within = hops.get(&relay).is_some_and(|&d| d <= self.overhear_k);
                if !within {
                    break;
                }
                if !observed_forwards.contains(&(payload, relay)) {
                    suspects.insert(relay);
                    break;
                }
            }
        }
        suspects
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum LinkVerdict {
    Plausible,
    Flagged,
    /// At least one endpoint has never advertised a position.
    Indeterminate,
}

/// Last advertised GPS fix per node.
#[derive(Clone, Debug)]
pub struct PositionTable {
    pub max_range: f64,
    pub slack: f64,
    positions: BTreeMap<NodeId, PositionStamp>,
}

impl PositionTable {
    pub fn new(max_range: f64, slack: f64) -> Self {
        PositionTable {
            max_range,
            slack,
            positions: BTreeMap::new(),
        }
    }

    /// Keep the newest fix; older ones are ignored.
    pub fn update(&mut self, node: NodeId, stamp: PositionStamp) {
        match self.positions.get(&node) {
            Some(cur) if cur.timestamp > stamp.timestamp => {}
            _ => {
                self.positions.insert(node, stamp);
            }
        }
    }

    pub fn get(&self, node: NodeId) -> Option<&PositionStamp> {
        self.positions.get(&node)
    }

    pub fn verify_link_claim(&self, claim: LinkKey) -> LinkVerdict {
        let (Some(a), Some(b)) = (self.positions.get(&claim.lo()), self.positions.get(&claim.hi()))
        else {
            return LinkVerdict::Indeterminate;
        };
        if a.pos.distance(&b.pos) > self.max_range + self.slack {
            LinkVerdict::Flagged
        } else {
            LinkVerdict::Plausible
        }
    }
}
