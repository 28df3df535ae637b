//! Deterministic round-based world loop.
//!
//! Each step: scheduled failures, mobility, route validity checks,
//! delivery of last step's transmissions, inbox processing in node-id
//! order, then periodic emissions (DATA, floods, link adverts) and
//! detector deadlines. A message needs one step per hop.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adversary::{
    act_blackhole, act_linkspoof, act_misrelay, AttackClass, AttackKind, Flooder, RelayAction,
};
use crate::config::{FailureTarget, WeightSource};
use crate::error::SimError;
use crate::gaopt::{backup_for, evolve, LinkGraph};
use crate::netmodel::{LinkClaims, LinkKey, NodeId, Topology};
use crate::routing::{
    next_along, prev_along, select_mprs, ControlMessage, DataAction, MessageKind, PositionStamp,
    RouteEntry, RoutingTable, RreqOutcome, RrepVerdict,
};
use crate::scenario::Scenario;
use crate::sentinel::{
    AckWatch, BlacklistState, ConfirmKey, ConfirmVerdict, ConfirmationState, Detector,
    LinkVerdict, PositionTable, QuorumVerdict, RateVerdict, RrepQuorumState,
};

/// Integrity marker carried by honest DATA; zero means corrupted.
const INTACT: u64 = 1;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum DropReason {
    LinkDown,
    NoRoute,
    Attacker,
    Corrupted,
}

impl DropReason {
    pub fn label(self) -> &'static str {
        match self {
            DropReason::LinkDown => "link_down",
            DropReason::NoRoute => "no_route",
            DropReason::Attacker => "attacker",
            DropReason::Corrupted => "corrupted",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum RejectReason {
    ConfirmTimeout,
    ConfirmMismatch,
    /// Shares no relay with any other reply of its discovery.
    Unsafe,
}

impl RejectReason {
    pub fn label(self) -> &'static str {
        match self {
            RejectReason::ConfirmTimeout => "confirm_timeout",
            RejectReason::ConfirmMismatch => "confirm_mismatch",
            RejectReason::Unsafe => "unsafe",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EventKind {
    ClusterHead {
        cluster: u32,
        head: NodeId,
        members: usize,
    },
    LinkFailed(LinkKey),
    NodeFailed(NodeId),
    Control {
        kind: MessageKind,
        from: NodeId,
    },
    ControlLost {
        kind: MessageKind,
        from: NodeId,
        to: NodeId,
    },
    DataSent {
        payload: u64,
        flow: usize,
    },
    DataDelivered {
        payload: u64,
    },
    DataDropped {
        payload: u64,
        at: NodeId,
        reason: DropReason,
    },
    RouteDiscovery {
        src: NodeId,
        dst: NodeId,
        broadcast_id: u64,
    },
    RouteInstalled {
        src: NodeId,
        dst: NodeId,
        path: Vec<NodeId>,
        backup: Option<Vec<NodeId>>,
    },
    RouteRejected {
        src: NodeId,
        dst: NodeId,
        path: Vec<NodeId>,
        reason: RejectReason,
    },
    DiscoveryFailed {
        src: NodeId,
        dst: NodeId,
        broadcast_id: u64,
        quorum: Option<QuorumVerdict>,
    },
    Failover {
        src: NodeId,
        dst: NodeId,
        path: Vec<NodeId>,
    },
    RouteBroken {
        src: NodeId,
        dst: NodeId,
    },
    Accusation {
        detector: Detector,
        observer: NodeId,
        accused: NodeId,
    },
    Misbehavior {
        attacker: NodeId,
        class: AttackClass,
    },
    MprChanged {
        node: NodeId,
        relays: BTreeSet<NodeId>,
    },
    LinkIndeterminate {
        observer: NodeId,
        claim: LinkKey,
    },
    StepEnd {
        max_utilization: f64,
        in_flight: u64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub step: u64,
    pub kind: EventKind,
}

fn fmt_path(p: &[NodeId]) -> String {
    let ids: Vec<String> = p.iter().map(|n| n.to_string()).collect();
    format!("[{}]", ids.join(" "))
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>5} ", self.step)?;
        match &self.kind {
            EventKind::ClusterHead {
                cluster,
                head,
                members,
            } => write!(f, "cluster {cluster} head={head} members={members}"),
            EventKind::LinkFailed(k) => write!(f, "link_failed {k}"),
            EventKind::NodeFailed(n) => write!(f, "node_failed {n}"),
            EventKind::Control { kind, from } => write!(f, "tx {} from={from}", kind.label()),
            EventKind::ControlLost { kind, from, to } => {
                write!(f, "lost {} from={from} to={to}", kind.label())
            }
            EventKind::DataSent { payload, flow } => write!(f, "data_sent id={payload} flow={flow}"),
            EventKind::DataDelivered { payload } => write!(f, "data_delivered id={payload}"),
            EventKind::DataDropped { payload, at, reason } => {
                write!(f, "data_dropped id={payload} at={at} reason={}", reason.label())
            }
            EventKind::RouteDiscovery {
                src,
                dst,
                broadcast_id,
            } => write!(f, "discovery src={src} dst={dst} bid={broadcast_id}"),
            EventKind::RouteInstalled {
                src,
                dst,
                path,
                backup,
            } => write!(
                f,
                "route src={src} dst={dst} path={} backup={}",
                fmt_path(path),
                backup.as_deref().map_or("-".to_string(), fmt_path)
            ),
            EventKind::RouteRejected {
                src,
                dst,
                path,
                reason,
            } => write!(
                f,
                "route_rejected src={src} dst={dst} path={} reason={}",
                fmt_path(path),
                reason.label()
            ),
            EventKind::DiscoveryFailed {
                src,
                dst,
                broadcast_id,
                quorum,
            } => {
                write!(f, "discovery_failed src={src} dst={dst} bid={broadcast_id}")?;
                match quorum {
                    Some(QuorumVerdict::Unsafe) => write!(f, " quorum=unsafe"),
                    Some(QuorumVerdict::Waiting) => write!(f, " quorum=waiting"),
                    Some(QuorumVerdict::Safe) => write!(f, " quorum=safe"),
                    None => Ok(()),
                }
            }
            EventKind::Failover { src, dst, path } => {
                write!(f, "failover src={src} dst={dst} path={}", fmt_path(path))
            }
            EventKind::RouteBroken { src, dst } => write!(f, "route_broken src={src} dst={dst}"),
            EventKind::Accusation {
                detector,
                observer,
                accused,
            } => write!(f, "accuse {} by={observer} node={accused}", detector.label()),
            EventKind::Misbehavior { attacker, class } => {
                write!(f, "misbehave {} node={attacker}", class.label())
            }
            EventKind::MprChanged { node, relays } => {
                let r: Vec<NodeId> = relays.iter().copied().collect();
                write!(f, "mpr node={node} relays={}", fmt_path(&r))
            }
            EventKind::LinkIndeterminate { observer, claim } => {
                write!(f, "link_indeterminate by={observer} claim={claim}")
            }
            EventKind::StepEnd {
                max_utilization,
                in_flight,
            } => write!(f, "step_end util={max_utilization:.6} in_flight={in_flight}"),
        }
    }
}

/// Everything a run produced, plus the ground truth needed to score it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventLog {
    pub attackers: BTreeMap<NodeId, AttackClass>,
    pub detectors: BTreeSet<Detector>,
    pub flows: usize,
    pub events: Vec<Event>,
}

impl EventLog {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct DetectorCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct FlowCounters {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
}

impl FlowCounters {
    pub fn delivery_ratio(&self) -> f64 {
        ratio(self.delivered, self.dropped)
    }
}

fn ratio(delivered: u64, dropped: u64) -> f64 {
    let resolved = delivered + dropped;
    if resolved == 0 {
        0.0
    } else {
        delivered as f64 / resolved as f64
    }
}

/// Cumulative counters at the end of one step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepCounters {
    pub step: u64,
    pub data_sent: u64,
    pub data_delivered: u64,
    pub data_dropped: u64,
    pub in_flight: u64,
    pub control_msgs: u64,
    pub blacklist_events: u64,
    pub accusations: u64,
    pub route_discoveries: u64,
    /// This step only.
    pub link_utilization: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsReport {
    pub data_sent: u64,
    pub data_delivered: u64,
    pub data_dropped: u64,
    pub in_flight: u64,
    pub control_msgs: u64,
    pub blacklist_events: u64,
    pub route_discoveries: u64,
    pub max_link_utilization: f64,
    pub linkcheck_indeterminate: u64,
    pub detectors: BTreeMap<Detector, DetectorCounts>,
    pub flows: Vec<FlowCounters>,
    pub steps: Vec<StepCounters>,
}

impl MetricsReport {
    /// Delivered over resolved (delivered or dropped) packets; 0 when nothing resolved.
    pub fn delivery_ratio(&self) -> f64 {
        ratio(self.data_delivered, self.data_dropped)
    }

    pub fn detector(&self, d: Detector) -> DetectorCounts {
        self.detectors.get(&d).copied().unwrap_or_default()
    }
}

/// Aggregate a log. Accused nodes carrying an attack label are true
/// positives; the rest are false positives. A false negative is an
/// attacker of the detector's target class that misbehaved at least once
/// and was never accused by that detector. Detectors that did not run
/// report zero everywhere.
pub fn compute_metrics(log: &EventLog) -> MetricsReport {
    let mut r = MetricsReport {
        flows: vec![FlowCounters::default(); log.flows],
        ..MetricsReport::default()
    };
    let mut flow_of: BTreeMap<u64, usize> = BTreeMap::new();
    let mut accused: BTreeMap<Detector, BTreeSet<NodeId>> = BTreeMap::new();
    let mut misbehaved: BTreeSet<(NodeId, AttackClass)> = BTreeSet::new();
    let mut accusations = 0u64;

    for e in &log.events {
        match &e.kind {
            EventKind::Control { .. } => r.control_msgs += 1,
            EventKind::DataSent { payload, flow } => {
                r.data_sent += 1;
                flow_of.insert(*payload, *flow);
                if let Some(f) = r.flows.get_mut(*flow) {
                    f.sent += 1;
                }
            }
            EventKind::DataDelivered { payload } => {
                r.data_delivered += 1;
                if let Some(f) = flow_of.get(payload).and_then(|&i| r.flows.get_mut(i)) {
                    f.delivered += 1;
                }
            }
            EventKind::DataDropped { payload, .. } => {
                r.data_dropped += 1;
                if let Some(f) = flow_of.get(payload).and_then(|&i| r.flows.get_mut(i)) {
                    f.dropped += 1;
                }
            }
            EventKind::RouteDiscovery { .. } => r.route_discoveries += 1,
            EventKind::Accusation {
                detector, accused: a, ..
            } => {
                accusations += 1;
                if *detector == Detector::Blacklist {
                    r.blacklist_events += 1;
                }
                accused.entry(*detector).or_default().insert(*a);
            }
            EventKind::Misbehavior { attacker, class } => {
                misbehaved.insert((*attacker, *class));
            }
            EventKind::LinkIndeterminate { .. } => r.linkcheck_indeterminate += 1,
            EventKind::StepEnd {
                max_utilization, ..
            } => {
                r.max_link_utilization = r.max_link_utilization.max(*max_utilization);
                r.steps.push(StepCounters {
                    step: e.step,
                    data_sent: r.data_sent,
                    data_delivered: r.data_delivered,
                    data_dropped: r.data_dropped,
                    in_flight: r.data_sent - r.data_delivered - r.data_dropped,
                    control_msgs: r.control_msgs,
                    blacklist_events: r.blacklist_events,
                    accusations,
                    route_discoveries: r.route_discoveries,
                    link_utilization: *max_utilization,
                });
            }
            _ => {}
        }
    }
    r.in_flight = r.data_sent - r.data_delivered - r.data_dropped;

    for d in Detector::ALL {
        let mut c = DetectorCounts::default();
        if log.detectors.contains(&d) {
            let hit = accused.get(&d).cloned().unwrap_or_default();
            for n in &hit {
                if log.attackers.contains_key(n) {
                    c.tp += 1;
                } else {
                    c.fp += 1;
                }
            }
            let class = d.targets();
            c.fn_ = misbehaved
                .iter()
                .filter(|(n, k)| *k == class && !hit.contains(n))
                .count() as u64;
        }
        r.detectors.insert(d, c);
    }
    r
}

#[derive(Clone, Debug)]
pub struct SimOutcome {
    pub report: MetricsReport,
    pub log: EventLog,
}

#[derive(Clone, Debug)]
struct Tx {
    from: NodeId,
    /// `None` is a one-hop broadcast.
    to: Option<NodeId>,
    msg: ControlMessage,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum CandStatus {
    /// Produced by the destination itself.
    Direct,
    Pending,
    Confirmed,
    Rejected,
}

#[derive(Clone, Debug)]
struct Candidate {
    route: Vec<NodeId>,
    dst_seq: u64,
    hops: u32,
    replier: NodeId,
    status: CandStatus,
}

#[derive(Clone, Debug)]
struct Discovery {
    bid: u64,
    deadline: u64,
    candidates: Vec<Candidate>,
}

#[derive(Clone, Debug)]
struct ActiveRoute {
    primary: Vec<NodeId>,
    backup: Option<Vec<NodeId>>,
}

/// Source-side state for one destination.
#[derive(Clone, Debug, Default)]
struct Session {
    discovery: Option<Discovery>,
    route: Option<ActiveRoute>,
    buffer: VecDeque<u64>,
}

#[derive(Clone, Debug)]
struct NodeRt {
    id: NodeId,
    table: RoutingTable,
    attack: Option<AttackKind>,
    blacklist: BlacklistState,
    confirm: ConfirmationState,
    quorum: RrepQuorumState,
    ack_watch: AckWatch,
    acks: BTreeSet<u64>,
    observed: BTreeSet<(u64, NodeId)>,
    sessions: BTreeMap<NodeId, Session>,
    /// Latest advertised links per advertiser.
    claims: BTreeMap<NodeId, LinkClaims>,
    positions: PositionTable,
    /// Claims already judged, with the verdict.
    judged: BTreeMap<LinkKey, LinkVerdict>,
    indeterminate: BTreeSet<LinkKey>,
    seen_adverts: BTreeSet<(NodeId, u64)>,
    mprs: BTreeSet<NodeId>,
}

struct World<'a> {
    sc: &'a Scenario,
    topo: Topology,
    nodes: BTreeMap<NodeId, NodeRt>,
    flooders: Vec<Flooder>,
    /// (source, destination, emitted so far) per commodity.
    flows: Vec<(NodeId, NodeId, u64)>,
    queue: Vec<Tx>,
    events: Vec<Event>,
    clock: u64,
    rng: ChaCha8Rng,
    next_payload: u64,
    weights: BTreeMap<LinkKey, u32>,
    util: BTreeMap<LinkKey, u64>,
    /// Pairs adjacent at some step so far. Only these can be seen to break.
    known: BTreeSet<LinkKey>,
}

/// Run a scenario to completion.
pub fn run(sc: &Scenario) -> Result<SimOutcome, SimError> {
    let mut world = World::new(sc)?;
    for _ in 0..sc.sim.steps {
        world.step();
    }
    world.finish();
    let log = EventLog {
        attackers: sc.attackers.iter().map(|a| (a.node, a.kind.class())).collect(),
        detectors: sc.defense.active_set(),
        flows: sc.commodities.len(),
        events: world.events,
    };
    Ok(SimOutcome {
        report: compute_metrics(&log),
        log,
    })
}

impl<'a> World<'a> {
    fn new(sc: &'a Scenario) -> Result<Self, SimError> {
        let mut topo = sc.topology.clone();
        let mut events = Vec::new();
        let clusters = topo.elect_clusterheads(sc.sim.election);
        topo.apply_clusters(&clusters);
        for (&cluster, &head) in &clusters.heads {
            events.push(Event {
                step: 0,
                kind: EventKind::ClusterHead {
                    cluster,
                    head,
                    members: clusters.members(cluster).len(),
                },
            });
        }

        let weights = match sc.sim.weights {
            WeightSource::Unit => BTreeMap::new(),
            WeightSource::Optimized => {
                let graph = LinkGraph::from_topology(&topo);
                let evo = evolve(&graph, &sc.commodities, &sc.ga)?;
                graph
                    .links()
                    .iter()
                    .zip(&evo.best.weights)
                    .map(|(l, &w)| (l.key, w))
                    .collect()
            }
        };

        let d = &sc.defense;
        let staleness = d.gps_staleness.unwrap_or(sc.sim.hello_interval.max(1));
        let slack = d
            .gps_slack
            .unwrap_or(2.0 * topo.max_speed() * staleness as f64);
        let attack: BTreeMap<NodeId, AttackKind> = sc
            .attackers
            .iter()
            .map(|a| (a.node, a.kind.clone()))
            .collect();
        let nodes = topo
            .node_ids()
            .map(|id| {
                (
                    id,
                    NodeRt {
                        id,
                        table: RoutingTable::new(id),
                        attack: attack.get(&id).cloned(),
                        blacklist: BlacklistState::new(d.flood_window, d.flood_threshold),
                        confirm: ConfirmationState::new(d.confirm_timeout),
                        quorum: RrepQuorumState::new(d.quorum_min),
                        ack_watch: AckWatch::new(id, d.ack_k),
                        acks: BTreeSet::new(),
                        observed: BTreeSet::new(),
                        sessions: BTreeMap::new(),
                        claims: BTreeMap::new(),
                        positions: PositionTable::new(topo.radio_range, slack),
                        judged: BTreeMap::new(),
                        indeterminate: BTreeSet::new(),
                        seen_adverts: BTreeSet::new(),
                        mprs: BTreeSet::new(),
                    },
                )
            })
            .collect();

        Ok(World {
            sc,
            topo,
            nodes,
            flooders: sc.attackers.iter().filter_map(Flooder::from_profile).collect(),
            flows: sc.commodities.iter().map(|c| (c.src, c.dst, 0)).collect(),
            queue: Vec::new(),
            events,
            clock: 0,
            rng: ChaCha8Rng::seed_from_u64(sc.sim.seed),
            next_payload: 0,
            weights,
            util: BTreeMap::new(),
            known: topo_links(&sc.topology),
        })
    }

    /// Claims no observer could ever settle are reported once, at the end.
    fn finish(&mut self) {
        let open: Vec<(NodeId, LinkKey)> = self
            .nodes
            .values()
            .flat_map(|n| n.indeterminate.iter().map(move |&c| (n.id, c)))
            .collect();
        for (observer, claim) in open {
            self.log(EventKind::LinkIndeterminate { observer, claim });
        }
    }

    fn active(&self, d: Detector) -> bool {
        self.sc.defense.active(d)
    }

    fn log(&mut self, kind: EventKind) {
        self.events.push(Event {
            step: self.clock,
            kind,
        });
    }

    fn send(&mut self, from: NodeId, to: Option<NodeId>, mut msg: ControlMessage) {
        msg.sender = from;
        if msg.kind.is_control() {
            self.log(EventKind::Control {
                kind: msg.kind,
                from,
            });
        }
        self.queue.push(Tx { from, to, msg });
    }

    fn accuse(&mut self, detector: Detector, observer: NodeId, accused: NodeId) {
        self.log(EventKind::Accusation {
            detector,
            observer,
            accused,
        });
    }

    fn misbehave(&mut self, attacker: NodeId, class: AttackClass) {
        self.log(EventKind::Misbehavior { attacker, class });
    }

    fn drop_data(&mut self, payload: u64, at: NodeId, reason: DropReason) {
        self.log(EventKind::DataDropped { payload, at, reason });
    }

    fn step(&mut self) {
        self.clock += 1;
        let now = self.clock;
        self.util.clear();
        self.apply_failures(now);
        if self.topo.max_speed() > 0.0 {
            self.topo = self.topo.step_mobility(&mut self.rng);
        }
        self.known.extend(topo_links(&self.topo));
        self.check_routes();
        let inboxes = self.deliver();
        for (id, msgs) in inboxes {
            let mut node = self.nodes.remove(&id).expect("inbox for a known node");
            for m in msgs {
                self.process(&mut node, m);
            }
            self.nodes.insert(id, node);
        }
        self.settle_discoveries();
        self.emit_adverts();
        self.emit_floods();
        self.emit_data();
        self.audit_acks();
        self.end_step();
    }

    fn apply_failures(&mut self, now: u64) {
        let due: Vec<FailureTarget> = self
            .sc
            .sim
            .failures
            .iter()
            .filter(|f| f.step == now)
            .map(|f| f.target)
            .collect();
        for t in due {
            match t {
                FailureTarget::Link(k) => {
                    self.topo.fail_link(k);
                    self.log(EventKind::LinkFailed(k));
                }
                FailureTarget::Node(n) => {
                    self.topo.fail_node(n);
                    self.log(EventKind::NodeFailed(n));
                }
            }
        }
    }

    /// False only if some hop used to work and no longer does; a hop that
    /// never existed (a forged claim) is not detectable this way.
    fn path_up(&self, path: &[NodeId]) -> bool {
        path.windows(2).all(|w| {
            self.topo.adjacent(w[0], w[1]) || !self.known.contains(&LinkKey::new(w[0], w[1]))
        })
    }

    fn backup(&self, primary: &[NodeId]) -> Option<Vec<NodeId>> {
        let graph = LinkGraph::from_topology(&self.topo);
        let w: Vec<u32> = graph
            .links()
            .iter()
            .map(|l| self.weights.get(&l.key).copied().unwrap_or(1))
            .collect();
        backup_for(&graph, &w, primary)
    }

    /// Switch broken primaries to their backups; drop stale cached routes.
    fn check_routes(&mut self) {
        let ids: Vec<NodeId> = self.nodes.keys().copied().collect();
        for id in ids {
            let mut node = self.nodes.remove(&id).expect("listed");
            let stale: Vec<NodeId> = node
                .table
                .routes
                .iter()
                .filter(|(_, r)| !self.path_up(&r.full_path))
                .map(|(&d, _)| d)
                .collect();
            for d in stale {
                node.table.routes.remove(&d);
            }
            let dests: Vec<NodeId> = node.sessions.keys().copied().collect();
            for dst in dests {
                let Some(route) = node.sessions[&dst].route.clone() else {
                    continue;
                };
                if self.path_up(&route.primary) {
                    continue;
                }
                let session = node.sessions.get_mut(&dst).expect("listed");
                match route.backup.filter(|b| self.path_up(b)) {
                    Some(b) => {
                        let next_backup = self.backup(&b);
                        session.route = Some(ActiveRoute {
                            primary: b.clone(),
                            backup: next_backup,
                        });
                        let seq = node.table.routes.get(&dst).map_or(0, |r| r.dst_seq);
                        node.table
                            .routes
                            .insert(dst, RouteEntry::from_path(b.clone(), seq));
                        self.log(EventKind::Failover {
                            src: id,
                            dst,
                            path: b,
                        });
                    }
                    None => {
                        session.route = None;
                        node.table.routes.remove(&dst);
                        self.log(EventKind::RouteBroken { src: id, dst });
                    }
                }
            }
            self.nodes.insert(id, node);
        }
    }

    fn deliver(&mut self) -> BTreeMap<NodeId, Vec<ControlMessage>> {
        let mut inboxes: BTreeMap<NodeId, Vec<ControlMessage>> = BTreeMap::new();
        for tx in std::mem::take(&mut self.queue) {
            match tx.to {
                None => {
                    for n in self.topo.neighbors(tx.from).unwrap_or_default() {
                        inboxes.entry(n).or_default().push(tx.msg.clone());
                    }
                }
                Some(to) if self.topo.adjacent(tx.from, to) => {
                    if tx.msg.kind == MessageKind::Data {
                        *self.util.entry(LinkKey::new(tx.from, to)).or_default() += 1;
                    }
                    inboxes.entry(to).or_default().push(tx.msg);
                }
                Some(to) => {
                    if tx.msg.kind == MessageKind::Data {
                        self.drop_data(tx.msg.payload_id, tx.from, DropReason::LinkDown);
                    } else {
                        self.log(EventKind::ControlLost {
                            kind: tx.msg.kind,
                            from: tx.from,
                            to,
                        });
                    }
                }
            }
        }
        inboxes
    }

    fn process(&mut self, node: &mut NodeRt, m: ControlMessage) {
        match m.kind {
            MessageKind::Rreq => self.on_rreq(node, m),
            MessageKind::Rrep => self.on_rrep(node, m),
            MessageKind::Creq => self.on_creq(node, m),
            MessageKind::Crep => self.on_crep(node, m),
            MessageKind::LinkAdv => self.on_advert(node, m),
            MessageKind::Ack => self.on_ack(node, m),
            MessageKind::Data => self.on_data(node, m),
        }
    }

    fn on_rreq(&mut self, node: &mut NodeRt, m: ControlMessage) {
        let me = node.id;
        if m.origin == me {
            return;
        }
        let fresh = !node.table.seen_rreqs.contains(&(m.origin, m.broadcast_id));
        if fresh && self.active(Detector::Blacklist) {
            if let RateVerdict::Blacklisted { new } =
                node.blacklist.monitor_rreq_rate(m.origin, self.clock)
            {
                if new {
                    self.accuse(Detector::Blacklist, me, m.origin);
                }
                return;
            }
        }
        if let Some(AttackKind::Blackhole { delta }) = node.attack {
            if m.target != me {
                if fresh && !m.path.contains(&me) {
                    node.table.seen_rreqs.insert((m.origin, m.broadcast_id));
                    let rep = act_blackhole(me, delta, &m);
                    self.misbehave(me, AttackClass::Blackhole);
                    let to = next_along(&rep.path, me);
                    self.send(me, to, rep);
                }
                return;
            }
        }
        match node.table.handle_rreq(&m) {
            RreqOutcome::Duplicate | RreqOutcome::LoopSuppressed => {}
            RreqOutcome::Forward(f) => self.send(me, None, f),
            RreqOutcome::Reply(rep) => {
                let cache_reply = m.target != me;
                let creq = (cache_reply && self.active(Detector::Confirm)).then(|| {
                    let mut c = ControlMessage::new(MessageKind::Creq, m.origin, m.target);
                    c.broadcast_id = m.broadcast_id;
                    c.path = rep.advertised_route();
                    c
                });
                let to = next_along(&rep.path, me);
                self.send(me, to, rep);
                if let (Some(c), Some(entry)) = (creq, node.table.routes.get(&m.target)) {
                    let hop = entry.next_hop;
                    self.send(me, Some(hop), c);
                }
            }
        }
    }

    fn on_rrep(&mut self, node: &mut NodeRt, mut m: ControlMessage) {
        let me = node.id;
        m.hop_count += 1;
        if m.target == me {
            self.source_rrep(node, m);
            return;
        }
        node.table.handle_rrep(&m);
        if let Some(next) = next_along(&m.path, me) {
            self.send(me, Some(next), m);
        }
    }

    fn defended(&self) -> bool {
        self.active(Detector::Confirm) || self.active(Detector::Quorum)
    }

    fn source_rrep(&mut self, node: &mut NodeRt, m: ControlMessage) {
        let dest = m.origin;
        let route = m.advertised_route();
        if route.first() != Some(&node.id) {
            return;
        }
        if !self.defended() {
            if node.table.handle_rrep(&m) == RrepVerdict::Accepted {
                if let Some(s) = node.sessions.get_mut(&dest) {
                    s.discovery = None;
                }
                self.install(node, dest, route);
            }
            return;
        }
        let confirm = self.active(Detector::Confirm);
        let quorum = self.active(Detector::Quorum);
        let Some(disc) = node
            .sessions
            .get_mut(&dest)
            .and_then(|s| s.discovery.as_mut())
            .filter(|d| d.bid == m.broadcast_id)
        else {
            return;
        };
        let replier = m.replier.unwrap_or(dest);
        let status = if replier == dest || !confirm {
            CandStatus::Direct
        } else {
            let key = ConfirmKey {
                dest,
                discovery: m.broadcast_id,
                replier,
            };
            node.confirm.expect(key, route.clone(), self.clock);
            CandStatus::Pending
        };
        if quorum {
            node.quorum.collect((dest, m.broadcast_id), route.clone());
        }
        disc.candidates.push(Candidate {
            route,
            dst_seq: m.dst_seq,
            hops: m.hop_count,
            replier,
            status,
        });
    }

    fn install(&mut self, node: &mut NodeRt, dst: NodeId, path: Vec<NodeId>) {
        let backup = self.backup(&path);
        self.log(EventKind::RouteInstalled {
            src: node.id,
            dst,
            path: path.clone(),
            backup: backup.clone(),
        });
        let session = node.sessions.entry(dst).or_default();
        session.route = Some(ActiveRoute {
            primary: path.clone(),
            backup,
        });
        let pending: Vec<u64> = session.buffer.drain(..).collect();
        for payload in pending {
            self.send_data(node, path.clone(), payload);
        }
    }

    fn send_data(&mut self, node: &mut NodeRt, route: Vec<NodeId>, payload: u64) {
        if route.len() < 2 {
            self.drop_data(payload, node.id, DropReason::NoRoute);
            return;
        }
        if self.active(Detector::Ack) {
            let hops = (route.len() - 1) as u64;
            node.ack_watch
                .watch(payload, route.clone(), self.clock + 2 * hops + 2);
        }
        let next = route[1];
        self.send(node.id, Some(next), ControlMessage::data(route, payload, INTACT));
    }

    fn on_creq(&mut self, node: &mut NodeRt, m: ControlMessage) {
        let me = node.id;
        let crep = if let Some(AttackKind::Blackhole { .. }) = node.attack {
            self.misbehave(me, AttackClass::Blackhole);
            let mut c = ControlMessage::new(MessageKind::Crep, me, m.origin);
            c.broadcast_id = m.broadcast_id;
            c.path = m.path.clone();
            Some(c)
        } else {
            node.table.answer_creq(&m)
        };
        if let Some(c) = crep {
            if let Some(prev) = prev_along(&c.path, me) {
                self.send(me, Some(prev), c);
            }
        }
    }

    fn on_crep(&mut self, node: &mut NodeRt, m: ControlMessage) {
        let me = node.id;
        if m.target != me {
            if let Some(prev) = prev_along(&m.path, me) {
                self.send(me, Some(prev), m);
            }
            return;
        }
        let Some((key, route, verdict)) = node.confirm.resolve(m.origin, m.broadcast_id, &m.path)
        else {
            return;
        };
        let status = match verdict {
            ConfirmVerdict::Confirmed => CandStatus::Confirmed,
            ConfirmVerdict::Mismatch | ConfirmVerdict::Timeout => {
                let reason = if verdict == ConfirmVerdict::Mismatch {
                    RejectReason::ConfirmMismatch
                } else {
                    RejectReason::ConfirmTimeout
                };
                self.log(EventKind::RouteRejected {
                    src: me,
                    dst: key.dest,
                    path: route.clone(),
                    reason,
                });
                self.accuse(Detector::Confirm, me, key.replier);
                CandStatus::Rejected
            }
        };
        mark(node, key, &route, status);
    }

    fn on_advert(&mut self, node: &mut NodeRt, m: ControlMessage) {
        let me = node.id;
        if m.origin == me || !node.seen_adverts.insert((m.origin, m.broadcast_id)) {
            return;
        }
        node.claims.insert(m.origin, m.claimed_links.clone());
        if let Some(stamp) = m.position {
            node.positions.update(m.origin, stamp);
        }
        self.send(me, None, m);
        if self.active(Detector::LinkCheck) {
            self.judge_claims(node);
        }
        self.recompute_mprs(node);
    }

    /// Re-check every claim not yet settled. A flagged claim accuses each
    /// advertiser that made it.
    fn judge_claims(&mut self, node: &mut NodeRt) {
        let me = node.id;
        if !self.sc.defense.gps_missing.contains(&me) {
            let pos = self.topo.node(me).expect("known").pos;
            node.positions.update(
                me,
                PositionStamp {
                    pos,
                    timestamp: self.clock,
                },
            );
        }
        let all: BTreeSet<LinkKey> = node.claims.values().flatten().copied().collect();
        for claim in all {
            if node.judged.contains_key(&claim) {
                continue;
            }
            match node.positions.verify_link_claim(claim) {
                LinkVerdict::Indeterminate => {
                    node.indeterminate.insert(claim);
                }
                v => {
                    node.indeterminate.remove(&claim);
                    node.judged.insert(claim, v);
                    if v == LinkVerdict::Flagged {
                        let liars: Vec<NodeId> = node
                            .claims
                            .iter()
                            .filter(|(_, c)| c.contains(&claim))
                            .map(|(&a, _)| a)
                            .collect();
                        for a in liars {
                            self.accuse(Detector::LinkCheck, me, a);
                        }
                    }
                }
            }
        }
    }

    fn recompute_mprs(&mut self, node: &mut NodeRt) {
        let me = node.id;
        let one_hop = self.topo.neighbors(me).unwrap_or_default();
        let mut claims: LinkClaims = one_hop.iter().map(|&n| LinkKey::new(me, n)).collect();
        for c in node.claims.values() {
            claims.extend(c.iter().copied());
        }
        claims.retain(|k| node.judged.get(k) != Some(&LinkVerdict::Flagged));
        let sel = select_mprs(&one_hop, &claims, me);
        if sel.relays != node.mprs {
            node.mprs = sel.relays.clone();
            self.log(EventKind::MprChanged {
                node: me,
                relays: sel.relays,
            });
        }
    }

    fn on_ack(&mut self, node: &mut NodeRt, m: ControlMessage) {
        let me = node.id;
        if m.target == me {
            node.acks.insert(m.payload_id);
        } else if let Some(next) = next_along(&m.path, me) {
            self.send(me, Some(next), m);
        }
    }

    fn on_data(&mut self, node: &mut NodeRt, mut m: ControlMessage) {
        let me = node.id;
        let payload = m.payload_id;
        if m.target != me {
            match &node.attack {
                Some(AttackKind::Blackhole { .. }) => {
                    self.misbehave(me, AttackClass::Blackhole);
                    self.drop_data(payload, me, DropReason::Attacker);
                    return;
                }
                Some(AttackKind::Misrelay { partner, mode }) => {
                    match act_misrelay(*partner, *mode, &m) {
                        RelayAction::ForwardUnmodified => {}
                        RelayAction::Drop => {
                            self.misbehave(me, AttackClass::Misrelay);
                            self.drop_data(payload, me, DropReason::Attacker);
                            return;
                        }
                        RelayAction::Modify(bad) => {
                            self.misbehave(me, AttackClass::Misrelay);
                            m = bad;
                        }
                    }
                }
                _ => {}
            }
        }
        match node.table.forward_data(&m) {
            DataAction::Deliver => {
                if m.dst_seq == 0 {
                    self.drop_data(payload, me, DropReason::Corrupted);
                } else {
                    self.log(EventKind::DataDelivered { payload });
                }
                if self.active(Detector::Ack) {
                    let ack = ControlMessage::ack(&m);
                    let to = next_along(&ack.path, me);
                    self.send(me, to, ack);
                }
            }
            DataAction::Forward(next) => {
                let src = m.origin;
                if let Some(n) = self.nodes.get_mut(&src) {
                    n.observed.insert((payload, me));
                }
                self.send(me, Some(next), m);
            }
            DataAction::DropNoRoute => self.drop_data(payload, me, DropReason::NoRoute),
        }
    }

    fn settle_discoveries(&mut self) {
        let now = self.clock;
        let ids: Vec<NodeId> = self.nodes.keys().copied().collect();
        for id in ids {
            let mut node = self.nodes.remove(&id).expect("listed");
            for (key, route) in node.confirm.expire(now) {
                self.log(EventKind::RouteRejected {
                    src: id,
                    dst: key.dest,
                    path: route.clone(),
                    reason: RejectReason::ConfirmTimeout,
                });
                self.accuse(Detector::Confirm, id, key.replier);
                mark(&mut node, key, &route, CandStatus::Rejected);
            }
            let dests: Vec<NodeId> = node
                .sessions
                .iter()
                .filter(|(_, s)| s.discovery.is_some())
                .map(|(&d, _)| d)
                .collect();
            for dst in dests {
                self.settle(&mut node, dst);
            }
            self.nodes.insert(id, node);
        }
    }

    fn settle(&mut self, node: &mut NodeRt, dst: NodeId) {
        let now = self.clock;
        let me = node.id;
        let disc = node.sessions[&dst].discovery.clone().expect("filtered");
        let key = (dst, disc.bid);
        let eligible = |c: &Candidate| matches!(c.status, CandStatus::Direct | CandStatus::Confirmed);
        let best_of = |idx: &mut dyn Iterator<Item = usize>| -> Option<usize> {
            idx.filter(|&i| eligible(&disc.candidates[i])).min_by(|&i, &j| {
                let (a, b) = (&disc.candidates[i], &disc.candidates[j]);
                b.dst_seq.cmp(&a.dst_seq).then(a.hops.cmp(&b.hops)).then(i.cmp(&j))
            })
        };

        let mut verdict = None;
        let choice = if !self.defended() {
            None
        } else if self.active(Detector::Quorum) {
            let v = node.quorum.quorum_check(key);
            verdict = Some(v);
            if v == QuorumVerdict::Safe {
                let ok: BTreeSet<usize> = node.quorum.corroborated(key).into_iter().collect();
                let pick = best_of(&mut ok.iter().copied());
                if pick.is_some() {
                    for (i, c) in disc.candidates.iter().enumerate() {
                        if ok.contains(&i) {
                            continue;
                        }
                        self.log(EventKind::RouteRejected {
                            src: me,
                            dst,
                            path: c.route.clone(),
                            reason: RejectReason::Unsafe,
                        });
                        if c.replier != dst {
                            self.accuse(Detector::Quorum, me, c.replier);
                        }
                    }
                }
                pick
            } else if v == QuorumVerdict::Waiting && now >= disc.deadline {
                // Too few replies to compare; trust the destination's own answers.
                best_of(&mut (0..disc.candidates.len()))
            } else {
                None
            }
        } else {
            best_of(&mut (0..disc.candidates.len()))
        };

        let session = node.sessions.get_mut(&dst).expect("listed");
        if let Some(i) = choice {
            session.discovery = None;
            node.quorum.forget(key);
            let c = &disc.candidates[i];
            node.table
                .routes
                .insert(dst, RouteEntry::from_path(c.route.clone(), c.dst_seq));
            self.install(node, dst, disc.candidates[i].route.clone());
        } else if now >= disc.deadline {
            session.discovery = None;
            node.quorum.forget(key);
            self.log(EventKind::DiscoveryFailed {
                src: me,
                dst,
                broadcast_id: disc.bid,
                quorum: verdict,
            });
        }
    }

    fn emit_adverts(&mut self) {
        let h = self.sc.sim.hello_interval;
        if h == 0 || !(self.clock - 1).is_multiple_of(h) {
            return;
        }
        let ids: Vec<NodeId> = self.nodes.keys().copied().collect();
        for id in ids {
            let links: LinkClaims = self
                .topo
                .neighbors(id)
                .unwrap_or_default()
                .into_iter()
                .map(|n| LinkKey::new(id, n))
                .collect();
            let stamp = (!self.sc.defense.gps_missing.contains(&id)).then(|| PositionStamp {
                pos: self.topo.node(id).expect("known").pos,
                timestamp: self.clock,
            });
            let node = self.nodes.get_mut(&id).expect("listed");
            let bid = node.table.fresh_broadcast_id();
            node.seen_adverts.insert((id, bid));
            let msg = match node.attack {
                Some(AttackKind::LinkSpoof { fake_neighbor, .. }) => {
                    let m = act_linkspoof(id, fake_neighbor, &links, bid, stamp);
                    self.misbehave(id, AttackClass::LinkSpoof);
                    m
                }
                _ => {
                    let mut m = ControlMessage::new(MessageKind::LinkAdv, id, id);
                    m.broadcast_id = bid;
                    m.claimed_links = links;
                    m.position = stamp;
                    m
                }
            };
            self.send(id, None, msg);
        }
    }

    fn emit_floods(&mut self) {
        let now = self.clock;
        let mut out = Vec::new();
        for f in &mut self.flooders {
            let burst = f.act_flooding(now);
            if !burst.is_empty() {
                out.push((f.node, burst));
            }
        }
        for (attacker, burst) in out {
            self.misbehave(attacker, AttackClass::Flooding);
            for m in burst {
                if let Some(n) = self.nodes.get_mut(&attacker) {
                    n.table.seen_rreqs.insert((m.origin, m.broadcast_id));
                }
                self.send(attacker, None, m);
            }
        }
    }

    fn emit_data(&mut self) {
        let now = self.clock;
        let rate = self.sc.sim.data_rate;
        for i in 0..self.flows.len() {
            let (src, dst, emitted) = self.flows[i];
            let due = (rate * now as f64).floor() as u64;
            let n = due.saturating_sub(emitted);
            self.flows[i].2 += n;
            for _ in 0..n {
                self.next_payload += 1;
                let payload = self.next_payload;
                self.log(EventKind::DataSent { payload, flow: i });
                self.nodes
                    .get_mut(&src)
                    .expect("commodity source exists")
                    .sessions
                    .entry(dst)
                    .or_default()
                    .buffer
                    .push_back(payload);
            }
        }
        let ids: Vec<NodeId> = self.nodes.keys().copied().collect();
        for id in ids {
            let mut node = self.nodes.remove(&id).expect("listed");
            let dests: Vec<NodeId> = node
                .sessions
                .iter()
                .filter(|(_, s)| !s.buffer.is_empty())
                .map(|(&d, _)| d)
                .collect();
            for dst in dests {
                let session = node.sessions.get_mut(&dst).expect("listed");
                if let Some(route) = &session.route {
                    let path = route.primary.clone();
                    let pending: Vec<u64> = session.buffer.drain(..).collect();
                    for payload in pending {
                        self.send_data(&mut node, path.clone(), payload);
                    }
                } else if session.discovery.is_none() {
                    self.start_discovery(&mut node, dst);
                }
            }
            self.nodes.insert(id, node);
        }
    }

    fn start_discovery(&mut self, node: &mut NodeRt, dst: NodeId) {
        let rreq = node.table.originate_rreq(dst);
        let bid = rreq.broadcast_id;
        let wait = if self.active(Detector::Quorum) {
            self.sc.defense.quorum_wait
        } else {
            self.sc.sim.discovery_timeout
        };
        node.sessions.entry(dst).or_default().discovery = Some(Discovery {
            bid,
            deadline: self.clock + wait,
            candidates: Vec::new(),
        });
        self.log(EventKind::RouteDiscovery {
            src: node.id,
            dst,
            broadcast_id: bid,
        });
        self.send(node.id, None, rreq);
    }

    fn audit_acks(&mut self) {
        if !self.active(Detector::Ack) {
            return;
        }
        let now = self.clock;
        let mut found = Vec::new();
        for node in self.nodes.values_mut() {
            if node.ack_watch.pending_len() == 0 {
                continue;
            }
            let s = node
                .ack_watch
                .ack_audit(&node.observed, &node.acks, &self.topo, now);
            for suspect in s {
                found.push((node.id, suspect));
            }
        }
        for (observer, suspect) in found {
            self.accuse(Detector::Ack, observer, suspect);
        }
    }

    fn end_step(&mut self) {
        let mut max_u: f64 = 0.0;
        let active = self.topo.active_links();
        for (k, &n) in &self.util {
            let cap = active
                .iter()
                .find(|l| l.key == *k)
                .map_or(self.topo.default_capacity, |l| l.capacity);
            max_u = max_u.max(n as f64 / cap);
        }
        let buffered: usize = self
            .nodes
            .values()
            .flat_map(|n| n.sessions.values())
            .map(|s| s.buffer.len())
            .sum();
        let queued = self
            .queue
            .iter()
            .filter(|t| t.msg.kind == MessageKind::Data)
            .count();
        self.log(EventKind::StepEnd {
            max_utilization: max_u,
            in_flight: (buffered + queued) as u64,
        });
    }
}

fn topo_links(t: &Topology) -> BTreeSet<LinkKey> {
    t.active_links().into_iter().map(|l| l.key).collect()
}

fn mark(node: &mut NodeRt, key: ConfirmKey, route: &[NodeId], status: CandStatus) {
    let Some(disc) = node
        .sessions
        .get_mut(&key.dest)
        .and_then(|s| s.discovery.as_mut())
        .filter(|d| d.bid == key.discovery)
    else {
        return;
    };
    for c in &mut disc.candidates {
        if c.replier == key.replier && c.route == route && c.status == CandStatus::Pending {
            c.status = status;
        }
    }
}
