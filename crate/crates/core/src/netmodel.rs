//! Geometric topology, mobility, neighbor derivation and clusterhead election.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rand::Rng;

use crate::error::NetError;

/// Node identifier. Positive integers in scenario files.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Unordered node pair, stored with the smaller id first.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkKey(NodeId, NodeId);

impl LinkKey {
    pub fn new(a: NodeId, b: NodeId) -> Self {
        if a <= b {
            LinkKey(a, b)
        } else {
            LinkKey(b, a)
        }
    }

    pub fn lo(&self) -> NodeId {
        self.0
    }

    pub fn hi(&self) -> NodeId {
        self.1
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.0 == n || self.1 == n
    }

    /// The endpoint that is not `n`, if `n` is an endpoint.
    pub fn other(&self, n: NodeId) -> Option<NodeId> {
        if self.0 == n {
            Some(self.1)
        } else if self.1 == n {
            Some(self.0)
        } else {
            None
        }
    }
}

impl fmt::Display for LinkKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.0, self.1)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeState {
    pub id: NodeId,
    pub pos: Point,
    pub waypoint: Point,
    /// Meters per step.
    pub speed: f64,
    pub cluster_id: Option<u32>,
    pub is_clusterhead: bool,
}

impl NodeState {
    /// A node parked at `pos`; its waypoint is its own position.
    pub fn new(id: NodeId, pos: Point, speed: f64) -> Self {
        NodeState {
            id,
            pos,
            waypoint: pos,
            speed,
            cluster_id: None,
            is_clusterhead: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkSpec {
    pub key: LinkKey,
    /// Bandwidth capacity in demand units.
    pub capacity: f64,
    pub up: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum AdjacencyMode {
    /// Neighbors are nodes within `radio_range`; declared links may only veto.
    UnitDisk,
    /// Neighbors are exactly the declared links that are up.
    Explicit,
}

/// Rectangle `[0, width] x [0, height]` used for waypoint draws.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Bounds {
    pub width: f64,
    pub height: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            width: 1000.0,
            height: 1000.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    nodes: BTreeMap<NodeId, NodeState>,
    links: BTreeMap<LinkKey, LinkSpec>,
    pub radio_range: f64,
    pub mode: AdjacencyMode,
    pub bounds: Bounds,
    /// Capacity assigned to geometric links in unit-disk mode.
    pub default_capacity: f64,
}

impl Topology {
    pub fn new(radio_range: f64, mode: AdjacencyMode) -> Self {
        Topology {
            nodes: BTreeMap::new(),
            links: BTreeMap::new(),
            radio_range,
            mode,
            bounds: Bounds::default(),
            default_capacity: 10.0,
        }
    }

    pub fn add_node(&mut self, node: NodeState) -> Result<(), NetError> {
        if !(node.pos.x.is_finite() && node.pos.y.is_finite()) {
            return Err(NetError::NonFinitePosition(node.id));
        }
        if !(node.speed >= 0.0 && node.speed.is_finite()) {
            return Err(NetError::NegativeSpeed(node.id));
        }
        if self.nodes.contains_key(&node.id) {
            return Err(NetError::DuplicateNode(node.id));
        }
        self.nodes.insert(node.id, node);
        Ok(())
    }

    pub fn add_link(&mut self, a: NodeId, b: NodeId, capacity: f64) -> Result<(), NetError> {
        if a == b {
            return Err(NetError::SelfLink(a));
        }
        for n in [a, b] {
            if !self.nodes.contains_key(&n) {
                return Err(NetError::UnknownNode(n));
            }
        }
        if !(capacity > 0.0 && capacity.is_finite()) {
            return Err(NetError::BadCapacity(LinkKey::new(a, b)));
        }
        let key = LinkKey::new(a, b);
        if self.links.contains_key(&key) {
            return Err(NetError::DuplicateLink(key));
        }
        self.links.insert(
            key,
            LinkSpec {
                key,
                capacity,
                up: true,
            },
        );
        Ok(())
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeState> {
        self.nodes.get(&id)
    }

    pub fn node_mut(&mut self, id: NodeId) -> Option<&mut NodeState> {
        self.nodes.get_mut(&id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeState> {
        self.nodes.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Declared links, in canonical order.
    pub fn declared_links(&self) -> impl Iterator<Item = &LinkSpec> {
        self.links.values()
    }

    /// Mark a pair down. In unit-disk mode a veto record is created when none exists.
    pub fn fail_link(&mut self, key: LinkKey) {
        let capacity = self.default_capacity;
        self.links
            .entry(key)
            .or_insert(LinkSpec {
                key,
                capacity,
                up: true,
            })
            .up = false;
    }

    /// Fail every link incident to `n`.
    pub fn fail_node(&mut self, n: NodeId) {
        let others: Vec<NodeId> = self.node_ids().filter(|&m| m != n).collect();
        for m in others {
            let key = LinkKey::new(n, m);
            match self.mode {
                AdjacencyMode::Explicit => {
                    if let Some(link) = self.links.get_mut(&key) {
                        link.up = false;
                    }
                }
                AdjacencyMode::UnitDisk => self.fail_link(key),
            }
        }
    }

    /// Whether `a` and `b` can currently exchange a frame.
    pub fn adjacent(&self, a: NodeId, b: NodeId) -> bool {
        if a == b {
            return false;
        }
        let (Some(na), Some(nb)) = (self.nodes.get(&a), self.nodes.get(&b)) else {
            return false;
        };
        let declared = self.links.get(&LinkKey::new(a, b));
        match self.mode {
            AdjacencyMode::Explicit => declared.is_some_and(|l| l.up),
            AdjacencyMode::UnitDisk => {
                na.pos.distance(&nb.pos) <= self.radio_range && declared.is_none_or(|l| l.up)
            }
        }
    }

    pub fn neighbors(&self, n: NodeId) -> Result<BTreeSet<NodeId>, NetError> {
        if !self.nodes.contains_key(&n) {
            return Err(NetError::UnknownNode(n));
        }
        Ok(self
            .nodes
            .keys()
            .copied()
            .filter(|&m| self.adjacent(n, m))
            .collect())
    }

    /// Currently usable links with capacities, in canonical order.
    pub fn active_links(&self) -> Vec<LinkSpec> {
        match self.mode {
            AdjacencyMode::Explicit => self.links.values().filter(|l| l.up).cloned().collect(),
            AdjacencyMode::UnitDisk => {
                let ids: Vec<NodeId> = self.node_ids().collect();
                let mut out = Vec::new();
                for (i, &a) in ids.iter().enumerate() {
                    for &b in &ids[i + 1..] {
                        if self.adjacent(a, b) {
                            let key = LinkKey::new(a, b);
                            let capacity = self
                                .links
                                .get(&key)
                                .map_or(self.default_capacity, |l| l.capacity);
                            out.push(LinkSpec {
                                key,
                                capacity,
                                up: true,
                            });
                        }
                    }
                }
                out
            }
        }
    }

    /// Breadth-first hop distances from `src` over current adjacency.
    pub fn hop_distances(&self, src: NodeId) -> BTreeMap<NodeId, usize> {
        let mut dist = BTreeMap::new();
        if !self.contains(src) {
            return dist;
        }
        dist.insert(src, 0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let d = dist[&u];
            for v in self.neighbors(u).unwrap_or_default() {
                if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(v) {
                    e.insert(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Largest node speed, used to size position-check slack.
    pub fn max_speed(&self) -> f64 {
        self.nodes.values().map(|n| n.speed).fold(0.0, f64::max)
    }

    /// One random-waypoint step. Speed-zero nodes never move or draw.
    pub fn step_mobility<R: Rng + ?Sized>(&self, rng: &mut R) -> Topology {
        let mut next = self.clone();
        for node in next.nodes.values_mut() {
            if node.speed <= 0.0 {
                continue;
            }
            let remaining = node.pos.distance(&node.waypoint);
            if remaining == 0.0 {
                node.waypoint = Point::new(
                    rng.gen_range(0.0..=self.bounds.width),
                    rng.gen_range(0.0..=self.bounds.height),
                );
                continue;
            }
            if remaining <= node.speed {
                node.pos = node.waypoint;
            } else {
                let t = node.speed / remaining;
                node.pos = Point::new(
                    node.pos.x + (node.waypoint.x - node.pos.x) * t,
                    node.pos.y + (node.waypoint.y - node.pos.y) * t,
                );
            }
        }
        next
    }

    /// Score-based clusterhead election.
    ///
    /// Each node scores `degree_coeff * degree - speed_coeff * speed`. The
    /// highest-scoring unassigned node (lowest id on ties) becomes a
    /// clusterhead and absorbs its unassigned neighbors; repeat until every
    /// node is assigned. Cluster ids are handed out 1, 2, ... in election
    /// order.
    pub fn elect_clusterheads(&self, weights: ElectionWeights) -> ClusterAssignment {
        let mut order: Vec<(f64, NodeId)> = self
            .nodes
            .values()
            .map(|n| {
                let degree = self.neighbors(n.id).map(|s| s.len()).unwrap_or(0) as f64;
                (weights.degree * degree - weights.speed * n.speed, n.id)
            })
            .collect();
        order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

        let mut assignment = ClusterAssignment::default();
        let mut next_cluster = 1u32;
        for &(_, head) in &order {
            if assignment.member_of.contains_key(&head) {
                continue;
            }
            let cluster = next_cluster;
            next_cluster += 1;
            assignment.member_of.insert(head, cluster);
            assignment.heads.insert(cluster, head);
            for m in self.neighbors(head).unwrap_or_default() {
                assignment.member_of.entry(m).or_insert(cluster);
            }
        }
        assignment
    }

    /// Write cluster labels from an election back into node state.
    pub fn apply_clusters(&mut self, assignment: &ClusterAssignment) {
        for node in self.nodes.values_mut() {
            node.cluster_id = assignment.member_of.get(&node.id).copied();
            node.is_clusterhead = assignment.heads.values().any(|&h| h == node.id);
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ElectionWeights {
    pub degree: f64,
    pub speed: f64,
}

impl Default for ElectionWeights {
    fn default() -> Self {
        ElectionWeights {
            degree: 1.0,
            speed: 1.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub member_of: BTreeMap<NodeId, u32>,
    pub heads: BTreeMap<u32, NodeId>,
}

impl ClusterAssignment {
    pub fn members(&self, cluster: u32) -> BTreeSet<NodeId> {
        self.member_of
            .iter()
            .filter(|(_, &c)| c == cluster)
            .map(|(&n, _)| n)
            .collect()
    }
}

/// A traffic demand between two nodes, labelled with its cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct Commodity {
    pub cluster: u32,
    pub src: NodeId,
    pub dst: NodeId,
    pub demand: f64,
}

/// Set of advertised (possibly fake) links.
pub type LinkClaims = BTreeSet<LinkKey>;

fn claimed_neighbors(claims: &LinkClaims, n: NodeId) -> BTreeSet<NodeId> {
    claims.iter().filter_map(|k| k.other(n)).collect()
}

/// Nodes exactly two hops from `n` over advertised links.
pub fn two_hop_neighbors(claims: &LinkClaims, n: NodeId) -> BTreeSet<NodeId> {
    let one_hop = claimed_neighbors(claims, n);
    one_hop
        .iter()
        .flat_map(|&m| claimed_neighbors(claims, m))
        .filter(|&x| x != n && !one_hop.contains(&x))
        .collect()
}
