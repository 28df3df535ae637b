//! Reactive route discovery with recorded paths, route freshness, and
//! greedy multipoint-relay selection.
//!
//! Route replies carry the whole route rather than only a hop count so
//! that the source can compare replies against each other and against
//! confirmation replies.

use std::collections::{BTreeMap, BTreeSet};

use crate::netmodel::{two_hop_neighbors, LinkClaims, NodeId, Point};

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MessageKind {
    Rreq,
    Rrep,
    Creq,
    Crep,
    LinkAdv,
    Ack,
    Data,
}

impl MessageKind {
    pub fn is_control(self) -> bool {
        self != MessageKind::Data
    }

    pub fn label(self) -> &'static str {
        match self {
            MessageKind::Rreq => "RREQ",
            MessageKind::Rrep => "RREP",
            MessageKind::Creq => "CREQ",
            MessageKind::Crep => "CREP",
            MessageKind::LinkAdv => "LINKADV",
            MessageKind::Ack => "ACK",
            MessageKind::Data => "DATA",
        }
    }
}

/// GPS fix attached to a link advertisement.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PositionStamp {
    pub pos: Point,
    pub timestamp: u64,
}

/// Every protocol message, routing or data.
///
/// Path conventions per kind:
/// * RREQ: nodes traversed so far, starting at the originator.
/// * RREP: the advertised route reversed, starting at the route's
///   destination (`origin`) and ending at the discovery originator
///   (`target`). `hop_count` is the holder's distance from `origin`.
/// * CREQ/CREP: the advertised route in forward order.
/// * DATA/ACK: the source route, forward order for DATA, reversed for ACK.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlMessage {
    pub kind: MessageKind,
    pub origin: NodeId,
    pub target: NodeId,
    pub broadcast_id: u64,
    /// Originator's own sequence number (RREQ).
    pub origin_seq: u64,
    pub dst_seq: u64,
    pub hop_count: u32,
    pub path: Vec<NodeId>,
    pub payload_id: u64,
    pub claimed_links: LinkClaims,
    pub position: Option<PositionStamp>,
    /// Node that generated an RREP (the destination or a cache holder).
    pub replier: Option<NodeId>,
    /// Transmitter of the current hop; set on every transmission.
    pub sender: NodeId,
}

impl ControlMessage {
    pub fn new(kind: MessageKind, origin: NodeId, target: NodeId) -> Self {
        ControlMessage {
            kind,
            origin,
            target,
            broadcast_id: 0,
            origin_seq: 0,
            dst_seq: 0,
            hop_count: 0,
            path: vec![origin],
            payload_id: 0,
            claimed_links: LinkClaims::new(),
            position: None,
            replier: None,
            sender: origin,
        }
    }

    /// Source-routed DATA packet. `route` runs from the source to the target.
    pub fn data(route: Vec<NodeId>, payload_id: u64, integrity: u64) -> Self {
        let src = route[0];
        let dst = *route.last().expect("route is non-empty");
        ControlMessage {
            payload_id,
            dst_seq: integrity,
            hop_count: 0,
            path: route,
            ..ControlMessage::new(MessageKind::Data, src, dst)
        }
    }

    /// End-to-end acknowledgement for a delivered DATA packet.
    pub fn ack(data: &ControlMessage) -> Self {
        let mut back = data.path.clone();
        back.reverse();
        ControlMessage {
            payload_id: data.payload_id,
            path: back,
            ..ControlMessage::new(MessageKind::Ack, data.target, data.origin)
        }
    }

    /// The route an RREP advertises, in forward order (originator first).
    pub fn advertised_route(&self) -> Vec<NodeId> {
        let mut r = self.path.clone();
        if self.kind == MessageKind::Rrep {
            r.reverse();
        }
        r
    }
}

/// Node after `me` in `path`.
pub fn next_along(path: &[NodeId], me: NodeId) -> Option<NodeId> {
    let i = path.iter().position(|&n| n == me)?;
    path.get(i + 1).copied()
}

/// Node before `me` in `path`.
pub fn prev_along(path: &[NodeId], me: NodeId) -> Option<NodeId> {
    let i = path.iter().position(|&n| n == me)?;
    i.checked_sub(1).map(|j| path[j])
}

pub fn is_loop_free(path: &[NodeId]) -> bool {
    let mut seen = BTreeSet::new();
    path.iter().all(|n| seen.insert(*n))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RouteEntry {
    pub dest: NodeId,
    pub next_hop: NodeId,
    pub hop_count: u32,
    pub dst_seq: u64,
    /// Owner first, destination last.
    pub full_path: Vec<NodeId>,
}

impl RouteEntry {
    pub fn from_path(full_path: Vec<NodeId>, dst_seq: u64) -> Self {
        debug_assert!(full_path.len() >= 2);
        RouteEntry {
            dest: *full_path.last().unwrap(),
            next_hop: full_path[1],
            hop_count: (full_path.len() - 1) as u32,
            dst_seq,
            full_path,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RreqOutcome {
    /// Already processed this discovery (or our own request echoing back).
    Duplicate,
    /// We are already on the recorded path.
    LoopSuppressed,
    /// Re-broadcast with ourselves appended.
    Forward(ControlMessage),
    /// Answer toward the originator.
    Reply(ControlMessage),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum RrepVerdict {
    Accepted,
    Rejected,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DataAction {
    Deliver,
    Forward(NodeId),
    DropNoRoute,
}

/// Per-node routing state.
#[derive(Clone, Debug, PartialEq)]
pub struct RoutingTable {
    pub owner: NodeId,
    pub routes: BTreeMap<NodeId, RouteEntry>,
    pub own_seq: u64,
    pub seen_rreqs: BTreeSet<(NodeId, u64)>,
    /// (origin, broadcast id, previous hop) triples the destination has answered.
    answered: BTreeSet<(NodeId, u64, NodeId)>,
    next_broadcast_id: u64,
}

impl RoutingTable {
    pub fn new(owner: NodeId) -> Self {
        RoutingTable {
            owner,
            routes: BTreeMap::new(),
            own_seq: 0,
            seen_rreqs: BTreeSet::new(),
            answered: BTreeSet::new(),
            next_broadcast_id: 0,
        }
    }

    /// Next broadcast id for this originator. Shared by RREQs and link adverts.
    pub fn fresh_broadcast_id(&mut self) -> u64 {
        self.next_broadcast_id += 1;
        self.next_broadcast_id
    }

    pub fn originate_rreq(&mut self, dst: NodeId) -> ControlMessage {
        self.own_seq += 1;
        let bid = self.fresh_broadcast_id();
        self.seen_rreqs.insert((self.owner, bid));
        ControlMessage {
            broadcast_id: bid,
            origin_seq: self.own_seq,
            dst_seq: self.routes.get(&dst).map_or(0, |r| r.dst_seq),
            ..ControlMessage::new(MessageKind::Rreq, self.owner, dst)
        }
    }

    /// Process a received RREQ.
    ///
    /// Intermediate nodes handle each (origin, broadcast id) once. The
    /// destination answers once per distinct previous hop so that
    /// branch-disjoint copies of one discovery yield distinct replies.
    pub fn handle_rreq(&mut self, m: &ControlMessage) -> RreqOutcome {
        debug_assert_eq!(m.kind, MessageKind::Rreq);
        let me = self.owner;
        if m.origin == me {
            return RreqOutcome::Duplicate;
        }
        if m.path.contains(&me) {
            return RreqOutcome::LoopSuppressed;
        }
        let prev = *m.path.last().unwrap_or(&m.origin);

        if m.target == me {
            if !self.answered.insert((m.origin, m.broadcast_id, prev)) {
                return RreqOutcome::Duplicate;
            }
            self.seen_rreqs.insert((m.origin, m.broadcast_id));
            self.own_seq = self.own_seq.max(m.dst_seq);
            let mut route = m.path.clone();
            route.push(me);
            return RreqOutcome::Reply(self.build_rrep(m, route, self.own_seq, 0));
        }

        if !self.seen_rreqs.insert((m.origin, m.broadcast_id)) {
            return RreqOutcome::Duplicate;
        }

        if let Some(entry) = self.routes.get(&m.target) {
            if entry.dst_seq >= m.dst_seq {
                let mut route = m.path.clone();
                route.extend_from_slice(&entry.full_path);
                if is_loop_free(&route) {
                    let (seq, hops) = (entry.dst_seq, entry.hop_count);
                    return RreqOutcome::Reply(self.build_rrep(m, route, seq, hops));
                }
            }
        }

        let mut fwd = m.clone();
        fwd.path.push(me);
        fwd.hop_count += 1;
        RreqOutcome::Forward(fwd)
    }

    fn build_rrep(
        &self,
        rreq: &ControlMessage,
        mut route: Vec<NodeId>,
        dst_seq: u64,
        hops_from_dest: u32,
    ) -> ControlMessage {
        route.reverse();
        ControlMessage {
            broadcast_id: rreq.broadcast_id,
            dst_seq,
            hop_count: hops_from_dest,
            path: route,
            replier: Some(self.owner),
            sender: self.owner,
            ..ControlMessage::new(MessageKind::Rrep, rreq.target, rreq.origin)
        }
    }

    /// Apply the freshness rule to a received RREP: strictly newer sequence
    /// number, or equal sequence number with fewer hops, or no incumbent.
    pub fn handle_rrep(&mut self, m: &ControlMessage) -> RrepVerdict {
        debug_assert_eq!(m.kind, MessageKind::Rrep);
        let Some(idx) = m.path.iter().position(|&n| n == self.owner) else {
            return RrepVerdict::Rejected;
        };
        if idx == 0 {
            return RrepVerdict::Rejected;
        }
        let mut full_path: Vec<NodeId> = m.path[..=idx].to_vec();
        full_path.reverse();
        if !is_loop_free(&full_path) {
            return RrepVerdict::Rejected;
        }
        self.offer_route(full_path, m.dst_seq)
    }

    /// Install `full_path` (owner first) if it beats the incumbent.
    pub fn offer_route(&mut self, full_path: Vec<NodeId>, dst_seq: u64) -> RrepVerdict {
        let candidate = RouteEntry::from_path(full_path, dst_seq);
        let better = match self.routes.get(&candidate.dest) {
            None => true,
            Some(cur) => {
                candidate.dst_seq > cur.dst_seq
                    || (candidate.dst_seq == cur.dst_seq && candidate.hop_count < cur.hop_count)
            }
        };
        if better {
            self.routes.insert(candidate.dest, candidate);
            RrepVerdict::Accepted
        } else {
            RrepVerdict::Rejected
        }
    }

    /// Confirmation reply for a CREQ whose advertised route passes through us.
    /// Silent when we hold no route to the destination.
    pub fn answer_creq(&self, creq: &ControlMessage) -> Option<ControlMessage> {
        let me = self.owner;
        let idx = creq.path.iter().position(|&n| n == me)?;
        let mut path = creq.path[..idx].to_vec();
        if me == creq.target {
            path.push(me);
        } else {
            path.extend_from_slice(&self.routes.get(&creq.target)?.full_path);
        }
        Some(ControlMessage {
            broadcast_id: creq.broadcast_id,
            path,
            ..ControlMessage::new(MessageKind::Crep, me, creq.origin)
        })
    }

    pub fn forward_data(&self, m: &ControlMessage) -> DataAction {
        if self.owner == m.target {
            return DataAction::Deliver;
        }
        if let Some(next) = next_along(&m.path, self.owner) {
            return DataAction::Forward(next);
        }
        match self.routes.get(&m.target) {
            Some(entry) => DataAction::Forward(entry.next_hop),
            None => DataAction::DropNoRoute,
        }
    }
}

/// Result of a multipoint-relay computation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MprSelection {
    pub relays: BTreeSet<NodeId>,
    /// Claimed two-hop nodes no one-hop neighbor reaches.
    pub uncovered: BTreeSet<NodeId>,
}

/// Greedy cover of the advertised two-hop neighborhood, followed by a
/// pruning pass that drops relays whose coverage the others already supply.
pub fn select_mprs(one_hop: &BTreeSet<NodeId>, claims: &LinkClaims, me: NodeId) -> MprSelection {
    let targets = two_hop_neighbors(claims, me);
    let coverage: BTreeMap<NodeId, BTreeSet<NodeId>> = one_hop
        .iter()
        .map(|&c| {
            let reach = claims
                .iter()
                .filter_map(|k| k.other(c))
                .filter(|x| targets.contains(x))
                .collect();
            (c, reach)
        })
        .collect();

    let mut uncovered = targets.clone();
    let mut picked: Vec<NodeId> = Vec::new();
    loop {
        // max coverage; BTreeMap iteration gives lowest id first on ties
        let best = coverage
            .iter()
            .filter(|(c, _)| !picked.contains(c))
            .map(|(&c, reach)| (reach.intersection(&uncovered).count(), c))
            .filter(|&(gain, _)| gain > 0)
            .fold(None, |acc: Option<(usize, NodeId)>, cand| match acc {
                Some(a) if a.0 >= cand.0 => Some(a),
                _ => Some(cand),
            });
        let Some((_, c)) = best else { break };
        for x in &coverage[&c] {
            uncovered.remove(x);
        }
        picked.push(c);
    }

    // pruning, latest pick first
    let mut relays: BTreeSet<NodeId> = picked.iter().copied().collect();
    for &c in picked.iter().rev() {
        let rest: BTreeSet<NodeId> = relays
            .iter()
            .filter(|&&r| r != c)
            .flat_map(|r| coverage[r].iter().copied())
            .collect();
        if coverage[&c].iter().all(|x| rest.contains(x)) {
            relays.remove(&c);
        }
    }

    MprSelection { relays, uncovered }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::LinkKey;

    fn id(n: u32) -> NodeId {
        NodeId(n)
    }

    fn ids(v: &[u32]) -> Vec<NodeId> {
        v.iter().copied().map(NodeId).collect()
    }

    fn rrep(path: &[u32], seq: u64, hops: u32) -> ControlMessage {
        let p = ids(path);
        ControlMessage {
            dst_seq: seq,
            hop_count: hops,
            path: p.clone(),
            replier: Some(p[0]),
            ..ControlMessage::new(MessageKind::Rrep, p[0], *p.last().unwrap())
        }
    }

    #[test]
    fn rreq_broadcast_ids_are_per_origin_counters() {
        let mut t = RoutingTable::new(id(1));
        let first = t.originate_rreq(id(5));
        assert_eq!(first.broadcast_id, 1);
        assert_eq!(first.path, ids(&[1]));
        assert_eq!(first.hop_count, 0);
        assert_eq!(first.origin_seq, 1);
        let second = t.originate_rreq(id(6));
        assert_eq!(second.broadcast_id, 2);
        assert_ne!(first.broadcast_id, second.broadcast_id);
        assert_eq!(t.own_seq, 2);
    }

    #[test]
    fn duplicate_rreq_is_ignored() {
        let mut src = RoutingTable::new(id(1));
        let req = src.originate_rreq(id(9));
        let mut mid = RoutingTable::new(id(2));
        assert!(matches!(mid.handle_rreq(&req), RreqOutcome::Forward(_)));
        assert_eq!(mid.handle_rreq(&req), RreqOutcome::Duplicate);
        // our own request echoing back
        assert_eq!(src.handle_rreq(&req), RreqOutcome::Duplicate);
    }

    #[test]
    fn forward_appends_self() {
        let mut src = RoutingTable::new(id(1));
        let req = src.originate_rreq(id(9));
        let mut mid = RoutingTable::new(id(2));
        let RreqOutcome::Forward(fwd) = mid.handle_rreq(&req) else {
            panic!("expected forward")
        };
        assert_eq!(fwd.path, ids(&[1, 2]));
        assert_eq!(fwd.hop_count, 1);
        assert_eq!(fwd.hop_count as usize, fwd.path.len() - 1);
    }

    #[test]
    fn target_replies_with_reversed_path() {
        let mut src = RoutingTable::new(id(1));
        let mut req = src.originate_rreq(id(3));
        req.path.push(id(2));
        req.hop_count = 1;
        let mut dst = RoutingTable::new(id(3));
        dst.own_seq = 4;
        let RreqOutcome::Reply(rep) = dst.handle_rreq(&req) else {
            panic!("expected reply")
        };
        assert_eq!(rep.kind, MessageKind::Rrep);
        assert_eq!(rep.path, ids(&[3, 2, 1]));
        assert_eq!(rep.dst_seq, 4);
        assert_eq!(rep.origin, id(3));
        assert_eq!(rep.target, id(1));
        assert_eq!(rep.replier, Some(id(3)));
        assert_eq!(rep.advertised_route(), ids(&[1, 2, 3]));
    }

    #[test]
    fn target_answers_each_branch_once() {
        let mut src = RoutingTable::new(id(1));
        let req = src.originate_rreq(id(4));
        let via = |n: u32| {
            let mut r = req.clone();
            r.path.push(id(n));
            r.hop_count = 1;
            r
        };
        let mut dst = RoutingTable::new(id(4));
        assert!(matches!(dst.handle_rreq(&via(2)), RreqOutcome::Reply(_)));
        assert!(matches!(dst.handle_rreq(&via(3)), RreqOutcome::Reply(_)));
        assert_eq!(dst.handle_rreq(&via(2)), RreqOutcome::Duplicate);
    }

    #[test]
    fn rreq_for_missing_destination_is_only_forwarded() {
        let mut src = RoutingTable::new(id(1));
        let req = src.originate_rreq(id(999));
        let mut mid = RoutingTable::new(id(2));
        assert!(matches!(mid.handle_rreq(&req), RreqOutcome::Forward(_)));
    }

    #[test]
    fn looping_rreq_is_suppressed() {
        let mut src = RoutingTable::new(id(1));
        let mut req = src.originate_rreq(id(9));
        req.path = ids(&[1, 2, 3]);
        let mut mid = RoutingTable::new(id(2));
        assert_eq!(mid.handle_rreq(&req), RreqOutcome::LoopSuppressed);
    }

    #[test]
    fn cached_route_answers_from_intermediate() {
        let mut mid = RoutingTable::new(id(2));
        mid.offer_route(ids(&[2, 3, 4]), 6);
        let mut src = RoutingTable::new(id(1));
        let req = src.originate_rreq(id(4));
        let RreqOutcome::Reply(rep) = mid.handle_rreq(&req) else {
            panic!("expected cache reply")
        };
        assert_eq!(rep.path, ids(&[4, 3, 2, 1]));
        assert_eq!(rep.dst_seq, 6);
        assert_eq!(rep.hop_count, 2);
        assert_eq!(rep.replier, Some(id(2)));
    }

    #[test]
    fn freshness_rule() {
        let mut t = RoutingTable::new(id(1));
        // empty table accepts anything
        assert_eq!(t.handle_rrep(&rrep(&[9, 5, 1], 5, 2)), RrepVerdict::Accepted);
        // higher seq wins even with more hops
        assert_eq!(t.handle_rrep(&rrep(&[9, 7, 6, 1], 7, 3)), RrepVerdict::Accepted);
        assert_eq!(t.routes[&id(9)].dst_seq, 7);
        assert_eq!(t.routes[&id(9)].full_path, ids(&[1, 6, 7, 9]));
        assert_eq!(t.routes[&id(9)].next_hop, id(6));

        let mut t = RoutingTable::new(id(1));
        t.offer_route(ids(&[1, 2, 9]), 5);
        // same seq, more hops
        assert_eq!(t.handle_rrep(&rrep(&[9, 4, 3, 2, 1], 5, 4)), RrepVerdict::Rejected);
        // same seq, same hops
        assert_eq!(t.handle_rrep(&rrep(&[9, 3, 1], 5, 2)), RrepVerdict::Rejected);
        // same seq, fewer hops
        assert_eq!(t.handle_rrep(&rrep(&[9, 1], 5, 1)), RrepVerdict::Accepted);
    }

    #[test]
    fn rrep_replay_is_rejected() {
        let mut t = RoutingTable::new(id(1));
        let m = rrep(&[9, 2, 1], 3, 2);
        assert_eq!(t.handle_rrep(&m), RrepVerdict::Accepted);
        assert_eq!(t.handle_rrep(&m), RrepVerdict::Rejected);
    }

    #[test]
    fn intermediate_learns_suffix_route() {
        let mut t = RoutingTable::new(id(2));
        assert_eq!(t.handle_rrep(&rrep(&[9, 3, 2, 1], 1, 2)), RrepVerdict::Accepted);
        assert_eq!(t.routes[&id(9)].full_path, ids(&[2, 3, 9]));
        assert_eq!(t.routes[&id(9)].hop_count, 2);
    }

    #[test]
    fn creq_answered_from_cache_only() {
        let creq = ControlMessage {
            broadcast_id: 3,
            path: ids(&[1, 2, 3, 4]),
            ..ControlMessage::new(MessageKind::Creq, id(1), id(4))
        };
        let silent = RoutingTable::new(id(3));
        assert!(silent.answer_creq(&creq).is_none());

        let mut cached = RoutingTable::new(id(3));
        cached.offer_route(ids(&[3, 4]), 1);
        let crep = cached.answer_creq(&creq).unwrap();
        assert_eq!(crep.kind, MessageKind::Crep);
        assert_eq!(crep.path, ids(&[1, 2, 3, 4]));
        assert_eq!(crep.target, id(1));

        let dest = RoutingTable::new(id(4));
        assert_eq!(dest.answer_creq(&creq).unwrap().path, ids(&[1, 2, 3, 4]));
    }

    #[test]
    fn data_plane_actions() {
        let mut t = RoutingTable::new(id(2));
        let to_me = ControlMessage::new(MessageKind::Data, id(1), id(2));
        assert_eq!(t.forward_data(&to_me), DataAction::Deliver);

        let mut m = ControlMessage::new(MessageKind::Data, id(1), id(5));
        m.path = vec![id(1)];
        assert_eq!(t.forward_data(&m), DataAction::DropNoRoute);
        t.offer_route(ids(&[2, 3, 5]), 1);
        assert_eq!(t.forward_data(&m), DataAction::Forward(id(3)));

        let routed = ControlMessage::data(ids(&[1, 2, 4, 5]), 7, 1);
        assert_eq!(t.forward_data(&routed), DataAction::Forward(id(4)));
    }

    fn claims(pairs: &[(u32, u32)]) -> LinkClaims {
        pairs.iter().map(|&(a, b)| LinkKey::new(id(a), id(b))).collect()
    }

    #[test]
    fn mpr_empty_two_hop() {
        let c = claims(&[(1, 2), (1, 3)]);
        let sel = select_mprs(&BTreeSet::from([id(2), id(3)]), &c, id(1));
        assert!(sel.relays.is_empty());
        assert!(sel.uncovered.is_empty());
    }

    #[test]
    fn mpr_figure_two() {
        // T=1, A=2, E=3, B=4, D=5
        let one_hop = BTreeSet::from([id(2), id(3)]);
        let honest = claims(&[(1, 2), (1, 3), (2, 4), (3, 5)]);
        assert_eq!(select_mprs(&one_hop, &honest, id(1)).relays, BTreeSet::from([id(2), id(3)]));
        let mut spoofed = honest.clone();
        spoofed.insert(LinkKey::new(id(2), id(5)));
        assert_eq!(select_mprs(&one_hop, &spoofed, id(1)).relays, BTreeSet::from([id(2)]));
    }

    #[test]
    fn mpr_reports_uncoverable_nodes() {
        // 1's claimed neighbor 2 reaches 3; but 1's real one-hop set is only {4}
        let c = claims(&[(1, 2), (2, 3), (1, 4)]);
        let sel = select_mprs(&BTreeSet::from([id(4)]), &c, id(1));
        assert!(sel.relays.is_empty());
        assert_eq!(sel.uncovered, BTreeSet::from([id(3)]));
    }

    #[test]
    fn mpr_pruning_removes_redundant_pick() {
        // 2 covers {11,12,13,14}, 3 covers {11,12,15}, 4 covers {13,14,16}.
        // Greedy takes 2, then 3 and 4; 2 is then redundant.
        let c = claims(&[
            (1, 2),
            (1, 3),
            (1, 4),
            (2, 11),
            (2, 12),
            (2, 13),
            (2, 14),
            (3, 11),
            (3, 12),
            (3, 15),
            (4, 13),
            (4, 14),
            (4, 16),
        ]);
        let one_hop = BTreeSet::from([id(2), id(3), id(4)]);
        let sel = select_mprs(&one_hop, &c, id(1));
        assert_eq!(sel.relays, BTreeSet::from([id(3), id(4)]));
        assert!(sel.uncovered.is_empty());
    }
}
