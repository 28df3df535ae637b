//! Attacker behaviors that replace honest node logic.

use std::fmt;

use crate::netmodel::{LinkClaims, LinkKey, NodeId};
use crate::routing::{ControlMessage, MessageKind, PositionStamp};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum RelayMode {
    Drop,
    Modify,
}

impl fmt::Display for RelayMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RelayMode::Drop => "drop",
            RelayMode::Modify => "modify",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AttackKind {
    /// Mass RREQs toward a destination that does not exist.
    Flooding {
        rate: f64,
        fake_dst: NodeId,
        spoof: Option<NodeId>,
    },
    /// Answer every RREQ with an inflated sequence number, then drop DATA.
    Blackhole { delta: u64 },
    /// Forward honestly unless the packet comes from `partner`.
    Misrelay { partner: NodeId, mode: RelayMode },
    /// Advertise a link to `fake_neighbor` in order to capture `target`'s relay choice.
    LinkSpoof {
        target: NodeId,
        fake_neighbor: NodeId,
    },
}

/// Attack family, used to pair attackers with the detectors meant to catch them.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttackClass {
    Flooding,
    Blackhole,
    Misrelay,
    LinkSpoof,
}

impl AttackClass {
    pub fn label(self) -> &'static str {
        match self {
            AttackClass::Flooding => "flooding",
            AttackClass::Blackhole => "blackhole",
            AttackClass::Misrelay => "misrelay",
            AttackClass::LinkSpoof => "linkspoof",
        }
    }
}

impl AttackKind {
    pub fn class(&self) -> AttackClass {
        match self {
            AttackKind::Flooding { .. } => AttackClass::Flooding,
            AttackKind::Blackhole { .. } => AttackClass::Blackhole,
            AttackKind::Misrelay { .. } => AttackClass::Misrelay,
            AttackKind::LinkSpoof { .. } => AttackClass::LinkSpoof,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttackProfile {
    pub node: NodeId,
    pub kind: AttackKind,
}

/// Spoofed broadcast ids start here so they never collide with the
/// impersonated node's own discoveries.
const SPOOF_BID_BASE: u64 = 1 << 32;

/// Flooding attacker with its emission bookkeeping.
#[derive(Clone, Debug)]
pub struct Flooder {
    pub node: NodeId,
    pub rate: f64,
    pub fake_dst: NodeId,
    pub spoof: Option<NodeId>,
    emitted: u64,
    next_bid: u64,
}

impl Flooder {
    /// Returns `None` unless the profile is a flooding one.
    pub fn from_profile(p: &AttackProfile) -> Option<Self> {
        match p.kind {
            AttackKind::Flooding {
                rate,
                fake_dst,
                spoof,
            } => Some(Flooder {
                node: p.node,
                rate,
                fake_dst,
                spoof,
                emitted: 0,
                next_bid: SPOOF_BID_BASE,
            }),
            _ => None,
        }
    }

    /// RREQs for step `clock` (1-based). Emits `floor(rate * clock)` in
    /// total by the end of step `clock`, so fractional rates spread evenly.
    pub fn act_flooding(&mut self, clock: u64) -> Vec<ControlMessage> {
        let due = (self.rate * clock as f64).floor() as u64;
        let n = due.saturating_sub(self.emitted);
        self.emitted += n;
        let origin = self.spoof.unwrap_or(self.node);
        (0..n)
            .map(|_| {
                self.next_bid += 1;
                ControlMessage {
                    broadcast_id: self.next_bid,
                    sender: self.node,
                    ..ControlMessage::new(MessageKind::Rreq, origin, self.fake_dst)
                }
            })
            .collect()
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }
}

/// Forged reply claiming to sit one hop from the requested destination.
pub fn act_blackhole(attacker: NodeId, delta: u64, rreq: &ControlMessage) -> ControlMessage {
    debug_assert_eq!(rreq.kind, MessageKind::Rreq);
    let mut path = vec![rreq.target, attacker];
    path.extend(rreq.path.iter().rev().copied());
    ControlMessage {
        broadcast_id: rreq.broadcast_id,
        dst_seq: rreq.dst_seq + delta,
        hop_count: 1,
        path,
        replier: Some(attacker),
        sender: attacker,
        ..ControlMessage::new(MessageKind::Rrep, rreq.target, rreq.origin)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RelayAction {
    ForwardUnmodified,
    Drop,
    /// Forward this corrupted copy instead.
    Modify(ControlMessage),
}

/// Colluding relay decision, keyed on the previous hop of `m`.
pub fn act_misrelay(partner: NodeId, mode: RelayMode, m: &ControlMessage) -> RelayAction {
    if m.sender != partner {
        return RelayAction::ForwardUnmodified;
    }
    match mode {
        RelayMode::Drop => RelayAction::Drop,
        RelayMode::Modify => {
            let mut bad = m.clone();
            bad.dst_seq = 0;
            RelayAction::Modify(bad)
        }
    }
}

/// Link advertisement with one fabricated link added to the true ones.
pub fn act_linkspoof(
    attacker: NodeId,
    fake_neighbor: NodeId,
    true_links: &LinkClaims,
    broadcast_id: u64,
    stamp: Option<PositionStamp>,
) -> ControlMessage {
    let mut claimed_links = true_links.clone();
    claimed_links.insert(LinkKey::new(attacker, fake_neighbor));
    ControlMessage {
        broadcast_id,
        claimed_links,
        position: stamp,
        ..ControlMessage::new(MessageKind::LinkAdv, attacker, attacker)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::Point;
    use crate::routing::{RoutingTable, RrepVerdict};
    use std::collections::BTreeSet;

    fn id(n: u32) -> NodeId {
        NodeId(n)
    }

    fn flooder(rate: f64, spoof: Option<u32>) -> Flooder {
        Flooder::from_profile(&AttackProfile {
            node: id(9),
            kind: AttackKind::Flooding {
                rate,
                fake_dst: id(99),
                spoof: spoof.map(NodeId),
            },
        })
        .unwrap()
    }

    #[test]
    fn flooding_full_rate() {
        let mut f = flooder(20.0, None);
        let burst = f.act_flooding(1);
        assert_eq!(burst.len(), 20);
        assert!(burst.iter().all(|m| m.target == id(99) && m.origin == id(9)));
        let bids: BTreeSet<u64> = burst.iter().map(|m| m.broadcast_id).collect();
        assert_eq!(bids.len(), 20);
    }

    #[test]
    fn flooding_fractional_rate() {
        let mut f = flooder(0.5, None);
        let counts: Vec<usize> = (1..=6).map(|t| f.act_flooding(t).len()).collect();
        assert_eq!(counts, vec![0, 1, 0, 1, 0, 1]);
    }

    #[test]
    fn flooding_spoofs_origin() {
        let mut f = flooder(3.0, Some(4));
        assert!(f.act_flooding(1).iter().all(|m| m.origin == id(4) && m.sender == id(9)));
    }

    #[test]
    fn non_flooding_profile_has_no_flooder() {
        let p = AttackProfile {
            node: id(1),
            kind: AttackKind::Blackhole { delta: 1 },
        };
        assert!(Flooder::from_profile(&p).is_none());
    }

    fn rreq_from(origin: u32, target: u32, dst_seq: u64) -> ControlMessage {
        ControlMessage {
            broadcast_id: 1,
            dst_seq,
            ..ControlMessage::new(MessageKind::Rreq, id(origin), id(target))
        }
    }

    #[test]
    fn blackhole_inflates_sequence() {
        let rep = act_blackhole(id(2), 3, &rreq_from(1, 4, 7));
        assert_eq!(rep.dst_seq, 10);
        assert_eq!(rep.hop_count, 1);
        assert_eq!(rep.path, vec![id(4), id(2), id(1)]);
        assert_eq!(rep.replier, Some(id(2)));
        let zero = act_blackhole(id(2), 0, &rreq_from(1, 4, 7));
        assert_eq!(zero.dst_seq, 7);
    }

    #[test]
    fn blackhole_reply_beats_honest_longer_route() {
        // S=1 hears the forged reply (1 claimed hop + 1) and an honest 3-hop reply
        let forged = {
            let mut m = act_blackhole(id(2), 1, &rreq_from(1, 4, 0));
            m.hop_count += 1;
            m
        };
        let honest = ControlMessage {
            dst_seq: 0,
            hop_count: 3,
            path: vec![id(4), id(6), id(5), id(1)],
            ..ControlMessage::new(MessageKind::Rrep, id(4), id(1))
        };
        let mut s = RoutingTable::new(id(1));
        assert_eq!(s.handle_rrep(&forged), RrepVerdict::Accepted);
        assert_eq!(s.handle_rrep(&honest), RrepVerdict::Rejected);
        assert_eq!(s.routes[&id(4)].next_hop, id(2));
    }

    #[test]
    fn misrelay_only_touches_partner_traffic() {
        let mut m = ControlMessage::data(vec![id(1), id(2), id(3), id(4)], 5, 11);
        m.sender = id(1);
        assert_eq!(act_misrelay(id(2), RelayMode::Drop, &m), RelayAction::ForwardUnmodified);
        m.sender = id(2);
        assert_eq!(act_misrelay(id(2), RelayMode::Drop, &m), RelayAction::Drop);
        match act_misrelay(id(2), RelayMode::Modify, &m) {
            RelayAction::Modify(bad) => {
                assert_eq!(bad.dst_seq, 0);
                assert_eq!(bad.payload_id, 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn linkspoof_adds_fake_link() {
        let truth: LinkClaims = [LinkKey::new(id(2), id(1)), LinkKey::new(id(2), id(4))]
            .into_iter()
            .collect();
        let stamp = PositionStamp {
            pos: Point::new(1.0, 2.0),
            timestamp: 3,
        };
        let adv = act_linkspoof(id(2), id(5), &truth, 1, Some(stamp));
        assert_eq!(adv.kind, MessageKind::LinkAdv);
        assert_eq!(adv.claimed_links.len(), 3);
        assert!(adv.claimed_links.contains(&LinkKey::new(id(2), id(5))));
        assert!(truth.is_subset(&adv.claimed_links));
        assert_eq!(adv.position, Some(stamp));
    }
}
