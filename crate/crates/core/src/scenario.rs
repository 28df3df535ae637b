//! Line-oriented scenario files.
//!
//! ```text
//! param <dotted.key> <value>
//! node <id> <x> <y> [speed]
//! link <id1> <id2> <capacity>
//! demand <g> <src> <dst> <bandwidth>
//! attacker <id> flooding <rate> <fake_dst> [spoof_id]
//! attacker <id> blackhole [delta]
//! attacker <id> misrelay <partner> drop|modify
//! attacker <id> linkspoof <target> <fake_neighbor>
//! failure <id1> <id2> <step>      # id1 == id2 fails the whole node
//! ```
//!
//! `#` starts a comment. Any `link` record switches the topology to
//! explicit adjacency. Records may appear in any order.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::adversary::{AttackKind, AttackProfile, RelayMode};
use crate::config::{DefenseConfig, Failure, FailureTarget, SimConfig, WeightSource};
use crate::error::{ScenarioError, ScenarioErrorKind};
use crate::gaopt::GaParams;
use crate::netmodel::{AdjacencyMode, Commodity, LinkKey, NodeId, NodeState, Point, Topology};

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub topology: Topology,
    pub commodities: Vec<Commodity>,
    pub attackers: Vec<AttackProfile>,
    pub defense: DefenseConfig,
    pub ga: GaParams,
    pub sim: SimConfig,
}

impl Scenario {
    pub fn attacker(&self, n: NodeId) -> Option<&AttackProfile> {
        self.attackers.iter().find(|a| a.node == n)
    }
}

struct Line<'a> {
    no: usize,
    toks: Vec<&'a str>,
}

impl<'a> Line<'a> {
    fn tok(&self, i: usize, what: &str) -> Result<&'a str, ScenarioError> {
        self.toks
            .get(i)
            .copied()
            .ok_or_else(|| ScenarioError::syntax(self.no, self.toks.join(" "), format!("missing {what}")))
    }

    fn num<T: FromStr>(&self, i: usize, what: &str) -> Result<T, ScenarioError> {
        let t = self.tok(i, what)?;
        t.parse()
            .map_err(|_| ScenarioError::syntax(self.no, t, format!("expected {what}")))
    }

    fn float(&self, i: usize, what: &str) -> Result<f64, ScenarioError> {
        let v: f64 = self.num(i, what)?;
        if !v.is_finite() {
            return Err(ScenarioError::syntax(self.no, self.toks[i], format!("{what} must be finite")));
        }
        Ok(v)
    }

    fn id(&self, i: usize) -> Result<NodeId, ScenarioError> {
        Ok(NodeId(self.num(i, "node id")?))
    }

    fn arity(&self, min: usize, max: usize) -> Result<(), ScenarioError> {
        let n = self.toks.len();
        if n < min || n > max {
            let want = if min == max {
                format!("{} fields", min - 1)
            } else {
                format!("{} to {} fields", min - 1, max - 1)
            };
            return Err(ScenarioError::syntax(self.no, self.toks.join(" "), format!("expected {want}")));
        }
        Ok(())
    }
}

fn parse_bool(no: usize, v: &str) -> Result<bool, ScenarioError> {
    match v {
        "on" | "true" | "1" | "yes" => Ok(true),
        "off" | "false" | "0" | "no" => Ok(false),
        _ => Err(ScenarioError::syntax(no, v, "expected on or off")),
    }
}

fn parse_num<T: FromStr>(no: usize, v: &str, what: &str) -> Result<T, ScenarioError> {
    v.parse()
        .map_err(|_| ScenarioError::syntax(no, v, format!("expected {what}")))
}

fn parse_f64(no: usize, v: &str) -> Result<f64, ScenarioError> {
    let x: f64 = parse_num(no, v, "a number")?;
    if !x.is_finite() {
        return Err(ScenarioError::syntax(no, v, "must be finite"));
    }
    Ok(x)
}

fn positive(no: usize, key: &str, x: f64) -> Result<f64, ScenarioError> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(ScenarioError::invalid(no, key, "must be positive"))
    }
}

fn at_least<T: PartialOrd + Copy>(no: usize, key: &str, x: T, min: T) -> Result<T, ScenarioError> {
    if x >= min {
        Ok(x)
    } else {
        Err(ScenarioError::invalid(no, key, "value too small"))
    }
}

#[derive(Default)]
struct Pending {
    range: Option<f64>,
    width: Option<f64>,
    height: Option<f64>,
    capacity: Option<f64>,
    ga_seed: bool,
    gps_missing: Vec<(usize, NodeId)>,
    last_ga_line: usize,
}

fn apply_param(
    l: &Line<'_>,
    sc: &mut Scenario,
    p: &mut Pending,
) -> Result<(), ScenarioError> {
    l.arity(3, 3)?;
    let no = l.no;
    let key = l.toks[1];
    let v = l.toks[2];
    let d = &mut sc.defense;
    let s = &mut sc.sim;
    let g = &mut sc.ga;
    if key.starts_with("ga.") {
        p.last_ga_line = no;
    }
    match key {
        "sim.steps" => s.steps = parse_num(no, v, "an integer")?,
        "sim.seed" => s.seed = parse_num(no, v, "an integer")?,
        "sim.range" => p.range = Some(positive(no, key, parse_f64(no, v)?)?),
        "sim.width" => p.width = Some(positive(no, key, parse_f64(no, v)?)?),
        "sim.height" => p.height = Some(positive(no, key, parse_f64(no, v)?)?),
        "sim.capacity" => p.capacity = Some(positive(no, key, parse_f64(no, v)?)?),
        "sim.data_rate" => {
            s.data_rate = parse_f64(no, v)?;
            if s.data_rate < 0.0 {
                return Err(ScenarioError::invalid(no, key, "must not be negative"));
            }
        }
        "sim.hello" => s.hello_interval = parse_num(no, v, "an integer")?,
        "sim.discovery_timeout" => {
            s.discovery_timeout = at_least(no, key, parse_num(no, v, "an integer")?, 1)?
        }
        "sim.weights" => {
            s.weights = match v {
                "unit" => WeightSource::Unit,
                "ga" => WeightSource::Optimized,
                _ => return Err(ScenarioError::syntax(no, v, "expected unit or ga")),
            }
        }
        "cluster.degree" => s.election.degree = parse_f64(no, v)?,
        "cluster.speed" => s.election.speed = parse_f64(no, v)?,
        "defense.enabled" => d.enabled = parse_bool(no, v)?,
        "defense.blacklist" => d.blacklist = parse_bool(no, v)?,
        "defense.confirm" => d.confirm = parse_bool(no, v)?,
        "defense.quorum" => d.quorum = parse_bool(no, v)?,
        "defense.ack" => d.ack = parse_bool(no, v)?,
        "defense.linkcheck" => d.linkcheck = parse_bool(no, v)?,
        "defense.flood.window" => d.flood_window = at_least(no, key, parse_num(no, v, "an integer")?, 1)?,
        "defense.flood.threshold" => d.flood_threshold = parse_num(no, v, "an integer")?,
        "defense.confirm.timeout" => {
            d.confirm_timeout = at_least(no, key, parse_num(no, v, "an integer")?, 1)?
        }
        "defense.quorum.min" => d.quorum_min = at_least(no, key, parse_num(no, v, "an integer")?, 2)?,
        "defense.quorum.wait" => d.quorum_wait = at_least(no, key, parse_num(no, v, "an integer")?, 1)?,
        "defense.ack.k" => d.ack_k = at_least(no, key, parse_num(no, v, "an integer")?, 1)?,
        "defense.gps.slack" => d.gps_slack = Some(at_least(no, key, parse_f64(no, v)?, 0.0)?),
        "defense.gps.staleness" => d.gps_staleness = Some(parse_num(no, v, "an integer")?),
        "defense.gps.missing" => {
            for t in v.split(',').filter(|t| !t.is_empty()) {
                p.gps_missing.push((no, NodeId(parse_num(no, t, "node id")?)));
            }
        }
        "ga.pop" => g.pop_size = parse_num(no, v, "an integer")?,
        "ga.max_weight" => g.max_weight = parse_num(no, v, "an integer")?,
        "ga.a" | "ga.alpha" => g.a = parse_f64(no, v)?,
        "ga.b" | "ga.beta" => g.b = parse_f64(no, v)?,
        "ga.c" => g.c = parse_f64(no, v)?,
        "ga.kc" => g.k_c = parse_f64(no, v)?,
        "ga.km" => g.k_m = parse_f64(no, v)?,
        "ga.generations" => g.generations = parse_num(no, v, "an integer")?,
        "ga.elite" => g.elite = parse_num(no, v, "an integer")?,
        "ga.stagnation" => g.stagnation = parse_num(no, v, "an integer")?,
        "ga.seed" => {
            g.seed = parse_num(no, v, "an integer")?;
            p.ga_seed = true;
        }
        _ => {
            return Err(ScenarioError {
                line: no,
                kind: ScenarioErrorKind::UnknownParam(key.to_string()),
            })
        }
    }
    Ok(())
}

fn net_err(no: usize, token: &str, e: crate::error::NetError) -> ScenarioError {
    use crate::error::NetError;
    match e {
        NetError::UnknownNode(_) => ScenarioError::dangling(no, token),
        other => ScenarioError::invalid(no, token, other.to_string()),
    }
}

/// Parse and validate scenario text.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = body.split_whitespace().collect();
        if !toks.is_empty() {
            lines.push(Line { no: i + 1, toks });
        }
    }

    let mut sc = Scenario {
        topology: Topology::new(250.0, AdjacencyMode::UnitDisk),
        commodities: Vec::new(),
        attackers: Vec::new(),
        defense: DefenseConfig::default(),
        ga: GaParams::default(),
        sim: SimConfig::default(),
    };
    let mut p = Pending::default();

    for l in &lines {
        match l.toks[0] {
            "param" => apply_param(l, &mut sc, &mut p)?,
            "node" | "link" | "demand" | "attacker" | "failure" => {}
            other => {
                return Err(ScenarioError {
                    line: l.no,
                    kind: ScenarioErrorKind::UnknownRecord(other.to_string()),
                })
            }
        }
    }
    if let Some(r) = p.range {
        sc.topology.radio_range = r;
    }
    if let Some(w) = p.width {
        sc.topology.bounds.width = w;
    }
    if let Some(h) = p.height {
        sc.topology.bounds.height = h;
    }
    if let Some(c) = p.capacity {
        sc.topology.default_capacity = c;
    }
    if !p.ga_seed {
        sc.ga.seed = sc.sim.seed;
    }
    if lines.iter().any(|l| l.toks[0] == "link") {
        sc.topology.mode = AdjacencyMode::Explicit;
    }

    for l in lines.iter().filter(|l| l.toks[0] == "node") {
        l.arity(4, 5)?;
        let id = l.id(1)?;
        let pos = Point::new(l.float(2, "x coordinate")?, l.float(3, "y coordinate")?);
        let speed = if l.toks.len() == 5 { l.float(4, "speed")? } else { 0.0 };
        sc.topology
            .add_node(NodeState::new(id, pos, speed))
            .map_err(|e| net_err(l.no, l.toks[1], e))?;
    }
    let exists = |l: &Line<'_>, i: usize, topo: &Topology| -> Result<NodeId, ScenarioError> {
        let id = l.id(i)?;
        if topo.contains(id) {
            Ok(id)
        } else {
            Err(ScenarioError::dangling(l.no, l.toks[i]))
        }
    };

    let mut clusters = BTreeSet::new();
    let mut attacked = BTreeSet::new();
    for l in &lines {
        let no = l.no;
        match l.toks[0] {
            "link" => {
                l.arity(4, 4)?;
                let a = exists(l, 1, &sc.topology)?;
                let b = exists(l, 2, &sc.topology)?;
                let cap = l.float(3, "capacity")?;
                sc.topology
                    .add_link(a, b, cap)
                    .map_err(|e| net_err(no, &l.toks[1..3].join(" "), e))?;
            }
            "demand" => {
                l.arity(5, 5)?;
                let cluster: u32 = l.num(1, "cluster id")?;
                let src = exists(l, 2, &sc.topology)?;
                let dst = exists(l, 3, &sc.topology)?;
                let demand = l.float(4, "bandwidth")?;
                if src == dst {
                    return Err(ScenarioError::invalid(no, l.toks[3], "source equals destination"));
                }
                if demand <= 0.0 {
                    return Err(ScenarioError::invalid(no, l.toks[4], "demand must be positive"));
                }
                if !clusters.insert(cluster) {
                    return Err(ScenarioError::invalid(no, l.toks[1], "duplicate cluster id"));
                }
                sc.commodities.push(Commodity {
                    cluster,
                    src,
                    dst,
                    demand,
                });
            }
            "attacker" => {
                let node = exists(l, 1, &sc.topology)?;
                if !attacked.insert(node) {
                    return Err(ScenarioError::invalid(no, l.toks[1], "node already has an attack profile"));
                }
                let kind = match l.tok(2, "attack kind")? {
                    "flooding" => {
                        l.arity(5, 6)?;
                        let rate = l.float(3, "rate")?;
                        if rate <= 0.0 {
                            return Err(ScenarioError::invalid(no, l.toks[3], "rate must be positive"));
                        }
                        let fake_dst = l.id(4)?;
                        if sc.topology.contains(fake_dst) {
                            return Err(ScenarioError::invalid(
                                no,
                                l.toks[4],
                                "fake destination must not exist",
                            ));
                        }
                        let spoof = if l.toks.len() == 6 {
                            Some(exists(l, 5, &sc.topology)?)
                        } else {
                            None
                        };
                        AttackKind::Flooding {
                            rate,
                            fake_dst,
                            spoof,
                        }
                    }
                    "blackhole" => {
                        l.arity(3, 4)?;
                        let delta = if l.toks.len() == 4 {
                            l.num(3, "sequence inflation")?
                        } else {
                            1
                        };
                        AttackKind::Blackhole { delta }
                    }
                    "misrelay" => {
                        l.arity(5, 5)?;
                        let partner = exists(l, 3, &sc.topology)?;
                        if partner == node {
                            return Err(ScenarioError::invalid(no, l.toks[3], "partner must differ from attacker"));
                        }
                        let mode = match l.toks[4] {
                            "drop" => RelayMode::Drop,
                            "modify" => RelayMode::Modify,
                            t => return Err(ScenarioError::syntax(no, t, "expected drop or modify")),
                        };
                        AttackKind::Misrelay { partner, mode }
                    }
                    "linkspoof" => {
                        l.arity(5, 5)?;
                        let target = exists(l, 3, &sc.topology)?;
                        let fake_neighbor = exists(l, 4, &sc.topology)?;
                        if fake_neighbor == node {
                            return Err(ScenarioError::invalid(no, l.toks[4], "fake neighbor must differ from attacker"));
                        }
                        AttackKind::LinkSpoof {
                            target,
                            fake_neighbor,
                        }
                    }
                    t => return Err(ScenarioError::syntax(no, t, "unknown attack kind")),
                };
                sc.attackers.push(AttackProfile { node, kind });
            }
            "failure" => {
                l.arity(4, 4)?;
                let a = exists(l, 1, &sc.topology)?;
                let b = exists(l, 2, &sc.topology)?;
                let step: u64 = l.num(3, "step")?;
                if step == 0 {
                    return Err(ScenarioError::invalid(no, l.toks[3], "steps start at 1"));
                }
                let target = if a == b {
                    FailureTarget::Node(a)
                } else {
                    let key = LinkKey::new(a, b);
                    if sc.topology.mode == AdjacencyMode::Explicit
                        && !sc.topology.declared_links().any(|s| s.key == key)
                    {
                        return Err(ScenarioError::invalid(no, l.toks[1..3].join(" "), "no such link"));
                    }
                    FailureTarget::Link(key)
                };
                sc.sim.failures.push(Failure { target, step });
            }
            _ => {}
        }
    }

    for (no, id) in p.gps_missing {
        if !sc.topology.contains(id) {
            return Err(ScenarioError::dangling(no, id.to_string()));
        }
        sc.defense.gps_missing.insert(id);
    }
    sc.ga.validate().map_err(|e| {
        ScenarioError::invalid(p.last_ga_line.max(1), "ga", e.to_string())
    })?;
    Ok(sc)
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

/// Canonical text form; `parse_scenario(&render(s)) == s` for parsed scenarios.
pub fn render(sc: &Scenario) -> String {
    let mut o = String::new();
    let t = &sc.topology;
    let s = &sc.sim;
    let d = &sc.defense;
    let g = &sc.ga;
    let mut param = |k: &str, v: String| {
        let _ = writeln!(o, "param {k} {v}");
    };
    param("sim.steps", s.steps.to_string());
    param("sim.seed", s.seed.to_string());
    param("sim.range", t.radio_range.to_string());
    param("sim.width", t.bounds.width.to_string());
    param("sim.height", t.bounds.height.to_string());
    param("sim.capacity", t.default_capacity.to_string());
    param("sim.data_rate", s.data_rate.to_string());
    param("sim.hello", s.hello_interval.to_string());
    param("sim.discovery_timeout", s.discovery_timeout.to_string());
    param(
        "sim.weights",
        match s.weights {
            WeightSource::Unit => "unit",
            WeightSource::Optimized => "ga",
        }
        .to_string(),
    );
    param("cluster.degree", s.election.degree.to_string());
    param("cluster.speed", s.election.speed.to_string());
    param("defense.enabled", on_off(d.enabled).to_string());
    param("defense.blacklist", on_off(d.blacklist).to_string());
    param("defense.confirm", on_off(d.confirm).to_string());
    param("defense.quorum", on_off(d.quorum).to_string());
    param("defense.ack", on_off(d.ack).to_string());
    param("defense.linkcheck", on_off(d.linkcheck).to_string());
    param("defense.flood.window", d.flood_window.to_string());
    param("defense.flood.threshold", d.flood_threshold.to_string());
    param("defense.confirm.timeout", d.confirm_timeout.to_string());
    param("defense.quorum.min", d.quorum_min.to_string());
    param("defense.quorum.wait", d.quorum_wait.to_string());
    param("defense.ack.k", d.ack_k.to_string());
    if let Some(x) = d.gps_slack {
        param("defense.gps.slack", x.to_string());
    }
    if let Some(x) = d.gps_staleness {
        param("defense.gps.staleness", x.to_string());
    }
    if !d.gps_missing.is_empty() {
        let ids: Vec<String> = d.gps_missing.iter().map(|n| n.to_string()).collect();
        param("defense.gps.missing", ids.join(","));
    }
    param("ga.pop", g.pop_size.to_string());
    param("ga.max_weight", g.max_weight.to_string());
    param("ga.a", g.a.to_string());
    param("ga.b", g.b.to_string());
    param("ga.c", g.c.to_string());
    param("ga.kc", g.k_c.to_string());
    param("ga.km", g.k_m.to_string());
    param("ga.generations", g.generations.to_string());
    param("ga.elite", g.elite.to_string());
    param("ga.stagnation", g.stagnation.to_string());
    param("ga.seed", g.seed.to_string());

    for n in t.nodes() {
        let _ = writeln!(o, "node {} {} {} {}", n.id, n.pos.x, n.pos.y, n.speed);
    }
    if t.mode == AdjacencyMode::Explicit {
        for l in t.declared_links() {
            let _ = writeln!(o, "link {} {} {}", l.key.lo(), l.key.hi(), l.capacity);
        }
    }
    for c in &sc.commodities {
        let _ = writeln!(o, "demand {} {} {} {}", c.cluster, c.src, c.dst, c.demand);
    }
    for a in &sc.attackers {
        let _ = match &a.kind {
            AttackKind::Flooding {
                rate,
                fake_dst,
                spoof,
            } => match spoof {
                Some(v) => writeln!(o, "attacker {} flooding {rate} {fake_dst} {v}", a.node),
                None => writeln!(o, "attacker {} flooding {rate} {fake_dst}", a.node),
            },
            AttackKind::Blackhole { delta } => writeln!(o, "attacker {} blackhole {delta}", a.node),
            AttackKind::Misrelay { partner, mode } => {
                writeln!(o, "attacker {} misrelay {partner} {mode}", a.node)
            }
            AttackKind::LinkSpoof {
                target,
                fake_neighbor,
            } => writeln!(o, "attacker {} linkspoof {target} {fake_neighbor}", a.node),
        };
    }
    for f in &s.failures {
        let _ = match f.target {
            FailureTarget::Link(k) => writeln!(o, "failure {} {} {}", k.lo(), k.hi(), f.step),
            FailureTarget::Node(n) => writeln!(o, "failure {n} {n} {}", f.step),
        };
    }
    o
}
