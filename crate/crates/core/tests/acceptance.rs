//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always appear in
//! `cargo test` output. Exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{demand, exhaustive_best, link, load, oracle_fitness};
use manetga::engine::{run, EventKind, RejectReason};
use manetga::gaopt::{evaluate, evolve, Chromosome, GaParams, LinkGraph};
use manetga::netmodel::{LinkClaims, LinkKey, NodeId, Point};
use manetga::report::{steps_csv, summary_csv};
use manetga::routing::{select_mprs, PositionStamp};
use manetga::sentinel::{Detector, LinkVerdict, PositionTable};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn id(n: u32) -> NodeId {
    NodeId(n)
}

/// Square 1-2-4 / 1-3-4, capacities 10, two 6-unit demands 1 -> 4.
fn c1_fitness_oracle() -> Outcome {
    let links = vec![link(1, 2, 10.0), link(1, 3, 10.0), link(2, 4, 10.0), link(3, 4, 10.0)];
    let demands = vec![demand(1, 1, 4, 6.0), demand(2, 1, 4, 6.0)];
    let params = GaParams::default();
    let graph = LinkGraph::new(links.clone());
    let unit = Chromosome::uniform(4, 1);

    let (ol1, ol2, ofit) = oracle_fitness(graph.links(), &unit.weights, &demands, &params);
    check(ol1 == 24.0 && ol2 == 4.0, format!("oracle disagrees with hand values: {ol1} {ol2}"))?;

    let start = Instant::now();
    let b = evaluate(&graph, &unit, &demands, &params).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    check(b.l1 == 24.0, format!("L1 = {}", b.l1))?;
    check(b.l2 == 4.0, format!("L2 = {}", b.l2))?;
    check((b.fitness - 1.0 / 28.0).abs() <= 1e-12, format!("fitness = {}", b.fitness))?;
    check((b.fitness - ofit).abs() <= 1e-12, "fitness differs from oracle")?;
    check(took < Duration::from_millis(1), format!("took {took:?}"))?;
    Ok(format!("L1=24 L2=4 fitness=1/28 in {took:?}"))
}

/// Five links, weights in [1,3]: GA against brute force over all 243 vectors.
fn c2_ga_vs_exhaustive() -> Outcome {
    let links = vec![
        link(1, 2, 10.0),
        link(1, 3, 10.0),
        link(2, 3, 4.0),
        link(2, 4, 10.0),
        link(3, 4, 10.0),
    ];
    let demands = vec![demand(1, 1, 4, 6.0), demand(2, 1, 4, 5.0), demand(3, 2, 3, 5.0)];
    let graph = LinkGraph::new(links);
    let base = GaParams {
        pop_size: 100,
        max_weight: 3,
        generations: 30,
        elite: 1,
        stagnation: 0,
        ..GaParams::default()
    };
    let start = Instant::now();
    let optimum = exhaustive_best(graph.links(), &demands, &base);
    check(optimum > 0.0, "oracle found no routable vector")?;
    let mut hits = 0;
    for seed in 0..100 {
        let p = GaParams { seed, ..base.clone() };
        let evo = evolve(&graph, &demands, &p).map_err(|e| e.to_string())?;
        if (evo.best_breakdown.fitness - optimum).abs() <= 1e-12 {
            hits += 1;
        }
    }
    let took = start.elapsed();
    check(hits >= 95, format!("{hits}/100 seeds reached the optimum {optimum}"))?;
    check(took < Duration::from_secs(10), format!("took {took:?}"))?;
    Ok(format!("{hits}/100 seeds reach optimum {optimum:.6} in {took:.2?}"))
}

/// 12-node ring with random chords and capacities.
fn random_graph(seed: u64) -> (LinkGraph, Vec<manetga::netmodel::Commodity>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut links = Vec::new();
    let mut seen = BTreeSet::new();
    for i in 1..=12u32 {
        let j = i % 12 + 1;
        seen.insert(LinkKey::new(id(i), id(j)));
        links.push(link(i, j, rng.gen_range(5.0..15.0)));
    }
    while links.len() < 20 {
        let (a, b) = (rng.gen_range(1..=12u32), rng.gen_range(1..=12u32));
        if a != b && seen.insert(LinkKey::new(id(a), id(b))) {
            links.push(link(a, b, rng.gen_range(5.0..15.0)));
        }
    }
    let demands = (0..5u32)
        .map(|g| {
            let s = rng.gen_range(1..=12u32);
            let d = (s + rng.gen_range(1..=11u32) - 1) % 12 + 1;
            demand(g + 1, s, d, rng.gen_range(1.0..8.0))
        })
        .collect();
    (LinkGraph::new(links), demands)
}

fn c3_elitism_monotone() -> Outcome {
    let (graph, demands) = random_graph(12);
    let mut total_gens = 0;
    for seed in 0..20 {
        let p = GaParams {
            seed,
            generations: 60,
            ..GaParams::default()
        };
        let evo = evolve(&graph, &demands, &p).map_err(|e| e.to_string())?;
        total_gens += evo.history.len();
        for w in evo.history.windows(2) {
            check(
                w[1].best_fitness >= w[0].best_fitness,
                format!("seed {seed}: best fell at generation {}", w[1].generation),
            )?;
        }
    }
    Ok(format!("20 seeds, {total_gens} generations, best never decreased"))
}

fn c4_blackhole() -> Outcome {
    let mut sc = load("blackhole.scn");
    let off = run(&sc).map_err(|e| e.to_string())?;
    let off_ratio = off.report.flows[0].delivery_ratio();
    check(off_ratio == 0.0, format!("defenses off: ratio {off_ratio}"))?;
    check(off.report.flows[0].dropped > 0, "defenses off: nothing resolved")?;

    sc.defense.enabled = true;
    for d in Detector::ALL {
        let on = d == Detector::Quorum;
        match d {
            Detector::Blacklist => sc.defense.blacklist = on,
            Detector::Confirm => sc.defense.confirm = on,
            Detector::Quorum => sc.defense.quorum = on,
            Detector::Ack => sc.defense.ack = on,
            Detector::LinkCheck => sc.defense.linkcheck = on,
        }
    }
    let on = run(&sc).map_err(|e| e.to_string())?;
    let fake = vec![id(1), id(2), id(5)];
    let rejected = on.log.events.iter().any(|e| {
        matches!(&e.kind, EventKind::RouteRejected { path, reason: RejectReason::Unsafe, .. } if *path == fake)
    });
    check(rejected, "fake route was not rejected as unsafe")?;
    let on_ratio = on.report.flows[0].delivery_ratio();
    check(on_ratio == 1.0, format!("quorum on: ratio {on_ratio}"))?;
    let q = on.report.detector(Detector::Quorum);
    check(q.tp == 1 && q.fp == 0, format!("quorum tp/fp {}/{}", q.tp, q.fp))?;
    Ok(format!("ratio {off_ratio:.1} off, {on_ratio:.1} with quorum; fake route rejected as unsafe"))
}

fn c5_flooding() -> Outcome {
    let fast = run(&load("flooding.scn")).map_err(|e| e.to_string())?;
    let first = fast.log.events.iter().find_map(|e| match e.kind {
        EventKind::Accusation {
            detector: Detector::Blacklist,
            ..
        } => Some(e.step),
        _ => None,
    });
    let b = fast.report.detector(Detector::Blacklist);
    check(fast.report.blacklist_events >= 1 && b.tp == 1, format!("2x: events {} tp {}", fast.report.blacklist_events, b.tp))?;
    check(first.is_some_and(|s| s <= 10), format!("2x: first blacklisting at {first:?}"))?;

    let slow = run(&load("flooding_slow.scn")).map_err(|e| e.to_string())?;
    check(slow.report.blacklist_events == 0, format!("0.5x: events {}", slow.report.blacklist_events))?;

    let spoof = run(&load("flooding_spoof.scn")).map_err(|e| e.to_string())?;
    let s = spoof.report.detector(Detector::Blacklist);
    check(s.fp == 1, format!("spoofed: fp {}", s.fp))?;
    Ok(format!(
        "2x blacklisted at step {} (tp=1), 0.5x never, spoofed victim fp=1",
        first.unwrap_or(0)
    ))
}

fn c6_linkspoof() -> Outcome {
    let (t, a, e, b, d) = (id(1), id(2), id(3), id(4), id(5));
    let one_hop: BTreeSet<NodeId> = [a, e].into();
    let mut claims: LinkClaims = [
        LinkKey::new(t, a),
        LinkKey::new(t, e),
        LinkKey::new(a, b),
        LinkKey::new(e, d),
    ]
    .into();
    let pre = select_mprs(&one_hop, &claims, t).relays;
    check(pre == [a, e].into(), format!("pre-attack MPRs {pre:?}"))?;
    claims.insert(LinkKey::new(a, d));
    let post = select_mprs(&one_hop, &claims, t).relays;
    check(post == [a].into(), format!("post-attack MPRs {post:?}"))?;

    let mut table = PositionTable::new(250.0, 0.0);
    for (n, x, y) in [(a, 150.0, 0.0), (d, 150.0, 300.0)] {
        table.update(n, PositionStamp { pos: Point::new(x, y), timestamp: 0 });
    }
    check(table.verify_link_claim(LinkKey::new(a, d)) == LinkVerdict::Flagged, "300 m claim not flagged")?;

    let res = run(&load("linkspoof.scn")).map_err(|e| e.to_string())?;
    let c = res.report.detector(Detector::LinkCheck);
    check(c.tp == 1 && c.fp == 0, format!("engine linkcheck tp/fp {}/{}", c.tp, c.fp))?;
    Ok("MPR {A,E} -> {A}; 300 m claim flagged; tp=1 fp=0".into())
}

fn c7_misrelay() -> Outcome {
    let single = run(&load("misrelay_single.scn")).map_err(|e| e.to_string())?;
    let s = single.report.detector(Detector::Ack);
    check(s.tp == 1, format!("single dropper: tp {}", s.tp))?;
    let pair = run(&load("misrelay_pair.scn")).map_err(|e| e.to_string())?;
    let p = pair.report.detector(Detector::Ack);
    check(p.fn_ == 1 && p.tp == 0, format!("pair: tp {} fn {}", p.tp, p.fn_))?;
    Ok("single dropper suspected (tp=1); colluding pair missed (fn=1)".into())
}

fn c8_failover() -> Outcome {
    let mut sc = load("square_failover.scn");
    let with_failure = run(&sc).map_err(|e| e.to_string())?;
    sc.sim.failures.clear();
    let clean = run(&sc).map_err(|e| e.to_string())?;
    let rerouted = with_failure.log.events.iter().any(|e| {
        matches!(&e.kind, EventKind::Failover { path, .. } if *path == vec![id(1), id(3), id(4)])
    });
    check(rerouted, "no failover onto [1,3,4]")?;
    let (a, b) = (with_failure.report.route_discoveries, clean.report.route_discoveries);
    check(a == b, format!("discoveries {a} with failure vs {b} without"))?;
    let ratio = with_failure.report.delivery_ratio();
    check(ratio >= 0.9, format!("ratio {ratio}"))?;
    Ok(format!("rerouted onto [1,3,4], {a} discovery, ratio {ratio:.3}"))
}

fn c9_determinism() -> Outcome {
    let names = [
        "blackhole.scn",
        "flooding.scn",
        "flooding_slow.scn",
        "flooding_spoof.scn",
        "linkspoof.scn",
        "misrelay_single.scn",
        "misrelay_pair.scn",
        "square_failover.scn",
        "mobile.scn",
    ];
    for name in names {
        for defense in [false, true] {
            let mut sc = load(name);
            sc.defense.enabled = defense;
            let x = run(&sc).map_err(|e| e.to_string())?;
            let y = run(&sc).map_err(|e| e.to_string())?;
            check(
                summary_csv(&x.report) == summary_csv(&y.report)
                    && steps_csv(&x.report) == steps_csv(&y.report),
                format!("{name} (defense {defense}) differs between runs"),
            )?;
        }
    }
    Ok(format!("{} scenario runs repeated byte-identically", names.len() * 2))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("fitness oracle equivalence", c1_fitness_oracle),
        ("GA vs exhaustive search", c2_ga_vs_exhaustive),
        ("elitism monotonicity", c3_elitism_monotone),
        ("blackhole scenario", c4_blackhole),
        ("flooding thresholds", c5_flooding),
        ("link spoofing", c6_linkspoof),
        ("colluding misrelay", c7_misrelay),
        ("backup failover", c8_failover),
        ("determinism", c9_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
