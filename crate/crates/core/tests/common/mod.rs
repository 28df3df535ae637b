//! Test-side oracles that share no code with the library's search routines.

#![allow(dead_code)]

use std::path::PathBuf;

use manetga::gaopt::GaParams;
use manetga::netmodel::{Commodity, LinkSpec, NodeId};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

pub fn load(name: &str) -> manetga::Scenario {
    let text = std::fs::read_to_string(scenario_path(name)).expect("scenario file");
    manetga::parse_scenario(&text).expect("valid scenario")
}

/// Every simple path from `src` to `dst`, as (cost, hops, nodes).
fn all_paths(links: &[LinkSpec], w: &[u32], src: NodeId, dst: NodeId) -> Vec<(u64, usize, Vec<NodeId>)> {
    fn dfs(
        links: &[LinkSpec],
        w: &[u32],
        dst: NodeId,
        path: &mut Vec<NodeId>,
        cost: u64,
        out: &mut Vec<(u64, usize, Vec<NodeId>)>,
    ) {
        let u = *path.last().unwrap();
        if u == dst {
            out.push((cost, path.len() - 1, path.clone()));
            return;
        }
        for (i, l) in links.iter().enumerate() {
            let Some(v) = l.key.other(u) else { continue };
            if path.contains(&v) {
                continue;
            }
            path.push(v);
            dfs(links, w, dst, path, cost + u64::from(w[i]), out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    dfs(links, w, dst, &mut vec![src], 0, &mut out);
    out
}

/// Cheapest path, then fewest hops, then lexicographically smallest.
pub fn oracle_path(links: &[LinkSpec], w: &[u32], src: NodeId, dst: NodeId) -> Option<Vec<NodeId>> {
    all_paths(links, w, src, dst).into_iter().min().map(|p| p.2)
}

/// (L1, L2, fitness) by brute force. `links` must be in canonical order.
pub fn oracle_fitness(links: &[LinkSpec], w: &[u32], demands: &[Commodity], p: &GaParams) -> (f64, f64, f64) {
    let mut load = vec![0.0; links.len()];
    let mut routable = true;
    for c in demands {
        match oracle_path(links, w, c.src, c.dst) {
            Some(path) => {
                for hop in path.windows(2) {
                    let i = links
                        .iter()
                        .position(|l| l.key.contains(hop[0]) && l.key.contains(hop[1]))
                        .unwrap();
                    load[i] += c.demand;
                }
            }
            None => routable = false,
        }
    }
    let l1: f64 = load.iter().sum();
    let l2: f64 = load
        .iter()
        .zip(links)
        .map(|(x, l)| (x - l.capacity).max(0.0))
        .sum();
    let fit = if routable {
        p.c / (p.a * l1 + p.b * l2).max(1e-9)
    } else {
        0.0
    };
    (l1, l2, fit)
}

/// Best fitness over every weight vector in [1, max_weight]^n.
pub fn exhaustive_best(links: &[LinkSpec], demands: &[Commodity], p: &GaParams) -> f64 {
    let n = links.len();
    let m = p.max_weight as usize;
    let mut best = 0.0f64;
    for code in 0..m.pow(n as u32) {
        let mut c = code;
        let w: Vec<u32> = (0..n)
            .map(|_| {
                let d = (c % m) as u32 + 1;
                c /= m;
                d
            })
            .collect();
        best = best.max(oracle_fitness(links, &w, demands, p).2);
    }
    best
}

pub fn link(a: u32, b: u32, cap: f64) -> LinkSpec {
    LinkSpec {
        key: manetga::netmodel::LinkKey::new(NodeId(a), NodeId(b)),
        capacity: cap,
        up: true,
    }
}

pub fn demand(g: u32, s: u32, d: u32, bw: f64) -> Commodity {
    Commodity {
        cluster: g,
        src: NodeId(s),
        dst: NodeId(d),
        demand: bw,
    }
}
