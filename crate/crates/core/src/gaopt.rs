//! Genetic optimization of integer link weights.
//!
//! A chromosome assigns a weight in `[1, max_weight]` to every link in
//! canonical order. Each commodity is routed on its minimum-weight path; the
//! fitness penalizes total carried load (`l1`) and the excess over capacity on
//! overloaded links (`l2`):
//!
//! ```text
//! fitness = c / max(a * l1 + b * l2, 1e-9)
//! ```
//!
//! Parents for each child are drawn one from the upper and one from the lower
//! half of the fitness-ranked population.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::GaError;
use crate::netmodel::{Commodity, LinkKey, LinkSpec, NodeId, Topology};

pub const FITNESS_EPSILON: f64 = 1e-9;

/// Links usable for routing, in canonical `(min id, max id)` order.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkGraph {
    links: Vec<LinkSpec>,
    index: BTreeMap<LinkKey, usize>,
    adjacency: BTreeMap<NodeId, Vec<(NodeId, usize)>>,
}

impl LinkGraph {
    pub fn new(mut links: Vec<LinkSpec>) -> Self {
        links.sort_by_key(|l| l.key);
        links.dedup_by_key(|l| l.key);
        let index = links.iter().enumerate().map(|(i, l)| (l.key, i)).collect();
        let mut adjacency: BTreeMap<NodeId, Vec<(NodeId, usize)>> = BTreeMap::new();
        for (i, l) in links.iter().enumerate() {
            adjacency.entry(l.key.lo()).or_default().push((l.key.hi(), i));
            adjacency.entry(l.key.hi()).or_default().push((l.key.lo(), i));
        }
        for v in adjacency.values_mut() {
            v.sort();
        }
        LinkGraph {
            links,
            index,
            adjacency,
        }
    }

    pub fn from_topology(topo: &Topology) -> Self {
        LinkGraph::new(topo.active_links())
    }

    pub fn links(&self) -> &[LinkSpec] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn link_index(&self, key: LinkKey) -> Option<usize> {
        self.index.get(&key).copied()
    }

    /// Link indices traversed by `path`; `None` if a hop is not a link.
    pub fn path_links(&self, path: &[NodeId]) -> Option<Vec<usize>> {
        path.windows(2)
            .map(|w| self.link_index(LinkKey::new(w[0], w[1])))
            .collect()
    }

    /// Minimum-weight path from `src` to `dst` avoiding `excluded` links.
    ///
    /// Ties go to fewer hops, then to the lexicographically smallest node
    /// sequence. The whole label `(cost, hops, path)` is ordered, and
    /// extending two paths to the same node by the same link preserves their
    /// order, so settling labels in heap order yields the optimum.
    pub fn shortest_path(
        &self,
        weights: &[u32],
        src: NodeId,
        dst: NodeId,
        excluded: &BTreeSet<usize>,
    ) -> Option<Vec<NodeId>> {
        if src == dst {
            return Some(vec![src]);
        }
        type Label = (u64, usize, Vec<NodeId>);
        let mut best: BTreeMap<NodeId, Label> = BTreeMap::new();
        let mut settled: BTreeSet<NodeId> = BTreeSet::new();
        let mut heap: BinaryHeap<Reverse<Label>> = BinaryHeap::new();
        heap.push(Reverse((0, 0, vec![src])));
        while let Some(Reverse((cost, hops, path))) = heap.pop() {
            let u = *path.last().unwrap();
            if !settled.insert(u) {
                continue;
            }
            if u == dst {
                return Some(path);
            }
            for &(v, li) in self.adjacency.get(&u).map_or(&[][..], Vec::as_slice) {
                if excluded.contains(&li) || settled.contains(&v) {
                    continue;
                }
                let mut next = path.clone();
                next.push(v);
                let label = (cost + u64::from(weights[li]), hops + 1, next);
                if best.get(&v).is_none_or(|cur| label < *cur) {
                    best.insert(v, label.clone());
                    heap.push(Reverse(label));
                }
            }
        }
        None
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Chromosome {
    pub weights: Vec<u32>,
}

impl Chromosome {
    pub fn uniform(n: usize, w: u32) -> Self {
        Chromosome {
            weights: vec![w; n],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn in_range(&self, max_weight: u32) -> bool {
        self.weights.iter().all(|&w| (1..=max_weight).contains(&w))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaParams {
    pub pop_size: usize,
    pub max_weight: u32,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Per-gene probability of inheriting from the lower-class parent.
    pub k_c: f64,
    /// Per-gene mutation probability.
    pub k_m: f64,
    pub generations: usize,
    pub elite: usize,
    /// Stop after this many generations without a new best; 0 disables.
    pub stagnation: usize,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            pop_size: 100,
            max_weight: 64,
            a: 1.0,
            b: 1.0,
            c: 1.0,
            k_c: 0.05,
            k_m: 0.05,
            generations: 200,
            elite: 1,
            stagnation: 50,
            seed: 1,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<(), GaError> {
        let bad = |m: &str| Err(GaError::Params(m.to_string()));
        if self.pop_size < 2 || !self.pop_size.is_multiple_of(2) {
            return bad("population size must be even and at least 2");
        }
        if self.elite < 1 || self.elite >= self.pop_size {
            return bad("elite count must be in [1, population size)");
        }
        if self.max_weight < 1 {
            return bad("max weight must be at least 1");
        }
        if !(self.a >= 0.0 && self.b >= 0.0 && self.a + self.b > 0.0) {
            return bad("load coefficients must be non-negative and not both zero");
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad("fitness numerator must be positive");
        }
        for (name, p) in [("crossover", self.k_c), ("mutation", self.k_m)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(GaError::Params(format!("{name} probability must be in [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitnessBreakdown {
    /// Total routed load over all links.
    pub l1: f64,
    /// Total excess over capacity on overloaded links.
    pub l2: f64,
    pub overloaded_links: BTreeSet<LinkKey>,
    pub unroutable: usize,
    pub fitness: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoutingOutcome {
    /// Per commodity, in input order. `None` when unroutable.
    pub primary: Vec<Option<Vec<NodeId>>>,
    pub backup: Vec<Option<Vec<NodeId>>>,
    /// Per link, canonical order.
    pub load: Vec<f64>,
}

pub fn init_population<R: Rng + ?Sized>(
    params: &GaParams,
    n: usize,
    rng: &mut R,
) -> Vec<Chromosome> {
    (0..params.pop_size)
        .map(|_| Chromosome {
            weights: (0..n).map(|_| rng.gen_range(1..=params.max_weight)).collect(),
        })
        .collect()
}

fn check_len(graph: &LinkGraph, chrom: &Chromosome) -> Result<(), GaError> {
    if chrom.len() != graph.len() {
        return Err(GaError::WrongLength {
            expected: graph.len(),
            got: chrom.len(),
        });
    }
    Ok(())
}

pub fn route_demands(
    graph: &LinkGraph,
    chrom: &Chromosome,
    commodities: &[Commodity],
) -> Result<RoutingOutcome, GaError> {
    check_len(graph, chrom)?;
    let mut load = vec![0.0; graph.len()];
    let none = BTreeSet::new();
    let primary: Vec<Option<Vec<NodeId>>> = commodities
        .iter()
        .map(|c| {
            let path = graph.shortest_path(&chrom.weights, c.src, c.dst, &none)?;
            for li in graph.path_links(&path).expect("path uses graph links") {
                load[li] += c.demand;
            }
            Some(path)
        })
        .collect();
    Ok(RoutingOutcome {
        backup: vec![None; primary.len()],
        primary,
        load,
    })
}

pub fn evaluate(
    graph: &LinkGraph,
    chrom: &Chromosome,
    commodities: &[Commodity],
    params: &GaParams,
) -> Result<FitnessBreakdown, GaError> {
    let outcome = route_demands(graph, chrom, commodities)?;
    Ok(breakdown(graph, &outcome, params))
}

/// Load penalties and fitness of an already-routed outcome.
pub fn breakdown(graph: &LinkGraph, outcome: &RoutingOutcome, params: &GaParams) -> FitnessBreakdown {
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    let mut overloaded_links = BTreeSet::new();
    for (link, &load) in graph.links().iter().zip(&outcome.load) {
        l1 += load;
        if load > link.capacity {
            l2 += load - link.capacity;
            overloaded_links.insert(link.key);
        }
    }
    let unroutable = outcome.primary.iter().filter(|p| p.is_none()).count();
    let fitness = if unroutable > 0 {
        0.0
    } else {
        params.c / (params.a * l1 + params.b * l2).max(FITNESS_EPSILON)
    };
    FitnessBreakdown {
        l1,
        l2,
        overloaded_links,
        unroutable,
        fitness,
    }
}

/// Indices sorted by descending fitness (stable on ties), split into
/// upper and lower halves.
pub fn rank_and_partition(fitness: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&i, &j| fitness[j].total_cmp(&fitness[i]));
    let lower = order.split_off(fitness.len() / 2);
    (order, lower)
}

pub fn crossover<R: Rng + ?Sized>(
    upper: &Chromosome,
    lower: &Chromosome,
    k_c: f64,
    rng: &mut R,
) -> Result<Chromosome, GaError> {
    if upper.len() != lower.len() {
        return Err(GaError::LengthMismatch(upper.len(), lower.len()));
    }
    let weights = upper
        .weights
        .iter()
        .zip(&lower.weights)
        .map(|(&u, &l)| if rng.gen_bool(k_c) { l } else { u })
        .collect();
    Ok(Chromosome { weights })
}

pub fn mutate<R: Rng + ?Sized>(
    chrom: &Chromosome,
    k_m: f64,
    max_weight: u32,
    rng: &mut R,
) -> Chromosome {
    Chromosome {
        weights: chrom
            .weights
            .iter()
            .map(|&w| {
                if rng.gen_bool(k_m) {
                    rng.gen_range(1..=max_weight)
                } else {
                    w
                }
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub l1_best: f64,
    pub l2_best: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evolution {
    pub best: Chromosome,
    pub best_breakdown: FitnessBreakdown,
    pub history: Vec<GenerationStats>,
}

fn evaluate_all(
    graph: &LinkGraph,
    pop: &[Chromosome],
    commodities: &[Commodity],
    params: &GaParams,
) -> Vec<FitnessBreakdown> {
    pop.par_iter()
        .map(|c| evaluate(graph, c, commodities, params).expect("population matches graph"))
        .collect()
}

fn stats(generation: usize, scored: &[FitnessBreakdown]) -> (usize, GenerationStats) {
    let mut best = 0;
    for (i, s) in scored.iter().enumerate() {
        if s.fitness > scored[best].fitness {
            best = i;
        }
    }
    let mean = scored.iter().map(|s| s.fitness).sum::<f64>() / scored.len() as f64;
    (
        best,
        GenerationStats {
            generation,
            best_fitness: scored[best].fitness,
            mean_fitness: mean,
            l1_best: scored[best].l1,
            l2_best: scored[best].l2,
        },
    )
}

/// Run the GA. Generation 0 is the random initial population.
///
/// Evaluation may run in parallel; every random draw comes from one seeded
/// stream in a fixed order, so the result depends only on the inputs.
pub fn evolve(
    graph: &LinkGraph,
    commodities: &[Commodity],
    params: &GaParams,
) -> Result<Evolution, GaError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut pop = init_population(params, graph.len(), &mut rng);
    let mut scored = evaluate_all(graph, &pop, commodities, params);

    let (i, first) = stats(0, &scored);
    let mut best = (pop[i].clone(), scored[i].clone());
    let mut history = vec![first];
    let mut since_improvement = 0;

    for generation in 1..=params.generations {
        let fitness: Vec<f64> = scored.iter().map(|s| s.fitness).collect();
        let (upper, lower) = rank_and_partition(&fitness);
        let mut next: Vec<Chromosome> = upper
            .iter()
            .take(params.elite)
            .map(|&i| pop[i].clone())
            .collect();
        while next.len() < params.pop_size {
            let u = &pop[upper[rng.gen_range(0..upper.len())]];
            let l = &pop[lower[rng.gen_range(0..lower.len())]];
            let child = crossover(u, l, params.k_c, &mut rng)?;
            next.push(mutate(&child, params.k_m, params.max_weight, &mut rng));
        }
        pop = next;
        scored = evaluate_all(graph, &pop, commodities, params);

        let (i, row) = stats(generation, &scored);
        if row.best_fitness > best.1.fitness {
            best = (pop[i].clone(), scored[i].clone());
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        history.push(row);
        if params.stagnation > 0 && since_improvement >= params.stagnation {
            break;
        }
    }

    Ok(Evolution {
        best: best.0,
        best_breakdown: best.1,
        history,
    })
}

/// Shortest path avoiding every link of `primary`, under the same weights.
pub fn backup_for(graph: &LinkGraph, weights: &[u32], primary: &[NodeId]) -> Option<Vec<NodeId>> {
    let excluded: BTreeSet<usize> = graph.path_links(primary)?.into_iter().collect();
    let (&src, &dst) = (primary.first()?, primary.last()?);
    if src == dst {
        return None;
    }
    graph.shortest_path(weights, src, dst, &excluded)
}

pub fn backup_paths(
    graph: &LinkGraph,
    chrom: &Chromosome,
    outcome: &RoutingOutcome,
) -> Result<RoutingOutcome, GaError> {
    check_len(graph, chrom)?;
    let backup = outcome
        .primary
        .iter()
        .map(|p| p.as_deref().and_then(|p| backup_for(graph, &chrom.weights, p)))
        .collect();
    Ok(RoutingOutcome {
        backup,
        ..outcome.clone()
    })
}
