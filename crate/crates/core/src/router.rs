//! SFC routing strategies over the multi-stage graph.
//!
//! The multi-stage graph (MSG) of a request has one stage per chain element:
//! stage 0 is the source, stage `k ∈ [1, M]` holds an in/out node pair for
//! every satellite hosting `f_k` (the in→out edge carries the computation
//! delay), and stage `M+1` is the destination. Transmission edges connect
//! adjacent stages only, weighted by a [`DelayProvider`]:
//!
//! - the *average* provider uses the precomputed time-averaged delays — this
//!   is stability-aware routing, where one offline sweep buys a static
//!   online problem;
//! - the *snapshot* provider uses the instantaneous delays of one slot, the
//!   quasi-static baseline.
//!
//! A shortest src→dst path in this DAG is exactly an assignment of chain
//! stages to satellites. Ties are broken towards the lexicographically
//! smallest satellite sequence so every router here is deterministic.
//!
//! Baselines: greedy on instantaneous transmission, greedy on computation,
//! seeded-random placement, and a time-expanded reference that dynamic-
//! programs earliest completion over (stage, satellite) states with hop
//! delays read at actual departure slots.

use std::cmp::Ordering;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::pathdelay::{AvgDelayMatrix, DelayField};
use crate::sfc::{realized_delay, RouteResult, Scenario, SfcRequest};

/// Source of pairwise transmission weights for MSG edges.
#[derive(Clone, Copy)]
pub enum DelayProvider<'a> {
    /// Time-averaged delays (the offline artifact).
    Average(&'a AvgDelayMatrix),
    /// Instantaneous delays of one grid slot.
    Snapshot { field: &'a dyn DelayField, slot: usize },
}

impl DelayProvider<'_> {
    pub fn delay(&self, u: usize, v: usize) -> f64 {
        match self {
            DelayProvider::Average(m) => m.mean(u, v),
            DelayProvider::Snapshot { field, slot } => field.delay(u, v, *slot),
        }
    }
}

/// One MSG stage: the hosting satellites of `vnf` (ascending flat index) and
/// their computation delays.
#[derive(Debug, Clone)]
pub struct MsgStage {
    pub vnf: u32,
    pub hosts: Vec<u32>,
    pub comp_s: Vec<f64>,
}

/// Request-specific multi-stage graph with materialized edge weights.
#[derive(Debug, Clone)]
pub struct MsgGraph {
    pub src: usize,
    pub dst: usize,
    pub stages: Vec<MsgStage>,
    /// `trans[k]` holds the stage-k→k+1 transmission weights, row-major
    /// `|layer k| × |layer k+1|`; layer 0 is `{src}`, layer M+1 is `{dst}`.
    trans: Vec<Vec<f64>>,
}

impl MsgGraph {
    fn layer_len(&self, layer: usize) -> usize {
        if layer == 0 || layer == self.stages.len() + 1 {
            1
        } else {
            self.stages[layer - 1].hosts.len()
        }
    }

    /// Satellite represented by node `idx` of `layer`.
    fn sat_at(&self, layer: usize, idx: usize) -> usize {
        if layer == 0 {
            self.src
        } else if layer == self.stages.len() + 1 {
            self.dst
        } else {
            self.stages[layer - 1].hosts[idx] as usize
        }
    }

    pub fn trans_weight(&self, k: usize, i: usize, j: usize) -> f64 {
        self.trans[k][i * self.layer_len(k + 1) + j]
    }

    /// `2 + 2·Σ|hosts|`: source, destination, and an in/out pair per host.
    pub fn node_count(&self) -> usize {
        2 + 2 * self.stages.iter().map(|s| s.hosts.len()).sum::<usize>()
    }

    /// Computation edges plus all adjacent-stage transmission edges.
    pub fn edge_count(&self) -> usize {
        self.stages.iter().map(|s| s.hosts.len()).sum::<usize>()
            + self.trans.iter().map(Vec::len).sum::<usize>()
    }
}

/// Builds the MSG for a request. Fails with a structured error naming the
/// first stage whose VNF is hosted nowhere. A satellite appearing in two
/// consecutive stages gets a zero-weight transmission self-edge via
/// `delay(u, u) = 0`.
pub fn build_msg(request: &SfcRequest, scenario: &Scenario, provider: DelayProvider) -> Result<MsgGraph> {
    let m = request.chain_len();
    let mut stages = Vec::with_capacity(m);
    for (k, &f) in request.chain.iter().enumerate() {
        scenario.vnf(f)?;
        let hosts = scenario.hosts_of(f).to_vec();
        if hosts.is_empty() {
            return Err(Error::Infeasible(format!(
                "stage {}: vnf {f} is hosted by no satellite",
                k + 1
            )));
        }
        let comp_s = hosts
            .iter()
            .map(|&s| scenario.compute_delay(s as usize, f))
            .collect::<Result<Vec<f64>>>()?;
        stages.push(MsgStage { vnf: f, hosts, comp_s });
    }

    let graph_layers = |g: &MsgGraph, layer: usize| -> Vec<usize> {
        (0..g.layer_len(layer)).map(|i| g.sat_at(layer, i)).collect()
    };
    let mut graph = MsgGraph {
        src: request.src,
        dst: request.dst,
        stages,
        trans: Vec::new(),
    };
    for k in 0..=m {
        let from = graph_layers(&graph, k);
        let to = graph_layers(&graph, k + 1);
        let mut w = Vec::with_capacity(from.len() * to.len());
        for &u in &from {
            for &v in &to {
                w.push(provider.delay(u, v));
            }
        }
        graph.trans.push(w);
    }
    Ok(graph)
}

/// Outcome of the DAG sweep: the satellite sequence, its total weight, and
/// the number of edge relaxations performed (one per MSG edge).
#[derive(Debug, Clone, PartialEq)]
pub struct DagPathResult {
    pub path: Vec<usize>,
    pub cost_s: f64,
    pub relaxations: u64,
}

/// Shortest src→dst path by relaxation in stage order. On exact weight ties
/// the lexicographically smallest satellite sequence wins.
pub fn dag_shortest_path(g: &MsgGraph) -> Result<DagPathResult> {
    let m = g.stages.len();
    let mut relaxations = 0u64;
    // dist[i]: best cost from src through layer-k node i, inclusive of that
    // node's computation edge. parents[k-1][i]: predecessor index.
    let mut dist = vec![0.0f64];
    let mut parents: Vec<Vec<usize>> = Vec::with_capacity(m + 1);

    for k in 0..=m {
        let next_len = g.layer_len(k + 1);
        let mut next = vec![f64::INFINITY; next_len];
        let mut par = vec![usize::MAX; next_len];
        for (i, &di) in dist.iter().enumerate() {
            if !di.is_finite() {
                continue;
            }
            for j in 0..next_len {
                relaxations += 1;
                let cand = di + g.trans_weight(k, i, j);
                match cand.total_cmp(&next[j]) {
                    Ordering::Less => {
                        next[j] = cand;
                        par[j] = i;
                    }
                    Ordering::Equal => {
                        if cand.is_finite() && prefix_cmp(g, &parents, k, i, par[j]) == Ordering::Less {
                            par[j] = i;
                        }
                    }
                    Ordering::Greater => {}
                }
            }
        }
        if k < m {
            for (j, d) in next.iter_mut().enumerate() {
                relaxations += 1;
                *d += g.stages[k].comp_s[j];
            }
        }
        parents.push(par);
        dist = next;
    }

    let cost_s = dist[0];
    if !cost_s.is_finite() {
        return Err(Error::Infeasible(
            "no finite-weight path through the multi-stage graph".into(),
        ));
    }
    let mut path = vec![0usize; m + 2];
    let mut idx = 0usize;
    for layer in (0..=m + 1).rev() {
        path[layer] = g.sat_at(layer, idx);
        if layer > 0 {
            idx = parents[layer - 1][idx];
        }
    }
    Ok(DagPathResult {
        path,
        cost_s,
        relaxations,
    })
}

/// Lexicographic comparison of the best-known satellite sequences ending at
/// two nodes of `layer` (parents of layers below are final). Only consulted
/// on exact cost ties, which are rare.
fn prefix_cmp(g: &MsgGraph, parents: &[Vec<usize>], layer: usize, a: usize, b: usize) -> Ordering {
    let chain = |mut idx: usize| {
        let mut seq = vec![0usize; layer + 1];
        for l in (1..=layer).rev() {
            seq[l] = g.sat_at(l, idx);
            idx = parents[l - 1][idx];
        }
        seq[0] = g.src;
        seq
    };
    chain(a).cmp(&chain(b))
}

/// Stability-aware routing: MSG over average delays, then a DAG sweep. The
/// estimate is the MSG path weight; the realization replays the chosen path
/// sequentially from `t0`.
pub fn route_sa_msgr(
    request: &SfcRequest,
    scenario: &Scenario,
    avg: &AvgDelayMatrix,
    field: &dyn DelayField,
    t0: f64,
) -> Result<RouteResult> {
    let msg = build_msg(request, scenario, DelayProvider::Average(avg))?;
    let dag = dag_shortest_path(&msg)?;
    finish("sa-msgr", dag.path, dag.cost_s, request, scenario, field, t0)
}

/// Quasi-static baseline: the same MSG machinery weighted by the
/// instantaneous delays at `t0`.
pub fn route_snapshot(
    request: &SfcRequest,
    scenario: &Scenario,
    field: &dyn DelayField,
    t0: f64,
) -> Result<RouteResult> {
    let slot = field.slot_of(t0);
    let msg = build_msg(request, scenario, DelayProvider::Snapshot { field, slot })?;
    let dag = dag_shortest_path(&msg)?;
    finish("snapshot", dag.path, dag.cost_s, request, scenario, field, t0)
}

/// Greedy over instantaneous transmission: every stage picks the host with
/// the smallest `D(current, host)` at slot `t0` (ties to the lowest flat
/// index), ignoring computation and the remainder of the chain.
pub fn route_greedy_tx(
    request: &SfcRequest,
    scenario: &Scenario,
    field: &dyn DelayField,
    t0: f64,
) -> Result<RouteResult> {
    let slot = field.slot_of(t0);
    let mut path = Vec::with_capacity(request.chain_len() + 2);
    path.push(request.src);
    let mut estimate = 0.0;
    for (k, &f) in request.chain.iter().enumerate() {
        let hosts = nonempty_hosts(scenario, f, k)?;
        let current = *path.last().unwrap();
        let mut best: Option<(f64, u32)> = None;
        for &h in hosts {
            let d = field.delay(current, h as usize, slot);
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, h));
            }
        }
        let (d, h) = best.unwrap();
        estimate += d + scenario.compute_delay(h as usize, f)?;
        path.push(h as usize);
    }
    estimate += field.delay(*path.last().unwrap(), request.dst, slot);
    path.push(request.dst);
    finish("greedy-tx", path, estimate, request, scenario, field, t0)
}

/// Per-stage host choice of the computation-greedy baseline: the smallest
/// `C_f / F_s` wins, ties to the lowest flat index. Independent of source,
/// destination, and request time.
pub fn greedy_cp_choice(request: &SfcRequest, scenario: &Scenario) -> Result<Vec<usize>> {
    let mut path = Vec::with_capacity(request.chain_len() + 2);
    path.push(request.src);
    for (k, &f) in request.chain.iter().enumerate() {
        let hosts = nonempty_hosts(scenario, f, k)?;
        let mut best: Option<(f64, u32)> = None;
        for &h in hosts {
            let d = scenario.compute_delay(h as usize, f)?;
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, h));
            }
        }
        path.push(best.unwrap().1 as usize);
    }
    path.push(request.dst);
    Ok(path)
}

/// Greedy over computation delay, blind to transmission. Its estimate is the
/// computation total it optimized.
pub fn route_greedy_cp(
    request: &SfcRequest,
    scenario: &Scenario,
    field: &dyn DelayField,
    t0: f64,
) -> Result<RouteResult> {
    let path = greedy_cp_choice(request, scenario)?;
    let estimate = request
        .chain
        .iter()
        .zip(&path[1..])
        .map(|(&f, &s)| scenario.compute_delay(s, f))
        .sum::<Result<f64>>()?;
    finish("greedy-cp", path, estimate, request, scenario, field, t0)
}

/// Uniform random feasible placement, deterministic per seed. It has no
/// delay model of its own, so the emitted estimate equals the realization.
pub fn route_random(
    request: &SfcRequest,
    scenario: &Scenario,
    field: &dyn DelayField,
    t0: f64,
    seed: u64,
) -> Result<RouteResult> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut path = Vec::with_capacity(request.chain_len() + 2);
    path.push(request.src);
    for (k, &f) in request.chain.iter().enumerate() {
        let hosts = nonempty_hosts(scenario, f, k)?;
        path.push(hosts[rng.random_range(0..hosts.len())] as usize);
    }
    path.push(request.dst);
    let (realized, hops) = realized_delay(field, scenario, &path, request, t0)?;
    Ok(RouteResult {
        algorithm: "random".into(),
        path,
        estimated_s: realized,
        realized_s: realized,
        hops,
    })
}

/// Time-expanded reference: dynamic program over (stage, satellite) states
/// tracking the minimum elapsed delay, with each hop's weight read at the
/// slot of its actual departure time (clamped to `t0 + window_s` once the
/// window is exhausted). Assumes departing later never yields an earlier
/// arrival; desk-scale instances only.
pub fn route_teg(
    request: &SfcRequest,
    scenario: &Scenario,
    field: &dyn DelayField,
    t0: f64,
    window_s: f64,
) -> Result<RouteResult> {
    let m = request.chain_len();
    let slot_for = |elapsed: f64| field.slot_of(t0 + elapsed.min(window_s));

    // Layer sequences of (satellite, computation delay).
    let mut layers: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m + 2);
    layers.push(vec![(request.src, 0.0)]);
    for (k, &f) in request.chain.iter().enumerate() {
        let hosts = nonempty_hosts(scenario, f, k)?;
        let layer = hosts
            .iter()
            .map(|&h| Ok((h as usize, scenario.compute_delay(h as usize, f)?)))
            .collect::<Result<Vec<_>>>()?;
        layers.push(layer);
    }
    layers.push(vec![(request.dst, 0.0)]);

    let mut elapsed = vec![0.0f64];
    let mut parents: Vec<Vec<usize>> = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let next = &layers[k + 1];
        let mut best = vec![f64::INFINITY; next.len()];
        let mut par = vec![usize::MAX; next.len()];
        for (i, &d) in elapsed.iter().enumerate() {
            if !d.is_finite() {
                continue;
            }
            let (sat_i, _) = layers[k][i];
            let slot = slot_for(d);
            for (j, &(sat_j, comp)) in next.iter().enumerate() {
                let tx = field.delay(sat_i, sat_j, slot);
                let cand = d + tx + comp;
                match cand.total_cmp(&best[j]) {
                    Ordering::Less => {
                        best[j] = cand;
                        par[j] = i;
                    }
                    Ordering::Equal => {
                        if cand.is_finite() && teg_prefix_cmp(&layers, &parents, k, i, par[j]) == Ordering::Less {
                            par[j] = i;
                        }
                    }
                    Ordering::Greater => {}
                }
            }
        }
        parents.push(par);
        elapsed = best;
    }

    if !elapsed[0].is_finite() {
        return Err(Error::Infeasible("no reachable assignment in the time-expanded sweep".into()));
    }
    let mut path = vec![0usize; m + 2];
    let mut idx = 0usize;
    for layer in (0..=m + 1).rev() {
        path[layer] = layers[layer][idx].0;
        if layer > 0 {
            idx = parents[layer - 1][idx];
        }
    }
    finish("teg", path, elapsed[0], request, scenario, field, t0)
}

fn teg_prefix_cmp(
    layers: &[Vec<(usize, f64)>],
    parents: &[Vec<usize>],
    layer: usize,
    a: usize,
    b: usize,
) -> Ordering {
    let chain = |mut idx: usize| {
        let mut seq = vec![0usize; layer + 1];
        for l in (1..=layer).rev() {
            seq[l] = layers[l][idx].0;
            idx = parents[l - 1][idx];
        }
        seq[0] = layers[0][0].0;
        seq
    };
    chain(a).cmp(&chain(b))
}

fn nonempty_hosts<'a>(scenario: &'a Scenario, f: u32, stage: usize) -> Result<&'a [u32]> {
    scenario.vnf(f)?;
    let hosts = scenario.hosts_of(f);
    if hosts.is_empty() {
        return Err(Error::Infeasible(format!(
            "stage {}: vnf {f} is hosted by no satellite",
            stage + 1
        )));
    }
    Ok(hosts)
}

fn finish(
    algorithm: &str,
    path: Vec<usize>,
    estimated_s: f64,
    request: &SfcRequest,
    scenario: &Scenario,
    field: &dyn DelayField,
    t0: f64,
) -> Result<RouteResult> {
    let (realized_s, hops) = realized_delay(field, scenario, &path, request, t0)?;
    Ok(RouteResult {
        algorithm: algorithm.into(),
        path,
        estimated_s,
        realized_s,
        hops,
    })
}
