//! Shortest-path propagation delays, per snapshot and averaged over time.
//!
//! Per slot the all-pairs field `D(u, v, t)` is the minimum total link delay
//! between `u` and `v` in that snapshot (Dijkstra per source; links are
//! nonnegative). Unreachable pairs are `f64::INFINITY`, never errors.
//!
//! Two reductions consume the per-slot fields:
//! - [`DelayTensor`]: the dense `T×T×slots` array, used by the stability
//!   study and by realized-delay evaluation. Fine at desk scale; at full
//!   scale it is several GB, which is why the averaging path below exists.
//! - [`PairMoments`]: streaming per-pair moments that reduce slot-by-slot
//!   into an [`AvgDelayMatrix`] without retaining the tensor. The dense and
//!   streaming routes perform identical arithmetic in identical order, so
//!   their outputs are bit-equal.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::topology::{build_snapshot, SnapshotGraph};

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    delay: f64,
    node: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on delay; ties on node index keep the order total.
        other
            .delay
            .total_cmp(&self.delay)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact shortest-path delays from `src` to every satellite, seconds.
/// Unreachable entries are `f64::INFINITY`.
pub fn single_source_delays(g: &SnapshotGraph, src: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.num_sats()];
    let mut done = vec![false; g.num_sats()];
    let mut heap = BinaryHeap::with_capacity(g.num_sats());
    dist[src] = 0.0;
    heap.push(HeapEntry {
        delay: 0.0,
        node: src as u32,
    });
    while let Some(HeapEntry { delay, node }) = heap.pop() {
        let u = node as usize;
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, w) in g.neighbors(u) {
            let cand = delay + w;
            if cand < dist[v as usize] {
                dist[v as usize] = cand;
                heap.push(HeapEntry {
                    delay: cand,
                    node: v,
                });
            }
        }
    }
    dist
}

/// All-pairs delays of one snapshot, row-major `T×T`.
///
/// The matrix is canonicalized to the upper triangle: `d(v,u)` is set to the
/// bits of `d(u,v)` for `u < v`, since the two Dijkstra runs agree only up to
/// rounding order and downstream consumers rely on exact symmetry.
pub fn all_pairs_delays(g: &SnapshotGraph) -> Vec<f64> {
    let t = g.num_sats();
    let mut out = vec![0.0; t * t];
    out.par_chunks_mut(t).enumerate().for_each(|(src, row)| {
        row.copy_from_slice(&single_source_delays(g, src));
    });
    for u in 0..t {
        for v in u + 1..t {
            out[v * t + u] = out[u * t + v];
        }
    }
    out
}

/// Read access to the delay field `D(u, v, slot)`, however it is stored.
///
/// `delay(u, v, slot)` must be symmetric in `(u, v)` bit-for-bit and zero on
/// the diagonal; `slot_of` maps a time to the grid slot at or before it,
/// wrapping modulo one orbital period.
pub trait DelayField: Sync {
    fn num_sats(&self) -> usize;
    fn slots(&self) -> usize;
    fn slot_of(&self, t: f64) -> usize;
    fn delay(&self, u: usize, v: usize, slot: usize) -> f64;
}

/// Dense time series of all-pairs shortest delays.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayTensor {
    num_sats: usize,
    dt_s: f64,
    period_s: f64,
    times: Vec<f64>,
    /// Slot-major: `delays[k·T² + u·T + v]`.
    delays: Vec<f64>,
}

impl DelayField for DelayTensor {
    fn num_sats(&self) -> usize {
        self.num_sats
    }

    fn slots(&self) -> usize {
        self.times.len()
    }

    /// Grid slot at or before `t`, with `t` wrapped into `[0, period)`.
    /// The constellation is exactly periodic, so wrapping is lossless; times
    /// past the last grid point within a period clamp to that point.
    fn slot_of(&self, t: f64) -> usize {
        let wrapped = t.rem_euclid(self.period_s);
        ((wrapped / self.dt_s).floor() as usize).min(self.times.len() - 1)
    }

    fn delay(&self, u: usize, v: usize, slot: usize) -> f64 {
        self.delays[slot * self.num_sats * self.num_sats + u * self.num_sats + v]
    }
}

impl DelayTensor {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dt_s(&self) -> f64 {
        self.dt_s
    }

    pub fn period_s(&self) -> f64 {
        self.period_s
    }

    /// Row `D(u, ·, slot)`.
    pub fn row(&self, u: usize, slot: usize) -> &[f64] {
        let t = self.num_sats;
        let base = slot * t * t + u * t;
        &self.delays[base..base + t]
    }

    /// All-pairs matrix of one slot.
    pub fn slot_matrix(&self, slot: usize) -> &[f64] {
        let t = self.num_sats;
        &self.delays[slot * t * t..(slot + 1) * t * t]
    }

    /// Scales every delay by `k`. Test hook for scale-invariance properties.
    pub fn scaled(&self, k: f64) -> DelayTensor {
        DelayTensor {
            num_sats: self.num_sats,
            dt_s: self.dt_s,
            period_s: self.period_s,
            times: self.times.clone(),
            delays: self.delays.iter().map(|d| d * k).collect(),
        }
    }
}

/// Delay field computed on demand: snapshots and single-source rows are
/// built lazily and memoized. This is what makes the full-scale profile
/// tractable — the dense tensor there would be several GB, while a
/// benchmark run touches only a sparse set of `(slot, source)` rows.
pub struct LazyDelayField {
    cfg: crate::orbital::ConstellationConfig,
    dt_s: f64,
    period_s: f64,
    slots: usize,
    snapshots: Vec<std::sync::OnceLock<SnapshotGraph>>,
    rows: std::sync::Mutex<std::collections::HashMap<(u32, u32), std::sync::Arc<Vec<f64>>>>,
}

impl LazyDelayField {
    pub fn new(cfg: &crate::orbital::ConstellationConfig) -> Self {
        let slots = cfg.slot_count();
        LazyDelayField {
            cfg: cfg.clone(),
            dt_s: cfg.dt_s,
            period_s: crate::orbital::orbital_period(cfg),
            slots,
            snapshots: (0..slots).map(|_| std::sync::OnceLock::new()).collect(),
            rows: std::sync::Mutex::new(std::collections::HashMap::new()),
        }
    }

    fn snapshot(&self, slot: usize) -> &SnapshotGraph {
        self.snapshots[slot].get_or_init(|| build_snapshot(&self.cfg, slot as f64 * self.dt_s))
    }

    /// Memoized single-source row. Values are pure functions of the config,
    /// so racing computations of the same row are harmless.
    fn row(&self, src: usize, slot: usize) -> std::sync::Arc<Vec<f64>> {
        let key = (slot as u32, src as u32);
        if let Some(row) = self.rows.lock().unwrap().get(&key) {
            return row.clone();
        }
        let row = std::sync::Arc::new(single_source_delays(self.snapshot(slot), src));
        self.rows.lock().unwrap().entry(key).or_insert(row).clone()
    }
}

impl DelayField for LazyDelayField {
    fn num_sats(&self) -> usize {
        self.cfg.total_sats()
    }

    fn slots(&self) -> usize {
        self.slots
    }

    fn slot_of(&self, t: f64) -> usize {
        let wrapped = t.rem_euclid(self.period_s);
        ((wrapped / self.dt_s).floor() as usize).min(self.slots - 1)
    }

    /// Reads from the row of the smaller endpoint, matching the dense
    /// tensor's canonical upper-triangle symmetry bit-for-bit.
    fn delay(&self, u: usize, v: usize, slot: usize) -> f64 {
        if u == v {
            return 0.0;
        }
        self.row(u.min(v), slot)[u.max(v)]
    }
}

/// Computes the dense tensor from a snapshot series. `period_s` defines the
/// wrap-around used by [`DelayTensor::slot_of`].
pub fn build_tensor(series: &[SnapshotGraph], period_s: f64) -> DelayTensor {
    assert!(!series.is_empty(), "empty snapshot series");
    let num_sats = series[0].num_sats();
    let dt_s = if series.len() >= 2 {
        series[1].t_s - series[0].t_s
    } else {
        period_s
    };
    let per_slot = num_sats * num_sats;
    let mut delays = vec![0.0; per_slot * series.len()];
    delays
        .par_chunks_mut(per_slot)
        .zip(series.par_iter())
        .for_each(|(chunk, g)| chunk.copy_from_slice(&all_pairs_delays(g)));
    DelayTensor {
        num_sats,
        dt_s,
        period_s,
        times: series.iter().map(|g| g.t_s).collect(),
        delays,
    }
}

/// Time-averaged delay statistics per ordered pair.
///
/// Pairs with infinite samples (disconnected in some slot) are averaged over
/// the finite samples only; `coverage` records the finite fraction so
/// downstream code can exclude partially covered pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct AvgDelayMatrix {
    num_sats: usize,
    mean: Vec<f64>,
    std: Vec<f64>,
    coverage: Vec<f64>,
}

impl AvgDelayMatrix {
    pub fn num_sats(&self) -> usize {
        self.num_sats
    }

    pub fn mean(&self, u: usize, v: usize) -> f64 {
        self.mean[u * self.num_sats + v]
    }

    /// Population standard deviation over the finite samples.
    pub fn std(&self, u: usize, v: usize) -> f64 {
        self.std[u * self.num_sats + v]
    }

    /// Fraction of slots with a finite delay for the pair.
    pub fn coverage(&self, u: usize, v: usize) -> f64 {
        self.coverage[u * self.num_sats + v]
    }

    pub fn mean_row(&self, u: usize) -> &[f64] {
        &self.mean[u * self.num_sats..(u + 1) * self.num_sats]
    }

    pub(crate) fn from_parts(num_sats: usize, mean: Vec<f64>, std: Vec<f64>, coverage: Vec<f64>) -> Self {
        AvgDelayMatrix {
            num_sats,
            mean,
            std,
            coverage,
        }
    }
}

/// Streaming accumulator of per-pair delay moments (Welford update, so a
/// constant series yields an exactly zero standard deviation).
///
/// Feed it slot matrices in grid order; the fold is sequential so results do
/// not depend on the number of worker threads used to produce the slots.
#[derive(Debug, Clone)]
pub struct PairMoments {
    num_sats: usize,
    slots_seen: usize,
    n_finite: Vec<u64>,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl PairMoments {
    pub fn new(num_sats: usize) -> Self {
        PairMoments {
            num_sats,
            slots_seen: 0,
            n_finite: vec![0; num_sats * num_sats],
            mean: vec![0.0; num_sats * num_sats],
            m2: vec![0.0; num_sats * num_sats],
        }
    }

    /// Accumulates one slot's all-pairs matrix (row-major `T×T`).
    pub fn accumulate(&mut self, slot_matrix: &[f64]) {
        assert_eq!(slot_matrix.len(), self.num_sats * self.num_sats);
        self.slots_seen += 1;
        for (i, &d) in slot_matrix.iter().enumerate() {
            if d.is_finite() {
                self.n_finite[i] += 1;
                let delta = d - self.mean[i];
                self.mean[i] += delta / self.n_finite[i] as f64;
                self.m2[i] += delta * (d - self.mean[i]);
            }
        }
    }

    pub fn slots_seen(&self) -> usize {
        self.slots_seen
    }

    /// Mean and population standard deviation per pair.
    pub fn finish(&self) -> AvgDelayMatrix {
        let total = self.slots_seen as f64;
        let mut mean = vec![f64::INFINITY; self.mean.len()];
        let mut std = vec![f64::INFINITY; self.mean.len()];
        let mut coverage = vec![0.0; self.mean.len()];
        for i in 0..self.mean.len() {
            let n = self.n_finite[i] as f64;
            coverage[i] = if total > 0.0 { n / total } else { 0.0 };
            if n > 0.0 {
                mean[i] = self.mean[i];
                std[i] = (self.m2[i] / n).max(0.0).sqrt();
            }
        }
        AvgDelayMatrix::from_parts(self.num_sats, mean, std, coverage)
    }
}

/// Time-averaged matrix from a dense tensor. Identical arithmetic to the
/// streaming route: slots are folded in grid order.
pub fn average_matrix(tensor: &DelayTensor) -> AvgDelayMatrix {
    let mut acc = PairMoments::new(tensor.num_sats());
    for k in 0..tensor.slots() {
        acc.accumulate(tensor.slot_matrix(k));
    }
    acc.finish()
}
