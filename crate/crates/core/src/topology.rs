//! Time-indexed inter-satellite-link graph.
//!
//! Per snapshot, every satellite keeps its two intra-plane ring neighbors.
//! Towards each adjacent plane it proposes a link to the geometrically
//! nearest satellite there; a proposal survives only if the segment clears
//! the Earth (plus a grazing margin) and the relative speed is under the
//! configured threshold. The undirected link set is the union of surviving
//! proposals from either endpoint, which keeps the graph deterministic and
//! better connected than mutual-agreement pairing.

use rayon::prelude::*;

use crate::geom;
use crate::orbital::{propagate, relative_speed, ConstellationConfig, StateVector};

/// One undirected laser link with its instantaneous length and delay.
/// Endpoints are flat satellite indices with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub a: u32,
    pub b: u32,
    pub distance_km: f64,
    pub delay_s: f64,
}

/// The ISL graph at one time slot. Immutable after construction; cheap to
/// share read-only across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotGraph {
    pub t_s: f64,
    num_sats: usize,
    links: Vec<Link>,
    adj: Vec<Vec<(u32, f64)>>,
}

impl SnapshotGraph {
    pub fn num_sats(&self) -> usize {
        self.num_sats
    }

    /// Links sorted by `(a, b)`.
    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// Neighbors of `u` as `(flat index, delay_s)` pairs.
    pub fn neighbors(&self, u: usize) -> &[(u32, f64)] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    /// True if every satellite is reachable from satellite 0.
    pub fn is_connected(&self) -> bool {
        if self.num_sats == 0 {
            return true;
        }
        let mut seen = vec![false; self.num_sats];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.adj[u] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                    stack.push(v as usize);
                }
            }
        }
        count == self.num_sats
    }

    fn from_pairs(t_s: f64, num_sats: usize, pairs: &[(u32, u32)], states: &[StateVector], light_speed: f64) -> Self {
        let mut links: Vec<Link> = pairs
            .iter()
            .map(|&(a, b)| {
                let distance_km = geom::dist(states[a as usize].position, states[b as usize].position);
                Link {
                    a,
                    b,
                    distance_km,
                    delay_s: distance_km / light_speed,
                }
            })
            .collect();
        links.sort_by(|x, y| (x.a, x.b).cmp(&(y.a, y.b)));
        let mut adj = vec![Vec::new(); num_sats];
        for l in &links {
            adj[l.a as usize].push((l.b, l.delay_s));
            adj[l.b as usize].push((l.a, l.delay_s));
        }
        SnapshotGraph {
            t_s,
            num_sats,
            links,
            adj,
        }
    }
}

/// True iff the open segment between the two positions stays strictly above
/// `earth_radius + margin` at every point (closest approach to the Earth's
/// center, clamped to the segment).
pub fn line_of_sight(a: &StateVector, b: &StateVector, earth_radius_km: f64, margin_km: f64) -> bool {
    let p = a.position;
    let d = geom::sub(b.position, p);
    let dd = geom::dot(d, d);
    let t = if dd == 0.0 {
        0.0
    } else {
        (-geom::dot(p, d) / dd).clamp(0.0, 1.0)
    };
    let closest = geom::add(p, geom::scale(d, t));
    geom::norm(closest) > earth_radius_km + margin_km
}

/// Builds the ISL graph at time `t`.
pub fn build_snapshot(cfg: &ConstellationConfig, t: f64) -> SnapshotGraph {
    let total = cfg.total_sats();
    let n = cfg.per_plane as usize;
    let p = cfg.planes as usize;
    let states: Vec<StateVector> = (0..total).map(|f| propagate(cfg, cfg.sat(f), t)).collect();

    let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(total * 2);
    let canon = |a: usize, b: usize| (a.min(b) as u32, a.max(b) as u32);

    // Intra-plane rings: always on.
    if n >= 2 {
        for plane in 0..p {
            for slot in 0..n {
                let u = plane * n + slot;
                let v = plane * n + (slot + 1) % n;
                if u != v {
                    pairs.push(canon(u, v));
                }
            }
        }
    }

    // Inter-plane proposals: nearest satellite in each adjacent plane, gated
    // by line of sight and relative speed.
    if p >= 2 {
        for u in 0..total {
            let plane = u / n;
            let mut adjacent = [(plane + p - 1) % p, (plane + 1) % p];
            adjacent.sort_unstable();
            let mut prev = usize::MAX;
            for &q in &adjacent {
                if q == plane || q == prev {
                    continue; // P = 2 collapses both neighbors onto one plane
                }
                prev = q;
                let mut best: Option<(f64, usize)> = None;
                for slot in 0..n {
                    let v = q * n + slot;
                    let d = geom::dist(states[u].position, states[v].position);
                    // Ties broken towards the lowest flat index; the scan
                    // order makes strictly-less the right comparison.
                    if best.map_or(true, |(bd, _)| d < bd) {
                        best = Some((d, v));
                    }
                }
                let (_, v) = best.expect("adjacent plane is nonempty");
                let visible = line_of_sight(&states[u], &states[v], cfg.earth_radius_km, cfg.occlusion_margin_km);
                let slow = cfg
                    .v_threshold_km_s
                    .map_or(true, |vth| relative_speed(&states[u], &states[v]) <= vth);
                if visible && slow {
                    pairs.push(canon(u, v));
                }
            }
        }
    }

    pairs.sort_unstable();
    pairs.dedup();
    SnapshotGraph::from_pairs(t, total, &pairs, &states, cfg.light_speed_km_s)
}

/// Snapshots at `t = 0, dt, 2·dt, …` up to the horizon (inclusive of the last
/// grid point at or below it). Slots are built in parallel; the returned
/// order is by time.
pub fn snapshot_series(cfg: &ConstellationConfig) -> Vec<SnapshotGraph> {
    (0..cfg.slot_count())
        .into_par_iter()
        .map(|k| build_snapshot(cfg, k as f64 * cfg.dt_s))
        .collect()
}
