//! Service-function-chain model: VNF catalog, per-satellite deployments,
//! requests, and realized end-to-end delay of a concrete route.
//!
//! Executing VNF `f` on satellite `s` costs `C_f / F_s` seconds. A route for
//! request `(src, dst, [f_1 … f_M])` is a satellite sequence
//! `src, s_1, …, s_M, dst` where `s_k` must host `f_k`. Its realized delay
//! is evaluated sequentially: each hop's shortest-path delay is read from
//! the grid slot at or before the hop's departure time and held for the
//! whole hop, and each computation advances the clock before the next hop
//! departs. Times wrap modulo one orbital period — the constellation is
//! exactly periodic, so long chains near the grid end stay well defined.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbital::ConstellationConfig;
use crate::pathdelay::DelayField;

/// One VNF type. Data sizes are carried for model fidelity but enter no
/// delay term (laser ISLs make transmission time negligible against
/// propagation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VnfSpec {
    pub id: u32,
    /// Computational complexity, GFLOPs.
    pub gflops: f64,
    pub input_bits: u64,
    pub output_bits: u64,
}

/// Compute resources of one satellite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatelliteCompute {
    /// Processing capacity, GFLOPs per second.
    pub capacity_gflops_s: f64,
    /// VNF ids deployed on this satellite.
    pub hosted: BTreeSet<u32>,
}

/// A service request: run `chain` in order on data traveling `src → dst`.
/// Satellites are flat indices. `chain` may be empty (pure transport).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SfcRequest {
    pub src: usize,
    pub dst: usize,
    pub chain: Vec<u32>,
}

impl SfcRequest {
    pub fn chain_len(&self) -> usize {
        self.chain.len()
    }
}

/// VNF catalog plus per-satellite deployment and capacities, with a reverse
/// index from VNF id to hosting satellites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub vnfs: Vec<VnfSpec>,
    pub satellites: Vec<SatelliteCompute>,
    pub seed: u64,
    #[serde(skip)]
    hosts: Vec<Vec<u32>>,
}

impl Scenario {
    pub fn new(vnfs: Vec<VnfSpec>, satellites: Vec<SatelliteCompute>, seed: u64) -> Self {
        let mut s = Scenario {
            vnfs,
            satellites,
            seed,
            hosts: Vec::new(),
        };
        s.rebuild_index();
        s
    }

    /// Recomputes the VNF → hosts index (needed after deserialization).
    pub fn rebuild_index(&mut self) {
        self.hosts = vec![Vec::new(); self.vnfs.len()];
        for (sat, compute) in self.satellites.iter().enumerate() {
            for &f in &compute.hosted {
                self.hosts[f as usize].push(sat as u32);
            }
        }
    }

    pub fn catalog_size(&self) -> usize {
        self.vnfs.len()
    }

    pub fn num_sats(&self) -> usize {
        self.satellites.len()
    }

    /// Satellites hosting VNF `f`, ascending flat index.
    pub fn hosts_of(&self, f: u32) -> &[u32] {
        &self.hosts[f as usize]
    }

    pub fn vnf(&self, f: u32) -> Result<&VnfSpec> {
        self.vnfs
            .get(f as usize)
            .ok_or_else(|| Error::malformed("request", format!("unknown vnf id {f}")))
    }

    /// `C_f / F_s`, or an infeasibility error when `s` does not host `f`.
    pub fn compute_delay(&self, sat: usize, f: u32) -> Result<f64> {
        let spec = self.vnf(f)?;
        let compute = &self.satellites[sat];
        if !compute.hosted.contains(&f) {
            return Err(Error::Infeasible(format!("satellite {sat} does not host vnf {f}")));
        }
        Ok(spec.gflops / compute.capacity_gflops_s)
    }
}

/// Draws a random catalog and deployment:
/// complexity `C_f ~ U[1, 5]` GFLOPs, capacity `F_s ~ U[1, 2]` GFLOPs/s,
/// per-satellite hosted count from `N(3, 0.75²)` rounded to the nearest
/// non-negative integer (ties to even) and clamped to the catalog size,
/// hosted sets drawn uniformly without replacement. Deterministic per seed.
pub fn generate_scenario(cfg: &ConstellationConfig, catalog_size: usize, seed: u64) -> Scenario {
    assert!(catalog_size >= 1);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let complexity = Uniform::new_inclusive(1.0, 5.0).unwrap();
    let capacity = Uniform::new_inclusive(1.0, 2.0).unwrap();
    let size_bits = Uniform::new_inclusive(100_000u64, 10_000_000).unwrap();
    let hosted_count = Normal::<f64>::new(3.0, 0.75).unwrap();

    let vnfs: Vec<VnfSpec> = (0..catalog_size as u32)
        .map(|id| VnfSpec {
            id,
            gflops: complexity.sample(&mut rng),
            input_bits: size_bits.sample(&mut rng),
            output_bits: size_bits.sample(&mut rng),
        })
        .collect();

    let satellites: Vec<SatelliteCompute> = (0..cfg.total_sats())
        .map(|_| {
            let n = hosted_count.sample(&mut rng).round_ties_even().max(0.0) as usize;
            let n = n.min(catalog_size);
            let hosted = rand::seq::index::sample(&mut rng, catalog_size, n)
                .into_iter()
                .map(|i| i as u32)
                .collect();
            SatelliteCompute {
                capacity_gflops_s: capacity.sample(&mut rng),
                hosted,
            }
        })
        .collect();

    Scenario::new(vnfs, satellites, seed)
}

/// Per-hop cost split: transmission into the hop's target satellite, then
/// the computation executed there (zero on the final hop into `dst`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopCost {
    pub tx_s: f64,
    pub cp_s: f64,
}

/// A routed request: the chosen satellite sequence with the algorithm's own
/// delay estimate and the realized (sequentially evaluated) delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteResult {
    pub algorithm: String,
    /// `src, s_1, …, s_M, dst` as flat indices.
    pub path: Vec<usize>,
    pub estimated_s: f64,
    pub realized_s: f64,
    pub hops: Vec<HopCost>,
}

/// Checks the deployment constraints of a candidate path for a request.
/// Errors identify the violating stage; no delay is computed for infeasible
/// paths.
pub fn validate_path(scenario: &Scenario, path: &[usize], request: &SfcRequest) -> Result<()> {
    let m = request.chain_len();
    if path.len() != m + 2 {
        return Err(Error::Infeasible(format!(
            "path has {} satellites, expected {}",
            path.len(),
            m + 2
        )));
    }
    if path[0] != request.src {
        return Err(Error::Infeasible("path does not start at src".into()));
    }
    if path[m + 1] != request.dst {
        return Err(Error::Infeasible("path does not end at dst".into()));
    }
    for (k, &f) in request.chain.iter().enumerate() {
        let sat = path[k + 1];
        scenario.vnf(f)?;
        if !scenario.satellites[sat].hosted.contains(&f) {
            return Err(Error::Infeasible(format!(
                "stage {}: satellite {sat} does not host vnf {f}",
                k + 1
            )));
        }
    }
    Ok(())
}

/// Sequentially evaluated end-to-end delay of a feasible path starting at
/// `t0`: hop `k` departs after all previous transmissions and computations,
/// reading the delay field at the slot of its departure time.
///
/// The accumulator is the elapsed delay (not absolute time), so the realized
/// total is exactly the sum of the per-hop breakdown.
pub fn realized_delay(
    field: &dyn DelayField,
    scenario: &Scenario,
    path: &[usize],
    request: &SfcRequest,
    t0: f64,
) -> Result<(f64, Vec<HopCost>)> {
    validate_path(scenario, path, request)?;
    let m = request.chain_len();
    let mut elapsed = 0.0;
    let mut hops = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let slot = field.slot_of(t0 + elapsed);
        let tx = field.delay(path[k], path[k + 1], slot);
        if !tx.is_finite() {
            return Err(Error::Infeasible(format!(
                "hop {k}: satellites {} and {} are disconnected at slot {slot}",
                path[k],
                path[k + 1]
            )));
        }
        elapsed += tx;
        let cp = if k < m {
            let c = scenario.compute_delay(path[k + 1], request.chain[k])?;
            elapsed += c;
            c
        } else {
            0.0
        };
        hops.push(HopCost { tx_s: tx, cp_s: cp });
    }
    Ok((elapsed, hops))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbital::orbital_period;
    use crate::pathdelay::{build_tensor, DelayTensor};
    use crate::topology::snapshot_series;

    fn cfg() -> ConstellationConfig {
        let mut c = ConstellationConfig::desk();
        c.planes = 4;
        c.per_plane = 5;
        c
    }

    fn tensor(c: &ConstellationConfig) -> DelayTensor {
        build_tensor(&snapshot_series(c), orbital_period(c))
    }

    /// Everyone hosts everything; capacities 1 GFLOPs/s.
    fn permissive_scenario(num_sats: usize, vnf_gflops: &[f64]) -> Scenario {
        let vnfs = vnf_gflops
            .iter()
            .enumerate()
            .map(|(id, &g)| VnfSpec {
                id: id as u32,
                gflops: g,
                input_bits: 0,
                output_bits: 0,
            })
            .collect();
        let satellites = (0..num_sats)
            .map(|_| SatelliteCompute {
                capacity_gflops_s: 1.0,
                hosted: (0..vnf_gflops.len() as u32).collect(),
            })
            .collect();
        Scenario::new(vnfs, satellites, 0)
    }

    #[test]
    fn compute_delay_arithmetic() {
        let mut s = permissive_scenario(2, &[2.0, 1.0]);
        assert_eq!(s.compute_delay(0, 0).unwrap(), 2.0);
        s.satellites[0].capacity_gflops_s = 2.0;
        assert_eq!(s.compute_delay(0, 1).unwrap(), 0.5);
        // Doubling both C and F leaves the delay unchanged.
        s.vnfs[0].gflops = 4.0;
        assert_eq!(s.compute_delay(0, 0).unwrap(), 2.0);
    }

    #[test]
    fn compute_delay_requires_hosting() {
        let mut s = permissive_scenario(2, &[1.0]);
        s.satellites[1].hosted.clear();
        assert!(matches!(s.compute_delay(1, 0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn scenario_is_seeded_deterministic() {
        let c = cfg();
        let a = generate_scenario(&c, 60, 9);
        let b = generate_scenario(&c, 60, 9);
        assert_eq!(a, b);
        assert_ne!(a, generate_scenario(&c, 60, 10));
        assert_eq!(a.catalog_size(), 60);
        assert_eq!(a.num_sats(), c.total_sats());
        for v in &a.vnfs {
            assert!((1.0..=5.0).contains(&v.gflops));
        }
        for s in &a.satellites {
            assert!((1.0..=2.0).contains(&s.capacity_gflops_s));
        }
    }

    #[test]
    fn hosts_index_matches_deployments() {
        let s = generate_scenario(&cfg(), 30, 3);
        for f in 0..30u32 {
            for &sat in s.hosts_of(f) {
                assert!(s.satellites[sat as usize].hosted.contains(&f));
            }
        }
        let total: usize = (0..30u32).map(|f| s.hosts_of(f).len()).sum();
        let direct: usize = s.satellites.iter().map(|c| c.hosted.len()).sum();
        assert_eq!(total, direct);
    }

    #[test]
    fn hosted_count_mean_near_three() {
        // Monte-Carlo check of the rounded-normal mean over many satellites.
        let mut c = cfg();
        c.planes = 100;
        c.per_plane = 1000; // 1e5 satellites
        let s = generate_scenario(&c, 60, 1);
        let mean = s.satellites.iter().map(|x| x.hosted.len() as f64).sum::<f64>() / s.num_sats() as f64;
        assert!((2.9..=3.1).contains(&mean), "mean hosted {mean}");
    }

    #[test]
    fn validate_path_reports_violating_stage() {
        let mut s = permissive_scenario(5, &[1.0, 1.0]);
        s.satellites[3].hosted.remove(&1);
        let r = SfcRequest {
            src: 0,
            dst: 4,
            chain: vec![0, 1],
        };
        assert!(validate_path(&s, &[0, 2, 2, 4], &r).is_ok());
        let err = validate_path(&s, &[0, 2, 3, 4], &r).unwrap_err();
        assert!(err.to_string().contains("stage 2"), "{err}");
        assert!(validate_path(&s, &[0, 2, 4], &r).is_err()); // wrong length
        assert!(validate_path(&s, &[1, 2, 2, 4], &r).is_err()); // wrong src
    }

    #[test]
    fn empty_chain_same_endpoints_is_free() {
        let c = cfg();
        let t = tensor(&c);
        let s = permissive_scenario(c.total_sats(), &[1.0]);
        let r = SfcRequest {
            src: 3,
            dst: 3,
            chain: vec![],
        };
        let (d, hops) = realized_delay(&t, &s, &[3, 3], &r, 0.0).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(hops.len(), 1);
    }

    #[test]
    fn empty_chain_is_pure_transport() {
        let c = cfg();
        let t = tensor(&c);
        let s = permissive_scenario(c.total_sats(), &[1.0]);
        let r = SfcRequest {
            src: 0,
            dst: 7,
            chain: vec![],
        };
        let t0 = 35.0;
        let (d, _) = realized_delay(&t, &s, &[0, 7], &r, t0).unwrap();
        assert_eq!(d, t.delay(0, 7, t.slot_of(t0)));
    }

    #[test]
    fn breakdown_sums_to_realized() {
        let c = cfg();
        let t = tensor(&c);
        let s = generate_scenario(&c, 20, 5);
        // Find a feasible 2-stage path by brute force.
        let r = SfcRequest {
            src: 0,
            dst: 9,
            chain: vec![0, 1],
        };
        let h0 = s.hosts_of(0).first().copied().expect("vnf 0 hosted") as usize;
        let h1 = s.hosts_of(1).first().copied().expect("vnf 1 hosted") as usize;
        let path = vec![0, h0, h1, 9];
        let (d, hops) = realized_delay(&t, &s, &path, &r, 100.0).unwrap();
        let sum: f64 = hops.iter().map(|h| h.tx_s + h.cp_s).sum();
        assert!((d - sum).abs() < 1e-9);
        assert!(d > 0.0);
    }

    #[test]
    fn increasing_complexity_increases_delay() {
        let c = cfg();
        let t = tensor(&c);
        let mut s = permissive_scenario(c.total_sats(), &[1.0, 2.0]);
        let r = SfcRequest {
            src: 0,
            dst: 9,
            chain: vec![0, 1],
        };
        let path = vec![0, 4, 11, 9];
        let (d0, _) = realized_delay(&t, &s, &path, &r, 0.0).unwrap();
        s.vnfs[1].gflops += 0.5;
        let (d1, _) = realized_delay(&t, &s, &path, &r, 0.0).unwrap();
        assert!(d1 > d0);
    }

    #[test]
    fn infeasible_path_never_returns_a_number() {
        let c = cfg();
        let t = tensor(&c);
        let mut s = permissive_scenario(c.total_sats(), &[1.0]);
        s.satellites[4].hosted.clear();
        let r = SfcRequest {
            src: 0,
            dst: 9,
            chain: vec![0],
        };
        assert!(realized_delay(&t, &s, &[0, 4, 9], &r, 0.0).is_err());
    }

    #[test]
    fn periodic_wrap_consistency() {
        // Same request one orbital period later: identical realization
        // within tolerance (grid wrap is exact, delays are periodic).
        let c = cfg();
        let t = tensor(&c);
        let s = generate_scenario(&c, 20, 5);
        let r = SfcRequest {
            src: 2,
            dst: 15,
            chain: vec![],
        };
        let period = orbital_period(&c);
        for t0 in [0.0, 444.0, 3210.5] {
            let (a, _) = realized_delay(&t, &s, &[2, 15], &r, t0).unwrap();
            let (b, _) = realized_delay(&t, &s, &[2, 15], &r, t0 + period).unwrap();
            assert!((a - b).abs() < 1e-9, "t0 {t0}: {a} vs {b}");
        }
    }
}
