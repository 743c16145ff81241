//! Benchmark orchestration: seeded request batches, per-request routing
//! across all selected algorithms, and box-plot summary statistics.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::pathdelay::{AvgDelayMatrix, DelayField};
use crate::router;
use crate::sfc::{Scenario, SfcRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    SaMsgr,
    Snapshot,
    GreedyTx,
    GreedyCp,
    Random,
    Teg,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::SaMsgr,
        Algorithm::Snapshot,
        Algorithm::GreedyTx,
        Algorithm::GreedyCp,
        Algorithm::Random,
        Algorithm::Teg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::SaMsgr => "sa-msgr",
            Algorithm::Snapshot => "snapshot",
            Algorithm::GreedyTx => "greedy-tx",
            Algorithm::GreedyCp => "greedy-cp",
            Algorithm::Random => "random",
            Algorithm::Teg => "teg",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sa-msgr" => Ok(Algorithm::SaMsgr),
            "snapshot" => Ok(Algorithm::Snapshot),
            "greedy-tx" => Ok(Algorithm::GreedyTx),
            "greedy-cp" => Ok(Algorithm::GreedyCp),
            "random" => Ok(Algorithm::Random),
            "teg" => Ok(Algorithm::Teg),
            other => Err(Error::config("algorithms", format!("unknown algorithm `{other}`"))),
        }
    }
}

/// The benchmark protocol: which chain lengths, how many requests per
/// length, and which algorithms to race on each request.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub run: RunConfig,
    pub chain_lengths: Vec<usize>,
    pub requests_per_setting: usize,
    pub algorithms: Vec<Algorithm>,
    /// Seed for request generation and arrival-time sampling.
    pub seed: u64,
    /// Time window given to the time-expanded reference; `None` covers the
    /// whole horizon, which is what makes it the per-request optimum.
    pub teg_window_s: Option<f64>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.run.validate()?;
        if self.requests_per_setting == 0 {
            return Err(Error::config("requests", "must be ≥ 1"));
        }
        if self.chain_lengths.is_empty() {
            return Err(Error::config("chain_lengths", "must name at least one length"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config("algorithms", "must name at least one algorithm"));
        }
        Ok(())
    }
}

/// One routed (request, algorithm) outcome.
#[derive(Debug, Clone)]
pub struct BenchmarkRecord {
    pub request_id: String,
    pub algorithm: Algorithm,
    pub chain_len: usize,
    pub estimated_s: f64,
    pub realized_s: f64,
    /// Wall-clock routing time. Diagnostic only; everything else in the
    /// output is deterministic, this column is not.
    pub route_us: u64,
    pub path: Vec<usize>,
}

/// A request none of the algorithms can serve (some stage hosted nowhere).
#[derive(Debug, Clone)]
pub struct ExcludedRequest {
    pub request_id: String,
    pub chain_len: usize,
    pub reason: String,
}

/// Box-plot statistics per (algorithm, chain length): quartiles plus Tukey
/// whiskers at 1.5 × IQR, computed over the non-excluded requests.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub chain_len: usize,
    pub n: usize,
    pub mean_s: f64,
    pub median_s: f64,
    pub q1_s: f64,
    pub q3_s: f64,
    pub whisker_lo_s: f64,
    pub whisker_hi_s: f64,
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutput {
    pub records: Vec<BenchmarkRecord>,
    pub excluded: Vec<ExcludedRequest>,
    pub summary: Vec<SummaryRow>,
}

/// One benchmark request with its seeded arrival time.
#[derive(Debug, Clone)]
pub struct TimedRequest {
    pub id: String,
    pub request: SfcRequest,
    pub t0: f64,
}

/// Draws the seeded request batch for one chain length: distinct random
/// endpoints, a chain of `m` distinct VNF types, and an arrival time uniform
/// on the grid.
pub fn generate_requests(run: &RunConfig, m: usize, count: usize, seed: u64) -> Vec<TimedRequest> {
    let total = run.constellation.total_sats();
    let slots = run.constellation.slot_count();
    let dt = run.constellation.dt_s;
    // Separate stream per chain length so adding lengths never reshuffles
    // the others.
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ (m as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    (0..count)
        .map(|i| {
            let src = rng.random_range(0..total);
            let mut dst = rng.random_range(0..total - 1);
            if dst >= src {
                dst += 1;
            }
            let chain: Vec<u32> = rand::seq::index::sample(&mut rng, run.catalog_size, m.min(run.catalog_size))
                .into_iter()
                .map(|f| f as u32)
                .collect();
            let t0 = rng.random_range(0..slots) as f64 * dt;
            TimedRequest {
                id: format!("M{m:02}_r{i:04}"),
                request: SfcRequest { src, dst, chain },
                t0,
            }
        })
        .collect()
}

fn route_one(
    algorithm: Algorithm,
    timed: &TimedRequest,
    scenario: &Scenario,
    avg: &AvgDelayMatrix,
    field: &dyn DelayField,
    teg_window_s: f64,
    random_seed: u64,
) -> Result<crate::sfc::RouteResult> {
    let r = &timed.request;
    match algorithm {
        Algorithm::SaMsgr => router::route_sa_msgr(r, scenario, avg, field, timed.t0),
        Algorithm::Snapshot => router::route_snapshot(r, scenario, field, timed.t0),
        Algorithm::GreedyTx => router::route_greedy_tx(r, scenario, field, timed.t0),
        Algorithm::GreedyCp => router::route_greedy_cp(r, scenario, field, timed.t0),
        Algorithm::Random => router::route_random(r, scenario, field, timed.t0, random_seed),
        Algorithm::Teg => router::route_teg(r, scenario, field, timed.t0, teg_window_s),
    }
}

/// Runs every selected algorithm on every seeded request. Requests are
/// routed in parallel; records keep request order, so output is independent
/// of the worker count.
pub fn run_benchmark(
    spec: &ExperimentSpec,
    scenario: &Scenario,
    avg: &AvgDelayMatrix,
    field: &dyn DelayField,
) -> Result<BenchmarkOutput> {
    spec.validate()?;
    let teg_window = spec.teg_window_s.unwrap_or(f64::INFINITY);
    let mut records = Vec::new();
    let mut excluded = Vec::new();

    for &m in &spec.chain_lengths {
        let batch = generate_requests(&spec.run, m, spec.requests_per_setting, spec.seed);
        let outcomes: Vec<std::result::Result<Vec<BenchmarkRecord>, ExcludedRequest>> = batch
            .par_iter()
            .enumerate()
            .map(|(i, timed)| {
                let mut rows = Vec::with_capacity(spec.algorithms.len());
                for &alg in &spec.algorithms {
                    let started = Instant::now();
                    let random_seed = spec.seed.wrapping_add(i as u64);
                    match route_one(alg, timed, scenario, avg, field, teg_window, random_seed) {
                        Ok(res) => rows.push(BenchmarkRecord {
                            request_id: timed.id.clone(),
                            algorithm: alg,
                            chain_len: m,
                            estimated_s: res.estimated_s,
                            realized_s: res.realized_s,
                            route_us: started.elapsed().as_micros() as u64,
                            path: res.path,
                        }),
                        Err(Error::Infeasible(reason)) => {
                            return Err(ExcludedRequest {
                                request_id: timed.id.clone(),
                                chain_len: m,
                                reason,
                            });
                        }
                        Err(other) => {
                            return Err(ExcludedRequest {
                                request_id: timed.id.clone(),
                                chain_len: m,
                                reason: other.to_string(),
                            });
                        }
                    }
                }
                Ok(rows)
            })
            .collect();
        for outcome in outcomes {
            match outcome {
                Ok(rows) => records.extend(rows),
                Err(ex) => excluded.push(ex),
            }
        }
    }

    let summary = summarize(&spec.algorithms, &spec.chain_lengths, &records);
    Ok(BenchmarkOutput {
        records,
        excluded,
        summary,
    })
}

/// Linear-interpolation quantile of a sorted slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

fn summarize(algorithms: &[Algorithm], chain_lengths: &[usize], records: &[BenchmarkRecord]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for &m in chain_lengths {
        for &alg in algorithms {
            let mut values: Vec<f64> = records
                .iter()
                .filter(|r| r.algorithm == alg && r.chain_len == m)
                .map(|r| r.realized_s)
                .collect();
            if values.is_empty() {
                continue;
            }
            values.sort_by(f64::total_cmp);
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let q1 = quantile(&values, 0.25);
            let q3 = quantile(&values, 0.75);
            let iqr = q3 - q1;
            // Tukey whiskers: most extreme data within 1.5 × IQR of the box.
            let lo_fence = q1 - 1.5 * iqr;
            let hi_fence = q3 + 1.5 * iqr;
            let whisker_lo = *values.iter().find(|&&v| v >= lo_fence).unwrap();
            let whisker_hi = *values.iter().rev().find(|&&v| v <= hi_fence).unwrap();
            out.push(SummaryRow {
                algorithm: alg,
                chain_len: m,
                n: values.len(),
                mean_s: mean,
                median_s: quantile(&values, 0.5),
                q1_s: q1,
                q3_s: q3,
                whisker_lo_s: whisker_lo,
                whisker_hi_s: whisker_hi,
            });
        }
    }
    out
}

fn path_string(path: &[usize]) -> String {
    path.iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

pub fn write_benchmark_csv(path: &Path, config_hash: &str, records: &[BenchmarkRecord]) -> Result<()> {
    let mut out = format!("# config_hash={config_hash}\n");
    out.push_str("request_id,algorithm,chain_len,estimated_s,realized_s,route_us,path\n");
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.request_id,
            r.algorithm,
            r.chain_len,
            r.estimated_s,
            r.realized_s,
            r.route_us,
            path_string(&r.path)
        )
        .expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_summary_csv(
    path: &Path,
    config_hash: &str,
    summary: &[SummaryRow],
    exclusions: usize,
) -> Result<()> {
    let mut out = format!("# config_hash={config_hash}\n# excluded_requests={exclusions}\n");
    out.push_str("algorithm,chain_len,n,mean_s,median_s,q1_s,q3_s,whisker_lo_s,whisker_hi_s\n");
    for s in summary {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.algorithm, s.chain_len, s.n, s.mean_s, s.median_s, s.q1_s, s.q3_s, s.whisker_lo_s, s.whisker_hi_s
        )
        .expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_exclusions_csv(path: &Path, config_hash: &str, excluded: &[ExcludedRequest]) -> Result<()> {
    let mut out = format!("# config_hash={config_hash}\n");
    out.push_str("request_id,chain_len,reason\n");
    for e in excluded {
        writeln!(out, "{},{},\"{}\"", e.request_id, e.chain_len, e.reason.replace('"', "'"))
            .expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::offline::sweep_average;
    use crate::orbital::orbital_period;
    use crate::pathdelay::build_tensor;
    use crate::sfc::generate_scenario;
    use crate::topology::snapshot_series;

    fn small_run() -> RunConfig {
        let mut run = RunConfig::desk();
        run.constellation.planes = 4;
        run.constellation.per_plane = 5;
        run.catalog_size = 12;
        run
    }

    #[test]
    fn request_batches_are_seeded_and_well_formed() {
        let run = small_run();
        let a = generate_requests(&run, 3, 40, 7);
        let b = generate_requests(&run, 3, 40, 7);
        assert_eq!(a.len(), 40);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.request, y.request);
            assert_eq!(x.t0, y.t0);
        }
        for t in &a {
            assert_ne!(t.request.src, t.request.dst);
            assert_eq!(t.request.chain.len(), 3);
            let mut sorted = t.request.chain.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 3, "chain types must be distinct");
            assert!(t.t0 >= 0.0 && t.t0 <= run.constellation.horizon());
        }
    }

    #[test]
    fn single_request_single_algorithm_yields_one_record() {
        let run = small_run();
        let scenario = generate_scenario(&run.constellation, run.catalog_size, run.constellation.rng_seed);
        let tensor = build_tensor(&snapshot_series(&run.constellation), orbital_period(&run.constellation));
        let avg = sweep_average(&run.constellation);
        let spec = ExperimentSpec {
            run: run.clone(),
            chain_lengths: vec![1],
            requests_per_setting: 1,
            algorithms: vec![Algorithm::SaMsgr],
            seed: 3,
            teg_window_s: None,
        };
        let out = run_benchmark(&spec, &scenario, &avg, &tensor).unwrap();
        assert_eq!(out.records.len() + out.excluded.len(), 1);
    }

    #[test]
    fn summary_matches_recomputation_from_records() {
        let run = small_run();
        let scenario = generate_scenario(&run.constellation, run.catalog_size, run.constellation.rng_seed);
        let tensor = build_tensor(&snapshot_series(&run.constellation), orbital_period(&run.constellation));
        let avg = sweep_average(&run.constellation);
        let spec = ExperimentSpec {
            run: run.clone(),
            chain_lengths: vec![2, 4],
            requests_per_setting: 30,
            algorithms: vec![Algorithm::SaMsgr, Algorithm::GreedyCp, Algorithm::Random],
            seed: 11,
            teg_window_s: None,
        };
        let out = run_benchmark(&spec, &scenario, &avg, &tensor).unwrap();
        for row in &out.summary {
            let mut values: Vec<f64> = out
                .records
                .iter()
                .filter(|r| r.algorithm == row.algorithm && r.chain_len == row.chain_len)
                .map(|r| r.realized_s)
                .collect();
            values.sort_by(f64::total_cmp);
            assert_eq!(values.len(), row.n);
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            assert!((mean - row.mean_s).abs() < 1e-9);
            assert!((quantile(&values, 0.5) - row.median_s).abs() < 1e-12);
        }
        // Every (kept request, algorithm) pair has exactly one record.
        let kept = out.records.len() / spec.algorithms.len();
        assert_eq!(out.records.len(), kept * spec.algorithms.len());
        assert_eq!(kept + out.excluded.len(), 2 * 30);
    }

    #[test]
    fn benchmark_is_worker_count_invariant() {
        let run = small_run();
        let scenario = generate_scenario(&run.constellation, run.catalog_size, run.constellation.rng_seed);
        let tensor = build_tensor(&snapshot_series(&run.constellation), orbital_period(&run.constellation));
        let avg = sweep_average(&run.constellation);
        let spec = ExperimentSpec {
            run: run.clone(),
            chain_lengths: vec![3],
            requests_per_setting: 20,
            algorithms: Algorithm::ALL.to_vec(),
            seed: 5,
            teg_window_s: None,
        };
        let run_with = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_benchmark(&spec, &scenario, &avg, &tensor).unwrap())
        };
        let a = run_with(1);
        let b = run_with(4);
        assert_eq!(a.summary, b.summary);
        assert_eq!(a.records.len(), b.records.len());
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.request_id, y.request_id);
            assert_eq!(x.algorithm, y.algorithm);
            assert_eq!(x.path, y.path);
            assert_eq!(x.realized_s.to_bits(), y.realized_s.to_bits());
        }
    }

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
    }
}
