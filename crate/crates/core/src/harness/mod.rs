//! Experiment harness: configuration ingestion, offline artifacts, and the
//! four workflows behind the CLI subcommands.
//!
//! - [`cmd_simulate`]: sweep the grid once and persist the average-delay
//!   matrix (idempotent: a matching artifact is reused, a stale one rebuilt).
//! - [`cmd_stability`]: pairwise CV table and per-chain-length path CV study
//!   from the persisted artifact plus a path sweep.
//! - [`cmd_benchmark`]: race the routing algorithms over seeded request
//!   batches and emit per-record and box-plot CSVs.
//! - [`cmd_route`]: route one request and return the full result.

pub mod artifacts;
pub mod config;
pub mod experiment;
pub mod offline;

use std::path::Path;

use crate::error::{Error, Result};
use crate::orbital::orbital_period;
use crate::pathdelay::{build_tensor, AvgDelayMatrix, DelayField, DelayTensor, LazyDelayField};
use crate::router;
use crate::sfc::{generate_scenario, RouteResult, Scenario, SfcRequest};
use crate::stability::{cv_quantiles, pairwise_cv, sample_paths, PathStabilityReport};
use crate::topology::snapshot_series;

pub use artifacts::ArtifactPaths;
pub use config::RunConfig;
pub use experiment::{Algorithm, BenchmarkOutput, ExperimentSpec};

/// Fractions reported by the pairwise stability table.
pub const QUANTILE_FRACTIONS: [f64; 3] = [0.5, 0.7, 0.9];
/// Abscissae per chain length in the CDF artifact.
pub const CDF_POINTS: usize = 100;

/// Runs `f` on a dedicated rayon pool of `workers` threads (0 = default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
        .install(f)
}

#[derive(Debug)]
pub struct SimulateOutput {
    pub avg: AvgDelayMatrix,
    /// False when a matching artifact was reused.
    pub rebuilt: bool,
}

/// Produces (or reuses) the average-delay artifact at `out/avg_delay.csv`.
pub fn cmd_simulate(run: &RunConfig, out: &Path) -> Result<SimulateOutput> {
    run.validate()?;
    std::fs::create_dir_all(out)?;
    let paths = ArtifactPaths::new(out);
    let hash = run.hash();
    match artifacts::load_avg_matrix(&paths.avg_delay(), &hash) {
        Ok(avg) => Ok(SimulateOutput { avg, rebuilt: false }),
        Err(Error::MissingArtifact { .. }) | Err(Error::HashMismatch { .. }) => {
            let avg = offline::sweep_average(&run.constellation);
            artifacts::write_avg_matrix(&paths.avg_delay(), &hash, &avg)?;
            Ok(SimulateOutput { avg, rebuilt: true })
        }
        Err(other) => Err(other),
    }
}

#[derive(Debug)]
pub struct StabilityOutput {
    pub pair_quantiles: Vec<(f64, f64)>,
    pub reports: Vec<PathStabilityReport>,
}

/// Emits the stability study CSVs. Requires the simulate artifact; performs
/// one additional sweep for the per-path delay series.
pub fn cmd_stability(
    run: &RunConfig,
    chain_lengths: &[usize],
    n_paths: usize,
    seed: u64,
    out: &Path,
) -> Result<StabilityOutput> {
    run.validate()?;
    std::fs::create_dir_all(out)?;
    let paths = ArtifactPaths::new(out);
    let hash = run.hash();
    let avg = artifacts::load_avg_matrix(&paths.avg_delay(), &hash)?;

    let stats = pairwise_cv(&avg);
    let thresholds = cv_quantiles(&stats, &QUANTILE_FRACTIONS)?;
    artifacts::write_pair_cv(&paths.pair_cv(), &hash, &stats)?;
    artifacts::write_cv_quantiles(&paths.pair_cv_quantiles(), &hash, &QUANTILE_FRACTIONS, &thresholds)?;

    let total = run.constellation.total_sats();
    let path_sets: Vec<Vec<Vec<usize>>> = chain_lengths
        .iter()
        .map(|&m| sample_paths(total, m.max(1), n_paths, seed))
        .collect();
    let outcomes = offline::sweep_path_cvs(&run.constellation, &path_sets);
    let reports: Vec<PathStabilityReport> = chain_lengths
        .iter()
        .zip(&outcomes)
        .map(|(&m, o)| PathStabilityReport::from_outcomes(m, o, CDF_POINTS))
        .collect();
    for report in &reports {
        artifacts::write_path_cvs(&paths.path_cv(report.chain_len), &hash, report)?;
    }
    artifacts::write_path_cv_summary(&paths.path_cv_summary(), &hash, &reports)?;
    artifacts::write_cv_cdf(&paths.cv_cdf(), &hash, &reports)?;

    Ok(StabilityOutput {
        pair_quantiles: QUANTILE_FRACTIONS.iter().copied().zip(thresholds).collect(),
        reports,
    })
}

/// Loads the scenario artifact or generates and persists it.
pub fn ensure_scenario(run: &RunConfig, out: &Path) -> Result<Scenario> {
    let paths = ArtifactPaths::new(out);
    let hash = run.hash();
    match artifacts::load_scenario(&paths.scenario(), &hash) {
        Ok(s) => Ok(s),
        Err(Error::MissingArtifact { .. }) | Err(Error::HashMismatch { .. }) => {
            let s = generate_scenario(&run.constellation, run.catalog_size, run.constellation.rng_seed);
            artifacts::write_scenario(&paths.scenario(), &hash, &s)?;
            Ok(s)
        }
        Err(other) => Err(other),
    }
}

/// Dense tensor for realized-delay evaluation. Desk-scale cheap; at full
/// scale this is the memory-heavy path (slots × T² doubles).
pub fn build_full_tensor(run: &RunConfig) -> DelayTensor {
    let series = snapshot_series(&run.constellation);
    build_tensor(&series, orbital_period(&run.constellation))
}

/// Dense entries above which realized-delay evaluation switches from the
/// precomputed tensor to the lazy on-demand field (10⁸ doubles ≈ 800 MB).
const DENSE_FIELD_LIMIT: usize = 100_000_000;

/// Delay field sized to the config: dense below [`DENSE_FIELD_LIMIT`],
/// lazily memoized above it.
pub fn build_delay_field(run: &RunConfig) -> Box<dyn DelayField> {
    let entries = run.constellation.slot_count() * run.constellation.total_sats().pow(2);
    if entries <= DENSE_FIELD_LIMIT {
        Box::new(build_full_tensor(run))
    } else {
        Box::new(LazyDelayField::new(&run.constellation))
    }
}

/// Runs the benchmark and writes `benchmark.csv`, `summary.csv`, and
/// `exclusions.csv`. Requires the simulate artifact.
pub fn cmd_benchmark(spec: &ExperimentSpec, out: &Path) -> Result<BenchmarkOutput> {
    spec.validate()?;
    std::fs::create_dir_all(out)?;
    let paths = ArtifactPaths::new(out);
    let hash = spec.run.hash();
    let avg = artifacts::load_avg_matrix(&paths.avg_delay(), &hash)?;
    let scenario = ensure_scenario(&spec.run, out)?;
    let field = build_delay_field(&spec.run);
    let output = experiment::run_benchmark(spec, &scenario, &avg, field.as_ref())?;
    experiment::write_benchmark_csv(&paths.benchmark(), &hash, &output.records)?;
    experiment::write_summary_csv(&paths.benchmark_summary(), &hash, &output.summary, output.excluded.len())?;
    experiment::write_exclusions_csv(&paths.exclusions(), &hash, &output.excluded)?;
    Ok(output)
}

/// Routes one request with one algorithm against the persisted artifacts.
/// `t0` defaults to the start of the grid.
pub fn cmd_route(
    run: &RunConfig,
    request: &SfcRequest,
    algorithm: Algorithm,
    t0: f64,
    seed: u64,
    out: &Path,
) -> Result<RouteResult> {
    run.validate()?;
    validate_request(run, request)?;
    let paths = ArtifactPaths::new(out);
    let hash = run.hash();
    let avg = artifacts::load_avg_matrix(&paths.avg_delay(), &hash)?;
    let scenario = ensure_scenario(run, out)?;
    let field = build_delay_field(run);
    let field = field.as_ref();
    match algorithm {
        Algorithm::SaMsgr => router::route_sa_msgr(request, &scenario, &avg, field, t0),
        Algorithm::Snapshot => router::route_snapshot(request, &scenario, field, t0),
        Algorithm::GreedyTx => router::route_greedy_tx(request, &scenario, field, t0),
        Algorithm::GreedyCp => router::route_greedy_cp(request, &scenario, field, t0),
        Algorithm::Random => router::route_random(request, &scenario, field, t0, seed),
        Algorithm::Teg => router::route_teg(request, &scenario, field, t0, f64::INFINITY),
    }
}

/// Structural request validation against the config (satellite and VNF id
/// ranges) before any artifact is touched.
pub fn validate_request(run: &RunConfig, request: &SfcRequest) -> Result<()> {
    let total = run.constellation.total_sats();
    if request.src >= total || request.dst >= total {
        return Err(Error::malformed(
            "request",
            format!("satellite index out of range (T = {total})"),
        ));
    }
    for &f in &request.chain {
        if f as usize >= run.catalog_size {
            return Err(Error::malformed(
                "request",
                format!("unknown vnf id {f} (catalog size {})", run.catalog_size),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_run() -> RunConfig {
        let mut run = RunConfig::desk();
        run.constellation.planes = 4;
        run.constellation.per_plane = 5;
        run.constellation.horizon_s = Some(30.0 * run.constellation.dt_s);
        run.catalog_size = 12;
        run
    }

    #[test]
    fn simulate_is_idempotent_and_rebuilds_on_stale_hash() {
        let run = small_run();
        let dir = tempfile::tempdir().unwrap();
        let first = cmd_simulate(&run, dir.path()).unwrap();
        assert!(first.rebuilt);
        let bytes = std::fs::read(ArtifactPaths::new(dir.path()).avg_delay()).unwrap();
        let second = cmd_simulate(&run, dir.path()).unwrap();
        assert!(!second.rebuilt);
        assert_eq!(second.avg, first.avg);
        assert_eq!(bytes, std::fs::read(ArtifactPaths::new(dir.path()).avg_delay()).unwrap());

        // A different config in the same directory must rebuild.
        let mut other = run.clone();
        other.constellation.dt_s = 15.0;
        assert!(cmd_simulate(&other, dir.path()).unwrap().rebuilt);
    }

    #[test]
    fn stability_requires_simulate_artifact() {
        let run = small_run();
        let dir = tempfile::tempdir().unwrap();
        let err = cmd_stability(&run, &[1, 2], 10, 1, dir.path()).unwrap_err();
        assert!(matches!(err, Error::MissingArtifact { .. }), "{err}");
        assert!(err.to_string().contains("simulate"));
    }

    #[test]
    fn stability_emits_all_csvs() {
        let run = small_run();
        let dir = tempfile::tempdir().unwrap();
        cmd_simulate(&run, dir.path()).unwrap();
        let out = cmd_stability(&run, &[1, 3], 12, 9, dir.path()).unwrap();
        assert_eq!(out.reports.len(), 2);
        let paths = ArtifactPaths::new(dir.path());
        for p in [
            paths.pair_cv(),
            paths.pair_cv_quantiles(),
            paths.path_cv(1),
            paths.path_cv(3),
            paths.path_cv_summary(),
            paths.cv_cdf(),
        ] {
            assert!(p.exists(), "{p:?} missing");
        }
        // Summary column is re-derivable from the per-path CSV.
        let text = std::fs::read_to_string(paths.path_cv(3)).unwrap();
        let cvs: Vec<f64> = text
            .lines()
            .skip(2)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        let mean = cvs.iter().sum::<f64>() / cvs.len() as f64;
        assert!((mean - out.reports[1].average_cv).abs() < 1e-12);
    }

    #[test]
    fn single_path_stability_run() {
        let run = small_run();
        let dir = tempfile::tempdir().unwrap();
        cmd_simulate(&run, dir.path()).unwrap();
        let out = cmd_stability(&run, &[2], 1, 4, dir.path()).unwrap();
        assert_eq!(out.reports[0].per_path.len(), 1);
    }

    #[test]
    fn route_rejects_unknown_vnf() {
        let run = small_run();
        let request = SfcRequest {
            src: 0,
            dst: 3,
            chain: vec![run.catalog_size as u32],
        };
        let err = validate_request(&run, &request).unwrap_err();
        assert!(err.to_string().contains("unknown vnf"), "{err}");
    }

    #[test]
    fn route_zero_chain_same_endpoints() {
        let run = small_run();
        let dir = tempfile::tempdir().unwrap();
        cmd_simulate(&run, dir.path()).unwrap();
        let request = SfcRequest {
            src: 5,
            dst: 5,
            chain: vec![],
        };
        let res = cmd_route(&run, &request, Algorithm::SaMsgr, 0.0, 0, dir.path()).unwrap();
        assert_eq!(res.realized_s, 0.0);
        assert_eq!(res.path, vec![5, 5]);
    }

    #[test]
    fn benchmark_writes_csvs_and_is_deterministic() {
        let run = small_run();
        let spec = ExperimentSpec {
            run: run.clone(),
            chain_lengths: vec![2],
            requests_per_setting: 10,
            algorithms: vec![Algorithm::SaMsgr, Algorithm::Snapshot],
            seed: 21,
            teg_window_s: None,
        };
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        for d in [&d1, &d2] {
            cmd_simulate(&run, d.path()).unwrap();
            cmd_benchmark(&spec, d.path()).unwrap();
        }
        let p1 = ArtifactPaths::new(d1.path());
        let p2 = ArtifactPaths::new(d2.path());
        assert_eq!(
            std::fs::read(p1.benchmark_summary()).unwrap(),
            std::fs::read(p2.benchmark_summary()).unwrap()
        );
        assert_eq!(
            std::fs::read(p1.exclusions()).unwrap(),
            std::fs::read(p2.exclusions()).unwrap()
        );
        // The records CSV is byte-identical after dropping the wall-clock
        // column (the one intentionally non-deterministic field).
        let strip = |p: &std::path::Path| {
            std::fs::read_to_string(p)
                .unwrap()
                .lines()
                .map(|l| {
                    let cols: Vec<&str> = l.split(',').collect();
                    if cols.len() == 7 {
                        format!("{},{},{},{},{},{}", cols[0], cols[1], cols[2], cols[3], cols[4], cols[6])
                    } else {
                        l.to_string()
                    }
                })
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(&p1.benchmark()), strip(&p2.benchmark()));
    }
}
