//! `sfclab` — drive the constellation simulator, the delay-stability study,
//! and the SFC routing benchmark from the command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 infeasible request,
//! 4 missing or stale artifact, 1 anything else.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sfclab_core::harness::{
    self, Algorithm, ArtifactPaths, ExperimentSpec, RunConfig,
};
use sfclab_core::sfc::SfcRequest;
use sfclab_core::Error;

#[derive(Parser)]
#[command(name = "sfclab", version, about = "Walker Delta constellation and SFC routing laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Path to a TOML run configuration.
    #[arg(long, conflicts_with = "profile")]
    config: Option<PathBuf>,
    /// Built-in profile: `desk` (CI-sized) or `paper` (full scale).
    #[arg(long, default_value = "desk")]
    profile: String,
    /// Output directory for artifacts and reports.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

impl Common {
    fn run_config(&self) -> Result<RunConfig, Error> {
        match &self.config {
            Some(path) => RunConfig::load(path),
            None => RunConfig::by_profile(&self.profile),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the time grid once and persist the average-delay artifact.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Pairwise and per-path delay-stability study (needs `simulate`).
    Stability {
        #[command(flatten)]
        common: Common,
        /// Chain lengths to sample, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 2, 5, 10, 20])]
        chain_lengths: Vec<usize>,
        /// Random paths per chain length.
        #[arg(long, default_value_t = 500)]
        paths: usize,
        /// Path-sampling seed (default: the config seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Race routing algorithms over seeded request batches (needs `simulate`).
    Benchmark {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = vec![5usize, 10, 15, 20, 25])]
        chain_lengths: Vec<usize>,
        /// Requests per chain length.
        #[arg(long, default_value_t = 300)]
        requests: usize,
        /// Algorithms to run, comma separated
        /// (sa-msgr, snapshot, greedy-tx, greedy-cp, random, teg).
        #[arg(long, value_delimiter = ',')]
        algorithms: Option<Vec<String>>,
        /// Request-generation seed (default: the config seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Time window for the TEG reference, seconds (default: the whole
        /// horizon, which makes it the per-request optimum).
        #[arg(long)]
        teg_window: Option<f64>,
    },
    /// Route a single request JSON against the persisted artifacts.
    Route {
        #[command(flatten)]
        common: Common,
        /// File holding one request object: {"src":0,"dst":9,"chain":[1,2]}.
        #[arg(long, conflicts_with = "request_json")]
        request: Option<PathBuf>,
        /// The request object inline.
        #[arg(long)]
        request_json: Option<String>,
        #[arg(long, default_value = "sa-msgr")]
        algorithm: String,
        /// Request arrival time, seconds on the grid.
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        /// Seed for the random-placement algorithm.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. } | Error::Malformed { .. } => 2,
        Error::Infeasible(_) => 3,
        Error::MissingArtifact { .. } | Error::HashMismatch { .. } => 4,
        Error::Io(_) => 1,
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate { common } => {
            let run = common.run_config()?;
            let out = harness::with_workers(common.workers, || harness::cmd_simulate(&run, &common.out))?;
            let path = ArtifactPaths::new(&common.out).avg_delay();
            println!(
                "{} {} ({} satellites, {} slots, hash {})",
                if out.rebuilt { "wrote" } else { "reused" },
                path.display(),
                run.constellation.total_sats(),
                run.constellation.slot_count(),
                &run.hash()[..12],
            );
            Ok(())
        }
        Command::Stability {
            common,
            chain_lengths,
            paths,
            seed,
        } => {
            let run = common.run_config()?;
            let seed = seed.unwrap_or(run.constellation.rng_seed);
            let out = harness::with_workers(common.workers, || {
                harness::cmd_stability(&run, &chain_lengths, paths, seed, &common.out)
            })?;
            println!("pairwise CV quantiles:");
            for (fraction, threshold) in &out.pair_quantiles {
                println!("  {:>3.0}% of pairs have CV <= {threshold:.4}", fraction * 100.0);
            }
            println!("average path CV by chain length:");
            for report in &out.reports {
                let excluded = report.per_path.iter().filter(|c| c.is_none()).count();
                println!(
                    "  M = {:>2}: {:.4} ({} paths, {} excluded)",
                    report.chain_len,
                    report.average_cv,
                    report.per_path.len(),
                    excluded
                );
            }
            println!("reports written to {}", common.out.display());
            Ok(())
        }
        Command::Benchmark {
            common,
            chain_lengths,
            requests,
            algorithms,
            seed,
            teg_window,
        } => {
            let run = common.run_config()?;
            let algorithms = match algorithms {
                None => Algorithm::ALL.to_vec(),
                Some(names) => names
                    .iter()
                    .map(|n| n.parse())
                    .collect::<Result<Vec<Algorithm>, Error>>()?,
            };
            let spec = ExperimentSpec {
                seed: seed.unwrap_or(run.constellation.rng_seed),
                run,
                chain_lengths,
                requests_per_setting: requests,
                algorithms,
                teg_window_s: teg_window,
            };
            let out = harness::with_workers(common.workers, || harness::cmd_benchmark(&spec, &common.out))?;
            println!("algorithm   M   n      mean_s    median_s");
            for row in &out.summary {
                println!(
                    "{:<10} {:>3} {:>4} {:>10.4} {:>10.4}",
                    row.algorithm.name(),
                    row.chain_len,
                    row.n,
                    row.mean_s,
                    row.median_s
                );
            }
            println!(
                "{} records, {} excluded requests -> {}",
                out.records.len(),
                out.excluded.len(),
                common.out.display()
            );
            Ok(())
        }
        Command::Route {
            common,
            request,
            request_json,
            algorithm,
            t0,
            seed,
        } => {
            let run = common.run_config()?;
            let text = match (&request, &request_json) {
                (Some(path), _) => std::fs::read_to_string(path)?,
                (None, Some(json)) => json.clone(),
                (None, None) => {
                    return Err(Error::malformed("route", "need --request FILE or --request-json JSON"))
                }
            };
            let parsed: SfcRequest = serde_json::from_str(text.trim())
                .map_err(|e| Error::malformed("request", e.to_string()))?;
            let algorithm: Algorithm = algorithm.parse()?;
            let result = harness::with_workers(common.workers, || {
                harness::cmd_route(&run, &parsed, algorithm, t0, seed, &common.out)
            })?;
            println!("{}", serde_json::to_string_pretty(&result).expect("result serializes"));
            Ok(())
        }
    }
}
