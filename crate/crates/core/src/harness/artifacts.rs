//! Artifact persistence: the average-delay matrix, scenario, request
//! batches, and all plot-ready CSV outputs.
//!
//! Every derived artifact embeds the config hash on its first line
//! (`# config_hash=<hex>`), and loading verifies it. Floats are written with
//! Rust's shortest round-trip formatting, so a load returns bit-identical
//! values and reruns produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::pathdelay::AvgDelayMatrix;
use crate::sfc::{Scenario, SfcRequest};
use crate::stability::{PairStability, PathStabilityReport};

/// Standard artifact file names inside an output directory.
pub struct ArtifactPaths {
    pub dir: PathBuf,
}

impl ArtifactPaths {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ArtifactPaths { dir: dir.into() }
    }

    pub fn avg_delay(&self) -> PathBuf {
        self.dir.join("avg_delay.csv")
    }

    pub fn snapshots(&self) -> PathBuf {
        self.dir.join("snapshots.csv")
    }

    pub fn scenario(&self) -> PathBuf {
        self.dir.join("scenario.json")
    }

    pub fn pair_cv(&self) -> PathBuf {
        self.dir.join("pair_cv.csv")
    }

    pub fn pair_cv_quantiles(&self) -> PathBuf {
        self.dir.join("pair_cv_quantiles.csv")
    }

    pub fn path_cv(&self, chain_len: usize) -> PathBuf {
        self.dir.join(format!("path_cv_M{chain_len}.csv"))
    }

    pub fn path_cv_summary(&self) -> PathBuf {
        self.dir.join("path_cv_summary.csv")
    }

    pub fn cv_cdf(&self) -> PathBuf {
        self.dir.join("cv_cdf.csv")
    }

    pub fn benchmark(&self) -> PathBuf {
        self.dir.join("benchmark.csv")
    }

    pub fn benchmark_summary(&self) -> PathBuf {
        self.dir.join("summary.csv")
    }

    pub fn exclusions(&self) -> PathBuf {
        self.dir.join("exclusions.csv")
    }
}

fn hash_header(config_hash: &str) -> String {
    format!("# config_hash={config_hash}\n")
}

/// Reads the `# config_hash=` line and returns (hash, remaining text).
fn split_hash_header<'a>(path: &Path, text: &'a str) -> Result<(&'a str, &'a str)> {
    let Some(first_end) = text.find('\n') else {
        return Err(Error::malformed(path.display().to_string(), "empty file"));
    };
    let first = &text[..first_end];
    let Some(hash) = first.strip_prefix("# config_hash=") else {
        return Err(Error::malformed(
            path.display().to_string(),
            "missing `# config_hash=` header line",
        ));
    };
    Ok((hash.trim(), &text[first_end + 1..]))
}

fn check_hash(path: &Path, found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::HashMismatch {
            path: path.to_path_buf(),
            expected: expected.to_string(),
            found: found.to_string(),
        });
    }
    Ok(())
}

fn missing(path: &Path, hint: &str) -> Error {
    Error::MissingArtifact {
        path: path.to_path_buf(),
        hint: hint.to_string(),
    }
}

/// Writes the average-delay matrix: one row per ordered pair, `T²` rows.
pub fn write_avg_matrix(path: &Path, config_hash: &str, matrix: &AvgDelayMatrix) -> Result<()> {
    let t = matrix.num_sats();
    let mut out = String::with_capacity(t * t * 24);
    out.push_str(&hash_header(config_hash));
    out.push_str("u,v,mean_s,std_s,coverage\n");
    for u in 0..t {
        for v in 0..t {
            writeln!(
                out,
                "{u},{v},{},{},{}",
                matrix.mean(u, v),
                matrix.std(u, v),
                matrix.coverage(u, v)
            )
            .expect("string write");
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Loads and hash-checks an average-delay matrix.
pub fn load_avg_matrix(path: &Path, expected_hash: &str) -> Result<AvgDelayMatrix> {
    let text = fs::read_to_string(path)
        .map_err(|_| missing(path, "run the `simulate` command to produce it"))?;
    let (found, body) = split_hash_header(path, &text)?;
    check_hash(path, found, expected_hash)?;
    let mut lines = body.lines();
    let header = lines.next().unwrap_or_default();
    if header != "u,v,mean_s,std_s,coverage" {
        return Err(Error::malformed(path.display().to_string(), "unexpected CSV header"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let mut parts = line.split(',');
        let mut field = |name: &str| {
            parts
                .next()
                .ok_or_else(|| Error::malformed(path.display().to_string(), format!("row {i}: missing {name}")))
        };
        let u: usize = field("u")?.parse().map_err(|_| bad_row(path, i))?;
        let v: usize = field("v")?.parse().map_err(|_| bad_row(path, i))?;
        let mean: f64 = field("mean_s")?.parse().map_err(|_| bad_row(path, i))?;
        let std: f64 = field("std_s")?.parse().map_err(|_| bad_row(path, i))?;
        let coverage: f64 = field("coverage")?.parse().map_err(|_| bad_row(path, i))?;
        rows.push((u, v, mean, std, coverage));
    }
    let t = (rows.len() as f64).sqrt().round() as usize;
    if t * t != rows.len() {
        return Err(Error::malformed(
            path.display().to_string(),
            format!("{} rows is not a square matrix", rows.len()),
        ));
    }
    let mut mean = vec![0.0; t * t];
    let mut std = vec![0.0; t * t];
    let mut coverage = vec![0.0; t * t];
    for (u, v, m, s, c) in rows {
        if u >= t || v >= t {
            return Err(Error::malformed(path.display().to_string(), "satellite index out of range"));
        }
        mean[u * t + v] = m;
        std[u * t + v] = s;
        coverage[u * t + v] = c;
    }
    Ok(AvgDelayMatrix::from_parts(t, mean, std, coverage))
}

fn bad_row(path: &Path, row: usize) -> Error {
    Error::malformed(path.display().to_string(), format!("unparseable row {row}"))
}

/// Per-slot edge list of the snapshot series: `t_s,u,v,distance_km`.
pub fn write_snapshots(path: &Path, config_hash: &str, series: &[crate::topology::SnapshotGraph]) -> Result<()> {
    let mut out = hash_header(config_hash);
    out.push_str("t_s,u,v,distance_km\n");
    for g in series {
        for l in g.links() {
            writeln!(out, "{},{},{},{}", g.t_s, l.a, l.b, l.distance_km).expect("string write");
        }
    }
    fs::write(path, out)?;
    Ok(())
}

#[derive(serde::Serialize, serde::Deserialize)]
struct ScenarioFile {
    config_hash: String,
    scenario: Scenario,
}

pub fn write_scenario(path: &Path, config_hash: &str, scenario: &Scenario) -> Result<()> {
    let file = ScenarioFile {
        config_hash: config_hash.to_string(),
        scenario: scenario.clone(),
    };
    let mut json = serde_json::to_string_pretty(&file).expect("scenario serializes");
    json.push('\n');
    fs::write(path, json)?;
    Ok(())
}

pub fn load_scenario(path: &Path, expected_hash: &str) -> Result<Scenario> {
    let text = fs::read_to_string(path)
        .map_err(|_| missing(path, "run the `benchmark` command to generate it"))?;
    let file: ScenarioFile = serde_json::from_str(&text)
        .map_err(|e| Error::malformed(path.display().to_string(), e.to_string()))?;
    check_hash(path, &file.config_hash, expected_hash)?;
    let mut scenario = file.scenario;
    scenario.rebuild_index();
    Ok(scenario)
}

/// Parses a JSON-lines request batch: one `{"src":…,"dst":…,"chain":[…]}`
/// object per non-empty line.
pub fn parse_requests_jsonl(text: &str) -> Result<Vec<SfcRequest>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_str(line)
                .map_err(|e| Error::malformed(format!("request line {}", i + 1), e.to_string()))
        })
        .collect()
}

pub fn write_pair_cv(path: &Path, config_hash: &str, stats: &[PairStability]) -> Result<()> {
    let mut out = String::with_capacity(stats.len() * 32);
    out.push_str(&hash_header(config_hash));
    out.push_str("u,v,mean_s,std_s,cv\n");
    for s in stats {
        writeln!(out, "{},{},{},{},{}", s.u, s.v, s.mean_s, s.std_s, s.cv).expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_cv_quantiles(path: &Path, config_hash: &str, fractions: &[f64], thresholds: &[f64]) -> Result<()> {
    let mut out = hash_header(config_hash);
    out.push_str("fraction,cv_threshold\n");
    for (f, t) in fractions.iter().zip(thresholds) {
        writeln!(out, "{f},{t}").expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Per-path CVs for one chain length; excluded paths are omitted (their ids
/// simply do not appear).
pub fn write_path_cvs(path: &Path, config_hash: &str, report: &PathStabilityReport) -> Result<()> {
    let mut out = hash_header(config_hash);
    out.push_str("path_id,cv\n");
    for (id, cv) in report.per_path.iter().enumerate() {
        if let Some(cv) = cv {
            writeln!(out, "{id},{cv}").expect("string write");
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_path_cv_summary(path: &Path, config_hash: &str, reports: &[PathStabilityReport]) -> Result<()> {
    let mut out = hash_header(config_hash);
    out.push_str("chain_len,n_paths,n_excluded,average_cv\n");
    for r in reports {
        let excluded = r.per_path.iter().filter(|c| c.is_none()).count();
        writeln!(out, "{},{},{},{}", r.chain_len, r.per_path.len(), excluded, r.average_cv)
            .expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_cv_cdf(path: &Path, config_hash: &str, reports: &[PathStabilityReport]) -> Result<()> {
    let mut out = hash_header(config_hash);
    out.push_str("chain_len,cv,cdf\n");
    for r in reports {
        for &(x, f) in &r.cdf {
            writeln!(out, "{},{x},{f}", r.chain_len).expect("string write");
        }
    }
    fs::write(path, out)?;
    Ok(())
}
