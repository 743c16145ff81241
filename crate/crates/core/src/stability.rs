//! Delay-stability statistics: coefficient of variation per satellite pair
//! and per multi-hop path.
//!
//! The pairwise CV `σ/μ` measures how much a pair's shortest-path delay
//! moves over one orbital period relative to its mean. For a chain visiting
//! several satellites, the quantity of interest is the CV of the *summed*
//! hop delays: fluctuations of individual hops partially cancel, so longer
//! chains are steadier. Both reductions exist in a dense form over a
//! [`DelayTensor`] and a streaming form ([`PathMoments`]) that folds slot
//! matrices without retaining them, which is what makes the full-scale
//! constellation tractable.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::pathdelay::{AvgDelayMatrix, DelayField, DelayTensor};

/// Stability summary of one unordered satellite pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStability {
    pub u: usize,
    pub v: usize,
    pub mean_s: f64,
    pub std_s: f64,
    pub cv: f64,
}

/// Per-pair CVs for every fully covered unordered pair `u < v` with a
/// positive finite mean. Zero-mean pairs cannot occur for distinct
/// satellites in a connected graph and are skipped.
pub fn pairwise_cv(matrix: &AvgDelayMatrix) -> Vec<PairStability> {
    let t = matrix.num_sats();
    let mut out = Vec::with_capacity(t * (t - 1) / 2);
    for u in 0..t {
        for v in u + 1..t {
            let mean = matrix.mean(u, v);
            if matrix.coverage(u, v) < 1.0 || !mean.is_finite() || mean <= 0.0 {
                continue;
            }
            out.push(PairStability {
                u,
                v,
                mean_s: mean,
                std_s: matrix.std(u, v),
                cv: matrix.std(u, v) / mean,
            });
        }
    }
    out
}

/// Empirical lower quantiles: for each fraction `p` the smallest observed CV
/// `c` such that at least `p` of the pairs have CV ≤ `c`.
pub fn cv_quantiles(stats: &[PairStability], fractions: &[f64]) -> Result<Vec<f64>> {
    if stats.is_empty() {
        return Err(Error::malformed("cv quantiles", "empty statistics"));
    }
    for &p in fractions {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::malformed(
                "cv quantiles",
                format!("fraction {p} outside (0, 1]"),
            ));
        }
    }
    let mut cvs: Vec<f64> = stats.iter().map(|s| s.cv).collect();
    cvs.sort_by(f64::total_cmp);
    Ok(fractions
        .iter()
        .map(|&p| {
            let rank = (p * cvs.len() as f64).ceil() as usize;
            cvs[rank.max(1) - 1]
        })
        .collect())
}

/// `n` random walks of length `M+2` over `num_sats` satellites. Revisits are
/// allowed; only immediate repeats are forbidden so every hop is a real pair.
/// Deterministic for a given seed.
pub fn sample_paths(num_sats: usize, chain_len: usize, n: usize, seed: u64) -> Vec<Vec<usize>> {
    assert!(num_sats >= 2, "need at least two satellites");
    assert!(chain_len >= 1);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut path = Vec::with_capacity(chain_len + 2);
            path.push(rng.random_range(0..num_sats));
            for _ in 0..chain_len + 1 {
                let prev = *path.last().unwrap();
                // Uniform over the other T-1 satellites.
                let mut next = rng.random_range(0..num_sats - 1);
                if next >= prev {
                    next += 1;
                }
                path.push(next);
            }
            path
        })
        .collect()
}

/// Outcome of a per-path CV computation. A path is excluded when any hop is
/// disconnected in any slot — its delay series is not finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathCv {
    Cv(f64),
    Excluded,
}

impl PathCv {
    pub fn value(self) -> Option<f64> {
        match self {
            PathCv::Cv(v) => Some(v),
            PathCv::Excluded => None,
        }
    }
}

/// CV of the summed hop-delay series of one path, all hops read at the same
/// slot (the stability study looks at the instantaneous total per slot).
pub fn path_cv(tensor: &DelayTensor, path: &[usize]) -> PathCv {
    let mut acc = PathMoments::new(vec![path.to_vec()]);
    for k in 0..tensor.slots() {
        acc.accumulate(tensor.slot_matrix(k));
    }
    acc.finish()[0]
}

/// Streaming per-path moment accumulator, the path analogue of
/// [`crate::pathdelay::PairMoments`]. Welford updates over the per-slot path
/// sums; paths that ever see an infinite hop are excluded.
#[derive(Debug, Clone)]
pub struct PathMoments {
    paths: Vec<Vec<usize>>,
    n: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
    excluded: Vec<bool>,
}

impl PathMoments {
    pub fn new(paths: Vec<Vec<usize>>) -> Self {
        for p in &paths {
            assert!(p.len() >= 2, "path needs at least two satellites");
        }
        let n_paths = paths.len();
        PathMoments {
            paths,
            n: 0,
            mean: vec![0.0; n_paths],
            m2: vec![0.0; n_paths],
            excluded: vec![false; n_paths],
        }
    }

    /// Folds one slot's all-pairs matrix (row-major `T×T`).
    pub fn accumulate(&mut self, slot_matrix: &[f64]) {
        let t = (slot_matrix.len() as f64).sqrt() as usize;
        debug_assert_eq!(t * t, slot_matrix.len());
        self.n += 1;
        for (i, path) in self.paths.iter().enumerate() {
            if self.excluded[i] {
                continue;
            }
            let mut sum = 0.0;
            for hop in path.windows(2) {
                sum += slot_matrix[hop[0] * t + hop[1]];
            }
            if !sum.is_finite() {
                self.excluded[i] = true;
                continue;
            }
            let delta = sum - self.mean[i];
            self.mean[i] += delta / self.n as f64;
            self.m2[i] += delta * (sum - self.mean[i]);
        }
    }

    pub fn finish(&self) -> Vec<PathCv> {
        (0..self.paths.len())
            .map(|i| {
                if self.excluded[i] || self.n == 0 || self.mean[i] <= 0.0 {
                    PathCv::Excluded
                } else {
                    PathCv::Cv((self.m2[i] / self.n as f64).max(0.0).sqrt() / self.mean[i])
                }
            })
            .collect()
    }
}

/// Per-`M` stability report: the surviving per-path CVs, their average, and
/// a plot-ready empirical CDF.
#[derive(Debug, Clone)]
pub struct PathStabilityReport {
    pub chain_len: usize,
    /// CV per sampled path, `None` where the path was excluded.
    pub per_path: Vec<Option<f64>>,
    pub average_cv: f64,
    /// `(x, F(x))` samples of the empirical CDF.
    pub cdf: Vec<(f64, f64)>,
}

impl PathStabilityReport {
    /// Builds the report from per-path outcomes. The CDF is evaluated on
    /// `cdf_points` uniform abscissae over `[0, max cv]`.
    pub fn from_outcomes(chain_len: usize, outcomes: &[PathCv], cdf_points: usize) -> Self {
        let per_path: Vec<Option<f64>> = outcomes.iter().map(|o| o.value()).collect();
        let mut values: Vec<f64> = per_path.iter().flatten().copied().collect();
        values.sort_by(f64::total_cmp);
        let average_cv = if values.is_empty() {
            f64::NAN
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        };
        let cdf = empirical_cdf(&values, cdf_points);
        PathStabilityReport {
            chain_len,
            per_path,
            average_cv,
            cdf,
        }
    }
}

/// Empirical CDF of sorted `values` at `points` uniform abscissae spanning
/// `[0, max]`. Nondecreasing from 0 to 1 by construction.
pub fn empirical_cdf(sorted_values: &[f64], points: usize) -> Vec<(f64, f64)> {
    if sorted_values.is_empty() || points == 0 {
        return Vec::new();
    }
    let max = *sorted_values.last().unwrap();
    let n = sorted_values.len() as f64;
    (0..points)
        .map(|i| {
            let x = if points == 1 {
                max
            } else {
                max * i as f64 / (points - 1) as f64
            };
            let count = sorted_values.partition_point(|&v| v <= x);
            (x, count as f64 / n)
        })
        .collect()
}
