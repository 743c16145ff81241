//! The offline sweep: per-slot snapshots and all-pairs delays, reduced into
//! averaging and stability accumulators without retaining the tensor.
//!
//! Slots are produced in parallel chunks but folded strictly in grid order,
//! so every reduction is independent of the worker count — a requirement for
//! byte-identical artifacts.

use rayon::prelude::*;

use crate::orbital::ConstellationConfig;
use crate::pathdelay::{all_pairs_delays, AvgDelayMatrix, PairMoments};
use crate::stability::{PathCv, PathMoments};
use crate::topology::build_snapshot;

/// Slots computed concurrently per chunk. Bounds in-flight memory to
/// `CHUNK × T²` doubles.
const CHUNK: usize = 32;

/// Streams every grid slot through the given accumulators.
fn sweep_slots(cfg: &ConstellationConfig, mut fold: impl FnMut(&[f64])) {
    let slots = cfg.slot_count();
    let mut start = 0;
    while start < slots {
        let end = (start + CHUNK).min(slots);
        let chunk: Vec<Vec<f64>> = (start..end)
            .into_par_iter()
            .map(|k| all_pairs_delays(&build_snapshot(cfg, k as f64 * cfg.dt_s)))
            .collect();
        for matrix in &chunk {
            fold(matrix);
        }
        start = end;
    }
}

/// One pass over the grid producing the time-averaged delay matrix.
pub fn sweep_average(cfg: &ConstellationConfig) -> AvgDelayMatrix {
    let mut pairs = PairMoments::new(cfg.total_sats());
    sweep_slots(cfg, |m| pairs.accumulate(m));
    pairs.finish()
}

/// One pass over the grid producing per-path CV outcomes for each path set
/// (typically one set per chain length).
pub fn sweep_path_cvs(cfg: &ConstellationConfig, path_sets: &[Vec<Vec<usize>>]) -> Vec<Vec<PathCv>> {
    let mut accs: Vec<PathMoments> = path_sets.iter().map(|p| PathMoments::new(p.clone())).collect();
    sweep_slots(cfg, |m| {
        for acc in &mut accs {
            acc.accumulate(m);
        }
    });
    accs.iter().map(PathMoments::finish).collect()
}

/// Average matrix and path CVs from a single pass, for full studies where a
/// second sweep would double the dominant cost.
pub fn sweep_average_and_paths(
    cfg: &ConstellationConfig,
    path_sets: &[Vec<Vec<usize>>],
) -> (AvgDelayMatrix, Vec<Vec<PathCv>>) {
    let mut pairs = PairMoments::new(cfg.total_sats());
    let mut accs: Vec<PathMoments> = path_sets.iter().map(|p| PathMoments::new(p.clone())).collect();
    sweep_slots(cfg, |m| {
        pairs.accumulate(m);
        for acc in &mut accs {
            acc.accumulate(m);
        }
    });
    (pairs.finish(), accs.iter().map(PathMoments::finish).collect())
}
