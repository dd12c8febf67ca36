//! Exact brute-force top-k, the reference every search is checked against.
//!
//! Scores are accumulated in `f64` so the oracle out-precisions the engine.

use rayon::prelude::*;

use crate::error::{usage, Result};
use crate::io::{read_ivecs, write_ivecs};
use crate::metrics::{Dataset, MetricKind};
use std::path::Path;

/// Per-query exact result ids, best-first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTruth {
    k: usize,
    metric: MetricKind,
    rows: Vec<Vec<u32>>,
}

impl GroundTruth {
    pub fn new(k: usize, metric: MetricKind, rows: Vec<Vec<u32>>) -> Result<Self> {
        if k == 0 {
            return Err(usage("ground truth k must be at least 1"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(usage(format!("ground truth row {i} has {} ids, expected {k}", row.len())));
            }
            let mut sorted = row.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != k {
                return Err(usage(format!("ground truth row {i} has duplicate ids")));
            }
        }
        Ok(GroundTruth { k, metric, rows })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_ivecs(&self, path: impl AsRef<Path>) -> Result<()> {
        let rows: Vec<Vec<i32>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&v| v as i32).collect())
            .collect();
        write_ivecs(&rows, path)
    }

    /// Loads ids written by [`GroundTruth::write_ivecs`]; the metric is not
    /// stored in the file and must be supplied.
    pub fn read_ivecs(path: impl AsRef<Path>, metric: MetricKind) -> Result<Self> {
        let raw = read_ivecs(path)?;
        let k = raw.first().map_or(0, Vec::len);
        let rows = raw
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|v| u32::try_from(v).map_err(|_| usage(format!("negative id {v}"))))
                    .collect::<Result<Vec<u32>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        GroundTruth::new(k, metric, rows)
    }
}

/// Scores every point and returns the `k` best `(id, score)` pairs.
pub fn brute_force_scored(dataset: &Dataset, q: &[f32], k: usize, metric: MetricKind) -> Result<Vec<(u32, f64)>> {
    dataset.check_query(q)?;
    let n = dataset.len();
    if k == 0 || k > n {
        return Err(usage(format!("k = {k} must lie in 1..={n}")));
    }
    let mut scored: Vec<(f64, u32)> = dataset
        .rows()
        .enumerate()
        .map(|(i, x)| (metric.score_f64(q, x), i as u32))
        .collect();
    let cmp = |a: &(f64, u32), b: &(f64, u32)| metric.compare_f64(*a, *b);
    if k < n {
        scored.select_nth_unstable_by(k - 1, cmp);
        scored.truncate(k);
    }
    scored.sort_unstable_by(cmp);
    Ok(scored.into_iter().map(|(s, i)| (i, s)).collect())
}

/// The exact top-`k` ids under `metric`, best-first, ties to the lower id.
pub fn brute_force_topk(dataset: &Dataset, q: &[f32], k: usize, metric: MetricKind) -> Result<Vec<u32>> {
    Ok(brute_force_scored(dataset, q, k, metric)?
        .into_iter()
        .map(|(i, _)| i)
        .collect())
}

pub fn compute_ground_truth(
    dataset: &Dataset,
    queries: &Dataset,
    k: usize,
    metric: MetricKind,
) -> Result<GroundTruth> {
    if queries.dim() != dataset.dim() {
        return Err(usage(format!(
            "queries have dimension {} but dataset has {}",
            queries.dim(),
            dataset.dim()
        )));
    }
    let rows = (0..queries.len())
        .into_par_iter()
        .map(|i| brute_force_topk(dataset, queries.row(i), k, metric))
        .collect::<Result<Vec<_>>>()?;
    GroundTruth::new(k, metric, rows)
}
