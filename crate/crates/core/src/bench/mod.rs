//! Measurement harness: recall, throughput sweeps, scaling and self-checks.

mod scale;
mod synthetic;
mod verify;

pub use scale::{run_scaling_study, ScalingConfig, ScalingRow};
pub use synthetic::{blob_layout, generate_synthetic, perturbed_queries, SyntheticKind, SyntheticSpec};
pub use verify::{verify_suite, CheckItem, CheckStatus, VerifyConfig, VerifyReport};

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::index::SearchGraph;
use crate::metrics::Dataset;
use crate::oracle::GroundTruth;
use crate::search::{EntryPolicy, SearchParams, Searcher};

pub const CSV_HEADER: &str = "ls,alpha,m,R,recall,qps,dist_comps,hops";

/// Mean `|R ∩ R'| / k` over queries, where `R'` is the first `k` ground-truth
/// ids and `R` the first `k` result ids.
pub fn recall_at_k<A: AsRef<[u32]>, B: AsRef<[u32]>>(results: &[A], gt: &[B], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(usage("k must be positive"));
    }
    if results.len() != gt.len() {
        return Err(usage(format!("{} result rows but {} ground-truth rows", results.len(), gt.len())));
    }
    if results.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (r, g) in results.iter().zip(gt) {
        let g = g.as_ref();
        if g.len() < k {
            return Err(usage(format!("ground-truth row has {} ids, fewer than k = {k}", g.len())));
        }
        let truth = &g[..k];
        let r = r.as_ref();
        let hits = r[..r.len().min(k)].iter().filter(|id| truth.contains(id)).count();
        total += hits as f64 / k as f64;
    }
    Ok(total / results.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub ls: usize,
    pub alpha: f64,
    pub m: usize,
    pub r: usize,
    pub recall: f64,
    pub qps: f64,
    pub dist_comps: f64,
    pub hops: f64,
}

impl BenchRecord {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{:.1},{:.2},{:.2}",
            self.ls, self.alpha, self.m, self.r, self.recall, self.qps, self.dist_comps, self.hops
        )
    }
}

/// Writes a `#`-prefixed JSON echo of `config`, the header and one row per record.
pub fn write_csv<W: Write, C: Serialize>(mut out: W, config: &C, records: &[BenchRecord]) -> Result<()> {
    let echo = serde_json::to_string(config).map_err(|e| usage(e.to_string()))?;
    writeln!(out, "# {echo}")?;
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.to_csv_row())?;
    }
    Ok(())
}

/// Per-query outputs of one pass over a query panel, in query order.
#[derive(Clone, Debug, PartialEq)]
pub struct PanelRun {
    pub ids: Vec<Vec<u32>>,
    pub dist_comps: Vec<u64>,
    pub hops: Vec<u64>,
}

impl PanelRun {
    pub fn mean_dist_comps(&self) -> f64 {
        mean(&self.dist_comps)
    }

    pub fn mean_hops(&self) -> f64 {
        mean(&self.hops)
    }
}

fn mean(v: &[u64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<u64>() as f64 / v.len() as f64
    }
}

/// Metric-switch search over every query; query `i` uses `params.for_query(i)`.
pub fn run_panel(searcher: &Searcher<'_>, queries: &Dataset, params: &SearchParams) -> Result<PanelRun> {
    let out: Vec<_> = (0..queries.len())
        .into_par_iter()
        .map_init(
            || searcher.scratch(),
            |scratch, i| searcher.anms(queries.row(i), &params.for_query(i), scratch),
        )
        .collect::<Result<Vec<_>>>()?;
    let mut run = PanelRun { ids: Vec::with_capacity(out.len()), dist_comps: Vec::new(), hops: Vec::new() };
    for r in out {
        run.dist_comps.push(r.stats.dist_comps);
        run.hops.push(r.stats.hops);
        run.ids.push(r.ids);
    }
    Ok(run)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub ls: Vec<usize>,
    pub r: usize,
    pub alpha: f64,
    pub m: usize,
    pub k: usize,
    /// Query-loop workers; 0 uses the global pool.
    pub threads: usize,
    pub reps: usize,
    pub seed: u64,
    pub entry: EntryPolicy,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            ls: vec![100, 200, 400],
            r: 32,
            alpha: 0.5,
            m: 0,
            k: 100,
            threads: 0,
            reps: 3,
            seed: 0,
            entry: EntryPolicy::RandomSeeded,
        }
    }
}

pub(crate) fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| usage(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// One record per pool size. Only the query loop is timed; throughput is
/// the mean over `reps` repetitions.
pub fn run_benchmark(
    graph: &SearchGraph,
    dataset: &Dataset,
    queries: &Dataset,
    gt: &GroundTruth,
    cfg: &BenchConfig,
) -> Result<Vec<BenchRecord>> {
    if queries.dim() != dataset.dim() {
        return Err(usage("query dimension differs from dataset"));
    }
    if gt.len() != queries.len() {
        return Err(usage(format!("ground truth has {} rows for {} queries", gt.len(), queries.len())));
    }
    if gt.k() < cfg.k {
        return Err(usage(format!("ground truth holds {} ids per query, fewer than k = {}", gt.k(), cfg.k)));
    }
    let searcher = Searcher::new(graph, dataset)?;
    if cfg.entry == EntryPolicy::FixedMedoid {
        searcher.medoid();
    }
    let reps = cfg.reps.max(1);
    let mut records = Vec::with_capacity(cfg.ls.len());
    for &ls in &cfg.ls {
        let params = SearchParams { pool_size: ls, k: cfg.k, switch_steps: cfg.m, seed: cfg.seed, entry: cfg.entry };
        let mut secs = 0.0;
        let mut first = None;
        for _ in 0..reps {
            let t = Instant::now();
            let run = with_threads(cfg.threads, || run_panel(&searcher, queries, &params))??;
            secs += t.elapsed().as_secs_f64();
            first.get_or_insert(run);
        }
        let run = first.expect("at least one repetition");
        let mean_secs = secs / reps as f64;
        records.push(BenchRecord {
            ls,
            alpha: graph.alpha(),
            m: cfg.m,
            r: graph.r(),
            recall: recall_at_k(&run.ids, gt.rows(), cfg.k)?,
            qps: if mean_secs > 0.0 { queries.len() as f64 / mean_secs } else { f64::INFINITY },
            dist_comps: run.mean_dist_comps(),
            hops: run.mean_hops(),
        });
    }
    Ok(records)
}

/// Smallest-pool operating point that reaches a recall target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedPoint {
    pub ls: usize,
    pub recall: f64,
    pub dist_comps: f64,
    pub hops: f64,
}

/// Finds the smallest pool size in `[k, max_ls]` whose panel recall meets
/// `target`, by doubling then bisection (recall is treated as monotone in
/// the pool size). `None` when even `max_ls` falls short.
pub fn matched_recall(
    searcher: &Searcher<'_>,
    queries: &Dataset,
    gt: &[Vec<u32>],
    base: &SearchParams,
    target: f64,
    max_ls: usize,
) -> Result<Option<MatchedPoint>> {
    let k = base.k;
    let eval = |ls: usize| -> Result<MatchedPoint> {
        let run = run_panel(searcher, queries, &SearchParams { pool_size: ls, ..*base })?;
        Ok(MatchedPoint {
            ls,
            recall: recall_at_k(&run.ids, gt, k)?,
            dist_comps: run.mean_dist_comps(),
            hops: run.mean_hops(),
        })
    };
    let mut lo = k;
    let first = eval(lo)?;
    if first.recall >= target {
        return Ok(Some(first));
    }
    let mut hi_point = None;
    let mut hi = lo;
    while hi < max_ls {
        hi = (hi * 2).min(max_ls);
        let p = eval(hi)?;
        if p.recall >= target {
            hi_point = Some(p);
            break;
        }
        lo = hi;
    }
    let Some(mut best) = hi_point else { return Ok(None) };
    while best.ls - lo > 1 {
        let mid = lo + (best.ls - lo) / 2;
        let p = eval(mid)?;
        if p.recall >= target {
            best = p;
        } else {
            lo = mid;
        }
    }
    Ok(Some(best))
}

#[cfg(test)]
mod tests;
