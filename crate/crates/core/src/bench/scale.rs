use serde::{Deserialize, Serialize};

use crate::bench::{generate_synthetic, matched_recall, SyntheticKind, SyntheticSpec};
use crate::error::{usage, Result};
use crate::index::{build_index, materialize, BuildParams};
use crate::metrics::MetricKind;
use crate::oracle::compute_ground_truth;
use crate::search::{SearchParams, Searcher};
use crate::util::mix_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub ns: Vec<usize>,
    pub dim: usize,
    pub seed: u64,
    pub k: usize,
    pub k1: usize,
    pub k2: usize,
    pub build_pool: usize,
    pub knn: crate::index::KnnMode,
    pub r: usize,
    pub alpha: f64,
    pub m: usize,
    pub topk: usize,
    pub queries: usize,
    pub target: f64,
    pub max_ls: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            ns: vec![1_000, 4_000, 16_000, 64_000],
            dim: 16,
            seed: 0,
            k: 32,
            k1: 24,
            k2: 24,
            build_pool: 64,
            knn: crate::index::KnnMode::NnDescent { iters: crate::index::KnnMode::DEFAULT_ITERS },
            r: 32,
            alpha: 0.5,
            m: 0,
            topk: 10,
            queries: 100,
            target: 0.95,
            max_ls: 4096,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    /// False when the recall target was not met within `max_ls`.
    pub reached: bool,
    pub ls: usize,
    pub recall: f64,
    pub dist_comps: f64,
    pub hops: f64,
}

impl ScalingRow {
    pub const CSV_HEADER: &'static str = "n,reached,ls,recall,dist_comps,hops";

    pub fn to_csv_row(&self) -> String {
        format!("{},{},{},{:.6},{:.2},{:.2}", self.n, self.reached, self.ls, self.recall, self.dist_comps, self.hops)
    }
}

/// Gaussian data at each size (nested prefixes of one draw), a shared query
/// panel, and the mean distance computations at the smallest pool size that
/// meets the recall target.
pub fn run_scaling_study(cfg: &ScalingConfig) -> Result<Vec<ScalingRow>> {
    let n_max = *cfg.ns.iter().max().ok_or_else(|| usage("no sizes given"))?;
    let full = generate_synthetic(&SyntheticSpec::new(SyntheticKind::GaussianIid, n_max, cfg.dim, cfg.seed))?;
    let queries = generate_synthetic(&SyntheticSpec::new(
        SyntheticKind::GaussianIid,
        cfg.queries,
        cfg.dim,
        mix_seed(cfg.seed, u64::MAX),
    ))?;
    let mut rows = Vec::with_capacity(cfg.ns.len());
    for &n in &cfg.ns {
        let data = full.prefix(n)?;
        let bp = BuildParams { k: cfg.k, k1: cfg.k1, k2: cfg.k2, pool_size: cfg.build_pool, seed: cfg.seed, knn: cfg.knn };
        let index = build_index(&data, &bp)?;
        let graph = materialize(&index, cfg.r, cfg.alpha)?;
        let gt = compute_ground_truth(&data, &queries, cfg.topk, MetricKind::InnerProduct)?;
        let searcher = Searcher::new(&graph, &data)?;
        let base = SearchParams::new(cfg.topk, cfg.topk).with_switch(cfg.m).with_seed(cfg.seed);
        let hit = matched_recall(&searcher, &queries, gt.rows(), &base, cfg.target, cfg.max_ls.min(n))?;
        rows.push(match hit {
            Some(p) => ScalingRow { n, reached: true, ls: p.ls, recall: p.recall, dist_comps: p.dist_comps, hops: p.hops },
            None => ScalingRow { n, reached: false, ls: 0, recall: 0.0, dist_comps: f64::NAN, hops: f64::NAN },
        });
    }
    Ok(rows)
}
