//! Two-stage graph construction, persistence and runtime materialization.

mod file;
mod materialize;

pub use file::{load_index, save_index, FORMAT_VERSION, MAGIC};
pub use materialize::{materialize, SearchGraph};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::graph::{build_exact_knn, build_nndescent_knn, by_dist, mrng_prune, ndg_select};
use crate::metrics::{Dataset, MetricKind};
use crate::search::{SearchParams, Searcher};
use crate::stats::{self_dominator_flags, EXACT_CENSUS_LIMIT};
use crate::util::mix_seed;

/// How stage 1 obtains its K-NN candidates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnnMode {
    Exact,
    NnDescent { iters: usize },
}

impl KnnMode {
    pub const DEFAULT_ITERS: usize = 12;
}

impl std::str::FromStr for KnnMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(KnnMode::Exact),
            "nndescent" => Ok(KnnMode::NnDescent { iters: KnnMode::DEFAULT_ITERS }),
            other => Err(usage(format!("unknown knn mode '{other}' (expected exact|nndescent)"))),
        }
    }
}

/// Construction parameters recorded in the index file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildMeta {
    pub k: usize,
    pub k1: usize,
    pub k2: usize,
    /// Stage-2 pool size; zero when stage 2 has not run.
    pub pool_size: usize,
    pub seed: u64,
    pub knn: KnnMode,
    /// Whether the self-dominator flags come from the exact census.
    pub exact_census: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildParams {
    pub k: usize,
    pub k1: usize,
    pub k2: usize,
    pub pool_size: usize,
    pub seed: u64,
    pub knn: KnnMode,
}

impl Default for BuildParams {
    fn default() -> Self {
        BuildParams { k: 64, k1: 32, k2: 32, pool_size: 100, seed: 0, knn: KnnMode::Exact }
    }
}

/// A graph with Euclidean-pruned edges and inner-product dominator edges per
/// node, kept separately so the mix can be chosen at load time.
#[derive(Clone, Debug, PartialEq)]
pub struct MagIndex {
    pub(crate) dim: usize,
    pub(crate) k1: usize,
    pub(crate) k2: usize,
    pub(crate) euclid: Vec<Vec<u32>>,
    pub(crate) ip: Vec<Vec<u32>>,
    pub(crate) self_dominator: Vec<bool>,
    pub(crate) meta: BuildMeta,
}

impl MagIndex {
    pub fn len(&self) -> usize {
        self.euclid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.euclid.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k1(&self) -> usize {
        self.k1
    }

    pub fn k2(&self) -> usize {
        self.k2
    }

    pub fn meta(&self) -> &BuildMeta {
        &self.meta
    }

    /// Euclidean edges of `node`, nearest first.
    pub fn euclid(&self, node: usize) -> &[u32] {
        &self.euclid[node]
    }

    /// Dominator edges of `node`, largest inner product first.
    pub fn ip(&self, node: usize) -> &[u32] {
        &self.ip[node]
    }

    pub fn self_dominator_flags(&self) -> &[bool] {
        &self.self_dominator
    }

    pub fn euclid_lists(&self) -> &[Vec<u32>] {
        &self.euclid
    }

    pub fn ip_lists(&self) -> &[Vec<u32>] {
        &self.ip
    }

    /// Checks id ranges, self-loops, duplicates and the per-kind ordering.
    pub fn validate(&self, dataset: &Dataset) -> std::result::Result<(), String> {
        let n = self.len();
        if dataset.len() != n || dataset.dim() != self.dim {
            return Err(format!(
                "index is {n}x{} but dataset is {}x{}",
                self.dim,
                dataset.len(),
                dataset.dim()
            ));
        }
        for node in 0..n {
            let x = dataset.row(node);
            for (kind, list, cap, metric) in [
                ("euclid", &self.euclid[node], self.k1, MetricKind::Euclidean),
                ("ip", &self.ip[node], self.k2, MetricKind::InnerProduct),
            ] {
                if list.len() > cap {
                    return Err(format!("node {node}: {} {kind} edges exceed cap {cap}", list.len()));
                }
                let mut seen = list.clone();
                seen.sort_unstable();
                if seen.windows(2).any(|w| w[0] == w[1]) {
                    return Err(format!("node {node}: duplicate {kind} edge"));
                }
                for &e in list {
                    if e as usize >= n {
                        return Err(format!("node {node}: {kind} edge {e} out of range"));
                    }
                    if e as usize == node {
                        return Err(format!("node {node}: {kind} self-loop"));
                    }
                }
                for w in list.windows(2) {
                    let a = (metric.score_unchecked(x, dataset.row(w[0] as usize)), w[0]);
                    let b = (metric.score_unchecked(x, dataset.row(w[1] as usize)), w[1]);
                    if !metric.is_better(a, b) {
                        return Err(format!("node {node}: {kind} edges {} and {} out of order", w[0], w[1]));
                    }
                }
            }
        }
        if self.meta.exact_census && self.self_dominator != self_dominator_flags(dataset) {
            return Err("self-dominator flags disagree with the census".into());
        }
        Ok(())
    }
}

/// Stage 1: each node's K-NN list together with the nodes that list it as a
/// neighbour, MRNG-pruned and truncated to `k1`.
pub fn build_stage1(dataset: &Dataset, k: usize, k1: usize, knn: KnnMode, seed: u64) -> Result<MagIndex> {
    let n = dataset.len();
    if k1 == 0 || k1 > k || k >= n {
        return Err(usage(format!("need 1 <= K1 <= K < n (K1 = {k1}, K = {k}, n = {n})")));
    }
    let graph = match knn {
        KnnMode::Exact => build_exact_knn(dataset, k)?,
        KnnMode::NnDescent { iters } => build_nndescent_knn(dataset, k, seed, iters)?,
    };
    let mut reverse: Vec<Vec<(u32, f32)>> = vec![Vec::new(); n];
    for i in 0..n {
        for &(j, d) in graph.neighbors(i) {
            reverse[j as usize].push((i as u32, d));
        }
    }
    let euclid: Vec<Vec<u32>> = reverse
        .into_par_iter()
        .enumerate()
        .map(|(i, mut cand)| {
            cand.extend_from_slice(graph.neighbors(i));
            cand.sort_unstable_by(by_dist);
            cand.dedup_by_key(|c| c.0);
            mrng_prune(&cand, dataset, k1)
        })
        .collect();
    let exact_census = n <= EXACT_CENSUS_LIMIT;
    let self_dominator = if exact_census { self_dominator_flags(dataset) } else { vec![false; n] };
    Ok(MagIndex {
        dim: dataset.dim(),
        k1,
        k2: 0,
        ip: vec![Vec::new(); n],
        euclid,
        self_dominator,
        meta: BuildMeta { k, k1, k2: 0, pool_size: 0, seed, knn, exact_census },
    })
}

/// Stage 2: per node, an IP greedy search over the stage-1 graph supplies
/// candidates for dominator selection; the survivors become `ip` edges.
pub fn build_stage2(stage1: &MagIndex, dataset: &Dataset, k2: usize, pool_size: usize, seed: u64) -> Result<MagIndex> {
    let n = stage1.len();
    if dataset.len() != n || dataset.dim() != stage1.dim {
        return Err(usage("dataset does not match the stage-1 index"));
    }
    if k2 == 0 {
        return Ok(stage1.clone());
    }
    if pool_size < k2 {
        return Err(usage(format!("stage-2 pool size {pool_size} is below K2 = {k2}")));
    }
    let graph = SearchGraph::from_lists(&stage1.euclid, 0, 0.0);
    let searcher = Searcher::new(&graph, dataset)?;
    let params = SearchParams::new(pool_size, 1);
    let per_node: Vec<(Vec<u32>, bool)> = (0..n)
        .into_par_iter()
        .map_init(
            || searcher.scratch(),
            |scratch, i| {
                let p = params.with_seed(mix_seed(seed, i as u64));
                let res = searcher
                    .ip_search_from(dataset.row(i), &p, &stage1.euclid[i], scratch)
                    .expect("stage-2 search parameters are validated above");
                let first_is_self = res.ids.first() == Some(&(i as u32));
                let candidates: Vec<u32> = res.ids.into_iter().filter(|&id| id as usize != i).collect();
                (ndg_select(&candidates, dataset, k2), first_is_self)
            },
        )
        .collect();
    let mut out = stage1.clone();
    out.k2 = k2;
    out.meta.k2 = k2;
    out.meta.pool_size = pool_size;
    out.meta.seed = seed;
    let mut ip = Vec::with_capacity(n);
    for (i, (edges, first_is_self)) in per_node.into_iter().enumerate() {
        ip.push(edges);
        if !out.meta.exact_census {
            out.self_dominator[i] = first_is_self;
        }
    }
    out.ip = ip;
    Ok(out)
}

/// Both stages with one seed.
pub fn build_index(dataset: &Dataset, params: &BuildParams) -> Result<MagIndex> {
    let s1 = build_stage1(dataset, params.k, params.k1, params.knn, params.seed)?;
    build_stage2(&s1, dataset, params.k2, params.pool_size, params.seed)
}
