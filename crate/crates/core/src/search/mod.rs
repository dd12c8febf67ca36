//! Greedy best-first graph search and the Euclidean-then-IP metric switch.

mod duality;
mod pool;

pub use duality::{trace_agreement, verify_scaling_duality, DualityReport};

use std::sync::OnceLock;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::index::SearchGraph;
use crate::metrics::{dot_unchecked, l2_and_dot_unchecked, l2_unchecked, Dataset, MetricKind};
use crate::util::mix_seed;
use pool::{Candidate, CandidatePool};

/// How the candidate pool is seeded before the first expansion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntryPolicy {
    /// `l_s` distinct uniformly random ids drawn from the query's seed.
    #[default]
    RandomSeeded,
    /// The Euclidean medoid and its graph neighbours.
    FixedMedoid,
    /// A single given node.
    Single(u32),
}

impl std::str::FromStr for EntryPolicy {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(EntryPolicy::RandomSeeded),
            "medoid" => Ok(EntryPolicy::FixedMedoid),
            other => Err(usage(format!("unknown entry policy '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Candidate pool capacity `l_s`.
    pub pool_size: usize,
    pub k: usize,
    /// Expansions run under the Euclidean metric before switching to IP.
    pub switch_steps: usize,
    pub seed: u64,
    pub entry: EntryPolicy,
}

impl SearchParams {
    pub fn new(pool_size: usize, k: usize) -> Self {
        SearchParams { pool_size, k, switch_steps: 0, seed: 0, entry: EntryPolicy::RandomSeeded }
    }

    pub fn with_switch(mut self, m: usize) -> Self {
        self.switch_steps = m;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_entry(mut self, entry: EntryPolicy) -> Self {
        self.entry = entry;
        self
    }

    /// Same parameters with a seed derived from `(seed, query_index)`.
    pub fn for_query(&self, query_index: usize) -> Self {
        SearchParams { seed: mix_seed(self.seed, query_index as u64), ..*self }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.pool_size {
            return Err(usage(format!(
                "need 1 <= k <= pool size (k = {}, l_s = {})",
                self.k, self.pool_size
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    /// Candidate scorings, including the initial pool.
    pub dist_comps: u64,
    /// Node expansions.
    pub hops: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    /// Best-first result ids.
    pub ids: Vec<u32>,
    /// Scores matching `ids` under the final metric.
    pub scores: Vec<f32>,
    pub stats: SearchStats,
}

/// Per-worker reusable state: pool and epoch-stamped seen table.
#[derive(Debug)]
pub struct SearchScratch {
    stamps: Vec<u32>,
    epoch: u32,
    pool: CandidatePool,
}

impl SearchScratch {
    pub fn new(n: usize) -> Self {
        SearchScratch { stamps: vec![0; n], epoch: 0, pool: CandidatePool::new(0, MetricKind::InnerProduct) }
    }

    fn begin(&mut self, n: usize) {
        if self.stamps.len() != n {
            self.stamps = vec![0; n];
            self.epoch = 0;
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamps.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    /// Re-sorts the pool by inner product. Ids scored earlier but no longer
    /// pooled become eligible again, since their rank may differ under IP.
    fn switch_to_inner_product(&mut self, n: usize) {
        self.pool.switch_to_inner_product();
        self.begin(n);
        for c in self.pool.entries() {
            self.stamps[c.id as usize] = self.epoch;
        }
    }

    #[inline]
    fn see(&mut self, id: u32) -> bool {
        let s = &mut self.stamps[id as usize];
        if *s == self.epoch {
            false
        } else {
            *s = self.epoch;
            true
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Fixed(MetricKind),
    /// Euclidean for `m` expansions, then inner product.
    Switch(usize),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Scoring {
    Ip,
    L2,
    L2WithIp,
}

/// Search over an immutable [`SearchGraph`] and its vectors. Shareable
/// across threads; each query owns a [`SearchScratch`].
#[derive(Debug)]
pub struct Searcher<'a> {
    graph: &'a SearchGraph,
    dataset: &'a Dataset,
    medoid: OnceLock<u32>,
    check_invariants: bool,
}

impl<'a> Searcher<'a> {
    pub fn new(graph: &'a SearchGraph, dataset: &'a Dataset) -> Result<Self> {
        if graph.is_empty() {
            return Err(usage("search graph is empty"));
        }
        if graph.len() != dataset.len() {
            return Err(usage(format!(
                "graph has {} nodes but dataset has {} vectors",
                graph.len(),
                dataset.len()
            )));
        }
        Ok(Searcher { graph, dataset, medoid: OnceLock::new(), check_invariants: false })
    }

    /// Checks the pool invariants after every expansion and fails the query
    /// with [`crate::Error::Invariant`] on the first violation.
    pub fn with_invariant_checks(mut self, on: bool) -> Self {
        self.check_invariants = on;
        self
    }

    /// Uses a precomputed medoid instead of scanning the dataset on first use.
    pub fn with_medoid(self, id: u32) -> Result<Self> {
        if id as usize >= self.dataset.len() {
            return Err(usage(format!("medoid {id} out of range")));
        }
        let _ = self.medoid.set(id);
        Ok(self)
    }

    pub fn graph(&self) -> &SearchGraph {
        self.graph
    }

    pub fn dataset(&self) -> &Dataset {
        self.dataset
    }

    pub fn scratch(&self) -> SearchScratch {
        SearchScratch::new(self.dataset.len())
    }

    /// Point nearest (Euclidean) to the dataset mean.
    pub fn medoid(&self) -> u32 {
        *self.medoid.get_or_init(|| medoid(self.dataset))
    }

    /// Greedy search under a single metric.
    pub fn greedy(&self, q: &[f32], params: &SearchParams, metric: MetricKind, scratch: &mut SearchScratch) -> Result<SearchResult> {
        self.run(q, params, Mode::Fixed(metric), None, scratch, None)
    }

    /// Euclidean navigation for `params.switch_steps` expansions, then IP
    /// navigation over the same pool until no unvisited candidate remains.
    pub fn anms(&self, q: &[f32], params: &SearchParams, scratch: &mut SearchScratch) -> Result<SearchResult> {
        self.run(q, params, Mode::Switch(params.switch_steps), None, scratch, None)
    }

    /// [`Searcher::greedy`] that also records the expanded ids in order.
    pub fn greedy_traced(
        &self,
        q: &[f32],
        params: &SearchParams,
        metric: MetricKind,
        scratch: &mut SearchScratch,
        trace: &mut Vec<u32>,
    ) -> Result<SearchResult> {
        self.run(q, params, Mode::Fixed(metric), None, scratch, Some(trace))
    }

    pub fn anms_traced(
        &self,
        q: &[f32],
        params: &SearchParams,
        scratch: &mut SearchScratch,
        trace: &mut Vec<u32>,
    ) -> Result<SearchResult> {
        self.run(q, params, Mode::Switch(params.switch_steps), None, scratch, Some(trace))
    }

    /// IP greedy search whose pool starts from `seeds`, topped up with random
    /// ids to `l_s`. Returns the whole final pool, best-first.
    pub(crate) fn ip_search_from(
        &self,
        q: &[f32],
        params: &SearchParams,
        seeds: &[u32],
        scratch: &mut SearchScratch,
    ) -> Result<SearchResult> {
        let full = SearchParams { k: params.pool_size.min(self.dataset.len()), ..*params };
        self.run(q, &full, Mode::Fixed(MetricKind::InnerProduct), Some(seeds), scratch, None)
    }

    fn initial_ids(&self, params: &SearchParams, seeds: Option<&[u32]>) -> Vec<u32> {
        let n = self.dataset.len();
        let ls = params.pool_size;
        let random_fill = |taken: &mut Vec<u32>| {
            if taken.len() >= ls.min(n) {
                return;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            if ls >= n {
                taken.extend(0..n as u32);
            } else {
                taken.extend(sample(&mut rng, n, ls).into_iter().map(|i| i as u32));
            }
        };
        match (seeds, params.entry) {
            (Some(s), _) => {
                let mut ids = s.to_vec();
                random_fill(&mut ids);
                ids
            }
            (None, EntryPolicy::RandomSeeded) => {
                let mut ids = Vec::with_capacity(ls.min(n));
                random_fill(&mut ids);
                ids
            }
            (None, EntryPolicy::Single(id)) => vec![id],
            (None, EntryPolicy::FixedMedoid) => {
                let m = self.medoid();
                let mut ids = vec![m];
                ids.extend_from_slice(self.graph.neighbors(m as usize));
                ids
            }
        }
    }

    fn run(
        &self,
        q: &[f32],
        params: &SearchParams,
        mode: Mode,
        seeds: Option<&[u32]>,
        scratch: &mut SearchScratch,
        mut trace: Option<&mut Vec<u32>>,
    ) -> Result<SearchResult> {
        self.dataset.check_query(q)?;
        params.validate()?;
        let n = self.dataset.len();
        if let EntryPolicy::Single(id) = params.entry {
            if id as usize >= n {
                return Err(usage(format!("entry node {id} out of range")));
            }
        }
        if params.k > n {
            return Err(usage(format!("k = {} exceeds dataset size {n}", params.k)));
        }
        let (mut scoring, start_metric, switch_at) = match mode {
            Mode::Fixed(MetricKind::InnerProduct) | Mode::Switch(0) => (Scoring::Ip, MetricKind::InnerProduct, None),
            Mode::Fixed(MetricKind::Euclidean) => (Scoring::L2, MetricKind::Euclidean, None),
            Mode::Switch(m) => (Scoring::L2WithIp, MetricKind::Euclidean, Some(m)),
        };
        let data = self.dataset;
        let score = |scoring: Scoring, id: u32| -> (f32, f32) {
            let x = data.row(id as usize);
            match scoring {
                Scoring::Ip => {
                    let s = dot_unchecked(q, x);
                    (s, s)
                }
                Scoring::L2 => (l2_unchecked(q, x), 0.0),
                Scoring::L2WithIp => l2_and_dot_unchecked(q, x),
            }
        };

        scratch.begin(n);
        let mut stats = SearchStats::default();
        let init = self.initial_ids(params, seeds);
        let mut first = Vec::with_capacity(init.len());
        for id in init {
            if scratch.see(id) {
                let (s, ip) = score(scoring, id);
                stats.dist_comps += 1;
                first.push(Candidate { id, score: s, ip, visited: false });
            }
        }
        scratch.pool.reset(params.pool_size, start_metric);
        scratch.pool.fill(first);

        let mut cursor = 0usize;
        let mut expansions = 0usize;
        loop {
            if let Some(m) = switch_at {
                if scoring == Scoring::L2WithIp && expansions >= m {
                    scratch.switch_to_inner_product(n);
                    scoring = Scoring::Ip;
                    cursor = 0;
                }
            }
            let Some(pos) = scratch.pool.first_unvisited(cursor) else {
                if scoring == Scoring::L2WithIp {
                    // pool exhausted before m expansions
                    scratch.switch_to_inner_product(n);
                    scoring = Scoring::Ip;
                    cursor = 0;
                    continue;
                }
                break;
            };
            let node = scratch.pool.mark_visited(pos);
            expansions += 1;
            stats.hops += 1;
            if let Some(t) = trace.as_deref_mut() {
                t.push(node);
            }
            let mut lowest = pos + 1;
            for &nb in self.graph.neighbors(node as usize) {
                if !scratch.see(nb) {
                    continue;
                }
                let (s, ip) = score(scoring, nb);
                stats.dist_comps += 1;
                if let Some(p) = scratch.pool.insert(Candidate { id: nb, score: s, ip, visited: false }) {
                    lowest = lowest.min(p);
                }
            }
            cursor = lowest.min(pos);
            if self.check_invariants {
                if let Err(e) = scratch.pool.check_invariants() {
                    return Err(Error::Invariant(format!("pool after expanding {node}: {e}")));
                }
            }
        }

        let take = params.k.min(scratch.pool.len());
        let top = &scratch.pool.entries()[..take];
        Ok(SearchResult {
            ids: top.iter().map(|c| c.id).collect(),
            scores: top.iter().map(|c| c.score).collect(),
            stats,
        })
    }
}

/// Index of the point nearest to the coordinate-wise mean.
pub fn medoid(dataset: &Dataset) -> u32 {
    let dim = dataset.dim();
    let mut mean = vec![0.0f64; dim];
    for r in dataset.rows() {
        for (m, &v) in mean.iter_mut().zip(r) {
            *m += v as f64;
        }
    }
    let n = dataset.len() as f64;
    let mean: Vec<f32> = mean.into_iter().map(|v| (v / n) as f32).collect();
    let mut best = (f32::INFINITY, 0u32);
    for (i, r) in dataset.rows().enumerate() {
        let d = l2_unchecked(&mean, r);
        if MetricKind::Euclidean.is_better((d, i as u32), best) {
            best = (d, i as u32);
        }
    }
    best.1
}

/// One-shot greedy search; allocates its own scratch.
pub fn greedy_search(
    graph: &SearchGraph,
    dataset: &Dataset,
    q: &[f32],
    params: &SearchParams,
    metric: MetricKind,
) -> Result<SearchResult> {
    let s = Searcher::new(graph, dataset)?;
    let mut scratch = s.scratch();
    s.greedy(q, params, metric, &mut scratch)
}

/// One-shot metric-switch search; allocates its own scratch.
pub fn anms_search(graph: &SearchGraph, dataset: &Dataset, q: &[f32], params: &SearchParams) -> Result<SearchResult> {
    let s = Searcher::new(graph, dataset)?;
    let mut scratch = s.scratch();
    s.anms(q, params, &mut scratch)
}
