//! Data-topology indicators used to pick `alpha` and `m`.

mod dominators;
mod kmeans;

pub use dominators::{
    dominator_probability, dominator_probability_mc, estimate_nn_angle, expected_self_dominators,
    is_self_dominator, self_dominator_flags, self_dominator_fraction, self_dominator_set,
};
pub use kmeans::{kmeans, Clustering, DEFAULT_MAX_ITER};

use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::metrics::{dot_f64, l2_f64, Dataset};

/// Default cluster count for the Davies-Bouldin indicators.
pub const DEFAULT_CLUSTERS: usize = 16;
/// Largest `n` for which the self-dominator census is exact.
pub const EXACT_CENSUS_LIMIT: usize = 20_000;
const CENSUS_SAMPLE: usize = 2_000;

/// Distance used for clustering and the Davies-Bouldin index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterMetric {
    Euclidean,
    /// `1 − cos(x, y)` over unit-normalized vectors.
    Cosine,
}

/// Population standard deviation of the norms over their mean.
pub fn coefficient_of_variation(dataset: &Dataset) -> Result<f64> {
    if dataset.len() < 2 {
        return Err(usage("coefficient of variation needs at least two vectors"));
    }
    let norms: Vec<f64> = dataset.rows().map(|r| dot_f64(r, r).sqrt()).collect();
    let n = norms.len() as f64;
    let mean = norms.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return Err(usage("all vectors are zero; coefficient of variation undefined"));
    }
    let var = norms.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(var.sqrt() / mean)
}

/// `(1/N) Σᵢ maxⱼ≠ᵢ (σᵢ + σⱼ) / d(cᵢ, cⱼ)` with `σᵢ` the mean member distance
/// to centroid `cᵢ`. Euclidean distances are unsquared.
pub fn davies_bouldin(dataset: &Dataset, clustering: &Clustering, metric: ClusterMetric) -> Result<f64> {
    let k = clustering.n_clusters;
    if k < 2 {
        return Err(usage("Davies-Bouldin index needs at least two clusters"));
    }
    if clustering.assignment.len() != dataset.len() || clustering.centroids.len() != k {
        return Err(usage("clustering does not match dataset"));
    }
    let dist = |a: &[f32], b: &[f32]| -> f64 {
        match metric {
            ClusterMetric::Euclidean => l2_f64(a, b).sqrt(),
            ClusterMetric::Cosine => {
                let na = dot_f64(a, a).sqrt();
                let nb = dot_f64(b, b).sqrt();
                1.0 - dot_f64(a, b) / (na * nb)
            }
        }
    };
    if metric == ClusterMetric::Cosine
        && (dataset.rows().any(|r| dot_f64(r, r) == 0.0)
            || clustering.centroids.iter().any(|c| dot_f64(c, c) == 0.0))
    {
        return Err(usage("cosine Davies-Bouldin index rejects zero vectors"));
    }

    let mut spread = vec![0.0f64; k];
    let mut counts = vec![0usize; k];
    for (row, &a) in dataset.rows().zip(&clustering.assignment) {
        spread[a as usize] += dist(row, &clustering.centroids[a as usize]);
        counts[a as usize] += 1;
    }
    for (s, &c) in spread.iter_mut().zip(&counts) {
        if c == 0 {
            return Err(Error::Degenerate("empty cluster".into()));
        }
        *s /= c as f64;
    }

    let mut total = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..k {
            if i == j {
                continue;
            }
            let sep = dist(&clustering.centroids[i], &clustering.centroids[j]);
            if sep <= 0.0 {
                return Err(Error::Degenerate(format!("centroids {i} and {j} coincide")));
            }
            worst = worst.max((spread[i] + spread[j]) / sep);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// One row of dataset indicators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub n: usize,
    pub dim: usize,
    pub cv: f64,
    pub dbi_euclidean: f64,
    pub dbi_cosine: f64,
    pub self_dominator_fraction: f64,
    pub n_clusters: usize,
}

impl StatsReport {
    pub const CSV_HEADER: &'static str = "n,dim,cv,dbi_euclidean,dbi_cosine,self_dominator_fraction,n_clusters,hint";

    /// Tuning direction: CV ≥ 0.1 or weak clustering (DBI > 2 under both
    /// metrics) argues for more IP edges and fewer Euclidean steps; the
    /// opposite readings argue for the reverse.
    pub fn tuning_hint(&self) -> &'static str {
        let high_cv = self.cv >= 0.1;
        let clustered = self.dbi_euclidean <= 2.0 || self.dbi_cosine <= 2.0;
        match (high_cv, clustered) {
            (true, false) => "ip-oriented: raise alpha, lower m",
            (false, true) => "euclidean-oriented: lower alpha, raise m",
            _ => "mixed: start near alpha=0.5 and sweep m",
        }
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{},{}",
            self.n,
            self.dim,
            self.cv,
            self.dbi_euclidean,
            self.dbi_cosine,
            self.self_dominator_fraction,
            self.n_clusters,
            self.tuning_hint()
        )
    }
}

/// CV, both Davies-Bouldin variants and the self-dominator share.
pub fn compute_stats(dataset: &Dataset, n_clusters: usize, seed: u64) -> Result<StatsReport> {
    let cv = coefficient_of_variation(dataset)?;
    let euc = kmeans(dataset, n_clusters, ClusterMetric::Euclidean, seed, DEFAULT_MAX_ITER)?;
    let dbi_euclidean = davies_bouldin(dataset, &euc, ClusterMetric::Euclidean)?;
    let cos = kmeans(dataset, n_clusters, ClusterMetric::Cosine, seed, DEFAULT_MAX_ITER)?;
    let dbi_cosine = davies_bouldin(dataset, &cos, ClusterMetric::Cosine)?;
    let self_dominator_fraction = self_dominator_fraction(dataset, EXACT_CENSUS_LIMIT, CENSUS_SAMPLE, seed);
    Ok(StatsReport {
        n: dataset.len(),
        dim: dataset.dim(),
        cv,
        dbi_euclidean,
        dbi_cosine,
        self_dominator_fraction,
        n_clusters,
    })
}
