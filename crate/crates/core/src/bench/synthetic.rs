use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::metrics::Dataset;

/// Family of generated vectors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SyntheticKind {
    /// Standard normal coordinates.
    GaussianIid,
    /// Gaussian blobs around random centres. Points are laid out as
    /// `[background | blobs | outliers]`: a `background_fraction` share drawn
    /// from `N(0, center_scale²)`, then blob members, then an
    /// `outlier_fraction` share forming one extra blob at norm `outlier_norm`.
    ClusteredBlobs {
        clusters: usize,
        center_scale: f32,
        spread: f32,
        outlier_fraction: f32,
        outlier_norm: f32,
        background_fraction: f32,
    },
    /// Uniform directions scaled by log-normal radii.
    HeavyNormTail { sigma_log: f32 },
}

impl SyntheticKind {
    pub fn blobs(clusters: usize) -> Self {
        SyntheticKind::ClusteredBlobs {
            clusters,
            center_scale: 1.0,
            spread: 0.1,
            outlier_fraction: 0.0,
            outlier_norm: 0.0,
            background_fraction: 0.0,
        }
    }

    pub fn heavy_tail() -> Self {
        SyntheticKind::HeavyNormTail { sigma_log: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub n: usize,
    pub dim: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(kind: SyntheticKind, n: usize, dim: usize, seed: u64) -> Self {
        SyntheticSpec { kind, n, dim, seed }
    }
}

fn normal_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

fn unit_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    loop {
        let v = normal_vec(rng, dim);
        let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// `(outlier count, background count)` for a blob dataset of `n` points.
pub fn blob_layout(n: usize, outlier_fraction: f32, background_fraction: f32) -> Result<(usize, usize)> {
    let ok = |f: f32| (0.0..1.0).contains(&f);
    if !ok(outlier_fraction) || !ok(background_fraction) || outlier_fraction + background_fraction >= 1.0 {
        return Err(usage("outlier and background fractions must be in [0, 1) and sum below 1"));
    }
    let outliers = (outlier_fraction * n as f32).round() as usize;
    let background = (background_fraction * n as f32).round() as usize;
    Ok((outliers, background))
}

/// `count` queries, each a uniformly chosen row of `dataset` from `rows`
/// plus `N(0, noise²)` jitter per coordinate.
pub fn perturbed_queries(
    dataset: &Dataset,
    rows: std::ops::Range<usize>,
    count: usize,
    noise: f32,
    seed: u64,
) -> Result<Dataset> {
    if rows.is_empty() || rows.end > dataset.len() || count == 0 {
        return Err(usage("need a non-empty row range inside the dataset and count > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count * dataset.dim());
    for _ in 0..count {
        let i = rng.random_range(rows.clone());
        for &x in dataset.row(i) {
            let e: f32 = StandardNormal.sample(&mut rng);
            out.push(x + noise * e);
        }
    }
    Dataset::new(dataset.dim(), out)
}

/// Deterministic dataset for `spec`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.n == 0 || spec.dim == 0 {
        return Err(usage("synthetic data needs n > 0 and dim > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (n, dim) = (spec.n, spec.dim);
    let mut data = Vec::with_capacity(n * dim);
    match spec.kind {
        SyntheticKind::GaussianIid => {
            for _ in 0..n * dim {
                data.push(StandardNormal.sample(&mut rng));
            }
        }
        SyntheticKind::ClusteredBlobs { clusters, center_scale, spread, outlier_fraction, outlier_norm, background_fraction } => {
            let (outliers, background) = blob_layout(n, outlier_fraction, background_fraction)?;
            if clusters == 0 {
                return Err(usage("blobs need at least one cluster"));
            }
            let centers: Vec<Vec<f32>> =
                (0..clusters).map(|_| normal_vec(&mut rng, dim).into_iter().map(|x| x * center_scale).collect()).collect();
            let far: Vec<f32> = unit_vec(&mut rng, dim).into_iter().map(|x| x * outlier_norm).collect();
            for _ in 0..background * dim {
                let e: f32 = StandardNormal.sample(&mut rng);
                data.push(center_scale * e);
            }
            for i in background..n {
                let c = if i < n - outliers { &centers[rng.random_range(0..clusters)] } else { &far };
                for &cj in c {
                    let e: f32 = StandardNormal.sample(&mut rng);
                    data.push(cj + spread * e);
                }
            }
        }
        SyntheticKind::HeavyNormTail { sigma_log } => {
            let radius = LogNormal::new(0.0, sigma_log as f64).map_err(|e| usage(e.to_string()))?;
            for _ in 0..n {
                let r = radius.sample(&mut rng) as f32;
                data.extend(unit_vec(&mut rng, dim).into_iter().map(|x| x * r));
            }
        }
    }
    Dataset::new(dim, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{coefficient_of_variation, davies_bouldin, kmeans, ClusterMetric, DEFAULT_MAX_ITER};

    #[test]
    fn gaussian_norms_concentrate() {
        let d = generate_synthetic(&SyntheticSpec::new(SyntheticKind::GaussianIid, 10_000, 32, 1)).unwrap();
        assert!(coefficient_of_variation(&d).unwrap() < 0.15);
    }

    #[test]
    fn heavy_tail_has_spread_norms() {
        let d = generate_synthetic(&SyntheticSpec::new(SyntheticKind::heavy_tail(), 10_000, 32, 2)).unwrap();
        assert!(coefficient_of_variation(&d).unwrap() >= 0.2);
    }

    #[test]
    fn blobs_have_low_dbi() {
        let d = generate_synthetic(&SyntheticSpec::new(SyntheticKind::blobs(8), 4000, 16, 3)).unwrap();
        let c = kmeans(&d, 8, ClusterMetric::Euclidean, 3, DEFAULT_MAX_ITER).unwrap();
        assert!(davies_bouldin(&d, &c, ClusterMetric::Euclidean).unwrap() <= 2.0);
    }

    #[test]
    fn same_seed_same_bytes() {
        for kind in [SyntheticKind::GaussianIid, SyntheticKind::blobs(4), SyntheticKind::heavy_tail()] {
            let s = SyntheticSpec::new(kind, 500, 7, 9);
            assert_eq!(generate_synthetic(&s).unwrap(), generate_synthetic(&s).unwrap());
        }
    }

    #[test]
    fn outlier_blob_is_far() {
        let kind = SyntheticKind::ClusteredBlobs {
            clusters: 4,
            center_scale: 1.0,
            spread: 0.1,
            outlier_fraction: 0.1,
            outlier_norm: 20.0,
            background_fraction: 0.2,
        };
        let d = generate_synthetic(&SyntheticSpec::new(kind, 1000, 8, 4)).unwrap();
        assert_eq!(blob_layout(1000, 0.1, 0.2).unwrap(), (100, 200));
        let norms = d.norms();
        assert!(norms[..900].iter().all(|&x| x < 10.0));
        assert!(norms[900..].iter().all(|&x| x > 15.0));
    }

    #[test]
    fn queries_jitter_chosen_rows() {
        let d = generate_synthetic(&SyntheticSpec::new(SyntheticKind::GaussianIid, 50, 4, 5)).unwrap();
        let q = perturbed_queries(&d, 10..20, 30, 0.0, 6).unwrap();
        for row in q.rows() {
            assert!((10..20).any(|i| d.row(i) == row));
        }
        assert!(perturbed_queries(&d, 40..60, 3, 0.1, 0).is_err());
        assert!(blob_layout(10, 0.6, 0.5).is_err());
    }
}
