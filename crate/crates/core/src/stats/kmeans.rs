use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::ClusterMetric;
use crate::error::{usage, Error, Result};
use crate::metrics::{dot_f64, l2_f64, Dataset};

pub const DEFAULT_MAX_ITER: usize = 100;

/// Hard assignment of every point to one of `n_clusters` centroids.
#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    pub n_clusters: usize,
    pub assignment: Vec<u32>,
    pub centroids: Vec<Vec<f32>>,
}

impl Clustering {
    /// Builds centroids for a given assignment: the member mean, or the
    /// renormalized mean of unit directions under [`ClusterMetric::Cosine`].
    pub fn from_assignment(dataset: &Dataset, assignment: Vec<u32>, metric: ClusterMetric) -> Result<Self> {
        if assignment.len() != dataset.len() {
            return Err(usage("assignment length differs from dataset size"));
        }
        let n_clusters = assignment.iter().max().map_or(0, |&m| m as usize + 1);
        let points = prepare(dataset, metric)?;
        let centroids = centroids_of(&points, dataset.dim(), &assignment, n_clusters, metric);
        let mut counts = vec![0usize; n_clusters];
        for &a in &assignment {
            counts[a as usize] += 1;
        }
        if counts.contains(&0) {
            return Err(Error::Degenerate("assignment leaves a cluster empty".into()));
        }
        Ok(Clustering { n_clusters, assignment, centroids })
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_clusters];
        for &a in &self.assignment {
            counts[a as usize] += 1;
        }
        counts
    }
}

/// Unit-normalized copies in cosine mode; zero vectors are rejected.
pub(super) fn prepare(dataset: &Dataset, metric: ClusterMetric) -> Result<Vec<Vec<f32>>> {
    dataset
        .rows()
        .enumerate()
        .map(|(i, r)| match metric {
            ClusterMetric::Euclidean => Ok(r.to_vec()),
            ClusterMetric::Cosine => {
                let n = dot_f64(r, r).sqrt();
                if n == 0.0 {
                    return Err(usage(format!("zero vector at row {i} has no direction")));
                }
                Ok(r.iter().map(|&v| (v as f64 / n) as f32).collect())
            }
        })
        .collect()
}

fn distance(metric: ClusterMetric, a: &[f32], b: &[f32]) -> f64 {
    match metric {
        ClusterMetric::Euclidean => l2_f64(a, b),
        // both sides unit length
        ClusterMetric::Cosine => 1.0 - dot_f64(a, b),
    }
}

fn centroids_of(
    points: &[Vec<f32>],
    dim: usize,
    assignment: &[u32],
    k: usize,
    metric: ClusterMetric,
) -> Vec<Vec<f32>> {
    let mut sums = vec![vec![0.0f64; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assignment) {
        counts[a as usize] += 1;
        for (s, &v) in sums[a as usize].iter_mut().zip(p) {
            *s += v as f64;
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, c)| {
            let c = c.max(1) as f64;
            let mean: Vec<f64> = s.into_iter().map(|v| v / c).collect();
            match metric {
                ClusterMetric::Euclidean => mean.into_iter().map(|v| v as f32).collect(),
                ClusterMetric::Cosine => {
                    let n = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if n == 0.0 {
                        mean.into_iter().map(|v| v as f32).collect()
                    } else {
                        mean.into_iter().map(|v| (v / n) as f32).collect()
                    }
                }
            }
        })
        .collect()
}

fn count_distinct(points: &[Vec<f32>]) -> usize {
    points
        .iter()
        .map(|p| p.iter().map(|v| v.to_bits()).collect::<Vec<u32>>())
        .collect::<HashSet<_>>()
        .len()
}

/// k-means++ seeding followed by Lloyd iterations until the assignment is
/// stable or `max_iter` rounds have run. Deterministic for a given `seed`.
pub fn kmeans(
    dataset: &Dataset,
    n_clusters: usize,
    metric: ClusterMetric,
    seed: u64,
    max_iter: usize,
) -> Result<Clustering> {
    let n = dataset.len();
    if n_clusters == 0 || n_clusters > n {
        return Err(usage(format!("n_clusters = {n_clusters} must lie in 1..={n}")));
    }
    let points = prepare(dataset, metric)?;
    if count_distinct(&points) < n_clusters {
        return Err(Error::Degenerate(format!(
            "fewer than {n_clusters} distinct points for {n_clusters} clusters"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut centers: Vec<Vec<f32>> = Vec::with_capacity(n_clusters);
    centers.push(points[rng.random_range(0..n)].clone());
    let mut best: Vec<f64> = points.iter().map(|p| distance(metric, p, &centers[0])).collect();
    while centers.len() < n_clusters {
        let weights: Vec<f64> = best.iter().map(|d| d.max(0.0).powi(2)).collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut t = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in weights.iter().enumerate() {
                if *w > 0.0 && t < *w {
                    chosen = i;
                    break;
                }
                t -= w;
            }
            if weights[chosen] == 0.0 {
                chosen = weights.iter().rposition(|w| *w > 0.0).unwrap();
            }
            chosen
        } else {
            // all remaining mass sits on chosen centers; fall back to the first unseen point
            let taken: HashSet<Vec<u32>> = centers
                .iter()
                .map(|c| c.iter().map(|v| v.to_bits()).collect())
                .collect();
            points
                .iter()
                .position(|p| !taken.contains(&p.iter().map(|v| v.to_bits()).collect::<Vec<u32>>()))
                .unwrap()
        };
        centers.push(points[pick].clone());
        let c = centers.last().unwrap();
        for (b, p) in best.iter_mut().zip(&points) {
            *b = b.min(distance(metric, p, c));
        }
    }

    let assign = |centers: &[Vec<f32>]| -> Vec<(u32, f64)> {
        points
            .par_iter()
            .map(|p| {
                let mut bi = 0u32;
                let mut bd = f64::INFINITY;
                for (ci, c) in centers.iter().enumerate() {
                    let d = distance(metric, p, c);
                    if d < bd {
                        bd = d;
                        bi = ci as u32;
                    }
                }
                (bi, bd)
            })
            .collect()
    };

    let mut assignment: Vec<u32> = Vec::new();
    for _ in 0..max_iter.max(1) {
        let scored = assign(&centers);
        let mut next: Vec<u32> = scored.iter().map(|s| s.0).collect();
        repair_empty(&mut next, &scored, n_clusters);
        let converged = next == assignment;
        assignment = next;
        centers = centroids_of(&points, dataset.dim(), &assignment, n_clusters, metric);
        if converged {
            break;
        }
    }
    Ok(Clustering { n_clusters, assignment, centroids: centers })
}

/// Moves the farthest member of a multi-member cluster into each empty one.
fn repair_empty(assignment: &mut [u32], scored: &[(u32, f64)], k: usize) {
    let mut counts = vec![0usize; k];
    for &a in assignment.iter() {
        counts[a as usize] += 1;
    }
    let mut moved = vec![false; assignment.len()];
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let victim = (0..assignment.len())
            .filter(|&i| !moved[i] && counts[assignment[i] as usize] > 1)
            .max_by(|&a, &b| scored[a].1.total_cmp(&scored[b].1).then(b.cmp(&a)));
        if let Some(v) = victim {
            counts[assignment[v] as usize] -= 1;
            assignment[v] = empty as u32;
            counts[empty] += 1;
            moved[v] = true;
        }
    }
}
