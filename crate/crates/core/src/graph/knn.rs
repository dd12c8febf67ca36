use rayon::prelude::*;

use crate::error::{usage, Result};
use crate::metrics::{l2_unchecked, Dataset};

/// `k` nearest Euclidean neighbours per node, sorted by `(distance, id)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnGraph {
    k: usize,
    entries: Vec<(u32, f32)>,
}

impl KnnGraph {
    pub(crate) fn from_lists(k: usize, lists: Vec<Vec<(u32, f32)>>) -> Self {
        debug_assert!(lists.iter().all(|l| l.len() == k));
        KnnGraph { k, entries: lists.concat() }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.entries.len().checked_div(self.k).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(neighbour, squared distance)` pairs for `node`.
    pub fn neighbors(&self, node: usize) -> &[(u32, f32)] {
        &self.entries[node * self.k..(node + 1) * self.k]
    }

    /// Mean fraction of each node's exact neighbours also present here.
    pub fn recall_against(&self, exact: &KnnGraph) -> f64 {
        let n = self.len().min(exact.len());
        let mut hit = 0usize;
        for i in 0..n {
            let ours = self.neighbors(i);
            hit += exact
                .neighbors(i)
                .iter()
                .filter(|(id, _)| ours.iter().any(|(o, _)| o == id))
                .count();
        }
        hit as f64 / (n * exact.k) as f64
    }
}

pub(crate) fn check_k(dataset: &Dataset, k: usize) -> Result<()> {
    if k == 0 || k >= dataset.len() {
        return Err(usage(format!(
            "K = {k} must lie in 1..{} for n = {}",
            dataset.len(),
            dataset.len()
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn by_dist(a: &(u32, f32), b: &(u32, f32)) -> std::cmp::Ordering {
    a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))
}

/// Exact K-NN graph by exhaustive scan. `O(n²·d)`.
pub fn build_exact_knn(dataset: &Dataset, k: usize) -> Result<KnnGraph> {
    check_k(dataset, k)?;
    let n = dataset.len();
    let lists: Vec<Vec<(u32, f32)>> = (0..n)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(n),
            |buf: &mut Vec<(u32, f32)>, i| {
                buf.clear();
                let x = dataset.row(i);
                for (j, y) in dataset.rows().enumerate() {
                    if j != i {
                        buf.push((j as u32, l2_unchecked(x, y)));
                    }
                }
                if k < buf.len() {
                    buf.select_nth_unstable_by(k - 1, by_dist);
                }
                let mut top = buf[..k].to_vec();
                top.sort_unstable_by(by_dist);
                top
            },
        )
        .collect();
    Ok(KnnGraph::from_lists(k, lists))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricKind;
    use crate::oracle::brute_force_topk;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn collinear_example() {
        let d = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        let g = build_exact_knn(&d, 1).unwrap();
        assert_eq!(g.neighbors(0), &[(1, 1.0)]);
        assert_eq!(g.neighbors(1), &[(0, 1.0)]);
        assert_eq!(g.neighbors(2), &[(1, 4.0)]);
    }

    #[test]
    fn k_n_minus_one_is_complete() {
        let d = Dataset::from_rows(&[vec![0.0, 1.0], vec![1.0, 5.0], vec![3.0, 2.0], vec![-1.0, 0.0]]).unwrap();
        let g = build_exact_knn(&d, 3).unwrap();
        for i in 0..4 {
            let mut ids: Vec<u32> = g.neighbors(i).iter().map(|p| p.0).collect();
            ids.sort_unstable();
            assert_eq!(ids, (0..4).filter(|&j| j != i as u32).collect::<Vec<_>>());
        }
        assert!(build_exact_knn(&d, 4).is_err());
        assert!(build_exact_knn(&d, 0).is_err());
    }

    #[test]
    fn agrees_with_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = Dataset::new(8, (0..8 * 300).map(|_| rng.random_range(-1.0f32..1.0)).collect()).unwrap();
        let g = build_exact_knn(&d, 10).unwrap();
        for i in 0..d.len() {
            let oracle: Vec<u32> = brute_force_topk(&d, d.row(i), 11, MetricKind::Euclidean)
                .unwrap()
                .into_iter()
                .filter(|&j| j != i as u32)
                .take(10)
                .collect();
            let ours: Vec<u32> = g.neighbors(i).iter().map(|p| p.0).collect();
            assert_eq!(ours, oracle, "node {i}");
        }
    }
}
