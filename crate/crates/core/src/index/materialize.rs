use crate::error::{usage, Result};
use crate::index::MagIndex;

/// Runtime adjacency in CSR form: per node, dominator edges first, then
/// Euclidean edges, at most `r` in total.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchGraph {
    r: usize,
    alpha: f64,
    offsets: Vec<usize>,
    edges: Vec<u32>,
}

impl SearchGraph {
    /// Wraps plain adjacency lists. `r` and `alpha` are recorded as given.
    pub fn from_lists<L: AsRef<[u32]>>(lists: &[L], r: usize, alpha: f64) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut edges = Vec::new();
        offsets.push(0);
        for l in lists {
            edges.extend_from_slice(l.as_ref());
            offsets.push(edges.len());
        }
        SearchGraph { r, alpha, offsets, edges }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.edges[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn adjacency(&self) -> Vec<&[u32]> {
        (0..self.len()).map(|i| self.neighbors(i)).collect()
    }
}

/// Dominator-edge quota for out-degree `r`: `ceil(alpha * r)`, with a small
/// guard so products like `0.3 * 10` do not round up past the exact value.
pub(crate) fn ip_quota(r: usize, alpha: f64) -> usize {
    let raw = alpha * r as f64;
    (raw - 1e-9 * raw.max(1.0)).ceil().max(0.0) as usize
}

/// Loads up to `ceil(alpha * r)` dominator edges then fills with Euclidean
/// edges, skipping ids already taken, up to `r` per node.
pub fn materialize(index: &MagIndex, r: usize, alpha: f64) -> Result<SearchGraph> {
    if r < 1 {
        return Err(usage("R must be at least 1"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(usage(format!("alpha = {alpha} outside [0, 1]")));
    }
    let quota = ip_quota(r, alpha);
    let mut offsets = Vec::with_capacity(index.len() + 1);
    let mut edges = Vec::with_capacity(index.len() * r);
    offsets.push(0);
    for node in 0..index.len() {
        let start = edges.len();
        let ip = index.ip(node);
        edges.extend_from_slice(&ip[..quota.min(ip.len()).min(r)]);
        for &e in index.euclid(node) {
            if edges.len() - start >= r {
                break;
            }
            if !edges[start..].contains(&e) {
                edges.push(e);
            }
        }
        offsets.push(edges.len());
    }
    Ok(SearchGraph { r, alpha, offsets, edges })
}
