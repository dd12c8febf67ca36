//! Vector storage and the two similarity kernels.
//!
//! Kernels accumulate in `f32` over a fixed 8-lane blocking: lane `j` sums the
//! products at indices `j, j + 8, j + 16, ...` sequentially, and the lanes are
//! then folded in a fixed order before the scalar tail is added. The result is
//! identical on every run and every target, and stays within `1e-4` relative
//! error of a strictly sequential sum.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};

const LANES: usize = 8;

#[cfg(test)]
thread_local! {
    pub(crate) static KERNEL_CALLS: std::cell::Cell<u64> = const { std::cell::Cell::new(0) };
}

#[inline(always)]
fn count_call() {
    #[cfg(test)]
    KERNEL_CALLS.with(|c| c.set(c.get() + 1));
}

#[inline(always)]
fn fold(acc: [f32; LANES]) -> f32 {
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))
}

/// Inner product without a dimension check. Callers guarantee equal lengths.
#[inline]
pub(crate) fn dot_unchecked(x: &[f32], y: &[f32]) -> f32 {
    count_call();
    let mut acc = [0.0f32; LANES];
    let xc = x.chunks_exact(LANES);
    let yc = y.chunks_exact(LANES);
    let (xr, yr) = (xc.remainder(), yc.remainder());
    for (a, b) in xc.zip(yc) {
        for j in 0..LANES {
            acc[j] += a[j] * b[j];
        }
    }
    let mut s = fold(acc);
    for (a, b) in xr.iter().zip(yr) {
        s += a * b;
    }
    s
}

#[inline]
pub(crate) fn l2_unchecked(x: &[f32], y: &[f32]) -> f32 {
    count_call();
    let mut acc = [0.0f32; LANES];
    let xc = x.chunks_exact(LANES);
    let yc = y.chunks_exact(LANES);
    let (xr, yr) = (xc.remainder(), yc.remainder());
    for (a, b) in xc.zip(yc) {
        for j in 0..LANES {
            let t = a[j] - b[j];
            acc[j] += t * t;
        }
    }
    let mut s = fold(acc);
    for (a, b) in xr.iter().zip(yr) {
        let t = a - b;
        s += t * t;
    }
    s
}

/// Squared distance and inner product in one pass. Both results are
/// bit-identical to the separate kernels; counts as one kernel call.
#[inline]
pub(crate) fn l2_and_dot_unchecked(x: &[f32], y: &[f32]) -> (f32, f32) {
    count_call();
    let mut dacc = [0.0f32; LANES];
    let mut pacc = [0.0f32; LANES];
    let xc = x.chunks_exact(LANES);
    let yc = y.chunks_exact(LANES);
    let (xr, yr) = (xc.remainder(), yc.remainder());
    for (a, b) in xc.zip(yc) {
        for j in 0..LANES {
            let t = a[j] - b[j];
            dacc[j] += t * t;
            pacc[j] += a[j] * b[j];
        }
    }
    let mut d = fold(dacc);
    let mut p = fold(pacc);
    for (a, b) in xr.iter().zip(yr) {
        let t = a - b;
        d += t * t;
        p += a * b;
    }
    (d, p)
}

/// Inner product accumulated in `f64`, for oracle code paths.
pub fn dot_f64(x: &[f32], y: &[f32]) -> f64 {
    x.iter().zip(y).map(|(&a, &b)| a as f64 * b as f64).sum()
}

/// Squared Euclidean distance accumulated in `f64`.
pub fn l2_f64(x: &[f32], y: &[f32]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| {
            let t = a as f64 - b as f64;
            t * t
        })
        .sum()
}

fn check_dims(x: &[f32], y: &[f32]) -> Result<()> {
    if x.len() != y.len() {
        return Err(usage(format!("dimension mismatch: {} vs {}", x.len(), y.len())));
    }
    Ok(())
}

/// `Σ xᵢ·yᵢ`.
pub fn inner_product(x: &[f32], y: &[f32]) -> Result<f32> {
    check_dims(x, y)?;
    Ok(dot_unchecked(x, y))
}

/// `Σ (xᵢ − yᵢ)²`.
pub fn euclidean_sq(x: &[f32], y: &[f32]) -> Result<f32> {
    check_dims(x, y)?;
    Ok(l2_unchecked(x, y))
}

pub fn norm(x: &[f32]) -> f32 {
    dot_unchecked(x, x).sqrt()
}

/// Similarity measure driving a search or a ranking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetricKind {
    /// Larger inner product is better.
    InnerProduct,
    /// Smaller squared Euclidean distance is better.
    Euclidean,
}

impl MetricKind {
    #[inline]
    pub fn score(self, q: &[f32], x: &[f32]) -> Result<f32> {
        check_dims(q, x)?;
        Ok(self.score_unchecked(q, x))
    }

    #[inline]
    pub(crate) fn score_unchecked(self, q: &[f32], x: &[f32]) -> f32 {
        match self {
            MetricKind::InnerProduct => dot_unchecked(q, x),
            MetricKind::Euclidean => l2_unchecked(q, x),
        }
    }

    /// `f64` score for the brute-force oracle.
    pub fn score_f64(self, q: &[f32], x: &[f32]) -> f64 {
        match self {
            MetricKind::InnerProduct => dot_f64(q, x),
            MetricKind::Euclidean => l2_f64(q, x),
        }
    }

    /// Orders `(score, id)` pairs best-first. Lower id wins on equal scores.
    #[inline]
    pub fn compare(self, a: (f32, u32), b: (f32, u32)) -> Ordering {
        let by_score = match self {
            MetricKind::InnerProduct => b.0.total_cmp(&a.0),
            MetricKind::Euclidean => a.0.total_cmp(&b.0),
        };
        by_score.then(a.1.cmp(&b.1))
    }

    /// Same ordering as [`MetricKind::compare`] for `f64` scores.
    #[inline]
    pub fn compare_f64(self, a: (f64, u32), b: (f64, u32)) -> Ordering {
        let by_score = match self {
            MetricKind::InnerProduct => b.0.total_cmp(&a.0),
            MetricKind::Euclidean => a.0.total_cmp(&b.0),
        };
        by_score.then(a.1.cmp(&b.1))
    }

    #[inline]
    pub fn is_better(self, a: (f32, u32), b: (f32, u32)) -> bool {
        self.compare(a, b) == Ordering::Less
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::InnerProduct => "ip",
            MetricKind::Euclidean => "l2",
        }
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ip" | "inner_product" | "mips" => Ok(MetricKind::InnerProduct),
            "l2" | "euclidean" => Ok(MetricKind::Euclidean),
            other => Err(usage(format!("unknown metric '{other}'"))),
        }
    }
}

/// `n` vectors of dimension `dim` in contiguous row-major `f32` storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    data: Vec<f32>,
}

impl Dataset {
    /// Wraps a row-major buffer. Rejects empty datasets, `dim == 0`, ragged
    /// buffers and non-finite values.
    pub fn new(dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(usage("dimension must be at least 1"));
        }
        if data.is_empty() {
            return Err(usage("dataset must contain at least one vector"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(usage(format!(
                "buffer length {} is not a multiple of dim {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(usage(format!(
                "non-finite value at row {} column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Dataset { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(usage("rows have inconsistent dimensions"));
        }
        Dataset::new(dim, rows.concat())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    /// Always false: a dataset holds at least one vector.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    /// First `n` rows as a new dataset.
    pub fn prefix(&self, n: usize) -> Result<Dataset> {
        if n == 0 || n > self.len() {
            return Err(usage(format!("prefix length {n} outside 1..={}", self.len())));
        }
        Dataset::new(self.dim, self.data[..n * self.dim].to_vec())
    }

    /// Every coordinate multiplied by `s`.
    pub fn scaled(&self, s: f32) -> Result<Dataset> {
        Dataset::new(self.dim, self.data.iter().map(|v| v * s).collect())
    }

    pub fn norms(&self) -> Vec<f32> {
        self.rows().map(norm).collect()
    }

    pub(crate) fn check_query(&self, q: &[f32]) -> Result<()> {
        if q.len() != self.dim {
            return Err(usage(format!(
                "query has dimension {} but dataset has {}",
                q.len(),
                self.dim
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq_dot(x: &[f32], y: &[f32]) -> f32 {
        let mut s = 0.0f32;
        for i in 0..x.len() {
            s += x[i] * y[i];
        }
        s
    }

    #[test]
    fn inner_product_examples() {
        assert_eq!(inner_product(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        assert_eq!(inner_product(&[5.0, -3.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(inner_product(&[2.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(
            inner_product(&[1.0], &[1.0, 2.0]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn euclidean_examples() {
        assert_eq!(euclidean_sq(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 25.0);
        assert_eq!(euclidean_sq(&[1.5, -2.0], &[1.5, -2.0]).unwrap(), 0.0);
        assert_eq!(euclidean_sq(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
        assert!(euclidean_sq(&[1.0, 2.0, 3.0], &[1.0]).is_err());
    }

    #[test]
    fn norm_examples() {
        assert_eq!(norm(&[3.0, 4.0]), 5.0);
        assert_eq!(norm(&[0.0; 7]), 0.0);
        assert_eq!(norm(&[1.0, 1.0, 1.0, 1.0]), 2.0);
    }

    #[test]
    fn score_examples() {
        let ip = MetricKind::InnerProduct;
        let s = ip.score(&[1.0, 1.0], &[2.0, 0.0]).unwrap();
        assert_eq!(s, 2.0);
        assert!(ip.is_better((s, 5), (1.0, 0)));

        let l2 = MetricKind::Euclidean;
        let s = l2.score(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!(s, 1.0);
        assert!(l2.is_better((s, 9), (4.0, 0)));

        assert!(ip.is_better((3.0, 1), (3.0, 2)));
        assert!(l2.is_better((3.0, 1), (3.0, 2)));
        assert!(!l2.is_better((3.0, 2), (3.0, 2)));
    }

    #[test]
    fn fused_kernel_matches_separate_kernels() {
        let x: Vec<f32> = (0..37).map(|i| (i as f32 * 0.37).sin()).collect();
        let y: Vec<f32> = (0..37).map(|i| (i as f32 * 0.91).cos()).collect();
        let (d, p) = l2_and_dot_unchecked(&x, &y);
        assert_eq!(d.to_bits(), l2_unchecked(&x, &y).to_bits());
        assert_eq!(p.to_bits(), dot_unchecked(&x, &y).to_bits());
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(0, vec![]).is_err());
        assert!(Dataset::new(2, vec![]).is_err());
        assert!(Dataset::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(Dataset::new(1, vec![f32::NAN]).is_err());
        assert!(Dataset::new(1, vec![f32::INFINITY]).is_err());
        let d = Dataset::new(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.row(1), &[3.0, 4.0]);
    }

    fn vec_pair() -> impl Strategy<Value = (Vec<f32>, Vec<f32>)> {
        (1usize..70).prop_flat_map(|d| {
            (
                prop::collection::vec(-10.0f32..10.0, d),
                prop::collection::vec(-10.0f32..10.0, d),
            )
        })
    }

    proptest! {
        #[test]
        fn kernels_are_symmetric((x, y) in vec_pair()) {
            prop_assert_eq!(dot_unchecked(&x, &y).to_bits(), dot_unchecked(&y, &x).to_bits());
            prop_assert_eq!(l2_unchecked(&x, &y).to_bits(), l2_unchecked(&y, &x).to_bits());
        }

        #[test]
        fn polarization_identity((x, y) in vec_pair()) {
            let d = l2_f64(&x, &y);
            let nx = norm(&x) as f64;
            let ny = norm(&y) as f64;
            let ip = inner_product(&x, &y).unwrap() as f64;
            let rhs = nx * nx + ny * ny - 2.0 * ip;
            let scale = nx * nx + ny * ny + 1e-6;
            prop_assert!((d - rhs).abs() <= 1e-4 * scale, "{d} vs {rhs}");
            prop_assert!((euclidean_sq(&x, &y).unwrap() as f64 - d).abs() <= 1e-4 * scale);
        }

        #[test]
        fn blocked_matches_sequential((x, y) in vec_pair()) {
            let blocked = dot_unchecked(&x, &y) as f64;
            let seq = seq_dot(&x, &y) as f64;
            let mag: f64 = x.iter().zip(&y).map(|(a, b)| (a * b).abs() as f64).sum();
            prop_assert!((blocked - seq).abs() <= 1e-4 * mag.max(1e-6));
        }

        #[test]
        fn comparator_is_strict_total_order(
            a in (-5.0f32..5.0, 0u32..4),
            b in (-5.0f32..5.0, 0u32..4),
            c in (-5.0f32..5.0, 0u32..4),
            ip in any::<bool>(),
        ) {
            let m = if ip { MetricKind::InnerProduct } else { MetricKind::Euclidean };
            // ids identify points, so equal ids carry equal scores
            let fix = |p: (f32, u32)| (p.0.round(), p.1);
            let (a, b, c) = (fix(a), fix(b), fix(c));
            prop_assert_eq!(m.compare(a, b), m.compare(b, a).reverse());
            if m.is_better(a, b) && m.is_better(b, c) {
                prop_assert!(m.is_better(a, c));
            }
            prop_assert!(!m.is_better(a, a));
        }
    }
}
