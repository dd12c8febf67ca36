use serde::Serialize;

use crate::error::{usage, Result};
use crate::metrics::{dot_f64, Dataset, MetricKind};
use crate::search::{SearchParams, Searcher};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DualityReport {
    pub queries: usize,
    /// Queries whose best and second-best inner products differ.
    pub tie_free: usize,
    /// Fraction of tie-free queries whose scaled Euclidean NN is the MIPS answer.
    pub agreement: f64,
}

fn argmax_ip(dataset: &Dataset, q: &[f32]) -> (u32, bool) {
    let mut best = (f64::NEG_INFINITY, 0u32);
    let mut second = f64::NEG_INFINITY;
    for (i, x) in dataset.rows().enumerate() {
        let s = dot_f64(q, x);
        if s > best.0 {
            second = best.0;
            best = (s, i as u32);
        } else if s > second {
            second = s;
        }
    }
    let scale = best.0.abs().max(1.0);
    (best.1, best.0 - second > 1e-9 * scale)
}

fn argmin_scaled_l2(dataset: &Dataset, q: &[f32], mu: f64) -> u32 {
    let mut best = (f64::INFINITY, 0u32);
    for (i, x) in dataset.rows().enumerate() {
        let d: f64 = q
            .iter()
            .zip(x)
            .map(|(&a, &b)| {
                let t = mu * a as f64 - b as f64;
                t * t
            })
            .sum();
        if d < best.0 {
            best = (d, i as u32);
        }
    }
    best.1
}

/// Brute-force check that the Euclidean nearest neighbour of `mu * q`
/// coincides with the inner-product maximiser of `q`.
pub fn verify_scaling_duality(dataset: &Dataset, queries: &Dataset, mu: f64) -> Result<DualityReport> {
    if mu.is_nan() || mu <= 0.0 || !mu.is_finite() {
        return Err(usage("mu must be positive and finite"));
    }
    if queries.dim() != dataset.dim() {
        return Err(usage("query dimension differs from dataset"));
    }
    if dataset.is_empty() {
        return Err(usage("dataset is empty"));
    }
    let mut tie_free = 0usize;
    let mut agree = 0usize;
    for q in queries.rows() {
        let (ip, clean) = argmax_ip(dataset, q);
        if !clean {
            continue;
        }
        tie_free += 1;
        if argmin_scaled_l2(dataset, q, mu) == ip {
            agree += 1;
        }
    }
    let agreement = if tie_free == 0 { 1.0 } else { agree as f64 / tie_free as f64 };
    Ok(DualityReport { queries: queries.len(), tie_free, agreement })
}

/// Fraction of queries whose greedy expansion sequence under IP for `q`
/// equals the sequence under Euclidean for `mu * q` on the same graph.
pub fn trace_agreement(searcher: &Searcher<'_>, queries: &Dataset, mu: f32, params: &SearchParams) -> Result<f64> {
    if queries.is_empty() {
        return Ok(1.0);
    }
    let mut scratch = searcher.scratch();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let mut same = 0usize;
    for (i, q) in queries.rows().enumerate() {
        let p = params.for_query(i);
        let scaled: Vec<f32> = q.iter().map(|v| v * mu).collect();
        a.clear();
        b.clear();
        searcher.greedy_traced(q, &p, MetricKind::InnerProduct, &mut scratch, &mut a)?;
        searcher.greedy_traced(&scaled, &p, MetricKind::Euclidean, &mut scratch, &mut b)?;
        if a == b {
            same += 1;
        }
    }
    Ok(same as f64 / queries.len() as f64)
}
