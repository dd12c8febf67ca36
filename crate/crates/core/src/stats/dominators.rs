//! Self-dominator census and the Gaussian-model estimators around it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{usage, Result};
use crate::metrics::{dot_unchecked, Dataset};
use crate::special::{gamma_q, normal_cdf};

/// True iff `⟨xᵢ,xᵢ⟩ > ⟨xᵢ,xⱼ⟩` for every `j ≠ i`.
pub fn is_self_dominator(dataset: &Dataset, i: usize) -> bool {
    let x = dataset.row(i);
    let own = dot_unchecked(x, x);
    dataset
        .rows()
        .enumerate()
        .all(|(j, y)| j == i || dot_unchecked(x, y) < own)
}

/// Ids of every self-dominator, ascending. Quadratic in `n`.
pub fn self_dominator_set(dataset: &Dataset) -> Vec<u32> {
    (0..dataset.len())
        .into_par_iter()
        .filter(|&i| is_self_dominator(dataset, i))
        .map(|i| i as u32)
        .collect()
}

/// Per-point self-dominator flags.
pub fn self_dominator_flags(dataset: &Dataset) -> Vec<bool> {
    (0..dataset.len())
        .into_par_iter()
        .map(|i| is_self_dominator(dataset, i))
        .collect()
}

/// Fraction of self-dominators: exact when `n ≤ exact_limit`, otherwise the
/// share among `sample` seeded random points, each checked against all of `D`.
pub fn self_dominator_fraction(dataset: &Dataset, exact_limit: usize, sample: usize, seed: u64) -> f64 {
    let n = dataset.len();
    if n <= exact_limit {
        return self_dominator_set(dataset).len() as f64 / n as f64;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<usize> = (0..sample.max(1)).map(|_| rng.random_range(0..n)).collect();
    let hits = picks
        .par_iter()
        .filter(|&&i| is_self_dominator(dataset, i))
        .count();
    hits as f64 / picks.len() as f64
}

/// Probability that a standard-Gaussian point of norm `r` beats one random
/// Gaussian competitor: `Φ(r)`.
pub fn dominator_probability(r: f64) -> Result<f64> {
    if r.is_nan() || r < 0.0 {
        return Err(usage(format!("norm r = {r} must be non-negative")));
    }
    Ok(normal_cdf(r))
}

/// Monte-Carlo estimate of `P(⟨x,y⟩ < r² | ‖x‖ = r)` for `y ~ N(0, I_d)`.
/// `x` is a seeded random direction scaled to norm `r`.
pub fn dominator_probability_mc(r: f64, dim: usize, samples: usize, seed: u64) -> Result<f64> {
    if (r.is_nan() || r < 0.0) || dim == 0 || samples == 0 {
        return Err(usage("need r >= 0, dim >= 1, samples >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let x: Vec<f64> = dir.iter().map(|v| v / len * r).collect();
    let threshold = r * r;
    let mut below = 0usize;
    for _ in 0..samples {
        let ip: f64 = x.iter().map(|xi| xi * rng.sample::<f64, _>(StandardNormal)).sum();
        if ip < threshold {
            below += 1;
        }
    }
    Ok(below as f64 / samples as f64)
}

/// `n · P(‖x‖ > r)` for `x ~ N(0, I_d)`, i.e. `n · Q(d/2, r²/2)`.
pub fn expected_self_dominators(n: usize, dim: usize, r: f64) -> Result<f64> {
    if n == 0 || dim == 0 || (r.is_nan() || r < 0.0) {
        return Err(usage("need n >= 1, dim >= 1, r >= 0"));
    }
    if r.is_infinite() {
        return Ok(0.0);
    }
    Ok(n as f64 * gamma_q(dim as f64 / 2.0, r * r / 2.0))
}

/// Estimated angle (radians) between a point and its nearest neighbour for
/// `n` i.i.d. Gaussian points in `dim` dimensions, with tightness `t ∈ (0,1)`:
/// `arccos(min((ln n + (d/2)·ln(1/(1−t²))) / (t·d), 1))`.
pub fn estimate_nn_angle(n: usize, dim: usize, t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(usage(format!("t = {t} must lie in (0, 1)")));
    }
    if n < 2 || dim == 0 {
        return Err(usage("need n >= 2 and dim >= 1"));
    }
    let d = dim as f64;
    let arg = ((n as f64).ln() + d / 2.0 * (1.0 / (1.0 - t * t)).ln()) / (t * d);
    Ok(arg.clamp(-1.0, 1.0).acos())
}
