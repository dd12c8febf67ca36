//! NN-descent approximate K-NN graph construction.
//!
//! Each round samples "new" and "old" neighbour sets (forward and reverse),
//! runs the local join, and applies the proposed improvements. Proposals for
//! a block of nodes are computed in parallel against the state at the start
//! of the block and applied sequentially in node order, so the result only
//! depends on the seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::knn::{by_dist, check_k, KnnGraph};
use crate::error::Result;
use crate::metrics::{l2_unchecked, Dataset};
use crate::util::mix_seed;

const BLOCK: usize = 512;
const SAMPLE_RATE: f64 = 0.5;
const EARLY_STOP: f64 = 0.001;

#[derive(Clone, Copy)]
struct Entry {
    id: u32,
    dist: f32,
    fresh: bool,
}

fn try_insert(list: &mut Vec<Entry>, id: u32, dist: f32) -> bool {
    let last = list.last().unwrap();
    if by_dist(&(id, dist), &(last.id, last.dist)) != std::cmp::Ordering::Less {
        return false;
    }
    if list.iter().any(|e| e.id == id) {
        return false;
    }
    let pos = list.partition_point(|e| by_dist(&(e.id, e.dist), &(id, dist)) == std::cmp::Ordering::Less);
    list.pop();
    list.insert(pos, Entry { id, dist, fresh: true });
    true
}

pub fn build_nndescent_knn(dataset: &Dataset, k: usize, seed: u64, iters: usize) -> Result<KnnGraph> {
    check_k(dataset, k)?;
    let n = dataset.len();

    let mut lists: Vec<Vec<Entry>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, i as u64));
            let mut picked: Vec<u32> = Vec::with_capacity(k);
            while picked.len() < k {
                let j = rng.random_range(0..n as u32);
                if j as usize != i && !picked.contains(&j) {
                    picked.push(j);
                }
            }
            let mut l: Vec<Entry> = picked
                .into_iter()
                .map(|j| Entry { id: j, dist: l2_unchecked(dataset.row(i), dataset.row(j as usize)), fresh: true })
                .collect();
            l.sort_unstable_by(|a, b| by_dist(&(a.id, a.dist), &(b.id, b.dist)));
            l
        })
        .collect();

    let sample = ((k as f64 * SAMPLE_RATE).ceil() as usize).max(1);
    for round in 0..iters {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed ^ 0x9e37_79b9, round as u64));
        let mut new_sets: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut old_sets: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (v, list) in lists.iter_mut().enumerate() {
            let mut fresh: Vec<usize> = (0..list.len()).filter(|&p| list[p].fresh).collect();
            fresh.shuffle(&mut rng);
            fresh.truncate(sample);
            for p in fresh {
                list[p].fresh = false;
                new_sets[v].push(list[p].id);
            }
            old_sets[v].extend(list.iter().filter(|e| !e.fresh && !new_sets[v].contains(&e.id)).map(|e| e.id));
        }
        let mut rev_new: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut rev_old: Vec<Vec<u32>> = vec![Vec::new(); n];
        for v in 0..n {
            for &u in &new_sets[v] {
                rev_new[u as usize].push(v as u32);
            }
            for &u in &old_sets[v] {
                rev_old[u as usize].push(v as u32);
            }
        }
        for v in 0..n {
            rev_new[v].shuffle(&mut rng);
            rev_new[v].truncate(sample);
            rev_old[v].shuffle(&mut rng);
            rev_old[v].truncate(sample);
            for &u in &rev_new[v] {
                if !new_sets[v].contains(&u) {
                    new_sets[v].push(u);
                }
            }
            for &u in &rev_old[v] {
                if !old_sets[v].contains(&u) && !new_sets[v].contains(&u) {
                    old_sets[v].push(u);
                }
            }
        }

        let mut updates = 0usize;
        for start in (0..n).step_by(BLOCK) {
            let end = (start + BLOCK).min(n);
            let worst: Vec<f32> = lists.iter().map(|l| l.last().unwrap().dist).collect();
            let proposals: Vec<Vec<(u32, u32, f32)>> = (start..end)
                .into_par_iter()
                .map(|v| {
                    let mut out = Vec::new();
                    let nv = &new_sets[v];
                    let ov = &old_sets[v];
                    for (a, &u1) in nv.iter().enumerate() {
                        let x1 = dataset.row(u1 as usize);
                        for &u2 in nv[a + 1..].iter().chain(ov.iter()) {
                            if u1 == u2 {
                                continue;
                            }
                            let d = l2_unchecked(x1, dataset.row(u2 as usize));
                            if d <= worst[u1 as usize] {
                                out.push((u1, u2, d));
                            }
                            if d <= worst[u2 as usize] {
                                out.push((u2, u1, d));
                            }
                        }
                    }
                    out
                })
                .collect();
            for batch in proposals {
                for (target, cand, d) in batch {
                    if try_insert(&mut lists[target as usize], cand, d) {
                        updates += 1;
                    }
                }
            }
        }
        if (updates as f64) < EARLY_STOP * (n * k) as f64 {
            break;
        }
    }

    let out = lists
        .into_iter()
        .map(|l| l.into_iter().map(|e| (e.id, e.dist)).collect())
        .collect();
    Ok(KnnGraph::from_lists(k, out))
}
