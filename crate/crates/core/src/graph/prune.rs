//! Edge selection rules applied to a node's candidate list.

use crate::metrics::{dot_unchecked, l2_unchecked, Dataset};

/// Monotonic-RNG occlusion: scanning `candidates` nearest-first, keep `p`
/// iff `d(node, p) < d(p, r)` for every already-kept `r`. At most `max_keep`
/// edges are returned.
///
/// `candidates` are `(id, squared distance to node)`, ascending, without
/// `node` itself.
pub fn mrng_prune(candidates: &[(u32, f32)], dataset: &Dataset, max_keep: usize) -> Vec<u32> {
    let mut kept: Vec<u32> = Vec::with_capacity(max_keep.min(candidates.len()));
    for &(p, d_node) in candidates {
        if kept.len() >= max_keep {
            break;
        }
        let xp = dataset.row(p as usize);
        let occluded = kept
            .iter()
            .any(|&r| r == p || l2_unchecked(xp, dataset.row(r as usize)) <= d_node);
        if !occluded {
            kept.push(p);
        }
    }
    kept
}

/// Dominator edge selection over a list sorted by descending `⟨node, ·⟩`.
///
/// The first candidate is always accepted. A later `y` is accepted iff, for
/// every previously accepted `a`, `⟨y,y⟩ ≥ ⟨y,a⟩`, and, for every accepted `a`
/// except the first, `⟨a,a⟩ ≥ ⟨y,a⟩`. At most `max_keep` ids are returned.
pub fn ndg_select(candidates: &[u32], dataset: &Dataset, max_keep: usize) -> Vec<u32> {
    let mut accepted: Vec<u32> = Vec::new();
    let mut self_ip: Vec<f32> = Vec::new();
    for &y in candidates {
        if accepted.len() >= max_keep {
            break;
        }
        let xy = dataset.row(y as usize);
        let yy = dot_unchecked(xy, xy);
        if accepted.is_empty() {
            accepted.push(y);
            self_ip.push(yy);
            continue;
        }
        if accepted.contains(&y) {
            continue;
        }
        let ok = accepted.iter().zip(&self_ip).enumerate().all(|(pos, (&a, &aa))| {
            let ya = dot_unchecked(xy, dataset.row(a as usize));
            yy >= ya && (pos == 0 || aa >= ya)
        });
        if ok {
            accepted.push(y);
            self_ip.push(yy);
        }
    }
    accepted
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mrng_hand_example() {
        let d = Dataset::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.5], vec![2.0, 0.0]]).unwrap();
        let cands = [(1, 1.0), (2, 2.25), (3, 4.0)];
        assert_eq!(mrng_prune(&cands, &d, 10), vec![1, 2]);
        assert_eq!(mrng_prune(&cands, &d, 1), vec![1]);
        assert_eq!(mrng_prune(&cands[2..], &d, 10), vec![3]);
        assert!(mrng_prune(&[], &d, 10).is_empty());
    }

    #[test]
    fn mrng_collinear() {
        let d = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        assert_eq!(mrng_prune(&[(1, 1.0), (2, 4.0)], &d, 5), vec![1]);
    }

    #[test]
    fn ndg_hand_example() {
        let d = Dataset::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0], vec![0.9, 0.9]]).unwrap();
        // L(a) = [c (1.8), b (0)]
        assert_eq!(ndg_select(&[2, 1], &d, usize::MAX), vec![2, 1]);
        assert_eq!(ndg_select(&[2, 1], &d, 1), vec![2]);
        assert_eq!(ndg_select(&[1], &d, 4), vec![1]);
    }

    #[test]
    fn ndg_rejects_dominated_candidate() {
        // y_k = 2 y_j: ⟨y_j,y_j⟩ = 1 < ⟨y_j,y_k⟩ = 2
        let d = Dataset::from_rows(&[
            vec![1.0, 0.2], // node
            vec![2.0, 0.0], // first
            vec![1.0, 2.0], // y_k, accepted
            vec![0.5, 1.0], // y_j
        ])
        .unwrap();
        assert_eq!(ndg_select(&[1, 2, 3], &d, usize::MAX), vec![1, 2]);
        assert_eq!(ndg_select(&[1, 3], &d, usize::MAX), vec![1, 3]);
    }

    #[test]
    fn ndg_condition_two_uses_only_later_accepted() {
        // third candidate dominates the second accepted one → rejected by (2)
        let d = Dataset::from_rows(&[
            vec![1.0, 0.0],
            vec![5.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, 3.0],
        ])
        .unwrap();
        // ⟨y3,y3⟩=9 ≥ ⟨y3,y1⟩=0 and ≥ ⟨y3,y2⟩=3, but ⟨y2,y2⟩=1 < ⟨y3,y2⟩=3
        assert_eq!(ndg_select(&[1, 2, 3], &d, usize::MAX), vec![1, 2]);
        // the first accepted is exempt from (2)
        assert_eq!(ndg_select(&[2, 3], &d, usize::MAX), vec![2, 3]);
    }
}
