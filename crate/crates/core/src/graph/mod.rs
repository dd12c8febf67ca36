//! K-NN graph construction and the two edge-selection rules.

mod knn;
mod ndg;
mod nndescent;
mod prune;

pub use knn::{build_exact_knn, KnnGraph};
pub(crate) use knn::by_dist;
pub use ndg::{build_exact_ndg, ip_ordered_candidates, is_strongly_connected, scc_count, DominatorGraph, EXACT_NDG_LIMIT};
pub use nndescent::build_nndescent_knn;
pub use prune::{mrng_prune, ndg_select};

use serde::{Deserialize, Serialize};

/// Which selection rule produced an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    Euclid,
    IpDominator,
}
