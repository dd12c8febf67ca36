pub mod bench;
pub mod error;
pub mod graph;
pub mod index;
pub mod io;
pub mod metrics;
pub mod oracle;
pub mod search;
pub mod special;
pub mod stats;
#[cfg(test)]
mod testutil;
mod util;

pub use error::{Error, Result};
pub use index::{build_index, load_index, materialize, save_index, BuildParams, KnnMode, MagIndex, SearchGraph};
pub use metrics::{euclidean_sq, inner_product, norm, Dataset, MetricKind};
pub use search::{anms_search, greedy_search, EntryPolicy, SearchParams, SearchResult, Searcher};
pub use util::mix_seed;
