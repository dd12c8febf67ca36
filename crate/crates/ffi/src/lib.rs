//! C ABI over `mag-core`.
//!
//! Every fallible call returns a [`MagStatus`]; on failure the message is
//! available from [`mag_last_error`] on the same thread. Objects are opaque
//! handles released with their `_free` function. Handles are immutable after
//! creation and may be shared across threads.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::sync::{Arc, OnceLock};

use mag_core::index::KnnMode;
use mag_core::{BuildParams, Dataset, EntryPolicy, Error, SearchGraph, SearchParams, Searcher};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MagStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Format = 3,
    UnsupportedVersion = 4,
    Io = 5,
    Degenerate = 6,
    Invariant = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MagEntry {
    Random = 0,
    Medoid = 1,
}

/// Construction parameters. `nndescent_iters == 0` selects the exact K-NN graph.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct MagBuildParams {
    pub k: usize,
    pub k1: usize,
    pub k2: usize,
    pub pool_size: usize,
    pub seed: u64,
    pub nndescent_iters: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct MagSearchParams {
    pub pool_size: usize,
    pub k: usize,
    /// Euclidean expansions before the switch to inner product.
    pub switch_steps: usize,
    pub seed: u64,
    pub entry: MagEntry,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct MagSearchStats {
    pub dist_comps: u64,
    pub hops: u64,
}

/// Opaque vector set.
pub struct MagDataset(Arc<Dataset>);

/// Opaque two-layer index.
pub struct MagIndex(mag_core::MagIndex);

/// Opaque materialized graph bound to its vectors.
pub struct MagSearcher {
    dataset: Arc<Dataset>,
    graph: SearchGraph,
    medoid: OnceLock<u32>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(MagStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Usage(_) => MagStatus::InvalidArgument,
            Error::Format(_) => MagStatus::Format,
            Error::UnsupportedVersion { .. } => MagStatus::UnsupportedVersion,
            Error::Degenerate(_) => MagStatus::Degenerate,
            Error::Invariant(_) => MagStatus::Invariant,
            Error::Io(_) => MagStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: MagStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MagStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            MagStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MagStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(MagStatus::NullPointer, format!("{what} is null")))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(fail(MagStatus::NullPointer, "path is null"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(MagStatus::InvalidArgument, "path is not UTF-8"))?;
    Ok(PathBuf::from(s))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(MagStatus::NullPointer, "output handle pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn mag_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Copies `n * dim` row-major floats into a new dataset.
///
/// # Safety
/// `data` must point to `n * dim` readable floats; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mag_dataset_new(data: *const f32, n: usize, dim: usize, out: *mut *mut MagDataset) -> MagStatus {
    guard(|| {
        if data.is_null() {
            return Err(fail(MagStatus::NullPointer, "data is null"));
        }
        let len = n
            .checked_mul(dim)
            .ok_or_else(|| fail(MagStatus::InvalidArgument, "n * dim overflows"))?;
        let values = std::slice::from_raw_parts(data, len).to_vec();
        let ds = Dataset::new(dim, values)?;
        store(out, MagDataset(Arc::new(ds)))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mag_dataset_read_fvecs(path: *const c_char, out: *mut *mut MagDataset) -> MagStatus {
    guard(|| {
        let ds = mag_core::io::read_fvecs(path_arg(path)?)?;
        store(out, MagDataset(Arc::new(ds)))
    })
}

/// Number of vectors, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mag_dataset_len(ds: *const MagDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.len())
}

/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mag_dataset_dim(ds: *const MagDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.dim())
}

/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mag_dataset_free(ds: *mut MagDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

#[no_mangle]
pub extern "C" fn mag_build_params_default() -> MagBuildParams {
    let d = BuildParams::default();
    MagBuildParams { k: d.k, k1: d.k1, k2: d.k2, pool_size: d.pool_size, seed: d.seed, nndescent_iters: 0 }
}

/// # Safety
/// `ds` and `params` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mag_index_build(
    ds: *const MagDataset,
    params: *const MagBuildParams,
    out: *mut *mut MagIndex,
) -> MagStatus {
    guard(|| {
        let ds = deref(ds, "dataset")?;
        let p = deref(params, "params")?;
        let knn = match p.nndescent_iters {
            0 => KnnMode::Exact,
            iters => KnnMode::NnDescent { iters },
        };
        let bp = BuildParams { k: p.k, k1: p.k1, k2: p.k2, pool_size: p.pool_size, seed: p.seed, knn };
        let index = mag_core::build_index(&ds.0, &bp)?;
        store(out, MagIndex(index))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mag_index_load(path: *const c_char, out: *mut *mut MagIndex) -> MagStatus {
    guard(|| {
        let index = mag_core::load_index(path_arg(path)?)?;
        store(out, MagIndex(index))
    })
}

/// # Safety
/// `index` must be live; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mag_index_save(index: *const MagIndex, path: *const c_char) -> MagStatus {
    guard(|| {
        let index = deref(index, "index")?;
        mag_core::save_index(&index.0, path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `index` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mag_index_len(index: *const MagIndex) -> usize {
    index.as_ref().map_or(0, |i| i.0.len())
}

/// # Safety
/// `index` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mag_index_free(index: *mut MagIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// Materializes `index` with out-degree `r` and dominator share `alpha` over
/// the vectors of `ds`. The searcher keeps its own reference to the vectors;
/// both inputs may be freed afterwards.
///
/// # Safety
/// `index` and `ds` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mag_searcher_new(
    index: *const MagIndex,
    ds: *const MagDataset,
    r: usize,
    alpha: f64,
    out: *mut *mut MagSearcher,
) -> MagStatus {
    guard(|| {
        let index = deref(index, "index")?;
        let ds = deref(ds, "dataset")?;
        if index.0.len() != ds.0.len() || index.0.dim() != ds.0.dim() {
            return Err(fail(
                MagStatus::InvalidArgument,
                format!(
                    "index is {}x{} but dataset is {}x{}",
                    index.0.len(),
                    index.0.dim(),
                    ds.0.len(),
                    ds.0.dim()
                ),
            ));
        }
        let graph = mag_core::materialize(&index.0, r, alpha)?;
        store(out, MagSearcher { dataset: Arc::clone(&ds.0), graph, medoid: OnceLock::new() })
    })
}

#[no_mangle]
pub extern "C" fn mag_search_params_default() -> MagSearchParams {
    MagSearchParams { pool_size: 100, k: 10, switch_steps: 0, seed: 0, entry: MagEntry::Random }
}

/// Top-`params.k` inner-product search. Writes `params.k` ids (and scores
/// when `out_scores` is non-null) and stores the count in `out_len`, which
/// is smaller than k only when the dataset is.
///
/// # Safety
/// `searcher` and `params` must be live; `query` must hold `dim` floats;
/// `out_ids` (and `out_scores` if non-null) must hold `capacity` elements;
/// `out_len` must be writable; `out_stats` may be null.
#[no_mangle]
pub unsafe extern "C" fn mag_searcher_search(
    searcher: *const MagSearcher,
    query: *const f32,
    dim: usize,
    params: *const MagSearchParams,
    out_ids: *mut u32,
    out_scores: *mut f32,
    capacity: usize,
    out_len: *mut usize,
    out_stats: *mut MagSearchStats,
) -> MagStatus {
    guard(|| {
        let s = deref(searcher, "searcher")?;
        let p = deref(params, "params")?;
        if query.is_null() || out_ids.is_null() || out_len.is_null() {
            return Err(fail(MagStatus::NullPointer, "query, out_ids and out_len must be non-null"));
        }
        if capacity < p.k {
            return Err(fail(MagStatus::BufferTooSmall, format!("capacity {capacity} is below k = {}", p.k)));
        }
        let entry = match p.entry {
            MagEntry::Random => EntryPolicy::RandomSeeded,
            MagEntry::Medoid => EntryPolicy::FixedMedoid,
        };
        let q = std::slice::from_raw_parts(query, dim);
        let mut searcher = Searcher::new(&s.graph, &s.dataset)?;
        if let EntryPolicy::FixedMedoid = entry {
            let m = *s.medoid.get_or_init(|| mag_core::search::medoid(&s.dataset));
            searcher = searcher.with_medoid(m)?;
        }
        let params = SearchParams {
            pool_size: p.pool_size,
            k: p.k,
            switch_steps: p.switch_steps,
            seed: p.seed,
            entry,
        };
        let mut scratch = searcher.scratch();
        let res = searcher.anms(q, &params, &mut scratch)?;
        ptr::copy_nonoverlapping(res.ids.as_ptr(), out_ids, res.ids.len());
        if !out_scores.is_null() {
            ptr::copy_nonoverlapping(res.scores.as_ptr(), out_scores, res.scores.len());
        }
        *out_len = res.ids.len();
        if let Some(st) = out_stats.as_mut() {
            *st = MagSearchStats { dist_comps: res.stats.dist_comps, hops: res.stats.hops };
        }
        Ok(())
    })
}

/// # Safety
/// `searcher` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mag_searcher_free(searcher: *mut MagSearcher) {
    if !searcher.is_null() {
        drop(Box::from_raw(searcher));
    }
}
