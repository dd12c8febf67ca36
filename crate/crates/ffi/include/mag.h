#ifndef MAG_H
#define MAG_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MagStatus {
  MAG_STATUS_OK = 0,
  MAG_STATUS_NULL_POINTER = 1,
  MAG_STATUS_INVALID_ARGUMENT = 2,
  MAG_STATUS_FORMAT = 3,
  MAG_STATUS_UNSUPPORTED_VERSION = 4,
  MAG_STATUS_IO = 5,
  MAG_STATUS_DEGENERATE = 6,
  MAG_STATUS_INVARIANT = 7,
  MAG_STATUS_BUFFER_TOO_SMALL = 8,
  MAG_STATUS_PANIC = 9,
} MagStatus;

typedef enum MagEntry {
  MAG_ENTRY_RANDOM = 0,
  MAG_ENTRY_MEDOID = 1,
} MagEntry;

/**
 * Opaque vector set.
 */
typedef struct MagDataset MagDataset;

/**
 * Opaque two-layer index.
 */
typedef struct MagIndex MagIndex;

/**
 * Opaque materialized graph bound to its vectors.
 */
typedef struct MagSearcher MagSearcher;

/**
 * Construction parameters. `nndescent_iters == 0` selects the exact K-NN graph.
 */
typedef struct MagBuildParams {
  size_t k;
  size_t k1;
  size_t k2;
  size_t pool_size;
  uint64_t seed;
  size_t nndescent_iters;
} MagBuildParams;

typedef struct MagSearchParams {
  size_t pool_size;
  size_t k;
  /**
   * Euclidean expansions before the switch to inner product.
   */
  size_t switch_steps;
  uint64_t seed;
  enum MagEntry entry;
} MagSearchParams;

typedef struct MagSearchStats {
  uint64_t dist_comps;
  uint64_t hops;
} MagSearchStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call into this library on the same thread.
 */
const char *mag_last_error(void);

/**
 * Copies `n * dim` row-major floats into a new dataset.
 *
 * # Safety
 * `data` must point to `n * dim` readable floats; `out` must be writable.
 */
enum MagStatus mag_dataset_new(const float *data, size_t n, size_t dim, struct MagDataset **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum MagStatus mag_dataset_read_fvecs(const char *path, struct MagDataset **out);

/**
 * Number of vectors, or 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live handle.
 */
size_t mag_dataset_len(const struct MagDataset *ds);

/**
 * # Safety
 * `ds` must be null or a live handle.
 */
size_t mag_dataset_dim(const struct MagDataset *ds);

/**
 * # Safety
 * `ds` must be null or a handle not yet freed.
 */
void mag_dataset_free(struct MagDataset *ds);

struct MagBuildParams mag_build_params_default(void);

/**
 * # Safety
 * `ds` and `params` must be live; `out` must be writable.
 */
enum MagStatus mag_index_build(const struct MagDataset *ds,
                               const struct MagBuildParams *params,
                               struct MagIndex **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum MagStatus mag_index_load(const char *path, struct MagIndex **out);

/**
 * # Safety
 * `index` must be live; `path` must be a NUL-terminated string.
 */
enum MagStatus mag_index_save(const struct MagIndex *index, const char *path);

/**
 * # Safety
 * `index` must be null or a live handle.
 */
size_t mag_index_len(const struct MagIndex *index);

/**
 * # Safety
 * `index` must be null or a handle not yet freed.
 */
void mag_index_free(struct MagIndex *index);

/**
 * Materializes `index` with out-degree `r` and dominator share `alpha` over
 * the vectors of `ds`. The searcher keeps its own reference to the vectors;
 * both inputs may be freed afterwards.
 *
 * # Safety
 * `index` and `ds` must be live; `out` must be writable.
 */
enum MagStatus mag_searcher_new(const struct MagIndex *index,
                                const struct MagDataset *ds,
                                size_t r,
                                double alpha,
                                struct MagSearcher **out);

struct MagSearchParams mag_search_params_default(void);

/**
 * Top-`params.k` inner-product search. Writes `params.k` ids (and scores
 * when `out_scores` is non-null) and stores the count in `out_len`, which
 * is smaller than k only when the dataset is.
 *
 * # Safety
 * `searcher` and `params` must be live; `query` must hold `dim` floats;
 * `out_ids` (and `out_scores` if non-null) must hold `capacity` elements;
 * `out_len` must be writable; `out_stats` may be null.
 */
enum MagStatus mag_searcher_search(const struct MagSearcher *searcher,
                                   const float *query,
                                   size_t dim,
                                   const struct MagSearchParams *params,
                                   uint32_t *out_ids,
                                   float *out_scores,
                                   size_t capacity,
                                   size_t *out_len,
                                   struct MagSearchStats *out_stats);

/**
 * # Safety
 * `searcher` must be null or a handle not yet freed.
 */
void mag_searcher_free(struct MagSearcher *searcher);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MAG_H */
