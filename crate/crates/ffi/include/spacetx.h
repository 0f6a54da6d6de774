/* C interface to the spacetx search-space designer. */

#ifndef SPACETX_H
#define SPACETX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum SpacetxStatus {
  SPACETX_STATUS_OK = 0,
  SPACETX_STATUS_NULL_POINTER = 1,
  SPACETX_STATUS_INVALID_ARGUMENT = 2,
  SPACETX_STATUS_IO_ERROR = 3,
  SPACETX_STATUS_PARSE_ERROR = 4,
  SPACETX_STATUS_UNKNOWN_TASK = 5,
  SPACETX_STATUS_BUFFER_TOO_SMALL = 6,
  SPACETX_STATUS_INTERNAL_ERROR = 7,
} SpacetxStatus;

/**
 * Opaque handle to a loaded tabular benchmark.
 */
typedef struct SpacetxBenchmark SpacetxBenchmark;

/**
 * Opaque handle to a design session for one target task.
 */
typedef struct SpacetxDesigner SpacetxDesigner;

/**
 * Parameters of a design session. Obtain defaults from
 * [`spacetx_designer_options_default`] and override selectively.
 */
typedef struct SpacetxDesignerOptions {
  /**
   * Label quantile at similarity 1 (paper default 0.05).
   */
  double alpha_min;
  /**
   * Label quantile at and below similarity 0.5 (paper default 0.95).
   */
  double alpha_max;
  /**
   * Number of source tasks sampled per design call.
   */
  size_t k;
  /**
   * Fewer surviving candidates than this triggers the full-pool fallback.
   */
  size_t min_space_size;
  /**
   * Observations kept per source task.
   */
  size_t n_source_obs;
  /**
   * Seed for source subsampling, surrogate fits, and task sampling.
   */
  uint64_t seed;
} SpacetxDesignerOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread, or NULL when no
 * failure has been recorded. The pointer stays valid until the next failing
 * call on the same thread.
 */
const char *spacetx_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *spacetx_version(void);

struct SpacetxDesignerOptions spacetx_designer_options_default(void);

/**
 * Loads and validates a benchmark JSON file. On success `*out` owns the
 * benchmark; release it with [`spacetx_benchmark_free`].
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SpacetxStatus spacetx_benchmark_load(const char *path, struct SpacetxBenchmark **out);

/**
 * Parses a benchmark from a JSON string instead of a file.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SpacetxStatus spacetx_benchmark_from_json(const char *json, struct SpacetxBenchmark **out);

/**
 * Releases a benchmark handle. NULL is a no-op.
 *
 * # Safety
 * `benchmark` must have come from a spacetx load call and not yet be freed.
 */
void spacetx_benchmark_free(struct SpacetxBenchmark *benchmark);

/**
 * Number of tasks in the benchmark; 0 when the handle is NULL.
 *
 * # Safety
 * `benchmark` must be a live handle or NULL.
 */
size_t spacetx_benchmark_task_count(const struct SpacetxBenchmark *benchmark);

/**
 * Copies the NUL-terminated id of task `index` into `buf`. `*out_len`
 * receives the id length (without the NUL) regardless of success, so a
 * too-small buffer can be retried.
 *
 * # Safety
 * `benchmark` must be a live handle; `buf` must point to `buf_len` writable
 * bytes; `out_len` must be valid.
 */
enum SpacetxStatus spacetx_benchmark_task_id(const struct SpacetxBenchmark *benchmark,
                                             size_t index,
                                             char *buf,
                                             size_t buf_len,
                                             size_t *out_len);

/**
 * Number of rows in the named task's table.
 *
 * # Safety
 * All pointers must be valid; `task_id` NUL-terminated.
 */
enum SpacetxStatus spacetx_benchmark_task_rows(const struct SpacetxBenchmark *benchmark,
                                               const char *task_id,
                                               size_t *out);

/**
 * Opens a design session: every other task becomes a source (truncated to
 * `n_source_obs` seeded rows, surrogate fitted up front) and the target
 * task's table becomes the candidate pool. Requires at least one other task
 * and at least two rows per source.
 *
 * # Safety
 * All pointers must be valid; `target_task_id` NUL-terminated. The returned
 * handle must be released with [`spacetx_designer_free`].
 */
enum SpacetxStatus spacetx_designer_new(const struct SpacetxBenchmark *benchmark,
                                        const char *target_task_id,
                                        const struct SpacetxDesignerOptions *options,
                                        struct SpacetxDesigner **out);

/**
 * Releases a designer handle. NULL is a no-op.
 *
 * # Safety
 * `designer` must have come from [`spacetx_designer_new`] and not yet be
 * freed.
 */
void spacetx_designer_free(struct SpacetxDesigner *designer);

/**
 * Appends a target observation given as a JSON object
 * (`{"param": value, ...}`) and its objective value.
 *
 * # Safety
 * `designer` must be a live handle; `config_json` NUL-terminated.
 */
enum SpacetxStatus spacetx_designer_observe_json(struct SpacetxDesigner *designer,
                                                 const char *config_json,
                                                 double y);

/**
 * Appends a target observation identified by its row index in the target
 * task's table.
 *
 * # Safety
 * `designer` must be a live handle.
 */
enum SpacetxStatus spacetx_designer_observe_row(struct SpacetxDesigner *designer,
                                                size_t row_index,
                                                double y);

/**
 * Number of observations fed so far.
 *
 * # Safety
 * `designer` must be a live handle or NULL.
 */
size_t spacetx_designer_observation_count(const struct SpacetxDesigner *designer);

/**
 * Runs one design pass over the target table with the current observations.
 * Results are read with [`spacetx_designer_member_count`],
 * [`spacetx_designer_members`], [`spacetx_designer_fallback_used`], and
 * [`spacetx_designer_similarities`].
 *
 * # Safety
 * `designer` must be a live handle.
 */
enum SpacetxStatus spacetx_designer_design(struct SpacetxDesigner *designer);

/**
 * Number of candidates admitted by the most recent design pass.
 *
 * # Safety
 * `designer` must be a live handle.
 */
enum SpacetxStatus spacetx_designer_member_count(const struct SpacetxDesigner *designer,
                                                 size_t *out);

/**
 * Copies the admitted candidates' row indices (into the target task's table)
 * from the most recent design pass. `*out_len` always receives the full
 * member count.
 *
 * # Safety
 * `designer` must be a live handle; `buf` must point to `buf_len` writable
 * elements; `out_len` must be valid.
 */
enum SpacetxStatus spacetx_designer_members(const struct SpacetxDesigner *designer,
                                            size_t *buf,
                                            size_t buf_len,
                                            size_t *out_len);

/**
 * Whether the most recent design fell back to the full pool.
 *
 * # Safety
 * `designer` must be a live handle.
 */
enum SpacetxStatus spacetx_designer_fallback_used(const struct SpacetxDesigner *designer,
                                                  bool *out);

/**
 * Number of source tasks in the session.
 *
 * # Safety
 * `designer` must be a live handle or NULL.
 */
size_t spacetx_designer_source_count(const struct SpacetxDesigner *designer);

/**
 * Copies the per-source ranking similarities computed by the most recent
 * design pass (source order matches the benchmark's task order with the
 * target removed). `*out_len` always receives the source count.
 *
 * # Safety
 * `designer` must be a live handle; `buf` must point to `buf_len` writable
 * doubles; `out_len` must be valid.
 */
enum SpacetxStatus spacetx_designer_similarities(const struct SpacetxDesigner *designer,
                                                 double *buf,
                                                 size_t buf_len,
                                                 size_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPACETX_H */
