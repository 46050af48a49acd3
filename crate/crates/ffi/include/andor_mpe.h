#ifndef ANDOR_MPE_H
#define ANDOR_MPE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AompError {
  AOMP_ERROR_OK = 0,
  AOMP_ERROR_NULL_POINTER = 1,
  AOMP_ERROR_INVALID_UTF8 = 2,
  AOMP_ERROR_IO = 3,
  AOMP_ERROR_PARSE = 4,
  AOMP_ERROR_INVALID_NETWORK = 5,
  AOMP_ERROR_INVALID_ARGUMENT = 6,
  AOMP_ERROR_NOT_SOLVED = 7,
  AOMP_ERROR_PANIC = 8,
} AompError;

typedef enum AompAlgorithm {
  AOMP_ALGORITHM_AOBF = 0,
  AOMP_ALGORITHM_AOBB = 1,
  AOMP_ALGORITHM_BRUTE = 2,
  AOMP_ALGORITHM_BUCKET_ELIMINATION = 3,
} AompAlgorithm;

typedef enum AompHeuristic {
  AOMP_HEURISTIC_STATIC = 0,
  AOMP_HEURISTIC_DYNAMIC = 1,
} AompHeuristic;

typedef enum AompStatus {
  AOMP_STATUS_SOLVED = 0,
  AOMP_STATUS_TIMEOUT = 1,
  AOMP_STATUS_MEMOUT = 2,
} AompStatus;

/**
 * Opaque network handle.
 */
typedef struct AompNetwork AompNetwork;

/**
 * Opaque solve result handle.
 */
typedef struct AompResult AompResult;

/**
 * Solver settings. Fill with [`aomp_options_default`] before changing
 * fields.
 */
typedef struct AompOptions {
  enum AompAlgorithm algorithm;
  enum AompHeuristic heuristic;
  uint32_t i_bound;
  uint64_t seed;
  /**
   * Seconds; negative means no limit.
   */
  double time_limit;
  /**
   * Bytes; negative means no limit.
   */
  int64_t memory_limit;
  bool caching;
} AompOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *aomp_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *aomp_version(void);

/**
 * Parses a network in UAI `BAYES` text format.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AompError aomp_network_parse(const char *text, struct AompNetwork **out);

/**
 * Reads a UAI file and, when `evidence_path` is not null, applies the
 * evidence file to it.
 *
 * # Safety
 * `path` and (if not null) `evidence_path` must be NUL-terminated strings;
 * `out` must be a valid pointer.
 */
enum AompError aomp_network_load(const char *path,
                                 const char *evidence_path,
                                 struct AompNetwork **out);

/**
 * Returns a new network with `vars[k] = values[k]` observed. Variable ids
 * refer to the original file.
 *
 * # Safety
 * `net` must be a live handle, `vars` and `values` must point to `len`
 * elements each (or be null when `len` is 0), and `out` must be valid.
 */
enum AompError aomp_network_observe(const struct AompNetwork *net,
                                    const size_t *vars,
                                    const size_t *values,
                                    size_t len,
                                    struct AompNetwork **out);

/**
 * Number of unobserved variables; 0 for a null handle.
 *
 * # Safety
 * `net` must be null or a live handle.
 */
size_t aomp_network_num_variables(const struct AompNetwork *net);

/**
 * # Safety
 * `net` must be null or a handle not yet freed.
 */
void aomp_network_free(struct AompNetwork *net);

/**
 * # Safety
 * `opts` must be a valid pointer.
 */
enum AompError aomp_options_default(struct AompOptions *opts);

/**
 * Solves `net`. A null `opts` uses the defaults. Running out of time or
 * memory is not an error: check [`aomp_result_status`].
 *
 * # Safety
 * `net` must be a live handle, `opts` null or valid, `out` valid.
 */
enum AompError aomp_solve(const struct AompNetwork *net,
                          const struct AompOptions *opts,
                          struct AompResult **out);

/**
 * # Safety
 * `res` must be a live handle.
 */
enum AompStatus aomp_result_status(const struct AompResult *res);

/**
 * Natural log of the MPE probability, including observed evidence.
 * Zero-probability networks give negative infinity.
 *
 * # Safety
 * `res` must be a live handle and `out` valid.
 */
enum AompError aomp_result_log_value(const struct AompResult *res, double *out);

/**
 * Writes the MPE assignment as values indexed by original variable id,
 * evidence included. Returns the number of variables, copying at most
 * `len` values; 0 when there is no solution. Call with `len = 0` to size
 * the buffer.
 *
 * # Safety
 * `res` must be a live handle; `buf` must hold `len` elements or be null
 * when `len` is 0.
 */
size_t aomp_result_assignment(const struct AompResult *res, size_t *buf, size_t len);

/**
 * Search nodes expanded (0 for the non-search algorithms).
 *
 * # Safety
 * `res` must be a live handle.
 */
uint64_t aomp_result_nodes(const struct AompResult *res);

/**
 * # Safety
 * `res` must be null or a handle not yet freed.
 */
void aomp_result_free(struct AompResult *res);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ANDOR_MPE_H */
