#ifndef CTXNET_H
#define CTXNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum CtxnetSubset {
  CTXNET_SUBSET_ALL = 0,
  CTXNET_SUBSET_POSITIVE = 1,
  CTXNET_SUBSET_NEGATIVE = 2,
} CtxnetSubset;

typedef enum CtxnetStatus {
  CTXNET_STATUS_OK = 0,
  CTXNET_STATUS_NULL_POINTER = 1,
  CTXNET_STATUS_INVALID_ARGUMENT = 2,
  CTXNET_STATUS_FILE_NOT_FOUND = 3,
  CTXNET_STATUS_SCHEMA_VIOLATION = 4,
  CTXNET_STATUS_INSUFFICIENT_POOL = 5,
  CTXNET_STATUS_INSUFFICIENT_DATA = 6,
  CTXNET_STATUS_IO = 7,
  CTXNET_STATUS_PANIC = 8,
  CTXNET_STATUS_OTHER = 9,
} CtxnetStatus;

/**
 * Which distribution [`ctxnet_analysis_differences`] copies out.
 */
typedef enum CtxnetDistribution {
  CTXNET_DISTRIBUTION_CONTEXT = 0,
  CTXNET_DISTRIBUTION_BASELINE = 1,
} CtxnetDistribution;

/**
 * Result of [`ctxnet_analyze`].
 */
typedef struct CtxnetAnalysis CtxnetAnalysis;

/**
 * A parsed and backfilled participant.
 */
typedef struct CtxnetDataset CtxnetDataset;

typedef struct CtxnetOptions {
  enum CtxnetSubset subset;
  uint64_t seed;
  size_t permutations;
  size_t sample_size;
} CtxnetOptions;

/**
 * Baseline and context statistics of one analysis.
 */
typedef struct CtxnetSummary {
  double baseline_mean;
  double baseline_std;
  double context_mean;
  double context_std;
  double t;
  uint64_t df;
  /**
   * Two-sided; exactly 0 when it underflows.
   */
  double p_value;
  size_t n;
} CtxnetSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *ctxnet_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ctxnet_version(void);

struct CtxnetOptions ctxnet_options_default(void);

/**
 * Loads a participant CSV and backfills it.
 */
enum CtxnetStatus ctxnet_dataset_load(const char *path, struct CtxnetDataset **out);

/**
 * Parses CSV text held in memory and backfills it.
 */
enum CtxnetStatus ctxnet_dataset_from_csv(const char *participant_id,
                                          const char *csv,
                                          struct CtxnetDataset **out);

void ctxnet_dataset_free(struct CtxnetDataset *ds);

/**
 * Days carrying a reported or backfilled EMA.
 */
enum CtxnetStatus ctxnet_dataset_usable_days(const struct CtxnetDataset *ds, size_t *out);

/**
 * Whether `context` (a flag such as `locations` or `baseline`) has enough
 * days in every pool for samples of `min_days`.
 */
enum CtxnetStatus ctxnet_dataset_eligible(const struct CtxnetDataset *ds,
                                          const char *context,
                                          size_t min_days,
                                          bool *out);

/**
 * Permutation test of one sensor context against the baseline.
 * `options` may be NULL for defaults.
 */
enum CtxnetStatus ctxnet_analyze(const struct CtxnetDataset *ds,
                                 const char *context,
                                 const struct CtxnetOptions *options,
                                 struct CtxnetAnalysis **out);

void ctxnet_analysis_free(struct CtxnetAnalysis *a);

enum CtxnetStatus ctxnet_analysis_summary(const struct CtxnetAnalysis *a,
                                          struct CtxnetSummary *out);

/**
 * Copies up to `capacity` differences into `buf` and stores the total count
 * in `len`. Pass `buf = NULL` to query the count.
 */
enum CtxnetStatus ctxnet_analysis_differences(const struct CtxnetAnalysis *a,
                                              enum CtxnetDistribution which,
                                              double *buf,
                                              size_t capacity,
                                              size_t *len);

/**
 * The comparison as JSON. Release the string with [`ctxnet_string_free`].
 */
enum CtxnetStatus ctxnet_analysis_to_json(const struct CtxnetAnalysis *a, char **out);

void ctxnet_string_free(char *s);

/**
 * Pearson correlation of two arrays of length `len`.
 */
enum CtxnetStatus ctxnet_pearson_r(const double *x, const double *y, size_t len, double *out);

/**
 * Two-sided Student-t tail probability.
 */
enum CtxnetStatus ctxnet_t_sf(double t, uint64_t df, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CTXNET_H */
