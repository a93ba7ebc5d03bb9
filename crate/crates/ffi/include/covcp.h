#ifndef COVCP_H
#define COVCP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every fallible entry point.
 */
typedef enum CovcpStatus {
  COVCP_STATUS_OK = 0,
  COVCP_STATUS_NULL_POINTER = 1,
  /**
   * Bad shape, trimming, level or replication count.
   */
  COVCP_STATUS_INVALID_ARGUMENT = 2,
  COVCP_STATUS_NON_FINITE = 3,
  /**
   * A segment covariance or the kernel matrix is not positive definite.
   */
  COVCP_STATUS_SINGULAR = 4,
  /**
   * A split lies outside the domain of the centering or scale terms.
   */
  COVCP_STATUS_INADMISSIBLE = 5,
  COVCP_STATUS_DEGENERATE_DATA = 6,
  COVCP_STATUS_INDEX_OUT_OF_RANGE = 7,
  COVCP_STATUS_IO = 8,
  COVCP_STATUS_PANIC = 9,
} CovcpStatus;

/**
 * Input observations, `n` rows of dimension `p`.
 */
typedef struct CovcpData CovcpData;

/**
 * Outcome of one detection run.
 */
typedef struct CovcpReport CovcpReport;

/**
 * Tuning of a detection run. Obtain defaults from [`covcp_config_default`].
 */
typedef struct CovcpConfig {
  double t0;
  double alpha;
  size_t mc_reps;
  uint64_t seed;
} CovcpConfig;

/**
 * Scalar summary of a [`CovcpReport`].
 */
typedef struct CovcpSummary {
  size_t n;
  size_t p;
  double statistic;
  double quantile;
  bool reject;
  double tau_hat;
  double kappa_hat;
  double quantile_std_error;
  size_t profile_len;
} CovcpSummary;

/**
 * One split of the standardized profile.
 */
typedef struct CovcpProfileEntry {
  size_t m;
  double t;
  double two_log_lambda_cen;
  double mu_tilde;
  double sigma_nt;
  double standardized;
  double centered_over_n;
} CovcpProfileEntry;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default configuration: `t0 = 0.2`, `alpha = 0.05`, 100000 paths, seed 0.
 */
struct CovcpConfig covcp_config_default(void);

/**
 * Message describing the most recent failure on this thread, or an empty
 * string. The pointer stays valid until the next failing call on this thread.
 */
const char *covcp_last_error_message(void);

/**
 * Copies `n * p` row-major values into a new data handle.
 *
 * # Safety
 * `values` must point to `n * p` readable doubles and `out` must be writable.
 */
enum CovcpStatus covcp_data_new(const double *values, size_t n, size_t p, struct CovcpData **out);

/**
 * Releases a data handle. Null is ignored.
 *
 * # Safety
 * `data` must come from [`covcp_data_new`] and not have been freed.
 */
void covcp_data_free(struct CovcpData *data);

/**
 * Runs the full test. A null `config` means the defaults.
 *
 * # Safety
 * `data` must be a live handle, `config` null or readable, `out` writable.
 */
enum CovcpStatus covcp_detect(const struct CovcpData *data,
                              const struct CovcpConfig *config,
                              struct CovcpReport **out);

/**
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
enum CovcpStatus covcp_report_summary(const struct CovcpReport *report, struct CovcpSummary *out);

/**
 * Copies profile entry `index` (0-based, ascending split) into `out`.
 *
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
enum CovcpStatus covcp_report_profile_entry(const struct CovcpReport *report,
                                            size_t index,
                                            struct CovcpProfileEntry *out);

/**
 * Serializes the report in the same JSON layout as `covcp detect`.
 * Returns null on failure; free the string with [`covcp_string_free`].
 *
 * # Safety
 * `report` must be a live handle.
 */
char *covcp_report_to_json(const struct CovcpReport *report);

/**
 * # Safety
 * `s` must come from this library and not have been freed. Null is ignored.
 */
void covcp_string_free(char *s);

/**
 * # Safety
 * `report` must come from [`covcp_detect`] and not have been freed. Null is ignored.
 */
void covcp_report_free(struct CovcpReport *report);

/**
 * Simulated null critical value for shape `(n, p)`. A null `config`
 * means the defaults. `std_error` may be null.
 *
 * # Safety
 * `config` null or readable; `q_alpha` writable; `std_error` null or writable.
 */
enum CovcpStatus covcp_quantile(size_t n,
                                size_t p,
                                const struct CovcpConfig *config,
                                double *q_alpha,
                                double *std_error);

/**
 * Covariance kernel of the limiting process at `(t1, t2)` for ratio `y`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CovcpStatus covcp_kernel_sigma(double t1, double t2, double y, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COVCP_H */
