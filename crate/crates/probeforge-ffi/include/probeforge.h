#ifndef PROBEFORGE_H
#define PROBEFORGE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum PfStatus {
  PF_STATUS_OK = 0,
  PF_STATUS_NULL_POINTER = 1,
  PF_STATUS_INVALID_ARGUMENT = 2,
  PF_STATUS_DIMENSION_MISMATCH = 3,
  PF_STATUS_NON_FINITE = 4,
  PF_STATUS_DEGENERATE = 5,
  PF_STATUS_IO = 6,
  PF_STATUS_CONFIG = 7,
  PF_STATUS_DATA = 8,
  PF_STATUS_PANIC = 9,
} PfStatus;

/**
 * Opaque fitted linear probe.
 */
typedef struct PfProbe PfProbe;

/**
 * Counts reported by [`pf_run_grid`].
 */
typedef struct PfRunSummary {
  size_t total;
  size_t executed;
  size_t skipped;
} PfRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none failed.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *pf_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pf_version(void);

/**
 * Fits a minimum-norm least-squares probe with intercept to the `n x d`
 * row-major matrix `x` and targets `y`. On success `*out` owns a probe that
 * must be released with [`pf_probe_free`].
 *
 * # Safety
 * `x` must hold `n * d` values, `y` must hold `n`, `out` must be writable.
 */
enum PfStatus pf_probe_fit(const double *x,
                           size_t n,
                           size_t d,
                           const double *y,
                           struct PfProbe **out);

/**
 * Builds a probe from explicit parameters.
 *
 * # Safety
 * `weights` must hold `d` values and `out` must be writable.
 */
enum PfStatus pf_probe_from_parts(const double *weights,
                                  size_t d,
                                  double intercept,
                                  struct PfProbe **out);

/**
 * Writes `n` predictions for the `n x d` row-major matrix `x` into `out`.
 *
 * # Safety
 * `probe` must come from this library; `x` must hold `n * d` values and
 * `out` room for `n`.
 */
enum PfStatus pf_probe_predict(const struct PfProbe *probe,
                               const double *x,
                               size_t n,
                               size_t d,
                               double *out);

/**
 * Feature dimension of the probe, or 0 for a null handle.
 *
 * # Safety
 * `probe` must be null or come from this library.
 */
size_t pf_probe_dim(const struct PfProbe *probe);

/**
 * Copies the weights into `out`, which must have room for `len` values;
 * `len` must equal the probe dimension.
 *
 * # Safety
 * `probe` must come from this library; `out` must hold `len` values.
 */
enum PfStatus pf_probe_weights(const struct PfProbe *probe, double *out, size_t len);

/**
 * Writes the intercept to `out`.
 *
 * # Safety
 * `probe` must come from this library; `out` must be writable.
 */
enum PfStatus pf_probe_intercept(const struct PfProbe *probe, double *out);

/**
 * Rank of the mean-removed design used by the fit; `*svd` is set to 1 when
 * the rank-deficient path was taken.
 *
 * # Safety
 * `probe` must come from this library; `rank` and `svd` must be writable.
 */
enum PfStatus pf_probe_diagnostics(const struct PfProbe *probe, size_t *rank, int32_t *svd);

/**
 * Releases a probe. Null is accepted and ignored.
 *
 * # Safety
 * `probe` must be null or come from this library and not be used again.
 */
void pf_probe_free(struct PfProbe *probe);

/**
 * Pearson correlation of two length-`n` vectors.
 *
 * # Safety
 * `a` and `b` must hold `n` values; `out` must be writable.
 */
enum PfStatus pf_pearson(const double *a, const double *b, size_t n, double *out);

/**
 * Root mean squared error of two length-`n` vectors.
 *
 * # Safety
 * `a` and `b` must hold `n` values; `out` must be writable.
 */
enum PfStatus pf_rmse(const double *a, const double *b, size_t n, double *out);

/**
 * Uniform draw of `k` of the `n` entries of `candidates` without
 * replacement. Writes the chosen entries, in draw order, to `out`.
 *
 * # Safety
 * `candidates` must hold `n` values and `out` room for `k`.
 */
enum PfStatus pf_random_sample(const size_t *candidates,
                               size_t n,
                               size_t k,
                               uint64_t seed,
                               size_t *out);

/**
 * Farthest-point sampling of `k` rows of the `n x d` row-major matrix
 * `points`. Writes the chosen row indices, in pick order, to `out`.
 *
 * # Safety
 * `points` must hold `n * d` values and `out` room for `k`.
 */
enum PfStatus pf_fps_sample(const float *points,
                            size_t n,
                            size_t d,
                            size_t k,
                            uint64_t seed,
                            size_t *out);

/**
 * Runs the ablation grid described by the JSON text `grid_json` over the
 * data directory `data_dir`, writing results to `out_path`. `threads` of 0
 * picks the default; `resume` non-zero keeps rows already present.
 *
 * # Safety
 * The strings must be NUL-terminated; `summary` must be null or writable.
 */
enum PfStatus pf_run_grid(const char *grid_json,
                          const char *data_dir,
                          const char *out_path,
                          size_t threads,
                          int32_t resume,
                          struct PfRunSummary *summary);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROBEFORGE_H */
