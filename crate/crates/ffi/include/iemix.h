#ifndef IEMIX_H
#define IEMIX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IemixStatus {
  IEMIX_STATUS_OK = 0,
  IEMIX_STATUS_NULL_POINTER = 1,
  IEMIX_STATUS_INVALID_ARGUMENT = 2,
  IEMIX_STATUS_CAP_EXCEEDED = 3,
  IEMIX_STATUS_NUMERICAL = 4,
  IEMIX_STATUS_NOT_READY = 5,
  IEMIX_STATUS_BUFFER_TOO_SMALL = 6,
  IEMIX_STATUS_PANIC = 7,
} IemixStatus;

typedef enum IemixEnsemble {
  IEMIX_ENSEMBLE_WISHART = 0,
  IEMIX_ENSEMBLE_GOE = 1,
  IEMIX_ENSEMBLE_PM1 = 2,
} IemixEnsemble;

typedef enum IemixSource {
  IEMIX_SOURCE_CLASSICAL = 0,
  IEMIX_SOURCE_ISO = 1,
  IEMIX_SOURCE_QUANTUM = 2,
} IemixSource;

/**
 * Opaque run handle.
 */
typedef struct IemixRun IemixRun;

typedef struct IemixSlider {
  double p;
  double one_minus_p;
  size_t k;
  double n;
  double m;
} IemixSlider;

/**
 * Excess kurtoses of the three convolutions; the mixture weight reproduces the quantum one.
 */
typedef struct IemixKurtoses {
  double p;
  double classical;
  double iso;
  double quantum;
} IemixKurtoses;

typedef struct IemixRunConfig {
  enum IemixEnsemble ensemble;
  /**
   * Wishart rank; ignored otherwise.
   */
  size_t rank;
  size_t n_sites;
  size_t d;
  /**
   * 1 or 2.
   */
  double beta;
  uint64_t trials;
  uint64_t seed;
  /**
   * Nonzero keeps every eigenvalue for [`iemix_run_spectrum`].
   */
  int32_t keep_samples;
} IemixRunConfig;

/**
 * `gamma1`/`gamma2` are NaN when the variance vanishes.
 */
typedef struct IemixMoments {
  double mu;
  double sigma2;
  double gamma1;
  double gamma2;
  uint64_t trials;
} IemixMoments;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL,
 * or 0 when there is no error.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t iemix_last_error(char *buf, size_t len);

/**
 * Analytic mixture weight for an `n_sites` chain of `d`-level sites.
 *
 * # Safety
 * `out` must be null or point to writable memory for one [`IemixSlider`].
 */
enum IemixStatus iemix_slider(size_t n_sites, size_t d, double beta, struct IemixSlider *out);

/**
 * Theoretical kurtoses for real or complex Wishart terms of rank `rank`.
 *
 * # Safety
 * `out` must be null or point to writable memory for one [`IemixKurtoses`].
 */
enum IemixStatus iemix_wishart_kurtoses(size_t n_sites,
                                        size_t d,
                                        size_t rank,
                                        double beta,
                                        struct IemixKurtoses *out);

/**
 * Validates `config` and allocates a handle; no sampling happens yet.
 *
 * # Safety
 * `config` must be null or valid; `out` must be null or writable.
 */
enum IemixStatus iemix_run_new(const struct IemixRunConfig *config, struct IemixRun **out);

/**
 * Samples all three sources. Calling it again resamples with the same seed.
 *
 * # Safety
 * `run` must be null or a live handle from [`iemix_run_new`].
 */
enum IemixStatus iemix_run_execute(struct IemixRun *run);

/**
 * Pooled moments of one source.
 *
 * # Safety
 * `run` must be null or a live handle; `out` must be null or writable.
 */
enum IemixStatus iemix_run_moments(const struct IemixRun *run,
                                   enum IemixSource which,
                                   struct IemixMoments *out);

/**
 * Empirical mixture weight and its jackknife standard error.
 *
 * # Safety
 * `run` must be null or a live handle; `p` and `stderr` must be null or writable.
 */
enum IemixStatus iemix_run_p_empirical(const struct IemixRun *run, double *p, double *stderr);

/**
 * Sorted pooled eigenvalues of one source. Writes the count to `len`;
 * copies into `buf` when `buf` is non-null and `capacity` suffices.
 *
 * # Safety
 * `run` must be null or a live handle; `buf` must be null or valid for
 * `capacity` doubles; `len` must be null or writable.
 */
enum IemixStatus iemix_run_spectrum(const struct IemixRun *run,
                                    enum IemixSource which,
                                    double *buf,
                                    size_t capacity,
                                    size_t *len);

/**
 * Releases a handle; null is a no-op.
 *
 * # Safety
 * `run` must be null or a handle from [`iemix_run_new`] not yet freed.
 */
void iemix_run_free(struct IemixRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IEMIX_H */
