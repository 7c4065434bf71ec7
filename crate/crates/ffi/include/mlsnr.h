#ifndef MLSNR_H
#define MLSNR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum {
  MLSNR_STATUS_OK = 0,
  MLSNR_STATUS_NULL_POINTER = 1,
  MLSNR_STATUS_INVALID_ARGUMENT = 2,
  MLSNR_STATUS_RANK_DEFICIENT = 3,
  MLSNR_STATUS_SEARCH_SPACE_TOO_LARGE = 4,
  MLSNR_STATUS_NUMERICAL_FAILURE = 5,
} MlsnrStatus;

/**
 * Constellation selector.
 */
typedef enum {
  MLSNR_MODULATION_QPSK = 0,
  MLSNR_MODULATION_QAM16 = 1,
  MLSNR_MODULATION_QAM64 = 2,
} MlsnrModulation;

/**
 * Estimation method selector. `Capacity` is joint-only: it writes the
 * vertical value and leaves the per-stream array untouched.
 */
typedef enum {
  MLSNR_METHOD_CAPACITY = 0,
  MLSNR_METHOD_UNION = 1,
  MLSNR_METHOD_FULL_SUM = 2,
  MLSNR_METHOD_FULL_SUM_BOUNDED = 3,
  MLSNR_METHOD_MAX_LOG = 4,
  MLSNR_METHOD_ZF = 5,
} MlsnrMethod;

/**
 * Opaque estimator: the estimation constellation and its prebuilt
 * error-vector sets for a fixed stream count.
 */
typedef struct MlsnrEstimator MlsnrEstimator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates an estimator for `modulation` with `m_t` streams. When
 * `qpsk_sets` is true the estimator uses the reduced QPSK-built sets (and
 * the QPSK exponent map) regardless of the modulation. On success writes
 * the handle into `*out`; free it with `mlsnr_estimator_free`.
 *
 * # Safety
 * `out` must be a valid pointer to writable estimator-handle storage.
 */
MlsnrStatus mlsnr_estimator_new(MlsnrModulation modulation,
                                size_t m_t,
                                bool qpsk_sets,
                                MlsnrEstimator **out);

/**
 * Releases an estimator handle. A null pointer is a no-op.
 *
 * # Safety
 * `est` must come from `mlsnr_estimator_new` and not be freed twice.
 */
void mlsnr_estimator_free(MlsnrEstimator *est);

/**
 * Evaluates one estimate. Per-stream methods write `m_t` dB values into
 * `per_stream_db` (ignored and may be null for `Capacity`); every method
 * writes the vertical dB value into `vertical_db`.
 *
 * # Safety
 * `est`, `h_re`, `h_im` (each `m_r * m_t` doubles), `vertical_db`, and,
 * for per-stream methods, `per_stream_db` (`m_t` doubles) must be valid
 * for the duration of the call.
 */
MlsnrStatus mlsnr_estimate(const MlsnrEstimator *est,
                           const double *h_re,
                           const double *h_im,
                           size_t m_r,
                           size_t m_t,
                           double rho,
                           MlsnrMethod method,
                           double *per_stream_db,
                           double *vertical_db);

/**
 * Closed-form ZF post-processing SNR per stream (linear, not dB).
 *
 * # Safety
 * `h_re`/`h_im` must hold `m_r * m_t` doubles and `out_linear` `m_t`
 * writable doubles.
 */
MlsnrStatus mlsnr_zf_ppsnr(const double *h_re,
                           const double *h_im,
                           size_t m_r,
                           size_t m_t,
                           double rho,
                           double *out_linear);

/**
 * Minimum-distance error bound: `Q(sqrt(d2_min/rho^2))` with the exact
 * minimum distance, plus the singular-value sandwich on `d2_min`.
 *
 * # Safety
 * Pointer arguments as in `mlsnr_estimate`; the three outputs must be
 * valid writable doubles.
 */
MlsnrStatus mlsnr_ph_bound(const MlsnrEstimator *est,
                           const double *h_re,
                           const double *h_im,
                           size_t m_r,
                           size_t m_t,
                           double rho,
                           double *perr_upper,
                           double *lower_d2,
                           double *upper_d2);

/**
 * Static description of a status code.
 */
const char *mlsnr_status_message(MlsnrStatus status);

/**
 * Library version as a static C string.
 */
const char *mlsnr_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MLSNR_H */
