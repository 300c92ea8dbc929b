#ifndef TROTTERPROF_H
#define TROTTERPROF_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define TP_METHOD_TROTTER 0

#define TP_METHOD_EP 1

#define TP_METHOD_MPF 2

typedef enum TpStatus {
  TP_STATUS_OK = 0,
  TP_STATUS_NULL_POINTER = 1,
  TP_STATUS_INVALID_ARGUMENT = 2,
  TP_STATUS_CONFIG_ERROR = 3,
  TP_STATUS_NUMERICAL_ERROR = 4,
  TP_STATUS_IO_ERROR = 5,
  TP_STATUS_BUFFER_TOO_SMALL = 6,
  TP_STATUS_PANIC = 7,
} TpStatus;

/**
 * Opaque error-curve handle.
 */
typedef struct TpErrorCurve TpErrorCurve;

/**
 * Opaque experiment handle.
 */
typedef struct TpExperiment TpExperiment;

typedef struct TpCurvePoint {
  double t;
  double a_or_steps;
  double estimate;
  double exact;
  double abs_error;
} TpCurvePoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *tp_version(void);

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next call into this library on the same thread.
 */
const char *tp_last_error(void);

/**
 * Builds an experiment from a preset name such as `"tfim-ruth3"`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a writable pointer.
 */
enum TpStatus tp_experiment_from_preset(const char *name, struct TpExperiment **out);

/**
 * Builds an experiment from TOML document text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a writable pointer.
 */
enum TpStatus tp_experiment_from_config(const char *toml, struct TpExperiment **out);

/**
 * # Safety
 * `exp` must be null or a handle from this library that was not freed yet.
 */
void tp_experiment_free(struct TpExperiment *exp);

/**
 * Error curve over the configured times for one `TP_METHOD_*`.
 *
 * # Safety
 * `exp` must be a live experiment handle and `out` a writable pointer.
 */
enum TpStatus tp_experiment_run_error_curve(const struct TpExperiment *exp,
                                            uint32_t method_code,
                                            struct TpErrorCurve **out);

/**
 * Mitigated expectation value at time `t`.
 *
 * # Safety
 * `exp` must be a live experiment handle and `out` a writable pointer.
 */
enum TpStatus tp_experiment_mitigated_estimate(const struct TpExperiment *exp,
                                               double t,
                                               double *out);

/**
 * Exact expectation value at time `t`.
 *
 * # Safety
 * `exp` must be a live experiment handle and `out` a writable pointer.
 */
enum TpStatus tp_experiment_exact_value(const struct TpExperiment *exp, double t, double *out);

/**
 * Copies the multi-product weights into `buf`. `len` always receives the
 * number of weights; a short buffer yields `BufferTooSmall` and is left
 * untouched.
 *
 * # Safety
 * `exp` must be a live experiment handle, `len` writable and `buf` valid
 * for `cap` doubles (it may be null when `cap` is 0).
 */
enum TpStatus tp_experiment_mpf_weights(const struct TpExperiment *exp,
                                        double *buf,
                                        size_t cap,
                                        size_t *len);

/**
 * # Safety
 * `curve` must be null or a live curve handle.
 */
size_t tp_curve_len(const struct TpErrorCurve *curve);

/**
 * # Safety
 * `curve` must be a live curve handle and `out` a writable pointer.
 */
enum TpStatus tp_curve_point(const struct TpErrorCurve *curve,
                             size_t index,
                             struct TpCurvePoint *out);

/**
 * Log-log slope of the curve's error over `[t_min, t_max]`.
 *
 * # Safety
 * `curve` must be a live curve handle and `out` a writable pointer.
 */
enum TpStatus tp_curve_slope(const struct TpErrorCurve *curve,
                             double t_min,
                             double t_max,
                             double *out);

/**
 * # Safety
 * `curve` must be null or a handle from this library that was not freed yet.
 */
void tp_curve_free(struct TpErrorCurve *curve);

/**
 * Step count at which extrapolation reaches the profiling limit, as the
 * fraction `num / den`.
 *
 * # Safety
 * `num` and `den` must be writable pointers.
 */
enum TpStatus tp_critical_n(uint32_t alpha, bool symmetric, int64_t *num, int64_t *den);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TROTTERPROF_H */
