#ifndef QFIFLOW_H
#define QFIFLOW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum QfStatus {
  Ok = 0,
  /**
   * Null pointer or out-of-range argument.
   */
  InvalidArgument = 1,
  /**
   * The decay rate diverges at the requested time.
   */
  Singularity = 2,
  /**
   * A state invariant (trace, positivity) was violated during a run.
   */
  InvariantViolation = 3,
  /**
   * Nonpositive QFI: the Cramer-Rao bound is undefined.
   */
  NonpositiveQfi = 4,
  /**
   * Index past the end of a series.
   */
  OutOfRange = 5,
} QfStatus;

/**
 * Opaque flow-series handle produced by a run.
 */
typedef struct QfFlowSeries QfFlowSeries;

/**
 * Opaque damped-JC parameter handle.
 */
typedef struct QfJcParams QfJcParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Create a parameter handle; `w` and `lambda` must be positive.
 * The returned handle must be freed with `qfiflow_jc_params_free`.
 */
enum QfStatus qfiflow_jc_params_new(double w, double lambda, double phi, struct QfJcParams **out);

/**
 * # Safety
 * `params` must come from `qfiflow_jc_params_new` and not be freed twice.
 */
void qfiflow_jc_params_free(struct QfJcParams *params);

/**
 * Characteristic damping envelope h(t).
 */
enum QfStatus qfiflow_jc_h(const struct QfJcParams *params, double t, double *out);

/**
 * Decay rate gamma(t) = -2 h'(t)/h(t); fails with `Singularity` inside the
 * guard band around the zeros of h.
 */
enum QfStatus qfiflow_jc_gamma(const struct QfJcParams *params, double t, double *out);

/**
 * Exact QFI F(t) = h(t)^2.
 */
enum QfStatus qfiflow_jc_qfi(const struct QfJcParams *params, double t, double *out);

/**
 * Exact QFI flow I(t) = 2 h(t) h'(t); finite at the rate singularities.
 */
enum QfStatus qfiflow_jc_flow(const struct QfJcParams *params, double t, double *out);

/**
 * Exact Bloch vector; `out` must point to 3 doubles.
 */
enum QfStatus qfiflow_jc_bloch(const struct QfJcParams *params, double t, double *out);

/**
 * Quantum Cramer-Rao bound 1/(M F) for `m >= 1` measurements.
 */
enum QfStatus qfiflow_cramer_rao_bound(double f, uint64_t m, double *out);

/**
 * Qubit QFI from Bloch coordinates; `b` and `db` point to 3 doubles each.
 */
enum QfStatus qfiflow_qfi_bloch(const double *b, const double *db, double *out);

/**
 * Run the numeric damped-JC pipeline on a uniform grid and return a series
 * handle. Guard-band grid points near rate singularities carry no samples.
 * The handle must be freed with `qfiflow_series_free`.
 */
enum QfStatus qfiflow_jc_run(const struct QfJcParams *params,
                             double t_max,
                             double dt,
                             struct QfFlowSeries **out);

/**
 * Number of samples in a series.
 */
size_t qfiflow_series_len(const struct QfFlowSeries *series);

/**
 * Read one sample: time, QFI, total flow, and the (single-channel) decay
 * rate. Any out pointer may be null to skip that field.
 */
enum QfStatus qfiflow_series_sample(const struct QfFlowSeries *series,
                                    size_t index,
                                    double *t,
                                    double *f,
                                    double *i_total,
                                    double *gamma);

/**
 * Number of inward-flow intervals found by the witness.
 */
size_t qfiflow_series_inward_count(const struct QfFlowSeries *series);

/**
 * Bounds of one inward-flow interval.
 */
enum QfStatus qfiflow_series_inward_interval(const struct QfFlowSeries *series,
                                             size_t index,
                                             double *t_start,
                                             double *t_end);

/**
 * Accumulated inward flow (trapezoidal integral of max(I, 0)).
 */
enum QfStatus qfiflow_series_accumulated_inward(const struct QfFlowSeries *series, double *out);

/**
 * # Safety
 * `series` must come from `qfiflow_jc_run` and not be freed twice.
 */
void qfiflow_series_free(struct QfFlowSeries *series);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QFIFLOW_H */
