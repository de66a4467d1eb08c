#ifndef CX_H
#define CX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define CX_STAGE_QUADRANT 0

#define CX_STAGE_HALF 1

#define CX_STAGE_FULL 2

/**
 * Result of every call.
 */
typedef enum CxStatus {
  CX_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  CX_STATUS_NULL_POINTER = -1,
  /**
   * A parameter is out of range or the instance kind does not support the call.
   */
  CX_STATUS_INVALID_ARGUMENT = -2,
  /**
   * The point is singular for the field or not finite.
   */
  CX_STATUS_SINGULAR = -3,
  /**
   * A matrix is singular or the coefficients are not elliptic.
   */
  CX_STATUS_DEGENERATE = -4,
  /**
   * Quadrature exhausted its cell budget.
   */
  CX_STATUS_NOT_CONVERGED = -5,
  /**
   * A Rust panic was caught.
   */
  CX_STATUS_PANIC = -99,
} CxStatus;

/**
 * Opaque instance handle.
 */
typedef struct CxInstance CxInstance;

/**
 * Value, gradient and Hessian of a field at a point.
 */
typedef struct CxJet {
  double value;
  double gradient[2];
  /**
   * Row-major `[h11, h12, h21, h22]`.
   */
  double hessian[4];
  /**
   * The point lies on an interface; the jet is a one-sided limit.
   */
  bool on_interface;
} CxJet;

/**
 * Summary of the strong-residual suite.
 */
typedef struct CxResidualSummary {
  double max;
  double p99;
  size_t samples;
  bool pass;
} CxResidualSummary;

/**
 * Summary of a blow-up study. Fields without a value are NaN.
 */
typedef struct CxBlowupSummary {
  double slope;
  double intercept;
  double r_squared;
  double increment_spread;
  /**
   * Closed-form growth rate of the plateau annulus.
   */
  double plateau_slope;
  size_t rows;
  size_t converged_rows;
} CxBlowupSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a NUL-terminated static string.
 */
const char *cx_version(void);

/**
 * Copy the calling thread's last error message into `buf`.
 *
 * Returns the message length in bytes, excluding the terminator. At most
 * `len - 1` bytes are copied and the result is always NUL-terminated when
 * `len > 0`. Pass a null `buf` to query the length.
 *
 * # Safety
 * `buf` must be null or valid for writes of `len` bytes.
 */
size_t cx_last_error_message(char *buf, size_t len);

/**
 * Non-divergence instance for exponent `p > 2` at cutoff scale `n`.
 * `stage` is one of the `CX_STAGE_*` constants.
 *
 * # Safety
 * `out` must be valid for writes of one pointer.
 */
enum CxStatus cx_nondiv_new(double p, uint32_t n, int32_t stage, struct CxInstance **out);

/**
 * Divergence instance for exponent `q > 2` at cutoff scale `n`.
 *
 * # Safety
 * `out` must be valid for writes of one pointer.
 */
enum CxStatus cx_div_new(double q, uint32_t n, struct CxInstance **out);

/**
 * Four-sector instance for angle `theta0` on the ball of `radius`.
 *
 * # Safety
 * `out` must be valid for writes of one pointer.
 */
enum CxStatus cx_ps_new(double theta0, double radius, struct CxInstance **out);

/**
 * Release an instance. Null is ignored.
 *
 * # Safety
 * `inst` must be null or a handle from `cx_*_new` not yet freed.
 */
void cx_instance_free(struct CxInstance *inst);

/**
 * Jet of the solution at `(x1, x2)`.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be valid for writes.
 */
enum CxStatus cx_instance_solution_jet(const struct CxInstance *inst,
                                       double x1,
                                       double x2,
                                       struct CxJet *out);

/**
 * Coefficient matrix of quadrant `quadrant` (1 to 4), row-major into `out[4]`.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be valid for writes of 4 doubles.
 */
enum CxStatus cx_instance_coefficients(const struct CxInstance *inst,
                                       uint32_t quadrant,
                                       double *out);

/**
 * Smallest eigenvalue of the symmetric coefficient parts.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be valid for writes.
 */
enum CxStatus cx_instance_delta(const struct CxInstance *inst, double *out);

/**
 * `a^{ij} D_ij u - f` at `(x1, x2)`. Divergence instances are rejected.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be valid for writes.
 */
enum CxStatus cx_instance_strong_residual(const struct CxInstance *inst,
                                          double x1,
                                          double x2,
                                          double *out);

/**
 * Strong-residual suite with `samples` points drawn from `seed`.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be valid for writes.
 */
enum CxStatus cx_instance_residual_suite(const struct CxInstance *inst,
                                         size_t samples,
                                         uint64_t seed,
                                         struct CxResidualSummary *out);

/**
 * Blow-up study of `||D^2 v_n||_p^p` over the `n_len` scales in `n`.
 *
 * # Safety
 * `n` must be valid for reads of `n_len` values; `out` must be valid for writes.
 */
enum CxStatus cx_blowup(double p,
                        const uint32_t *n,
                        size_t n_len,
                        double tol,
                        struct CxBlowupSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CX_H */
