#ifndef VMETRIC_H
#define VMETRIC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VmMetric {
  VM_METRIC_IDENTITY = 0,
  VM_METRIC_BFGS = 1,
  VM_METRIC_QN_PER_OBJECTIVE = 2,
} VmMetric;

typedef enum VmLineSearch {
  VM_LINE_SEARCH_VECTOR = 0,
  VM_LINE_SEARCH_AGGREGATED = 1,
} VmLineSearch;

typedef enum VmErrorCode {
  VM_ERROR_CODE_OK = 0,
  VM_ERROR_CODE_NULL_POINTER = 1,
  VM_ERROR_CODE_INVALID_ARGUMENT = 2,
  VM_ERROR_CODE_UNKNOWN_PROBLEM = 3,
  VM_ERROR_CODE_DIMENSION_MISMATCH = 4,
  VM_ERROR_CODE_EVALUATION = 5,
  VM_ERROR_CODE_SOLVER = 6,
  VM_ERROR_CODE_PANIC = 7,
} VmErrorCode;

typedef enum VmSolveStatus {
  VM_SOLVE_STATUS_CRITICAL = 0,
  VM_SOLVE_STATUS_MAX_ITER = 1,
  VM_SOLVE_STATUS_LINE_SEARCH_FAILURE = 2,
} VmSolveStatus;

/**
 * Opaque problem handle.
 */
typedef struct VmProblem VmProblem;

/**
 * Opaque result handle.
 */
typedef struct VmResult VmResult;

/**
 * Solver settings. Start from [`vm_options_default`].
 */
typedef struct VmOptions {
  enum VmMetric metric;
  enum VmLineSearch linesearch;
  double sigma;
  double gamma;
  double tol;
  size_t max_iter;
  size_t max_backtracks;
} VmOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *vm_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *vm_last_error_message(void);

struct VmOptions vm_options_default(void);

/**
 * Looks up a corpus problem by name (e.g. `"JOS1a"`, `"WIT3"`, `"JOS1:50"`).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a writable pointer.
 */
enum VmErrorCode vm_problem_new(const char *name, struct VmProblem **out);

/**
 * # Safety
 * `p` must come from [`vm_problem_new`] and not be used afterwards. NULL is a no-op.
 */
void vm_problem_free(struct VmProblem *p);

/**
 * # Safety
 * `p` must be a live problem handle; `n` and `m` writable.
 */
enum VmErrorCode vm_problem_dims(const struct VmProblem *p, size_t *n, size_t *m);

/**
 * Writes `F(x)` into `f` (length `m`).
 *
 * # Safety
 * Buffers must hold the stated number of doubles.
 */
enum VmErrorCode vm_problem_evaluate(const struct VmProblem *p,
                                     const double *x,
                                     size_t n,
                                     double *f,
                                     size_t m);

/**
 * Writes the row-major Jacobian into `jac` (length `m * n`).
 *
 * # Safety
 * Buffers must hold the stated number of doubles.
 */
enum VmErrorCode vm_problem_jacobian(const struct VmProblem *p,
                                     const double *x,
                                     size_t n,
                                     double *jac,
                                     size_t len);

/**
 * Draws a seeded starting point from the problem's box, the same one the
 * benchmark harness uses for that seed.
 *
 * # Safety
 * `x` must hold `n` doubles.
 */
enum VmErrorCode vm_problem_sample_start(const struct VmProblem *p,
                                         uint64_t seed,
                                         double *x,
                                         size_t n);

/**
 * Solves from `x0`. `opts` may be NULL for the defaults. On success `*out`
 * receives a result handle to release with [`vm_result_free`].
 *
 * # Safety
 * `x0` must hold `n` doubles; `out` must be writable.
 */
enum VmErrorCode vm_solve(const struct VmProblem *p,
                          const double *x0,
                          size_t n,
                          const struct VmOptions *opts,
                          struct VmResult **out);

/**
 * # Safety
 * `r` must come from [`vm_solve`] and not be used afterwards. NULL is a no-op.
 */
void vm_result_free(struct VmResult *r);

/**
 * # Safety
 * `r` must be a live result handle and `status` writable.
 */
enum VmErrorCode vm_result_status(const struct VmResult *r, enum VmSolveStatus *status);

/**
 * Iterations taken, or `usize::MAX` for a NULL handle.
 *
 * # Safety
 * `r` must be a live result handle or NULL.
 */
size_t vm_result_iterations(const struct VmResult *r);

/**
 * Line-search objective evaluations, or `u64::MAX` for a NULL handle.
 *
 * # Safety
 * `r` must be a live result handle or NULL.
 */
uint64_t vm_result_fevals(const struct VmResult *r);

/**
 * Final criticality value, or NaN for a NULL handle.
 *
 * # Safety
 * `r` must be a live result handle or NULL.
 */
double vm_result_theta(const struct VmResult *r);

/**
 * # Safety
 * `x` must hold `n` doubles.
 */
enum VmErrorCode vm_result_x_final(const struct VmResult *r, double *x, size_t n);

/**
 * # Safety
 * `lambda` must hold `m` doubles.
 */
enum VmErrorCode vm_result_lambda(const struct VmResult *r, double *lambda, size_t m);

/**
 * Direction-finding subproblem for a row-major Jacobian `jac` (`m × n`)
 * under the inverse metric `h` (row-major `n × n`, NULL for the identity).
 * Writes the multipliers, the direction and `θ`.
 *
 * # Safety
 * All buffers must hold the stated number of doubles; `theta` writable.
 */
enum VmErrorCode vm_subproblem(const double *jac,
                               size_t m,
                               size_t n,
                               const double *h,
                               double *lambda,
                               double *d,
                               double *theta);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VMETRIC_H */
