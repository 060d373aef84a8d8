#ifndef SUBSPACE_H
#define SUBSPACE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every call.
 */
typedef enum SubspaceStatus {
  SUBSPACE_STATUS_OK = 0,
  SUBSPACE_STATUS_NULL_POINTER = 1,
  SUBSPACE_STATUS_INVALID_ARGUMENT = 2,
  SUBSPACE_STATUS_DIMENSION_MISMATCH = 3,
  SUBSPACE_STATUS_INFEASIBLE = 4,
  SUBSPACE_STATUS_NOT_CONVERGED = 5,
  SUBSPACE_STATUS_UNSUPPORTED = 6,
  SUBSPACE_STATUS_IO = 7,
  SUBSPACE_STATUS_PARSE = 8,
  SUBSPACE_STATUS_BUFFER_TOO_SMALL = 9,
  SUBSPACE_STATUS_PANIC = 10,
} SubspaceStatus;

/**
 * Point set together with `k` and `p`.
 */
typedef struct SubspaceInstance SubspaceInstance;

/**
 * Solution of the convex relaxation.
 */
typedef struct SubspaceRelaxation SubspaceRelaxation;

/**
 * Rounded rank-`(n-k)` solution.
 */
typedef struct SubspaceSolution SubspaceSolution;

/**
 * Solver knobs; obtain defaults from [`subspace_solver_options_default`].
 */
typedef struct SubspaceSolverOptions {
  size_t max_iters;
  double tol;
} SubspaceSolverOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *subspace_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *subspace_version(void);

struct SubspaceSolverOptions subspace_solver_options_default(void);

/**
 * Builds an instance from `m x n` row-major `rows`. `row_weights` (length
 * `m`) and `col_weights` (length `n`) may be NULL for counting measures.
 *
 * # Safety
 * Non-NULL pointers must reference buffers of the stated lengths.
 */
enum SubspaceStatus subspace_instance_new(const double *rows,
                                          size_t m,
                                          size_t n,
                                          const double *row_weights,
                                          const double *col_weights,
                                          size_t k,
                                          double p,
                                          struct SubspaceInstance **out_instance);

/**
 * Loads an instance JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string.
 */
enum SubspaceStatus subspace_instance_load(const char *path,
                                           struct SubspaceInstance **out_instance);

/**
 * # Safety
 * `instance` must be NULL or a handle not yet freed.
 */
void subspace_instance_free(struct SubspaceInstance *instance);

/**
 * Writes `m`, `n`, `k` and `p`; any out-pointer may be NULL.
 *
 * # Safety
 * `instance` must be a live handle.
 */
enum SubspaceStatus subspace_instance_shape(const struct SubspaceInstance *instance,
                                            size_t *m,
                                            size_t *n,
                                            size_t *k,
                                            double *p);

/**
 * Solves the convex relaxation. `options` may be NULL for defaults.
 *
 * # Safety
 * `instance` must be a live handle; `options` NULL or valid.
 */
enum SubspaceStatus subspace_solve(const struct SubspaceInstance *instance,
                                   const struct SubspaceSolverOptions *options,
                                   struct SubspaceRelaxation **out_relaxation);

/**
 * # Safety
 * `relaxation` must be NULL or a handle not yet freed.
 */
void subspace_relaxation_free(struct SubspaceRelaxation *relaxation);

/**
 * Objective value, iteration count and convergence flag; out-pointers may
 * be NULL.
 *
 * # Safety
 * `relaxation` must be a live handle.
 */
enum SubspaceStatus subspace_relaxation_info(const struct SubspaceRelaxation *relaxation,
                                             double *value,
                                             size_t *iterations,
                                             bool *converged);

/**
 * Copies the `n x n` matrix `X` (measure-normalized coordinates) into `buf`.
 *
 * # Safety
 * `buf` must have room for `len` doubles.
 */
enum SubspaceStatus subspace_relaxation_matrix(const struct SubspaceRelaxation *relaxation,
                                               double *buf,
                                               size_t len);

/**
 * Best of `runs` randomized roundings under `seed`.
 *
 * # Safety
 * Both handles must be live and `relaxation` must come from `instance`.
 */
enum SubspaceStatus subspace_round(const struct SubspaceInstance *instance,
                                   const struct SubspaceRelaxation *relaxation,
                                   size_t runs,
                                   uint64_t seed,
                                   struct SubspaceSolution **out_solution);

/**
 * # Safety
 * `solution` must be NULL or a handle not yet freed.
 */
void subspace_solution_free(struct SubspaceSolution *solution);

/**
 * Cost, index of the winning run, and the shape of `Z`.
 *
 * # Safety
 * `solution` must be a live handle.
 */
enum SubspaceStatus subspace_solution_info(const struct SubspaceSolution *solution,
                                           double *value,
                                           size_t *best_run,
                                           size_t *rows,
                                           size_t *cols);

/**
 * Copies the `n x (n-k)` basis `Z` of the complement into `buf`.
 *
 * # Safety
 * `buf` must have room for `len` doubles.
 */
enum SubspaceStatus subspace_solution_basis(const struct SubspaceSolution *solution,
                                            double *buf,
                                            size_t len);

/**
 * Cost of the complement basis `z` (`n x (n-k)`, row-major).
 *
 * # Safety
 * `z` must point to `n * (n-k)` doubles.
 */
enum SubspaceStatus subspace_cost_of(const struct SubspaceInstance *instance,
                                     const double *z,
                                     size_t len,
                                     double *out_value);

/**
 * Optimal `p = 2` cost `(sum of the n-k smallest squared singular values)^(1/2)`.
 *
 * # Safety
 * `instance` must be a live handle.
 */
enum SubspaceStatus subspace_svd_value(const struct SubspaceInstance *instance, double *out_value);

/**
 * `(E|g|^p)^(1/p)` for a standard normal `g`.
 *
 * # Safety
 * `out_value` must be writable.
 */
enum SubspaceStatus subspace_gamma_p(double p, double *out_value);

/**
 * Guaranteed expected ratio of one rounding to the relaxation value.
 *
 * # Safety
 * `out_value` must be writable.
 */
enum SubspaceStatus subspace_expected_ratio_bound(size_t n, size_t k, double p, double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUBSPACE_H */
