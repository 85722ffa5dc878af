#ifndef STABLELAB_H
#define STABLELAB_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER,
  SL_STATUS_UTF8,
  SL_STATUS_BUFFER_TOO_SMALL,
  SL_STATUS_PANIC,
  SL_STATUS_INVALID_GRID,
  SL_STATUS_INVALID_BESOV_PARAMS,
  SL_STATUS_BLOCK_OUT_OF_RANGE,
  SL_STATUS_SCALE_OVERFLOW,
  SL_STATUS_GRID_MISMATCH,
  SL_STATUS_INVALID_ARGUMENT,
  SL_STATUS_DEGENERATE_CONE,
  SL_STATUS_SINGULAR_SIGMA,
  SL_STATUS_QUADRATURE_UNDER_RESOLVED,
  SL_STATUS_NOT_TRANSLATION_INVARIANT,
  SL_STATUS_REMAINDER_TOO_LARGE,
  SL_STATUS_PRECONDITION_VIOLATED,
  SL_STATUS_ADMISSIBILITY,
  SL_STATUS_NOT_CONTRACTING,
  SL_STATUS_RESIDUAL_STALL,
  SL_STATUS_LAMBDA_OVERFLOW,
  SL_STATUS_BAD_BAND,
  SL_STATUS_ALIASING_DETECTED,
  SL_STATUS_EMPTY_REGION,
  SL_STATUS_MASS_DRIFT,
  SL_STATUS_UNSTABLE_STEP,
  SL_STATUS_CLIPPING_EXCESS,
  SL_STATUS_CONFIG,
  SL_STATUS_IO,
  SL_STATUS_FORMAT,
  /**
   * The experiment ran and at least one check failed.
   */
  SL_STATUS_CHECK_FAILED,
} SlStatus;

/**
 * Opaque grid function.
 */
typedef struct SlFunction SlFunction;

/**
 * Opaque periodic grid.
 */
typedef struct SlGrid SlGrid;

/**
 * Opaque jump kernel.
 */
typedef struct SlKernel SlKernel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length.
 *
 * # Safety
 * `buf` is null or points to `len` writable bytes.
 */
size_t sl_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL terminated string.
 */
const char *sl_version(void);

/**
 * # Safety
 * `out` is a valid pointer to receive the handle.
 */
enum SlStatus sl_grid_new(size_t dim, size_t n, double length, struct SlGrid **out);

/**
 * # Safety
 * `grid` is null or a handle from [`sl_grid_new`] not yet freed.
 */
void sl_grid_free(struct SlGrid *grid);

/**
 * Number of grid points, or 0 for a null handle.
 *
 * # Safety
 * `grid` is null or a live handle.
 */
size_t sl_grid_len(const struct SlGrid *grid);

/**
 * Copies `len` samples (row-major, `len` = grid length) into a new function.
 *
 * # Safety
 * `values` points to `len` readable doubles; `grid` is a live handle.
 */
enum SlStatus sl_function_new(const struct SlGrid *grid,
                              const double *values,
                              size_t len,
                              struct SlFunction **out);

/**
 * Copies the samples into `buf`, which must hold the grid length.
 *
 * # Safety
 * `buf` points to `len` writable doubles; `f` is a live handle.
 */
enum SlStatus sl_function_values(const struct SlFunction *f, double *buf, size_t len);

/**
 * # Safety
 * `f` is null or a live handle.
 */
void sl_function_free(struct SlFunction *f);

/**
 * Builds a zoo kernel (`constant`, `conical`, `sigma`, `rough-x`) with
 * default shape parameters on the period `2π`.
 *
 * # Safety
 * `name` is a NUL terminated string; `out` receives the handle.
 */
enum SlStatus sl_kernel_new(const char *name,
                            size_t dim,
                            double alpha,
                            double theta,
                            struct SlKernel **out);

/**
 * # Safety
 * `k` is null or a live handle.
 */
void sl_kernel_free(struct SlKernel *k);

/**
 * `Δ_j f`.
 *
 * # Safety
 * `f` is a live handle; `out` receives the handle.
 */
enum SlStatus sl_dyadic_block(const struct SlFunction *f, int32_t j, struct SlFunction **out);

/**
 * `‖f‖_{B^s_{p,q}}`; pass `INFINITY` for `p` or `q` as needed.
 *
 * # Safety
 * `f` is a live handle; `out` is writable.
 */
enum SlStatus sl_besov_norm(const struct SlFunction *f, double s, double p, double q, double *out);

/**
 * `ℒ_κ f` on the grid of `f`.
 *
 * # Safety
 * `k`, `f` are live handles; `out` receives the handle.
 */
enum SlStatus sl_apply_operator(const struct SlKernel *k,
                                const struct SlFunction *f,
                                struct SlFunction **out);

/**
 * Unit-kernel stable density at time `t`, centred at the origin.
 *
 * # Safety
 * `grid` is a live handle; `out` receives the handle.
 */
enum SlStatus sl_stable_density(double alpha,
                                double t,
                                const struct SlGrid *grid,
                                struct SlFunction **out);

/**
 * Terminal states of `n_paths` paths of `dX = b dt + dL^κ` started at
 * `x0` (`dim` doubles), written to `out` as `n_paths × dim` doubles.
 * `drift` is null for `b = 0`, else one function per dimension.
 *
 * # Safety
 * Handles are live; `x0` holds `dim` doubles; `drift` is null or holds
 * `dim` handles; `out` holds `n_paths * dim` doubles.
 */
enum SlStatus sl_simulate_marginals(const struct SlKernel *k,
                                    const struct SlFunction *const *drift,
                                    const double *x0,
                                    double eps_cut,
                                    double r_cut,
                                    double t_end,
                                    double dt,
                                    size_t n_paths,
                                    uint64_t seed,
                                    double *out);

/**
 * Runs the experiment described by the config file at `path`. `kind` is
 * null to use the file's `kind`, else a subcommand name. `out_dir` is null
 * to keep the configured output directory. Returns
 * [`SlStatus::CheckFailed`] when the run completed with a failing check.
 *
 * # Safety
 * String arguments are null or NUL terminated.
 */
enum SlStatus sl_run_config(const char *path, const char *kind, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STABLELAB_H */
