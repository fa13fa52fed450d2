#ifndef PATHWISE_H
#define PATHWISE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call. Values other than `PW_STATUS_OK` name the failing condition.
 */
typedef enum PwStatus {
  PW_STATUS_OK = 0,
  PW_STATUS_USAGE = 1,
  PW_STATUS_SINGULAR_POINT = 2,
  PW_STATUS_STEP_UNDERFLOW = 3,
  PW_STATUS_SIDE_VIOLATION = 4,
  PW_STATUS_NON_FINITE = 5,
  PW_STATUS_DEGENERATE_INCREMENT = 6,
  PW_STATUS_INVALID_BRANCH = 7,
  PW_STATUS_JUNCTION_MISMATCH = 8,
  PW_STATUS_IO = 9,
  PW_STATUS_PARSE = 10,
  PW_STATUS_NULL_POINTER = 11,
  PW_STATUS_PANIC = 12,
} PwStatus;

/**
 * Opaque sampled path (driver or solution values on a time grid).
 */
typedef struct PwPath PwPath;

/**
 * Opaque solution: the path plus its construction record.
 */
typedef struct PwSolution PwSolution;

/**
 * Integrator settings; fill with [`pw_solve_options_default`].
 */
typedef struct PwSolveOptions {
  double h_base;
  uint32_t max_refine_depth;
  double sing_guard;
  double pin_window;
  double pin_tol;
  double boot_floor;
  double step_growth_cap;
} PwSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t pw_last_error_message(char *buf, size_t len);

/**
 * Stable name of a status code, as a static NUL-terminated string.
 */
const char *pw_status_name(enum PwStatus status);

struct PwSolveOptions pw_solve_options_default(void);

/**
 * Brownian driver on `[0, horizon]` with `cells` uniform cells, drawn from
 * substream `(seed, stream)`.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum PwStatus pw_path_brownian(double horizon,
                               size_t cells,
                               uint64_t seed,
                               uint64_t stream,
                               struct PwPath **out);

/**
 * Driver path through the given nodes (strictly increasing times).
 *
 * # Safety
 * `times` and `values` must point to `len` readable doubles; `out` must be
 * a valid pointer to a handle slot.
 */
enum PwStatus pw_path_from_nodes(const double *times,
                                 const double *values,
                                 size_t len,
                                 struct PwPath **out);

/**
 * Number of nodes, 0 for a null handle.
 *
 * # Safety
 * `path` must be null or a live handle.
 */
size_t pw_path_len(const struct PwPath *path);

/**
 * Copies up to `len` nodes into `times` and `values` (either may be null).
 *
 * # Safety
 * `path` must be a live handle; non-null buffers must hold `len` doubles.
 */
enum PwStatus pw_path_copy(const struct PwPath *path, double *times, double *values, size_t len);

/**
 * Linear interpolation of the path at `t`.
 *
 * # Safety
 * `path` must be a live handle and `out` a valid pointer.
 */
enum PwStatus pw_path_eval(const struct PwPath *path, double t, double *out);

/**
 * # Safety
 * `path` must be null or a handle not yet freed.
 */
void pw_path_free(struct PwPath *path);

/**
 * Solves the drift given as JSON (e.g. `{"variant":"bes3","center":0,"side":"above"}`)
 * on `[t0, t1]` from `x0`. `start_side` (0 above, 1 below) decides the side when
 * `x0` sits on a singular point. A finite `stop_level` stops at its first
 * crossing; pass NaN to run to `t1`. `opts` may be null for defaults.
 *
 * # Safety
 * Pointers must be valid; `drift_json` must be NUL-terminated.
 */
enum PwStatus pw_solve(const char *drift_json,
                       const struct PwPath *driver,
                       double x0,
                       int32_t start_side,
                       double t0,
                       double t1,
                       double stop_level,
                       const struct PwSolveOptions *opts,
                       struct PwSolution **out);

/**
 * Bridge solution on `[0, 1]` from 0 to `±y` (side 0 positive, 1 negative).
 *
 * # Safety
 * Pointers must be valid; `opts` may be null.
 */
enum PwStatus pw_bridge(const struct PwPath *driver,
                        int32_t bridge_side,
                        double y,
                        const struct PwSolveOptions *opts,
                        struct PwSolution **out);

/**
 * `Ce1` solution on `[0, 3]`; `branch` 0 auto, 1 positive, 2 negative.
 *
 * # Safety
 * Pointers must be valid; `opts` may be null.
 */
enum PwStatus pw_construct_ce1(const struct PwPath *driver,
                               int32_t branch,
                               const struct PwSolveOptions *opts,
                               struct PwSolution **out);

/**
 * `Ce2` solution on `[0, 4]`; `variant` 0 weak, 1 alternative.
 *
 * # Safety
 * Pointers must be valid; `opts` may be null.
 */
enum PwStatus pw_construct_ce2(const struct PwPath *driver,
                               int32_t variant,
                               const struct PwSolveOptions *opts,
                               struct PwSolution **out);

/**
 * New path handle holding a copy of the solution's nodes.
 *
 * # Safety
 * `sol` must be a live handle and `out` a valid pointer.
 */
enum PwStatus pw_solution_path(const struct PwSolution *sol, struct PwPath **out);

/**
 * Writes the JSON sidecar (segments, hits, branch log, pins) into `buf`,
 * NUL-terminated and truncated to `len`; `*needed` receives the full length
 * without the NUL.
 *
 * # Safety
 * `sol` must be a live handle; `buf` null or `len` writable bytes; `needed` valid.
 */
enum PwStatus pw_solution_sidecar_json(const struct PwSolution *sol,
                                       char *buf,
                                       size_t len,
                                       size_t *needed);

/**
 * # Safety
 * `sol` must be null or a handle not yet freed.
 */
void pw_solution_free(struct PwSolution *sol);

/**
 * Residual sup-norm of `candidate` for the JSON drift against `driver` on
 * `[t0, t1]`, with the quadrature settings derived from `opts` (null for
 * defaults).
 *
 * # Safety
 * Pointers must be valid; `drift_json` must be NUL-terminated.
 */
enum PwStatus pw_residual(const char *drift_json,
                          const struct PwPath *candidate,
                          const struct PwPath *driver,
                          double t0,
                          double t1,
                          const struct PwSolveOptions *opts,
                          double *out_sup);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PATHWISE_H */
