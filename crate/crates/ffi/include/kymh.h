#ifndef KYMH_H
#define KYMH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum KymhStatus {
  KYMH_STATUS_OK = 0,
  KYMH_STATUS_NULL_POINTER = 1,
  KYMH_STATUS_INVALID_ARGUMENT = 2,
  KYMH_STATUS_INFEASIBLE = 3,
  KYMH_STATUS_OBSTRUCTED = 4,
  KYMH_STATUS_NOT_CONVERGED = 5,
  KYMH_STATUS_BUFFER_TOO_SMALL = 6,
  KYMH_STATUS_UTF8 = 7,
  KYMH_STATUS_PANIC = 8,
} KymhStatus;

/**
 * Opaque collocation grid.
 */
typedef struct KymhGrid KymhGrid;

/**
 * Outcome of a Newton solve.
 */
typedef struct KymhSolveSummary {
  bool converged;
  size_t iterations;
  double residual_sup;
} KymhSolveSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next call.
 */
const char *kymh_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *kymh_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed at most once.
 */
void kymh_string_free(char *s);

/**
 * Builds an `n`-node grid (`n` odd); null on failure.
 */
struct KymhGrid *kymh_grid_new(size_t n);

/**
 * # Safety
 * `grid` must be null or a handle from [`kymh_grid_new`], freed at most once.
 */
void kymh_grid_free(struct KymhGrid *grid);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t kymh_grid_len(const struct KymhGrid *grid);

/**
 * Copies the nodes `s_k` into `out[0..len]`; `len` must equal the grid size.
 *
 * # Safety
 * `grid` must be a live handle and `out` must point to `len` writable doubles.
 */
enum KymhStatus kymh_grid_nodes(const struct KymhGrid *grid, double *out, size_t len);

/**
 * Imaginary part of the Futaki character of the split rank-2 configuration.
 *
 * # Safety
 * `degrees` and `exponents` must point to two values each; `out` to one double.
 */
enum KymhStatus kymh_futaki_closed_form(const uint32_t *degrees,
                                        const uint32_t *exponents,
                                        double tau,
                                        double alpha,
                                        double *out);

/**
 * Quadrature of the Futaki character at the round metric and Fubini–Study bundle metric.
 *
 * # Safety
 * As [`kymh_futaki_closed_form`], plus `grid` must be a live handle.
 */
enum KymhStatus kymh_futaki_quadrature(const struct KymhGrid *grid,
                                       const uint32_t *degrees,
                                       const uint32_t *exponents,
                                       double tau,
                                       double alpha,
                                       double *out);

/**
 * Solves the abelian vortex equation on the round sphere. The potential `v`
 * goes to `v_out[0..len]` (`len` = grid size); `summary` may be null.
 * Returns [`KymhStatus::NotConverged`] with the last iterate written when
 * Newton fails.
 *
 * # Safety
 * `grid` must be a live handle, `v_out` must hold `len` doubles, and
 * `summary` must be null or writable.
 */
enum KymhStatus kymh_solve_vortex(const struct KymhGrid *grid,
                                  uint32_t degree,
                                  uint32_t exponent,
                                  double tau,
                                  double tolerance,
                                  size_t max_iter,
                                  double *v_out,
                                  size_t len,
                                  struct KymhSolveSummary *summary);

/**
 * Stability report for a Higgs configuration given as JSON
 * (`{"degrees": [...], "exponents": [...], "tau": ..., "alpha": ...}`).
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out` writable.
 */
enum KymhStatus kymh_stability_json(const char *config_json, char **out);

/**
 * Runs a full CLI configuration in memory and returns the JSON report and
 * the process exit code the command-line tool would use. No files are written.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `report_out` and
 * `exit_code` must be writable.
 */
enum KymhStatus kymh_run_json(const char *config_json,
                              bool override_obstruction,
                              char **report_out,
                              int *exit_code);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* KYMH_H */
