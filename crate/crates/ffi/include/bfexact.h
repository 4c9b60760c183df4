#ifndef BFEXACT_H
#define BFEXACT_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * `n1` value standing for an infinite first sample.
 */
#define BF_N_INFINITE UINT32_MAX

typedef enum BfStatus {
  BF_STATUS_OK = 0,
  BF_STATUS_NULL_POINTER = 1,
  BF_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The solver stopped above tolerance; the table is still returned.
   */
  BF_STATUS_NOT_CONVERGED = 3,
  BF_STATUS_NUMERICAL = 4,
  BF_STATUS_IO = 5,
  BF_STATUS_FORMAT = 6,
  BF_STATUS_PANIC = 7,
} BfStatus;

/**
 * An ideal or Fisher–Behrens criterion table.
 */
typedef struct BfTable BfTable;

typedef struct BfTableInfo {
  /**
   * [`BF_N_INFINITE`] for the limit design.
   */
  uint32_t n1;
  uint32_t n2;
  double alpha;
  /**
   * 0 ideal, 1 Fisher–Behrens.
   */
  uint32_t family;
  size_t len;
  bool converged;
  double max_abs_residual;
} BfTableInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *bf_version(void);

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call on the same thread.
 */
const char *bf_last_error(void);

/**
 * Solve the ideal criterion. `tol <= 0` selects the default tier for the
 * design. On `BF_STATUS_NOT_CONVERGED` the table is still written to `out`.
 *
 * # Safety
 * `out` must be valid for one pointer write.
 */
enum BfStatus bf_solve_ideal(uint32_t n1,
                             uint32_t n2,
                             double alpha,
                             double tol,
                             struct BfTable **out);

/**
 * Tabulate the Fisher–Behrens criterion.
 *
 * # Safety
 * `out` must be valid for one pointer write.
 */
enum BfStatus bf_solve_fb(uint32_t n1, uint32_t n2, double alpha, struct BfTable **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` valid for one pointer write.
 */
enum BfStatus bf_table_read(const char *path, struct BfTable **out);

/**
 * # Safety
 * `table` must come from this library; `path` must be NUL-terminated.
 */
enum BfStatus bf_table_write(const struct BfTable *table, const char *path);

/**
 * Release a table; NULL is ignored.
 *
 * # Safety
 * `table` must come from this library and not be used afterwards.
 */
void bf_table_free(struct BfTable *table);

/**
 * # Safety
 * `table` must come from this library; `out` valid for one write.
 */
enum BfStatus bf_table_info(const struct BfTable *table, struct BfTableInfo *out);

/**
 * Copy lattice nodes and criterion values; `len` must equal the table length.
 * Either output may be NULL.
 *
 * # Safety
 * Non-null outputs must hold `len` doubles.
 */
enum BfStatus bf_table_values(const struct BfTable *table,
                              double *nodes,
                              double *values,
                              size_t len);

/**
 * Criterion value at `c = sin²θ ∈ [0, 1]`.
 *
 * # Safety
 * `table` must come from this library; `out` valid for one write.
 */
enum BfStatus bf_table_value_at_c(const struct BfTable *table, double c, double *out);

/**
 * `Pr{V ≤ v(Θ)}` at the nuisance value `γ ∈ [0, 1]` for the table's design.
 *
 * # Safety
 * `table` must come from this library; `out` valid for one write.
 */
enum BfStatus bf_prob_v_below(const struct BfTable *table, double gamma, double *out);

/**
 * Fisher–Behrens `Pr{V < v | Θ = θ}`.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum BfStatus bf_fb_prob(uint32_t n1, uint32_t n2, double theta_deg, double v, double *out);

/**
 * Two-sided power at noncentrality `delta` of `T(ζ̃)` with a correct guess
 * and of `V` with the ideal criterion in `table`, at variance ratio `zeta`.
 *
 * # Safety
 * `table` must come from this library; outputs valid for one write each.
 */
enum BfStatus bf_power(const struct BfTable *table,
                       double zeta,
                       double delta,
                       double *power_t_out,
                       double *power_v_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BFEXACT_H */
