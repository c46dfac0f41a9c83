#ifndef CONSENSUS_LAB_H
#define CONSENSUS_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ClStatus {
  CL_STATUS_OK = 0,
  CL_STATUS_NULL_POINTER = 1,
  CL_STATUS_INVALID_ARGUMENT = 2,
  CL_STATUS_PARSE = 3,
  CL_STATUS_CAPACITY = 4,
  CL_STATUS_TIMEOUT = 5,
  CL_STATUS_BUFFER_TOO_SMALL = 6,
  CL_STATUS_IO = 7,
  CL_STATUS_INTERNAL = 8,
} ClStatus;

typedef enum ClCompleteInit {
  CL_COMPLETE_INIT_BINOMIAL = 0,
  CL_COMPLETE_INIT_CONDITIONED = 1,
  CL_COMPLETE_INIT_FIXED = 2,
} ClCompleteInit;

typedef enum ClInitKind {
  /**
   * Uniform over all strategy vectors.
   */
  CL_INIT_KIND_UNIFORM = 0,
  /**
   * Uniform, conditioned on some vertex playing strategy 1.
   */
  CL_INIT_KIND_NONEMPTY = 1,
  /**
   * Vertices `0..k` play strategy 1, the rest strategy `m`.
   */
  CL_INIT_KIND_FIXED = 2,
} ClInitKind;

/**
 * Opaque graph handle.
 */
typedef struct ClGraph ClGraph;

/**
 * Aggregate Monte Carlo output.
 */
typedef struct ClSimStats {
  uint64_t replications;
  double time_mean;
  double time_var;
  double time_stderr;
} ClSimStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *cl_last_error_message(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void cl_string_free(char *s);

/**
 * Graph on `n` vertices with `edge_count` edges given as `2 * edge_count`
 * vertex indices.
 *
 * # Safety
 * `edges` must point to `2 * edge_count` readable values; `out` must be writable.
 */
enum ClStatus cl_graph_new(size_t n, const size_t *edges, size_t edge_count, struct ClGraph **out);

/**
 * Named family member (`complete`, `path`, `cycle`, `star`, `sundew`,
 * `lollipop`, `jellyfish`). `r` is ignored by families that do not use it.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum ClStatus cl_graph_family(const char *name, size_t n, size_t r, struct ClGraph **out);

/**
 * Parses the edge-list text format.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum ClStatus cl_graph_parse(const char *text, struct ClGraph **out);

/**
 * Canonical edge-list text; free with [`cl_string_free`].
 *
 * # Safety
 * `graph` must be a live handle; `out` must be writable.
 */
enum ClStatus cl_graph_write(const struct ClGraph *graph, char **out);

/**
 * # Safety
 * `graph` must be NULL or a handle from this library, not yet freed.
 */
void cl_graph_free(struct ClGraph *graph);

/**
 * # Safety
 * `graph` must be NULL or a live handle. Returns 0 for NULL.
 */
size_t cl_graph_vertex_count(const struct ClGraph *graph);

/**
 * # Safety
 * `graph` must be NULL or a live handle. Returns 0 for NULL.
 */
size_t cl_graph_edge_count(const struct ClGraph *graph);

/**
 * Writes `P(S = l)` for `l = 1..=m` into `out[0..m]`.
 *
 * # Safety
 * `out` must point to `out_len` writable doubles.
 */
enum ClStatus cl_survivor_distribution(size_t n, uint32_t m, double p, double *out, size_t out_len);

/**
 * Expected absorption times `E_0..E_n` of the delayed ruin walk; `gammas`
 * holds `n - 1` values.
 *
 * # Safety
 * `gammas` must point to `gammas_len` doubles; `out` to `out_len` writable doubles.
 */
enum ClStatus cl_dgr_expected_times(size_t n,
                                    double p,
                                    const double *gammas,
                                    size_t gammas_len,
                                    double *out,
                                    size_t out_len);

/**
 * Probability that the walk started at `k` ends at `n`.
 *
 * # Safety
 * `gammas` must point to `gammas_len` doubles; `out` must be writable.
 */
enum ClStatus cl_ruin_probability(size_t n,
                                  double p,
                                  const double *gammas,
                                  size_t gammas_len,
                                  size_t k,
                                  double *out);

/**
 * Two-strategy expected consensus time on K_n. `k` is used only with
 * `CL_COMPLETE_INIT_FIXED`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ClStatus cl_complete_graph_time(size_t n,
                                     double p,
                                     enum ClCompleteInit init,
                                     size_t k,
                                     double *out);

/**
 * Exact winner distribution (`winners[0..m]`) and expected consensus time.
 * `k` is used only with `CL_INIT_KIND_FIXED`.
 *
 * # Safety
 * `graph` must be a live handle; `winners` must hold `winners_len` doubles;
 * `expected_time` must be writable.
 */
enum ClStatus cl_exact(const struct ClGraph *graph,
                       uint32_t m,
                       double p,
                       enum ClInitKind init,
                       size_t k,
                       double *winners,
                       size_t winners_len,
                       double *expected_time);

/**
 * Monte Carlo estimate. `workers == 0` uses the default pool size.
 * `winner_counts[0..m]` receives per-strategy win counts.
 *
 * # Safety
 * `graph` must be a live handle; `stats` must be writable;
 * `winner_counts` must hold `counts_len` values.
 */
enum ClStatus cl_estimate(const struct ClGraph *graph,
                          uint32_t m,
                          double p,
                          size_t replications,
                          uint64_t seed,
                          enum ClInitKind init,
                          size_t k,
                          size_t workers,
                          struct ClSimStats *stats,
                          uint64_t *winner_counts,
                          size_t counts_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONSENSUS_LAB_H */
