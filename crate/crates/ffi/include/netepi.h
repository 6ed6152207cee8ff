#ifndef NETEPI_H
#define NETEPI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NetepiStatus {
  NETEPI_STATUS_OK = 0,
  NETEPI_STATUS_NULL_POINTER = 1,
  NETEPI_STATUS_INVALID_ARGUMENT = 2,
  NETEPI_STATUS_CONFIG = 3,
  NETEPI_STATUS_IO = 4,
  NETEPI_STATUS_RUNTIME = 5,
  NETEPI_STATUS_BUFFER_TOO_SMALL = 6,
  NETEPI_STATUS_PANIC = 7,
} NetepiStatus;

typedef enum NetepiStrategyKind {
  NETEPI_STRATEGY_KIND_NONE = 0,
  NETEPI_STRATEGY_KIND_RANDOM = 1,
  NETEPI_STRATEGY_KIND_TARGETED_BETWEENNESS = 2,
  NETEPI_STRATEGY_KIND_TARGETED_DEGREE = 3,
} NetepiStrategyKind;

/**
 * Opaque graph handle.
 */
typedef struct NetepiGraph NetepiGraph;

typedef struct NetepiParams {
  double beta_u;
  double beta_v;
  double gamma;
  double mu_d;
  double mu_n;
  double p_vacc;
} NetepiParams;

typedef struct NetepiStrategy {
  enum NetepiStrategyKind kind;
  double coverage;
} NetepiStrategy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Erdős–Rényi graph `G(n, p)`.
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
enum NetepiStatus netepi_graph_er(size_t n, double p, uint64_t seed, struct NetepiGraph **out);

/**
 * Stochastic block model. `probs` holds `blocks * blocks` entries in
 * row-major order.
 *
 * # Safety
 * `sizes` must point to `blocks` values, `probs` to `blocks * blocks`
 * values, and `out` must be valid for writing one pointer.
 */
enum NetepiStatus netepi_graph_sbm(const size_t *sizes,
                                   size_t blocks,
                                   const double *probs,
                                   uint64_t seed,
                                   struct NetepiGraph **out);

/**
 * Random geometric graph in the unit square with connection radius `r`.
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
enum NetepiStatus netepi_graph_rgg(size_t n, double r, uint64_t seed, struct NetepiGraph **out);

/**
 * Loads an edge-list CSV or graph JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid for writing one
 * pointer.
 */
enum NetepiStatus netepi_graph_load(const char *path, struct NetepiGraph **out);

/**
 * Saves a graph; a `.json` extension selects the JSON format, anything else
 * writes an edge-list CSV.
 *
 * # Safety
 * `g` must be a live handle and `path` a NUL-terminated string.
 */
enum NetepiStatus netepi_graph_save(const struct NetepiGraph *g, const char *path);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t netepi_graph_node_count(const struct NetepiGraph *g);

/**
 * Number of undirected edges, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t netepi_graph_edge_count(const struct NetepiGraph *g);

/**
 * Unnormalized betweenness of every node into `out[0..len]`; `len` must be
 * at least the node count.
 *
 * # Safety
 * `g` must be a live handle and `out` valid for writing `len` doubles.
 */
enum NetepiStatus netepi_graph_betweenness(const struct NetepiGraph *g, double *out, size_t len);

/**
 * Releases a graph handle. Null is ignored.
 *
 * # Safety
 * `g` must be null or a handle not yet freed.
 */
void netepi_graph_free(struct NetepiGraph *g);

/**
 * Mean and standard deviation of the final attack rate over `n_runs`
 * seeded replicas.
 *
 * # Safety
 * `g` must be a live handle, `params` and `strategy` valid pointers,
 * `infected` must point to `n_infected` node ids, and `out_mean` and
 * `out_std` must be valid for writing (`out_std` may be null).
 */
enum NetepiStatus netepi_ensemble_attack_rate(const struct NetepiGraph *g,
                                              const struct NetepiParams *params,
                                              const struct NetepiStrategy *strategy,
                                              const size_t *infected,
                                              size_t n_infected,
                                              size_t t_max,
                                              size_t n_runs,
                                              uint64_t seed,
                                              double *out_mean,
                                              double *out_std);

/**
 * Runs a full scenario from a config JSON document into `out_dir`.
 *
 * # Safety
 * Both arguments must be NUL-terminated strings.
 */
enum NetepiStatus netepi_run_scenario(const char *config_json, const char *out_dir);

/**
 * Copy of the calling thread's last error message, or null if none was
 * recorded. Release it with [`netepi_string_free`].
 */
char *netepi_last_error_message(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from [`netepi_last_error_message`] that has
 * not been freed.
 */
void netepi_string_free(char *s);

/**
 * Static NUL-terminated version string.
 */
const char *netepi_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NETEPI_H */
