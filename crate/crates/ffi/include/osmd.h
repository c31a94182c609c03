#ifndef OSMD_H
#define OSMD_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every exported function.
typedef enum OsmdStatus {
  OSMD_STATUS_OK = 0,
  OSMD_STATUS_NULL_POINTER = 1,
  OSMD_STATUS_INVALID_UTF8 = 2,
  OSMD_STATUS_INVALID_INPUT = 3,
  OSMD_STATUS_DOMAIN = 4,
  OSMD_STATUS_NOT_CONVERGED = 5,
  OSMD_STATUS_UNSUPPORTED = 6,
  OSMD_STATUS_CONFIG = 7,
  OSMD_STATUS_IO = 8,
  OSMD_STATUS_PARSE = 9,
  OSMD_STATUS_BUDGET_EXCEEDED = 10,
  OSMD_STATUS_PANIC = 11,
} OsmdStatus;

// A directed feedback graph.
typedef struct OsmdGraph OsmdGraph;

// A potential (negentropy, Tsallis, clipped ℓp).
typedef struct OsmdPotential OsmdPotential;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call into the library on the
// same thread.
const char *osmd_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *osmd_version(void);

// Releases a string returned by the library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void osmd_string_free(char *s);

// Builds a potential from JSON, e.g. `{"kind":"tsallis_half"}` or
// `{"kind":"clipped_lp","p":1.5,"d":10}`.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum OsmdStatus osmd_potential_from_json(const char *json, struct OsmdPotential **out);

// Releases a potential. Null is ignored.
//
// # Safety
// `potential` must come from `osmd_potential_from_json` and not be freed twice.
void osmd_potential_free(struct OsmdPotential *potential);

// `F(x)` for a point of length `len`.
//
// # Safety
// `potential` must be live; `x` must hold `len` values; `out` must be writable.
enum OsmdStatus osmd_potential_value(const struct OsmdPotential *potential,
                                     const double *x,
                                     size_t len,
                                     double *out);

// Bregman divergence `D_F(x, y)`.
//
// # Safety
// `potential` must be live; `x` and `y` must hold `len` values; `out` must be writable.
enum OsmdStatus osmd_potential_bregman(const struct OsmdPotential *potential,
                                       const double *x,
                                       const double *y,
                                       size_t len,
                                       double *out);

// One mirror step on the probability simplex:
// `out = argmin_y η⟨y, loss_estimate⟩ + D_F(y, x)` over `k` coordinates.
//
// # Safety
// `x`, `loss_estimate` and `out` must each hold `k` values.
enum OsmdStatus osmd_mirror_step_simplex(const struct OsmdPotential *potential,
                                         const double *x,
                                         const double *loss_estimate,
                                         size_t k,
                                         double eta,
                                         double *out);

// One mirror step on the unit ℓp ball in dimension `d`.
//
// # Safety
// `x`, `loss_estimate` and `out` must each hold `d` values.
enum OsmdStatus osmd_mirror_step_ball(const struct OsmdPotential *potential,
                                      double p,
                                      const double *x,
                                      const double *loss_estimate,
                                      size_t d,
                                      double eta,
                                      double *out);

// Learning rate `√(2·diam/(n·a))` and the implied regret bound.
//
// # Safety
// `eta_out` and `bound_out` must be writable.
enum OsmdStatus osmd_tune_eta(double diam,
                              double a,
                              double b,
                              size_t n,
                              double *eta_out,
                              double *bound_out);

// Parses an edge list (first line `k`, then 1-indexed `i j` pairs).
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum OsmdStatus osmd_graph_from_edge_list(const char *text, struct OsmdGraph **out);

// Releases a graph. Null is ignored.
//
// # Safety
// `graph` must come from `osmd_graph_from_edge_list` and not be freed twice.
void osmd_graph_free(struct OsmdGraph *graph);

// Independence number; `exact_out` is set to 0 when only a greedy lower
// bound was computed (graphs above the exact-search size).
//
// # Safety
// `graph` must be live; the outputs must be writable.
enum OsmdStatus osmd_graph_independence_number(const struct OsmdGraph *graph,
                                               size_t *value_out,
                                               bool *exact_out);

// Whether every vertex observes itself or is observed by all others.
//
// # Safety
// `graph` must be live; `out` must be writable.
enum OsmdStatus osmd_graph_is_strongly_observable(const struct OsmdGraph *graph, bool *out);

// Runs an experiment from a JSON configuration (the same format as
// `osmd run --config`), writing its outputs to disk, and returns the
// summary as a JSON string to be released with `osmd_string_free`.
//
// # Safety
// `config_json` must be a NUL-terminated string; `summary_out` must be writable.
enum OsmdStatus osmd_run_config_json(const char *config_json, size_t workers, char **summary_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OSMD_H */
