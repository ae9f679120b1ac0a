#ifndef NASH_ADMM_H
#define NASH_ADMM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every fallible call.
 */
typedef enum NaStatus {
  NA_STATUS_OK = 0,
  NA_STATUS_NULL_POINTER = 1,
  NA_STATUS_INVALID_ARGUMENT = 2,
  NA_STATUS_DISCONNECTED = 3,
  NA_STATUS_INFEASIBLE_START = 4,
  /*
   Equilibrium oracle unavailable: singular system or boundary solution.
   */
  NA_STATUS_NO_ORACLE = 5,
  NA_STATUS_NOT_ESTIMABLE = 6,
  NA_STATUS_DIVERGED = 7,
  NA_STATUS_BUFFER_TOO_SMALL = 8,
  /*
   The solver hit its iteration budget before meeting the tolerances.
   */
  NA_STATUS_NOT_CONVERGED = 9,
  NA_STATUS_PANIC = 10,
} NaStatus;

typedef struct NaGame NaGame;

typedef struct NaGraph NaGraph;

typedef struct NaSolver NaSolver;

/*
 Solver settings. `beta` applies to every player unless a per-player array
 is passed alongside.
 */
typedef struct NaSolverConfig {
  double c;
  double beta;
  size_t max_iter;
  double tol_consensus;
  double tol_residual;
  /*
   Worker threads for the per-player update; 0 runs on the calling thread.
   */
  size_t threads;
} NaSolverConfig;

/*
 Summary of a call to [`na_solver_run`].
 */
typedef struct NaRunSummary {
  size_t iterations;
  bool converged;
  double consensus_error;
  double ne_residual;
  /*
   Largest absolute column sum of the aggregated duals seen during the run.
   */
  double max_column_sum;
} NaRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *na_version(void);

/*
 Copies the calling thread's last error message into `buf` (NUL-terminated,
 truncated to `len - 1` bytes). Returns the full message length in bytes,
 excluding the terminator, so callers can size a buffer with `len = 0`.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
size_t na_last_error_message(char *buf, size_t len);

/*
 Default settings: `c = 1`, `beta = 1`, 5000 iterations, tolerances 1e-8
 (consensus) and 1e-6 (residual), single-threaded.
 */
struct NaSolverConfig na_solver_config_default(void);

/*
 # Safety
 `out` must be a valid pointer to a handle slot.
 */
enum NaStatus na_graph_ring(size_t n, struct NaGraph **out);

/*
 # Safety
 `out` must be a valid pointer to a handle slot.
 */
enum NaStatus na_graph_complete(size_t n, struct NaGraph **out);

/*
 # Safety
 `out` must be a valid pointer to a handle slot.
 */
enum NaStatus na_graph_path(size_t n, struct NaGraph **out);

/*
 Ring on `n` nodes plus `extra_edges` chords drawn from `seed`.

 # Safety
 `out` must be a valid pointer to a handle slot.
 */
enum NaStatus na_graph_random_connected(size_t n,
                                        size_t extra_edges,
                                        uint64_t seed,
                                        struct NaGraph **out);

/*
 Undirected graph from `n_edges` pairs stored flat in `edges`
 (`edges[2k]`, `edges[2k + 1]`).

 # Safety
 `edges` must point to `2 * n_edges` readable values; `out` to a handle slot.
 */
enum NaStatus na_graph_from_edges(size_t n,
                                  const size_t *edges,
                                  size_t n_edges,
                                  struct NaGraph **out);

/*
 # Safety
 `graph` must be null or a handle from a graph constructor, not yet freed.
 */
void na_graph_free(struct NaGraph *graph);

/*
 Number of nodes, or 0 for a null handle.

 # Safety
 `graph` must be null or a live graph handle.
 */
size_t na_graph_n(const struct NaGraph *graph);

/*
 # Safety
 `graph` must be a live graph handle; `out` writable.
 */
enum NaStatus na_graph_is_connected(const struct NaGraph *graph, bool *out);

/*
 Smallest eigenvalue of the signless Laplacian `D + A`.

 # Safety
 `graph` must be a live graph handle; `out` writable.
 */
enum NaStatus na_graph_lambda_min_d_plus_a(const struct NaGraph *graph, double *out);

/*
 Largest eigenvalue of the normalized Laplacian.

 # Safety
 `graph` must be a live graph handle; `out` writable.
 */
enum NaStatus na_graph_lambda_max_normalized_laplacian(const struct NaGraph *graph, double *out);

/*
 Quadratic game `J_i(x) = a_i x_i² / 2 + x_i Σ_j B_ij x_j + d_i x_i` on the
 box `[lower, upper]`. `b` is row-major `n × n` with a zero diagonal.

 # Safety
 `a`, `d`, `lower`, `upper` must point to `n` values, `b` to `n * n`;
 `out` to a handle slot.
 */
enum NaStatus na_game_quadratic(size_t n,
                                const double *a,
                                const double *b,
                                const double *d,
                                const double *lower,
                                const double *upper,
                                struct NaGame **out);

/*
 The seeded 15-user congestion game and its communication graph.

 # Safety
 `out_game` and `out_graph` must be valid handle slots.
 */
enum NaStatus na_game_wanet_default(uint64_t seed,
                                    struct NaGame **out_game,
                                    struct NaGraph **out_graph);

/*
 # Safety
 `game` must be null or a handle from a game constructor, not yet freed.
 Solvers built from it keep their own reference and stay valid.
 */
void na_game_free(struct NaGame *game);

/*
 Number of players, or 0 for a null handle.

 # Safety
 `game` must be null or a live game handle.
 */
size_t na_game_n_players(const struct NaGame *game);

/*
 Cost of `player` at the profile `x` of length `len`.

 # Safety
 `game` must be a live game handle, `x` must point to `len` values, `out`
 writable.
 */
enum NaStatus na_game_cost(const struct NaGame *game,
                           size_t player,
                           const double *x,
                           size_t len,
                           double *out);

/*
 Partial derivative of `player`'s cost in its own action at `x`.

 # Safety
 As [`na_game_cost`].
 */
enum NaStatus na_game_grad(const struct NaGame *game,
                           size_t player,
                           const double *x,
                           size_t len,
                           double *out);

/*
 Projected-gradient equilibrium residual at the common profile `x`.

 # Safety
 `game` must be a live game handle, `x` must point to `len` values, `out`
 writable.
 */
enum NaStatus na_game_ne_residual(const struct NaGame *game,
                                  const double *x,
                                  size_t len,
                                  double *out);

/*
 Closed-form equilibrium of a quadratic game. Fails with
 `NA_STATUS_NO_ORACLE` for other games, singular systems, or equilibria on
 the box boundary.

 # Safety
 `game` must be a live game handle; `out` must hold `len` values.
 */
enum NaStatus na_game_quadratic_equilibrium(const struct NaGame *game, double *out, size_t len);

/*
 Sampled cocoercivity estimate of the pseudo-gradient.

 # Safety
 `game` must be a live game handle; `out` writable.
 */
enum NaStatus na_estimate_sigma_f(const struct NaGame *game,
                                  size_t samples,
                                  uint64_t seed,
                                  double *out);

/*
 Whether `σ_F > 1 / (2(β_min + c λ_min(D + A)))` holds, with the signed
 margin `σ_F − threshold`.

 # Safety
 `cfg` and `graph` must be valid; `beta` null or `na_graph_n(graph)`
 values; `satisfied` and `margin` writable.
 */
enum NaStatus na_check_condition(double sigma_f,
                                 const struct NaSolverConfig *cfg,
                                 const double *beta,
                                 const struct NaGraph *graph,
                                 bool *satisfied,
                                 double *margin);

/*
 Solver for `game` over `graph`. `beta` is null (use `cfg->beta` for every
 player) or one weight per player. `x0` is null (start from zeros), one
 profile of `n` values copied to every player, or `n * n` row-major
 per-player estimates, as told by `x0_len`.

 The solver keeps its own references; `game` and `graph` may be freed
 afterwards.

 # Safety
 Pointers must be valid for the stated lengths; `out` must be a handle slot.
 */
enum NaStatus na_solver_new(const struct NaGame *game,
                            const struct NaGraph *graph,
                            const struct NaSolverConfig *cfg,
                            const double *beta,
                            const double *x0,
                            size_t x0_len,
                            struct NaSolver **out);

/*
 # Safety
 `solver` must be null or a handle from [`na_solver_new`], not yet freed.
 */
void na_solver_free(struct NaSolver *solver);

/*
 One synchronous iteration.

 # Safety
 `solver` must be a live solver handle.
 */
enum NaStatus na_solver_step(struct NaSolver *solver);

/*
 Iterates from the current state until both tolerances hold or the
 iteration counter reaches `max_iter`. Returns `NA_STATUS_NOT_CONVERGED`
 when the budget runs out; `summary` is filled in either case.

 # Safety
 `solver` must be a live solver handle; `summary` null or writable.
 */
enum NaStatus na_solver_run(struct NaSolver *solver, struct NaRunSummary *summary);

/*
 Current iteration counter, or 0 for a null handle.

 # Safety
 `solver` must be null or a live solver handle.
 */
size_t na_solver_iteration(const struct NaSolver *solver);

/*
 Every player's own action, `n` values.

 # Safety
 `solver` must be a live solver handle; `out` must hold `len` values.
 */
enum NaStatus na_solver_actions(const struct NaSolver *solver, double *out, size_t len);

/*
 Full estimate matrix, `n * n` values row-major (row `i` is player `i`'s
 estimate of every action).

 # Safety
 `solver` must be a live solver handle; `out` must hold `len` values.
 */
enum NaStatus na_solver_estimates(const struct NaSolver *solver, double *out, size_t len);

/*
 Consensus error and equilibrium residual of the current state.

 # Safety
 `solver` must be a live solver handle; outputs writable.
 */
enum NaStatus na_solver_diagnostics(const struct NaSolver *solver,
                                    double *consensus_error,
                                    double *ne_residual);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NASH_ADMM_H */
