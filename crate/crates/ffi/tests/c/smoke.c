#include <math.h>
#include <stdio.h>

#include "nash_admm.h"

#define CHECK(expr)                                              \
  do {                                                           \
    NaStatus s_ = (expr);                                        \
    if (s_ != NA_STATUS_OK) {                                    \
      char msg[256];                                             \
      na_last_error_message(msg, sizeof msg);                    \
      fprintf(stderr, "%s -> %d: %s\n", #expr, (int)s_, msg);    \
      return 1;                                                  \
    }                                                            \
  } while (0)

int main(void) {
  /* Two players, F(x) = [[2, 0.5], [0.5, 2]] x + d with equilibrium (0.4, -0.6). */
  double a[2] = {2.0, 2.0};
  double b[4] = {0.0, 0.5, 0.5, 0.0};
  double d[2] = {-0.5, 1.0};
  double lo[2] = {-5.0, -5.0};
  double hi[2] = {5.0, 5.0};

  NaGame *game = NULL;
  NaGraph *graph = NULL;
  NaSolver *solver = NULL;
  CHECK(na_game_quadratic(2, a, b, d, lo, hi, &game));
  CHECK(na_graph_complete(2, &graph));

  NaSolverConfig cfg = na_solver_config_default();
  CHECK(na_solver_new(game, graph, &cfg, NULL, NULL, 0, &solver));
  na_game_free(game);
  na_graph_free(graph);

  NaRunSummary summary;
  CHECK(na_solver_run(solver, &summary));
  double x[2];
  CHECK(na_solver_actions(solver, x, 2));
  na_solver_free(solver);

  if (na_graph_ring(3, NULL) != NA_STATUS_NULL_POINTER) return 2;
  if (!summary.converged || fabs(x[0] - 0.4) > 1e-5 || fabs(x[1] + 0.6) > 1e-5) return 3;
  printf("%s %zu %.6f %.6f\n", na_version(), summary.iterations, x[0], x[1]);
  return 0;
}
