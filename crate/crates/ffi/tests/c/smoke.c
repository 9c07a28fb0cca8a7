#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "kymh.h"

#define CHECK(cond)                                                    \
  do {                                                                 \
    if (!(cond)) {                                                     \
      const char *e = kymh_last_error();                               \
      fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond, e ? e : ""); \
      return 1;                                                        \
    }                                                                  \
  } while (0)

int main(void) {
  const double pi = 3.14159265358979323846;
  KymhGrid *grid = kymh_grid_new(129);
  CHECK(grid != NULL);
  CHECK(kymh_grid_len(grid) == 129);

  CHECK(kymh_grid_new(128) == NULL);
  CHECK(kymh_last_error() != NULL);

  uint32_t degrees[2] = {2, 2};
  uint32_t exponents[2] = {1, 0};
  double closed = 0.0, quad = 0.0;
  CHECK(kymh_futaki_closed_form(degrees, exponents, 5.0, 1.0, &closed) == KYMH_STATUS_OK);
  CHECK(fabs(closed - 4.0 * pi) < 1e-12);
  CHECK(kymh_futaki_quadrature(grid, degrees, exponents, 5.0, 1.0, &quad) == KYMH_STATUS_OK);
  CHECK(fabs(quad - closed) < 1e-8 * closed);

  double v[129];
  KymhSolveSummary summary;
  CHECK(kymh_solve_vortex(grid, 1, 0, 3.0, 1e-10, 50, v, 129, &summary) == KYMH_STATUS_OK);
  CHECK(summary.converged && summary.residual_sup < 1e-10);
  CHECK(kymh_solve_vortex(grid, 2, 0, 3.0, 1e-10, 50, v, 129, NULL) == KYMH_STATUS_INFEASIBLE);

  char *report = NULL;
  CHECK(kymh_stability_json("{\"degrees\":[2,2],\"exponents\":[1,0],\"tau\":5,\"alpha\":1}",
                            &report) == KYMH_STATUS_OK);
  CHECK(strstr(report, "\"obstructed\":true") != NULL);
  kymh_string_free(report);

  int code = -1;
  CHECK(kymh_run_json("{\"command\":\"futaki\",\"degrees\":[1,1],\"exponents\":[0,1],\"tau\":3,\"alpha\":1}",
                      false, &report, &code) == KYMH_STATUS_OK);
  CHECK(code == 0);
  kymh_string_free(report);

  kymh_grid_free(grid);
  printf("ok %s\n", kymh_version());
  return 0;
}
