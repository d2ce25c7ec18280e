/* Compiled as C99: guards the public header against C++-isms and checks a
 * minimal fit through the shared library from a plain C caller. */
#include <reciprocity.h>
#include <math.h>
#include <stdio.h>

int main(void) {
  recip_graph* g = NULL;
  recip_fit* fit = NULL;
  int64_t d_null, d_asym, d_mut;
  double lo, hi;

  if (recip_graph_create(3, &g) != RECIP_OK) return 1;
  if (recip_graph_add_edge(g, 0, 1) != RECIP_OK) return 1;
  if (recip_graph_add_edge(g, 1, 0) != RECIP_OK) return 1;
  if (recip_graph_add_edge(g, 0, 2) != RECIP_OK) return 1;
  if (recip_graph_census(g, &d_null, &d_asym, &d_mut) != RECIP_OK) return 1;
  if (d_null != 1 || d_asym != 1 || d_mut != 1) return 1;

  if (recip_fit_br(g, 0.95, &fit) != RECIP_OK) {
    fprintf(stderr, "fit: %s\n", recip_last_error());
    return 1;
  }
  if (fabs(recip_fit_estimate(fit, 0) - log(0.5)) > 1e-12) return 1;
  if (fabs(recip_fit_estimate(fit, 2) - 2.0 * log(2.0)) > 1e-12) return 1;
  if (recip_fit_ci(fit, 2, &lo, &hi) != RECIP_OK) return 1;
  if (!(lo < 2.0 * log(2.0) && hi > 2.0 * log(2.0))) return 1;

  /* error path: no mutual dyads */
  {
    recip_graph* g2 = NULL;
    recip_fit* fit2 = NULL;
    if (recip_graph_create(3, &g2) != RECIP_OK) return 1;
    if (recip_graph_add_edge(g2, 0, 1) != RECIP_OK) return 1;
    if (recip_fit_br(g2, 0.95, &fit2) != RECIP_ERR_MLE_DOES_NOT_EXIST)
      return 1;
    recip_graph_free(g2);
  }

  recip_fit_free(fit);
  recip_graph_free(g);
  puts("c caller ok");
  return 0;
}
