/* The public header must compile as C and link against the shared library. */
#include <stdio.h>

#include "pcv/pcv.h"

int main(void) {
  pcv_dataset* ds = NULL;
  pcv_oracle* o = NULL;
  pcv_factor* f = NULL;
  pcv_build_options opts;
  pcv_build_stats st;
  double ld = 0.0;
  if (pcv_dataset_synthetic(100, 3, 2, 1.0, 1, &ds) != PCV_OK) return 1;
  if (pcv_oracle_kernel(ds, 0.01, &o) != PCV_OK) return 1;
  pcv_build_options_default(&opts);
  if (pcv_build(o, &opts, &f, &st) != PCV_OK) return 1;
  if (pcv_factor_logdet(f, &ld) != PCV_OK) return 1;
  printf("pcv %s: n=%zu r=%zu logdet=%g\n", pcv_version(), pcv_factor_size(f), st.r, ld);
  pcv_factor_free(f);
  pcv_oracle_free(o);
  pcv_dataset_free(ds);
  return 0;
}
