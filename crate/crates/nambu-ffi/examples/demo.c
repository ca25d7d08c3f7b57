/* Walkthrough of the C interface: build a system, evaluate its flow,
 * integrate it, reduce a point, and run the randomized verification suite.
 *
 * Build and run from the repository root:
 *
 *   cargo build -p nambu-ffi
 *   cc crates/nambu-ffi/examples/demo.c -Icrates/nambu-ffi/include \
 *      -Ltarget/debug -lnambu_ffi -lm -o demo
 *   LD_LIBRARY_PATH=target/debug ./demo
 *
 * or link the static library instead:
 *
 *   cc crates/nambu-ffi/examples/demo.c -Icrates/nambu-ffi/include \
 *      target/debug/libnambu_ffi.a -lm -lpthread -ldl -o demo
 */

#include <stdio.h>

#include "nambu.h"

static int check(NambuStatus status, const char *what) {
  if (status != NAMBU_STATUS_OK) {
    fprintf(stderr, "%s failed (%d): %s\n", what, (int)status,
            nambu_last_error_message());
    return 1;
  }
  return 0;
}

int main(void) {
  printf("library version %s\n", nambu_version());

  /* The builtin symmetric top: moments (2, 2, 1), default state (1, 0, 1). */
  NambuSystem *top =
      nambu_system_from_json("{\"builtin\": {\"name\": \"symmetric_top\"}}");
  if (!top) {
    fprintf(stderr, "system: %s\n", nambu_last_error_message());
    return 1;
  }
  size_t dim = nambu_system_dim(top);
  printf("symmetric top: dimension %zu, coordinates", dim);
  for (size_t j = 0; j < dim; ++j)
    printf(" %s", nambu_system_coordinate_name(top, j));
  printf("\n");

  double state[3] = {1.0, 0.0, 1.0};
  double flow[3];
  if (check(nambu_flow_field(top, state, 3, flow, 3), "flow")) return 1;
  printf("flow at (1, 0, 1): (%g, %g, %g)\n", flow[0], flow[1], flow[2]);

  /* Integrate from the default state and inspect the invariant drift. */
  NambuTrajectory *traj = NULL;
  if (check(nambu_integrate(top, NULL, 0, NAMBU_METHOD_RK4, 1e-3, 20.0, 0.0,
                            0.0, &traj),
            "integrate"))
    return 1;
  size_t len = nambu_trajectory_len(traj);
  const double *times = nambu_trajectory_times(traj);
  const double *states = nambu_trajectory_states(traj);
  printf("integrated %zu samples to t = %g; final state (%g, %g, %g)\n", len,
         times[len - 1], states[(len - 1) * 3], states[(len - 1) * 3 + 1],
         states[(len - 1) * 3 + 2]);
  for (size_t k = 0; k < nambu_trajectory_invariant_count(traj); ++k)
    printf("invariant %-8s max drift %.3e\n",
           nambu_trajectory_invariant_name(traj, k),
           nambu_trajectory_invariant_drift(traj, k));

  /* Compare the end point against the closed-form solution. */
  double analytic[3];
  if (check(nambu_symmetric_top_analytic(state, 2.0, 1.0, times[len - 1],
                                         analytic),
            "analytic state"))
    return 1;
  double err = 0.0;
  for (int j = 0; j < 3; ++j) {
    double d = states[(len - 1) * 3 + j] - analytic[j];
    if (d < 0.0) d = -d;
    if (d > err) err = d;
  }
  printf("max |numeric - analytic| at the end point: %.3e\n", err);

  nambu_trajectory_free(traj);
  nambu_system_free(top);

  /* Reduce an oscillator point, then probe a degenerate chart point. */
  double z[4] = {1.0, 0.0, 0.5, 0.2};
  double y[3];
  if (check(nambu_hopf_map(z, y), "reduction")) return 1;
  printf("reduced oscillator point: (%g, %g, %g)\n", y[0], y[1], y[2]);

  double gimbal[6] = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  if (nambu_angular_momentum_map(gimbal, y) == NAMBU_STATUS_NUMERICAL_FAILURE)
    printf("degenerate chart point rejected: %s\n", nambu_last_error_message());

  /* Randomized structural checks with a reproducible seed. */
  char *report = NULL;
  NambuStatus status = nambu_verify_run("all", 42, 25, &report);
  printf("verification: %s\n", status == NAMBU_STATUS_OK
                                   ? "all checks passed"
                                   : nambu_last_error_message());
  if (report) {
    size_t n = 0;
    while (report[n]) ++n;
    printf("report JSON: %zu bytes\n", n);
    nambu_string_free(report);
  }
  return status == NAMBU_STATUS_OK ? 0 : 1;
}
