#ifndef NAMBU_H
#define NAMBU_H

/* Generated by cbindgen from crates/nambu-ffi; edit the Rust source, not this file. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of a fallible call. `NAMBU_STATUS_OK` is zero; every other value
// leaves a message readable via `nambu_last_error_message`.
typedef enum NambuStatus {
  // The call succeeded.
  NAMBU_STATUS_OK = 0,
  // A required pointer argument was null.
  NAMBU_STATUS_NULL_POINTER = 1,
  // Malformed input: a parse or configuration error, a bad argument, or a
  // dimension mismatch.
  NAMBU_STATUS_INVALID_INPUT = 2,
  // The computation hit a numerical obstruction: a singular chart point, a
  // value outside a function's domain, or a failed integration step.
  NAMBU_STATUS_NUMERICAL_FAILURE = 3,
  // A verification run completed but at least one check failed.
  NAMBU_STATUS_CHECK_FAILED = 4,
} NambuStatus;

// Time stepper used by `nambu_integrate`.
typedef enum NambuMethod {
  // Classical fixed-step fourth-order Runge-Kutta.
  NAMBU_METHOD_RK4 = 0,
  // Adaptive Runge-Kutta-Fehlberg 4(5) with step-size control.
  NAMBU_METHOD_RK45 = 1,
} NambuMethod;

// A configured dynamical system: phase-space coordinates, a flow, and the
// invariants monitored during integration. Created by
// `nambu_system_from_json`, released by `nambu_system_free`.
typedef struct NambuSystem NambuSystem;

// An integrated trajectory: sample times, states in row-major order, and the
// logged invariant values. Created by `nambu_integrate`, released by
// `nambu_trajectory_free`.
typedef struct NambuTrajectory NambuTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message from the most recent failing call on this thread.
//
// The pointer stays valid until the next failing call on the same thread;
// before any failure it points at an empty string. Never null. Do not free.
const char *nambu_last_error_message(void);

// Library version as a static NUL-terminated string. Do not free.
const char *nambu_version(void);

// Builds a system from a JSON document.
//
// The document selects either a named builtin with optional parameter
// overrides, e.g. `{"builtin": {"name": "rigid_body", "parameters":
// {"i1": 2.0}}}`, or a fully custom system with coordinates, Hamiltonians,
// and invariants under the `"custom"` tag.
//
// Returns null on failure; the cause is readable via
// `nambu_last_error_message`. Release the handle with `nambu_system_free`.
//
// # Safety
//
// `json` must be a valid NUL-terminated UTF-8 string, readable for its whole
// length.
struct NambuSystem *nambu_system_from_json(const char *json);

// Releases a system handle. Passing null is a no-op.
//
// # Safety
//
// `system` must be null or a pointer returned by `nambu_system_from_json`
// that has not been freed already.
void nambu_system_free(struct NambuSystem *system);

// Phase-space dimension of the system, or 0 if `system` is null.
//
// # Safety
//
// `system` must be null or a live pointer from `nambu_system_from_json`.
size_t nambu_system_dim(const struct NambuSystem *system);

// Name of coordinate `index`, or null when `system` is null or `index` is
// out of range. The pointer stays valid for the life of the handle; do not
// free it.
//
// # Safety
//
// `system` must be null or a live pointer from `nambu_system_from_json`.
const char *nambu_system_coordinate_name(const struct NambuSystem *system, size_t index);

// Number of invariants the system monitors during integration, or 0 if
// `system` is null.
//
// # Safety
//
// `system` must be null or a live pointer from `nambu_system_from_json`.
size_t nambu_system_invariant_count(const struct NambuSystem *system);

// Evaluates the system's flow (the time derivative of the state) at `state`,
// writing one component per coordinate into `out`. Both lengths must equal
// the system dimension.
//
// # Safety
//
// `system` must be a live pointer from `nambu_system_from_json`; `state`
// must point to `state_len` readable doubles and `out` to `out_len`
// writable doubles.
enum NambuStatus nambu_flow_field(const struct NambuSystem *system,
                                  const double *state,
                                  size_t state_len,
                                  double *out,
                                  size_t out_len);

// Evaluates the determinant bracket of `expression_count` scalar expressions
// at `state`, storing the value in `*out`. The expressions are written in
// the system's coordinate names (for example `"L1*L2 - 0.5*L3^2"`), and
// their number must equal the system dimension. Gradients of the parsed
// expressions are taken by central differences.
//
// # Safety
//
// `system` must be a live pointer from `nambu_system_from_json`;
// `expressions` must point to `expression_count` valid NUL-terminated UTF-8
// strings; `state` must point to `state_len` readable doubles; `out` must
// be writable.
enum NambuStatus nambu_bracket_eval(const struct NambuSystem *system,
                                    const char *const *expressions,
                                    size_t expression_count,
                                    const double *state,
                                    size_t state_len,
                                    double *out);

// Integrates the system and hands back a trajectory handle through `*out`.
//
// Pass a null `initial_state` (with `initial_state_len` 0) to start from the
// system's default state, if it has one. For `NAMBU_METHOD_RK45`, `dt` is
// the initial step and `rel_tol`/`abs_tol` control step acceptance;
// nonpositive tolerances select the defaults 1e-10 and 1e-12. For
// `NAMBU_METHOD_RK4` the tolerances are ignored. On success the caller owns
// the trajectory and must release it with `nambu_trajectory_free`.
//
// # Safety
//
// `system` must be a live pointer from `nambu_system_from_json`;
// `initial_state` must be null or point to `initial_state_len` readable
// doubles; `method` must be a valid `NambuMethod` value; `out` must be
// writable.
enum NambuStatus nambu_integrate(const struct NambuSystem *system,
                                 const double *initial_state,
                                 size_t initial_state_len,
                                 enum NambuMethod method,
                                 double dt,
                                 double t_end,
                                 double rel_tol,
                                 double abs_tol,
                                 struct NambuTrajectory **out);

// Releases a trajectory handle. Passing null is a no-op.
//
// # Safety
//
// `trajectory` must be null or a pointer produced by `nambu_integrate` that
// has not been freed already.
void nambu_trajectory_free(struct NambuTrajectory *trajectory);

// Number of stored samples (accepted steps plus the initial state), or 0 if
// `trajectory` is null.
//
// # Safety
//
// `trajectory` must be null or a live pointer from `nambu_integrate`.
size_t nambu_trajectory_len(const struct NambuTrajectory *trajectory);

// State dimension of the trajectory, or 0 if `trajectory` is null.
//
// # Safety
//
// `trajectory` must be null or a live pointer from `nambu_integrate`.
size_t nambu_trajectory_dim(const struct NambuTrajectory *trajectory);

// Sample times as an array of `nambu_trajectory_len` doubles, or null if
// `trajectory` is null. Valid for the life of the handle; do not free.
//
// # Safety
//
// `trajectory` must be null or a live pointer from `nambu_integrate`.
const double *nambu_trajectory_times(const struct NambuTrajectory *trajectory);

// States in row-major order: sample `i`, coordinate `j` is element
// `i * dim + j` of an array of `len * dim` doubles. Null if `trajectory` is
// null. Valid for the life of the handle; do not free.
//
// # Safety
//
// `trajectory` must be null or a live pointer from `nambu_integrate`.
const double *nambu_trajectory_states(const struct NambuTrajectory *trajectory);

// Steps the adaptive controller rejected (always 0 for RK4), or 0 if
// `trajectory` is null.
//
// # Safety
//
// `trajectory` must be null or a live pointer from `nambu_integrate`.
size_t nambu_trajectory_rejected_steps(const struct NambuTrajectory *trajectory);

// Number of invariants logged along the trajectory, or 0 if `trajectory` is
// null.
//
// # Safety
//
// `trajectory` must be null or a live pointer from `nambu_integrate`.
size_t nambu_trajectory_invariant_count(const struct NambuTrajectory *trajectory);

// Name of logged invariant `index`, or null when `trajectory` is null or
// `index` is out of range. Valid for the life of the handle; do not free.
//
// # Safety
//
// `trajectory` must be null or a live pointer from `nambu_integrate`.
const char *nambu_trajectory_invariant_name(const struct NambuTrajectory *trajectory, size_t index);

// Logged invariant values in row-major order: sample `i`, invariant `k` is
// element `i * invariant_count + k` of an array of `len * invariant_count`
// doubles. Null if `trajectory` is null. Valid for the life of the handle;
// do not free.
//
// # Safety
//
// `trajectory` must be null or a live pointer from `nambu_integrate`.
const double *nambu_trajectory_invariant_values(const struct NambuTrajectory *trajectory);

// Largest deviation of invariant `index` from its initial value over the
// whole trajectory, or NaN when `trajectory` is null or `index` is out of
// range.
//
// # Safety
//
// `trajectory` must be null or a live pointer from `nambu_integrate`.
double nambu_trajectory_invariant_drift(const struct NambuTrajectory *trajectory, size_t index);

// Largest drift across all logged invariants (0 when none were logged), or
// NaN if `trajectory` is null.
//
// # Safety
//
// `trajectory` must be null or a live pointer from `nambu_integrate`.
double nambu_trajectory_max_drift(const struct NambuTrajectory *trajectory);

// Maps a point of the 4-dimensional oscillator phase space to the
// 3-dimensional reduced space: `state` holds 4 doubles `(q1, p1, q2, p2)`,
// `out` receives 3 doubles.
//
// # Safety
//
// `state` must point to 4 readable doubles and `out` to 3 writable doubles.
enum NambuStatus nambu_hopf_map(const double *state, double *out);

// Maps a point of the 6-dimensional Euler-angle phase space
// `(theta, phi, psi, p_theta, p_phi, p_psi)` to the body angular momentum
// `(L1, L2, L3)`. Fails with `NAMBU_STATUS_NUMERICAL_FAILURE` where the
// angle chart degenerates (`sin(theta)` ~ 0).
//
// # Safety
//
// `state` must point to 6 readable doubles and `out` to 3 writable doubles.
enum NambuStatus nambu_angular_momentum_map(const double *state, double *out);

// Time derivative of the body angular momentum of a free rigid body:
// `body_momentum` and `out` hold 3 doubles, `moments` the 3 positive
// principal moments of inertia.
//
// # Safety
//
// `body_momentum` and `moments` must each point to 3 readable doubles and
// `out` to 3 writable doubles.
enum NambuStatus nambu_euler_rhs(const double *body_momentum, const double *moments, double *out);

// Closed-form body angular momentum of the free symmetric top
// (`i1 = i2 != i3`) at time `t`, from initial momentum `initial` (3
// doubles). Writes 3 doubles to `out`.
//
// # Safety
//
// `initial` must point to 3 readable doubles and `out` to 3 writable
// doubles.
enum NambuStatus nambu_symmetric_top_analytic(const double *initial,
                                              double i1,
                                              double i3,
                                              double t,
                                              double *out);

// Precession frequency of the free symmetric top's transverse momentum,
// `l3 * (1/i3 - 1/i1)`, for axial momentum `l3` and moments `i1 = i2`, `i3`.
double nambu_top_precession_frequency(double l3, double i1, double i3);

// Runs a verification suite of randomized structural checks.
//
// `suite` is one of `"brackets"`, `"reductions"`, `"actionangle"`, or
// `"all"`; `samples` is the number of random points per check and must be
// positive; `seed` makes the run reproducible. If `report_json` is not
// null, `*report_json` receives a heap-allocated JSON report that the
// caller must release with `nambu_string_free`. Returns `NAMBU_STATUS_OK`
// when every check passes and `NAMBU_STATUS_CHECK_FAILED` when the run
// completes with failures (the report is still written).
//
// # Safety
//
// `suite` must be a valid NUL-terminated UTF-8 string; `report_json` must
// be null or writable.
enum NambuStatus nambu_verify_run(const char *suite,
                                  uint64_t seed,
                                  size_t samples,
                                  char **report_json);

// Releases a string allocated by this library (for example a verification
// report). Passing null is a no-op.
//
// # Safety
//
// `s` must be null or a pointer this library handed out as a caller-owned
// string, not freed already.
void nambu_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NAMBU_H */
