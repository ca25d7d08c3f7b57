//! C ABI for the determinant-bracket dynamics library.
//!
//! The interface works on opaque handles and flat `double` arrays so it can be
//! called from C, or from any language with a C foreign-function interface.
//! Every fallible call returns a [`NambuStatus`]; on failure a human-readable
//! message is stored per thread and can be read back with
//! [`nambu_last_error_message`]. The `include/nambu.h` header is generated
//! from this file at build time.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};

use nambu::config::{ConfiguredSystem, SystemConfig};
use nambu::dynamics::{
    drift_report, euler_rhs, integrate, symmetric_top_analytic, top_precession_frequency,
    IntegratorSpec, Trajectory,
};
use nambu::reduction::{angular_momentum, hopf};
use nambu::verify::{run_suite, Suite};
use nambu::{Error, Expression, ScalarField};

/// Result of a fallible call. `NAMBU_STATUS_OK` is zero; every other value
/// leaves a message readable via `nambu_last_error_message`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NambuStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Malformed input: a parse or configuration error, a bad argument, or a
    /// dimension mismatch.
    InvalidInput = 2,
    /// The computation hit a numerical obstruction: a singular chart point, a
    /// value outside a function's domain, or a failed integration step.
    NumericalFailure = 3,
    /// A verification run completed but at least one check failed.
    CheckFailed = 4,
}

/// Time stepper used by `nambu_integrate`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NambuMethod {
    /// Classical fixed-step fourth-order Runge-Kutta.
    Rk4 = 0,
    /// Adaptive Runge-Kutta-Fehlberg 4(5) with step-size control.
    Rk45 = 1,
}

/// A configured dynamical system: phase-space coordinates, a flow, and the
/// invariants monitored during integration. Created by
/// `nambu_system_from_json`, released by `nambu_system_free`.
pub struct NambuSystem {
    inner: ConfiguredSystem,
    coordinate_names: Vec<CString>,
}

/// An integrated trajectory: sample times, states in row-major order, and the
/// logged invariant values. Created by `nambu_integrate`, released by
/// `nambu_trajectory_free`.
pub struct NambuTrajectory {
    times: Vec<f64>,
    states_row_major: Vec<f64>,
    invariants_row_major: Vec<f64>,
    dim: usize,
    invariant_names: Vec<CString>,
    invariant_drifts: Vec<f64>,
    max_drift: f64,
    rejected_steps: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

/// Replaces this thread's error message. Interior NUL bytes cannot occur in
/// messages produced by the library, but strip them anyway so the conversion
/// is infallible.
fn set_error(message: &str) {
    let clean: String = message.chars().filter(|&c| c != '\0').collect();
    let stored = CString::new(clean).expect("NUL bytes were just removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = stored);
}

fn status_of(err: &Error) -> NambuStatus {
    match err {
        Error::Parse { .. }
        | Error::Dimension { .. }
        | Error::InvalidArgument(_)
        | Error::Config(_)
        | Error::Io(_) => NambuStatus::InvalidInput,
        Error::Singular(_) | Error::Domain(_) | Error::Integration { .. } => {
            NambuStatus::NumericalFailure
        }
    }
}

fn fail(err: &Error) -> NambuStatus {
    set_error(&err.to_string());
    status_of(err)
}

fn null_pointer(what: &str) -> NambuStatus {
    set_error(&format!("null pointer: {what}"));
    NambuStatus::NullPointer
}

/// NUL-free copy of a library-produced string, for returning through the ABI.
fn c_string(s: &str) -> CString {
    let clean: String = s.chars().filter(|&c| c != '\0').collect();
    CString::new(clean).expect("NUL bytes were just removed")
}

/// Message from the most recent failing call on this thread.
///
/// The pointer stays valid until the next failing call on the same thread;
/// before any failure it points at an empty string. Never null. Do not free.
#[no_mangle]
pub extern "C" fn nambu_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string. Do not free.
#[no_mangle]
pub extern "C" fn nambu_version() -> *const c_char {
    const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Builds a system from a JSON document.
///
/// The document selects either a named builtin with optional parameter
/// overrides, e.g. `{"builtin": {"name": "rigid_body", "parameters":
/// {"i1": 2.0}}}`, or a fully custom system with coordinates, Hamiltonians,
/// and invariants under the `"custom"` tag.
///
/// Returns null on failure; the cause is readable via
/// `nambu_last_error_message`. Release the handle with `nambu_system_free`.
///
/// # Safety
///
/// `json` must be a valid NUL-terminated UTF-8 string, readable for its whole
/// length.
#[no_mangle]
pub unsafe extern "C" fn nambu_system_from_json(json: *const c_char) -> *mut NambuSystem {
    if json.is_null() {
        null_pointer("json");
        return std::ptr::null_mut();
    }
    let text = match CStr::from_ptr(json).to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("system JSON is not valid UTF-8");
            return std::ptr::null_mut();
        }
    };
    let config: SystemConfig = match serde_json::from_str(text) {
        Ok(c) => c,
        Err(e) => {
            set_error(&format!("invalid system JSON: {e}"));
            return std::ptr::null_mut();
        }
    };
    let inner = match config.build() {
        Ok(s) => s,
        Err(e) => {
            fail(&e);
            return std::ptr::null_mut();
        }
    };
    let coordinate_names = inner
        .space()
        .names()
        .iter()
        .map(|n| c_string(n))
        .collect();
    Box::into_raw(Box::new(NambuSystem {
        inner,
        coordinate_names,
    }))
}

/// Releases a system handle. Passing null is a no-op.
///
/// # Safety
///
/// `system` must be null or a pointer returned by `nambu_system_from_json`
/// that has not been freed already.
#[no_mangle]
pub unsafe extern "C" fn nambu_system_free(system: *mut NambuSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Phase-space dimension of the system, or 0 if `system` is null.
///
/// # Safety
///
/// `system` must be null or a live pointer from `nambu_system_from_json`.
#[no_mangle]
pub unsafe extern "C" fn nambu_system_dim(system: *const NambuSystem) -> usize {
    match system.as_ref() {
        Some(s) => s.inner.space().dim(),
        None => 0,
    }
}

/// Name of coordinate `index`, or null when `system` is null or `index` is
/// out of range. The pointer stays valid for the life of the handle; do not
/// free it.
///
/// # Safety
///
/// `system` must be null or a live pointer from `nambu_system_from_json`.
#[no_mangle]
pub unsafe extern "C" fn nambu_system_coordinate_name(
    system: *const NambuSystem,
    index: usize,
) -> *const c_char {
    match system.as_ref().and_then(|s| s.coordinate_names.get(index)) {
        Some(name) => name.as_ptr(),
        None => std::ptr::null(),
    }
}

/// Number of invariants the system monitors during integration, or 0 if
/// `system` is null.
///
/// # Safety
///
/// `system` must be null or a live pointer from `nambu_system_from_json`.
#[no_mangle]
pub unsafe extern "C" fn nambu_system_invariant_count(system: *const NambuSystem) -> usize {
    match system.as_ref() {
        Some(s) => s.inner.invariants().len(),
        None => 0,
    }
}

/// Evaluates the system's flow (the time derivative of the state) at `state`,
/// writing one component per coordinate into `out`. Both lengths must equal
/// the system dimension.
///
/// # Safety
///
/// `system` must be a live pointer from `nambu_system_from_json`; `state`
/// must point to `state_len` readable doubles and `out` to `out_len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nambu_flow_field(
    system: *const NambuSystem,
    state: *const f64,
    state_len: usize,
    out: *mut f64,
    out_len: usize,
) -> NambuStatus {
    let Some(handle) = system.as_ref() else {
        return null_pointer("system");
    };
    if state.is_null() {
        return null_pointer("state");
    }
    if out.is_null() {
        return null_pointer("out");
    }
    let x = std::slice::from_raw_parts(state, state_len);
    if let Err(e) = handle.inner.space().check_state(x) {
        return fail(&e);
    }
    let dim = handle.inner.space().dim();
    if out_len != dim {
        return fail(&Error::Dimension {
            expected: dim,
            got: out_len,
        });
    }
    let out_slice = std::slice::from_raw_parts_mut(out, out_len);
    match handle.inner.rhs().eval(x, out_slice) {
        Ok(()) => NambuStatus::Ok,
        Err(e) => fail(&e),
    }
}

/// Evaluates the determinant bracket of `expression_count` scalar expressions
/// at `state`, storing the value in `*out`. The expressions are written in
/// the system's coordinate names (for example `"L1*L2 - 0.5*L3^2"`), and
/// their number must equal the system dimension. Gradients of the parsed
/// expressions are taken by central differences.
///
/// # Safety
///
/// `system` must be a live pointer from `nambu_system_from_json`;
/// `expressions` must point to `expression_count` valid NUL-terminated UTF-8
/// strings; `state` must point to `state_len` readable doubles; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn nambu_bracket_eval(
    system: *const NambuSystem,
    expressions: *const *const c_char,
    expression_count: usize,
    state: *const f64,
    state_len: usize,
    out: *mut f64,
) -> NambuStatus {
    let Some(handle) = system.as_ref() else {
        return null_pointer("system");
    };
    if expressions.is_null() {
        return null_pointer("expressions");
    }
    if state.is_null() {
        return null_pointer("state");
    }
    if out.is_null() {
        return null_pointer("out");
    }
    let x = std::slice::from_raw_parts(state, state_len);
    if let Err(e) = handle.inner.space().check_state(x) {
        return fail(&e);
    }
    let sources = std::slice::from_raw_parts(expressions, expression_count);
    let params = BTreeMap::new();
    let mut fields = Vec::with_capacity(expression_count);
    for (k, &src) in sources.iter().enumerate() {
        if src.is_null() {
            return null_pointer("expressions[k]");
        }
        let text = match CStr::from_ptr(src).to_str() {
            Ok(t) => t,
            Err(_) => {
                set_error(&format!("expression {k} is not valid UTF-8"));
                return NambuStatus::InvalidInput;
            }
        };
        match Expression::parse(text, handle.inner.space(), &params) {
            Ok(expr) => fields.push(ScalarField::from_expression(expr)),
            Err(e) => return fail(&e),
        }
    }
    let refs: Vec<&ScalarField> = fields.iter().collect();
    match nambu::nambu_bracket(&refs, x) {
        Ok(value) => {
            *out = value;
            NambuStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Integrates the system and hands back a trajectory handle through `*out`.
///
/// Pass a null `initial_state` (with `initial_state_len` 0) to start from the
/// system's default state, if it has one. For `NAMBU_METHOD_RK45`, `dt` is
/// the initial step and `rel_tol`/`abs_tol` control step acceptance;
/// nonpositive tolerances select the defaults 1e-10 and 1e-12. For
/// `NAMBU_METHOD_RK4` the tolerances are ignored. On success the caller owns
/// the trajectory and must release it with `nambu_trajectory_free`.
///
/// # Safety
///
/// `system` must be a live pointer from `nambu_system_from_json`;
/// `initial_state` must be null or point to `initial_state_len` readable
/// doubles; `method` must be a valid `NambuMethod` value; `out` must be
/// writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn nambu_integrate(
    system: *const NambuSystem,
    initial_state: *const f64,
    initial_state_len: usize,
    method: NambuMethod,
    dt: f64,
    t_end: f64,
    rel_tol: f64,
    abs_tol: f64,
    out: *mut *mut NambuTrajectory,
) -> NambuStatus {
    let Some(handle) = system.as_ref() else {
        return null_pointer("system");
    };
    if out.is_null() {
        return null_pointer("out");
    }
    let x0: &[f64] = if initial_state.is_null() {
        match handle.inner.default_state() {
            Some(s) => s,
            None => {
                return fail(&Error::InvalidArgument(
                    "system has no default state; pass an explicit initial state".to_string(),
                ))
            }
        }
    } else {
        std::slice::from_raw_parts(initial_state, initial_state_len)
    };
    if let Err(e) = handle.inner.space().check_state(x0) {
        return fail(&e);
    }
    let defaults = IntegratorSpec::rk4(dt, t_end);
    let spec = match method {
        NambuMethod::Rk4 => defaults,
        NambuMethod::Rk45 => IntegratorSpec::rk45(
            dt,
            t_end,
            if rel_tol > 0.0 { rel_tol } else { defaults.rel_tol },
            if abs_tol > 0.0 { abs_tol } else { defaults.abs_tol },
        ),
    };
    match integrate(&handle.inner.rhs(), x0, &spec, handle.inner.invariants()) {
        Ok(traj) => {
            *out = Box::into_raw(Box::new(trajectory_handle(traj)));
            NambuStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

fn trajectory_handle(traj: Trajectory) -> NambuTrajectory {
    let report = drift_report(&traj);
    NambuTrajectory {
        dim: traj.coord_names.len(),
        states_row_major: traj.states.iter().flatten().copied().collect(),
        invariants_row_major: traj.invariant_values.iter().flatten().copied().collect(),
        invariant_names: traj.invariant_names.iter().map(|n| c_string(n)).collect(),
        invariant_drifts: report.invariants.iter().map(|d| d.max_abs_drift).collect(),
        max_drift: report.max_drift(),
        rejected_steps: traj.rejected_steps,
        times: traj.times,
    }
}

/// Releases a trajectory handle. Passing null is a no-op.
///
/// # Safety
///
/// `trajectory` must be null or a pointer produced by `nambu_integrate` that
/// has not been freed already.
#[no_mangle]
pub unsafe extern "C" fn nambu_trajectory_free(trajectory: *mut NambuTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}

/// Number of stored samples (accepted steps plus the initial state), or 0 if
/// `trajectory` is null.
///
/// # Safety
///
/// `trajectory` must be null or a live pointer from `nambu_integrate`.
#[no_mangle]
pub unsafe extern "C" fn nambu_trajectory_len(trajectory: *const NambuTrajectory) -> usize {
    match trajectory.as_ref() {
        Some(t) => t.times.len(),
        None => 0,
    }
}

/// State dimension of the trajectory, or 0 if `trajectory` is null.
///
/// # Safety
///
/// `trajectory` must be null or a live pointer from `nambu_integrate`.
#[no_mangle]
pub unsafe extern "C" fn nambu_trajectory_dim(trajectory: *const NambuTrajectory) -> usize {
    match trajectory.as_ref() {
        Some(t) => t.dim,
        None => 0,
    }
}

/// Sample times as an array of `nambu_trajectory_len` doubles, or null if
/// `trajectory` is null. Valid for the life of the handle; do not free.
///
/// # Safety
///
/// `trajectory` must be null or a live pointer from `nambu_integrate`.
#[no_mangle]
pub unsafe extern "C" fn nambu_trajectory_times(trajectory: *const NambuTrajectory) -> *const f64 {
    match trajectory.as_ref() {
        Some(t) => t.times.as_ptr(),
        None => std::ptr::null(),
    }
}

/// States in row-major order: sample `i`, coordinate `j` is element
/// `i * dim + j` of an array of `len * dim` doubles. Null if `trajectory` is
/// null. Valid for the life of the handle; do not free.
///
/// # Safety
///
/// `trajectory` must be null or a live pointer from `nambu_integrate`.
#[no_mangle]
pub unsafe extern "C" fn nambu_trajectory_states(trajectory: *const NambuTrajectory) -> *const f64 {
    match trajectory.as_ref() {
        Some(t) => t.states_row_major.as_ptr(),
        None => std::ptr::null(),
    }
}

/// Steps the adaptive controller rejected (always 0 for RK4), or 0 if
/// `trajectory` is null.
///
/// # Safety
///
/// `trajectory` must be null or a live pointer from `nambu_integrate`.
#[no_mangle]
pub unsafe extern "C" fn nambu_trajectory_rejected_steps(
    trajectory: *const NambuTrajectory,
) -> usize {
    match trajectory.as_ref() {
        Some(t) => t.rejected_steps,
        None => 0,
    }
}

/// Number of invariants logged along the trajectory, or 0 if `trajectory` is
/// null.
///
/// # Safety
///
/// `trajectory` must be null or a live pointer from `nambu_integrate`.
#[no_mangle]
pub unsafe extern "C" fn nambu_trajectory_invariant_count(
    trajectory: *const NambuTrajectory,
) -> usize {
    match trajectory.as_ref() {
        Some(t) => t.invariant_names.len(),
        None => 0,
    }
}

/// Name of logged invariant `index`, or null when `trajectory` is null or
/// `index` is out of range. Valid for the life of the handle; do not free.
///
/// # Safety
///
/// `trajectory` must be null or a live pointer from `nambu_integrate`.
#[no_mangle]
pub unsafe extern "C" fn nambu_trajectory_invariant_name(
    trajectory: *const NambuTrajectory,
    index: usize,
) -> *const c_char {
    match trajectory.as_ref().and_then(|t| t.invariant_names.get(index)) {
        Some(name) => name.as_ptr(),
        None => std::ptr::null(),
    }
}

/// Logged invariant values in row-major order: sample `i`, invariant `k` is
/// element `i * invariant_count + k` of an array of `len * invariant_count`
/// doubles. Null if `trajectory` is null. Valid for the life of the handle;
/// do not free.
///
/// # Safety
///
/// `trajectory` must be null or a live pointer from `nambu_integrate`.
#[no_mangle]
pub unsafe extern "C" fn nambu_trajectory_invariant_values(
    trajectory: *const NambuTrajectory,
) -> *const f64 {
    match trajectory.as_ref() {
        Some(t) => t.invariants_row_major.as_ptr(),
        None => std::ptr::null(),
    }
}

/// Largest deviation of invariant `index` from its initial value over the
/// whole trajectory, or NaN when `trajectory` is null or `index` is out of
/// range.
///
/// # Safety
///
/// `trajectory` must be null or a live pointer from `nambu_integrate`.
#[no_mangle]
pub unsafe extern "C" fn nambu_trajectory_invariant_drift(
    trajectory: *const NambuTrajectory,
    index: usize,
) -> f64 {
    match trajectory
        .as_ref()
        .and_then(|t| t.invariant_drifts.get(index))
    {
        Some(&drift) => drift,
        None => f64::NAN,
    }
}

/// Largest drift across all logged invariants (0 when none were logged), or
/// NaN if `trajectory` is null.
///
/// # Safety
///
/// `trajectory` must be null or a live pointer from `nambu_integrate`.
#[no_mangle]
pub unsafe extern "C" fn nambu_trajectory_max_drift(trajectory: *const NambuTrajectory) -> f64 {
    match trajectory.as_ref() {
        Some(t) => t.max_drift,
        None => f64::NAN,
    }
}

/// Maps a point of the 4-dimensional oscillator phase space to the
/// 3-dimensional reduced space: `state` holds 4 doubles `(q1, p1, q2, p2)`,
/// `out` receives 3 doubles.
///
/// # Safety
///
/// `state` must point to 4 readable doubles and `out` to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nambu_hopf_map(state: *const f64, out: *mut f64) -> NambuStatus {
    if state.is_null() {
        return null_pointer("state");
    }
    if out.is_null() {
        return null_pointer("out");
    }
    let z: &[f64; 4] = &*state.cast();
    let y = hopf(z);
    std::ptr::copy_nonoverlapping(y.as_ptr(), out, 3);
    NambuStatus::Ok
}

/// Maps a point of the 6-dimensional Euler-angle phase space
/// `(theta, phi, psi, p_theta, p_phi, p_psi)` to the body angular momentum
/// `(L1, L2, L3)`. Fails with `NAMBU_STATUS_NUMERICAL_FAILURE` where the
/// angle chart degenerates (`sin(theta)` ~ 0).
///
/// # Safety
///
/// `state` must point to 6 readable doubles and `out` to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nambu_angular_momentum_map(
    state: *const f64,
    out: *mut f64,
) -> NambuStatus {
    if state.is_null() {
        return null_pointer("state");
    }
    if out.is_null() {
        return null_pointer("out");
    }
    let z: &[f64; 6] = &*state.cast();
    match angular_momentum(z) {
        Ok(y) => {
            std::ptr::copy_nonoverlapping(y.as_ptr(), out, 3);
            NambuStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Time derivative of the body angular momentum of a free rigid body:
/// `body_momentum` and `out` hold 3 doubles, `moments` the 3 positive
/// principal moments of inertia.
///
/// # Safety
///
/// `body_momentum` and `moments` must each point to 3 readable doubles and
/// `out` to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nambu_euler_rhs(
    body_momentum: *const f64,
    moments: *const f64,
    out: *mut f64,
) -> NambuStatus {
    if body_momentum.is_null() {
        return null_pointer("body_momentum");
    }
    if moments.is_null() {
        return null_pointer("moments");
    }
    if out.is_null() {
        return null_pointer("out");
    }
    let l: &[f64; 3] = &*body_momentum.cast();
    let i: &[f64; 3] = &*moments.cast();
    match euler_rhs(l, i) {
        Ok(dl) => {
            std::ptr::copy_nonoverlapping(dl.as_ptr(), out, 3);
            NambuStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Closed-form body angular momentum of the free symmetric top
/// (`i1 = i2 != i3`) at time `t`, from initial momentum `initial` (3
/// doubles). Writes 3 doubles to `out`.
///
/// # Safety
///
/// `initial` must point to 3 readable doubles and `out` to 3 writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn nambu_symmetric_top_analytic(
    initial: *const f64,
    i1: f64,
    i3: f64,
    t: f64,
    out: *mut f64,
) -> NambuStatus {
    if initial.is_null() {
        return null_pointer("initial");
    }
    if out.is_null() {
        return null_pointer("out");
    }
    let l0: &[f64; 3] = &*initial.cast();
    match symmetric_top_analytic(l0, i1, i3, t) {
        Ok(l) => {
            std::ptr::copy_nonoverlapping(l.as_ptr(), out, 3);
            NambuStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Precession frequency of the free symmetric top's transverse momentum,
/// `l3 * (1/i3 - 1/i1)`, for axial momentum `l3` and moments `i1 = i2`, `i3`.
#[no_mangle]
pub extern "C" fn nambu_top_precession_frequency(l3: f64, i1: f64, i3: f64) -> f64 {
    top_precession_frequency(l3, i1, i3)
}

/// Runs a verification suite of randomized structural checks.
///
/// `suite` is one of `"brackets"`, `"reductions"`, `"actionangle"`, or
/// `"all"`; `samples` is the number of random points per check and must be
/// positive; `seed` makes the run reproducible. If `report_json` is not
/// null, `*report_json` receives a heap-allocated JSON report that the
/// caller must release with `nambu_string_free`. Returns `NAMBU_STATUS_OK`
/// when every check passes and `NAMBU_STATUS_CHECK_FAILED` when the run
/// completes with failures (the report is still written).
///
/// # Safety
///
/// `suite` must be a valid NUL-terminated UTF-8 string; `report_json` must
/// be null or writable.
#[no_mangle]
pub unsafe extern "C" fn nambu_verify_run(
    suite: *const c_char,
    seed: u64,
    samples: usize,
    report_json: *mut *mut c_char,
) -> NambuStatus {
    if suite.is_null() {
        return null_pointer("suite");
    }
    let name = match CStr::from_ptr(suite).to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("suite name is not valid UTF-8");
            return NambuStatus::InvalidInput;
        }
    };
    let suite = match Suite::parse(name) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    let report = match run_suite(suite, seed, samples) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    if !report_json.is_null() {
        let json = serde_json::to_string_pretty(&report)
            .expect("report serialization cannot fail");
        *report_json = c_string(&json).into_raw();
    }
    if report.all_pass {
        NambuStatus::Ok
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        set_error(&format!(
            "{} of {} checks failed: {}",
            failed.len(),
            report.checks.len(),
            failed.join(", ")
        ));
        NambuStatus::CheckFailed
    }
}

/// Releases a string allocated by this library (for example a verification
/// report). Passing null is a no-op.
///
/// # Safety
///
/// `s` must be null or a pointer this library handed out as a caller-owned
/// string, not freed already.
#[no_mangle]
pub unsafe extern "C" fn nambu_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
