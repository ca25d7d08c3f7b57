//! Flow integration with invariant monitoring, plus closed-form references
//! for the rigid body and the free symmetric top.
//!
//! Two steppers are provided: classic fixed-step fourth-order Runge-Kutta,
//! and the adaptive Dormand-Prince 5(4) pair with the standard PI step-size
//! controller. Both log a configurable list of invariant fields at every
//! accepted step, so conservation drift can be inspected after the fact with
//! [`drift_report`].

use std::io::{BufRead, Write};

use crate::bracket::{flow_field, NambuSystem};
use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Body-frame angular momentum rate `L x (L / I)` for principal moments `I`
/// (componentwise division). Moments must be positive.
pub fn euler_rhs(l: &[f64; 3], moments: &[f64; 3]) -> Result<[f64; 3]> {
    for (k, &i) in moments.iter().enumerate() {
        if !(i > 0.0 && i.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "moment of inertia {} must be positive and finite, got {i}",
                k + 1
            )));
        }
    }
    let w = [l[0] / moments[0], l[1] / moments[1], l[2] / moments[2]];
    Ok([
        l[1] * w[2] - l[2] * w[1],
        l[2] * w[0] - l[0] * w[2],
        l[0] * w[1] - l[1] * w[0],
    ])
}

/// Azimuthal rate of the body-frame momentum of a free symmetric top:
/// `omega = L3 (1/I3 - 1/I1)`.
pub fn top_precession_frequency(l3: f64, i1: f64, i3: f64) -> f64 {
    l3 * (1.0 / i3 - 1.0 / i1)
}

/// Closed-form body-frame momentum of the free symmetric top with moments
/// `(I1, I1, I3)`: `L3` is constant and the transverse part rotates clockwise
/// at [`top_precession_frequency`],
///
/// ```text
/// L1(t) =  cos(w t) L1(0) + sin(w t) L2(0)
/// L2(t) = -sin(w t) L1(0) + cos(w t) L2(0)
/// ```
pub fn symmetric_top_analytic(l0: &[f64; 3], i1: f64, i3: f64, t: f64) -> Result<[f64; 3]> {
    if !(i1 > 0.0 && i1.is_finite()) || !(i3 > 0.0 && i3.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "moments of inertia must be positive and finite, got ({i1}, {i3})"
        )));
    }
    let w = top_precession_frequency(l0[2], i1, i3);
    let (s, c) = (w * t).sin_cos();
    Ok([c * l0[0] + s * l0[1], -s * l0[0] + c * l0[1], l0[2]])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Classic fixed-step fourth-order Runge-Kutta.
    Rk4,
    /// Adaptive Dormand-Prince 5(4) with PI step-size control; `dt` is the
    /// initial step.
    Rk45,
}

/// Integration parameters. `rel_tol`/`abs_tol` only steer [`Method::Rk45`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSpec {
    pub method: Method,
    pub dt: f64,
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl IntegratorSpec {
    pub fn rk4(dt: f64, t_end: f64) -> IntegratorSpec {
        IntegratorSpec {
            method: Method::Rk4,
            dt,
            t_end,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
        }
    }

    pub fn rk45(dt: f64, t_end: f64, rel_tol: f64, abs_tol: f64) -> IntegratorSpec {
        IntegratorSpec {
            method: Method::Rk45,
            dt,
            t_end,
            rel_tol,
            abs_tol,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "dt must be positive and finite, got {}",
                self.dt
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "t_end must be positive and finite, got {}",
                self.t_end
            )));
        }
        if self.rel_tol.is_nan()
            || self.rel_tol <= 0.0
            || self.abs_tol.is_nan()
            || self.abs_tol <= 0.0
        {
            return Err(Error::InvalidArgument(format!(
                "tolerances must be positive, got rel {} abs {}",
                self.rel_tol, self.abs_tol
            )));
        }
        Ok(())
    }
}

/// An in-place vector-field evaluation: writes dx/dt for `x` into the
/// output slice.
pub type RawRhsFn = dyn Fn(&[f64], &mut [f64]) -> Result<()> + Sync;

/// The right-hand side of an autonomous first-order system.
pub enum Rhs<'a> {
    /// Determinant-bracket flow of a [`NambuSystem`].
    Nambu(&'a NambuSystem),
    /// Canonical flow of a Hamiltonian on a space with (q, p) pairs:
    /// `dq = dH/dp`, `dp = -dH/dq`.
    Canonical(&'a ScalarField),
    /// An arbitrary vector field.
    Raw {
        dim: usize,
        names: Vec<String>,
        f: &'a RawRhsFn,
    },
}

impl<'a> Rhs<'a> {
    pub fn dim(&self) -> usize {
        match self {
            Rhs::Nambu(s) => s.dim(),
            Rhs::Canonical(h) => h.space().dim(),
            Rhs::Raw { dim, .. } => *dim,
        }
    }

    fn coord_names(&self) -> Vec<String> {
        match self {
            Rhs::Nambu(s) => s.space().names().to_vec(),
            Rhs::Canonical(h) => h.space().names().to_vec(),
            Rhs::Raw { names, .. } => names.clone(),
        }
    }

    /// Evaluates the vector field at `x` into `out` (length [`Rhs::dim`]).
    pub fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            Rhs::Nambu(sys) => {
                let v = flow_field(sys, x)?;
                out.copy_from_slice(&v);
                Ok(())
            }
            Rhs::Canonical(h) => {
                let Some(pairs) = h.space().canonical_pairs() else {
                    return Err(Error::InvalidArgument(format!(
                        "canonical flow of `{}` needs (q, p) pairs on the space",
                        h.label()
                    )));
                };
                let g = h.gradient(x)?;
                for &(q, p) in pairs {
                    out[q] = g[p];
                    out[p] = -g[q];
                }
                Ok(())
            }
            Rhs::Raw { f, .. } => f(x, out),
        }
    }
}

/// An integrated trajectory: times, states, and the logged invariant values
/// (one row per accepted step, aligned with `times`).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub coord_names: Vec<String>,
    pub invariant_names: Vec<String>,
    /// `invariant_values[step][k]` is invariant `k` at `times[step]`.
    pub invariant_values: Vec<Vec<f64>>,
    /// Steps the adaptive controller rejected (always zero for RK4).
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("non-empty trajectory")
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("non-empty trajectory")
    }
}

/// Per-invariant drift over a trajectory, relative to the initial value.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantDrift {
    pub name: String,
    pub initial: f64,
    pub max_abs_drift: f64,
    pub final_abs_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub invariants: Vec<InvariantDrift>,
}

impl DriftReport {
    /// Largest drift across all invariants (zero if none were logged).
    pub fn max_drift(&self) -> f64 {
        self.invariants
            .iter()
            .fold(0.0f64, |acc, d| acc.max(d.max_abs_drift))
    }
}

/// Summarizes invariant drift over an integrated trajectory.
pub fn drift_report(traj: &Trajectory) -> DriftReport {
    let mut out = Vec::with_capacity(traj.invariant_names.len());
    for (k, name) in traj.invariant_names.iter().enumerate() {
        let initial = traj.invariant_values[0][k];
        let mut max_abs = 0.0f64;
        for row in &traj.invariant_values {
            max_abs = max_abs.max((row[k] - initial).abs());
        }
        let final_abs = (traj.invariant_values.last().expect("non-empty")[k] - initial).abs();
        out.push(InvariantDrift {
            name: name.clone(),
            initial,
            max_abs_drift: max_abs,
            final_abs_drift: final_abs,
        });
    }
    DriftReport { invariants: out }
}

/// Integrates `rhs` from `x0` to `spec.t_end`, logging each invariant field
/// at every accepted step (including `t = 0`). A right-hand side or
/// invariant failure mid-run surfaces as [`Error::Integration`] carrying the
/// last good time.
pub fn integrate(
    rhs: &Rhs,
    x0: &[f64],
    spec: &IntegratorSpec,
    invariants: &[ScalarField],
) -> Result<Trajectory> {
    spec.validate()?;
    let dim = rhs.dim();
    if x0.len() != dim {
        return Err(Error::Dimension {
            expected: dim,
            got: x0.len(),
        });
    }
    for inv in invariants {
        if inv.space().dim() != dim {
            return Err(Error::InvalidArgument(format!(
                "invariant `{}` has dimension {}, flow has {}",
                inv.label(),
                inv.space().dim(),
                dim
            )));
        }
    }

    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![x0.to_vec()],
        coord_names: rhs.coord_names(),
        invariant_names: invariants.iter().map(|f| f.label()).collect(),
        invariant_values: Vec::new(),
        rejected_steps: 0,
    };
    log_invariants(invariants, x0, 0.0, &mut traj.invariant_values)?;

    match spec.method {
        Method::Rk4 => run_rk4(rhs, spec, invariants, &mut traj)?,
        Method::Rk45 => run_dopri5(rhs, spec, invariants, &mut traj)?,
    }
    Ok(traj)
}

fn log_invariants(
    invariants: &[ScalarField],
    x: &[f64],
    t: f64,
    rows: &mut Vec<Vec<f64>>,
) -> Result<()> {
    let mut row = Vec::with_capacity(invariants.len());
    for inv in invariants {
        let v = inv.eval(x).map_err(|e| Error::Integration {
            message: format!("invariant `{}` failed: {e}", inv.label()),
            t,
        })?;
        row.push(v);
    }
    rows.push(row);
    Ok(())
}

fn eval_rhs_at(rhs: &Rhs, x: &[f64], out: &mut [f64], t_last_good: f64) -> Result<()> {
    rhs.eval(x, out).map_err(|e| Error::Integration {
        message: format!("right-hand side failed: {e}"),
        t: t_last_good,
    })
}

fn run_rk4(
    rhs: &Rhs,
    spec: &IntegratorSpec,
    invariants: &[ScalarField],
    traj: &mut Trajectory,
) -> Result<()> {
    let dim = rhs.dim();
    let ratio = spec.t_end / spec.dt;
    // Snap to a whole number of steps when t_end is an exact multiple of dt
    // up to rounding; otherwise take a shortened final step.
    let rounded = ratio.round();
    let (full_steps, last_dt) =
        if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) && rounded >= 1.0 {
            (rounded as usize, None)
        } else {
            let n = ratio.floor() as usize;
            (n, Some(spec.t_end - n as f64 * spec.dt))
        };

    let mut x = traj.states[0].clone();
    let (mut k1, mut k2, mut k3, mut k4) = (
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
    );
    let mut scratch = vec![0.0; dim];

    let total = full_steps + usize::from(last_dt.is_some());
    for step in 0..total {
        let t = step as f64 * spec.dt;
        let h = match (step == full_steps, last_dt) {
            (true, Some(hl)) => hl,
            _ => spec.dt,
        };
        eval_rhs_at(rhs, &x, &mut k1, t)?;
        for i in 0..dim {
            scratch[i] = x[i] + 0.5 * h * k1[i];
        }
        eval_rhs_at(rhs, &scratch, &mut k2, t)?;
        for i in 0..dim {
            scratch[i] = x[i] + 0.5 * h * k2[i];
        }
        eval_rhs_at(rhs, &scratch, &mut k3, t)?;
        for i in 0..dim {
            scratch[i] = x[i] + h * k3[i];
        }
        eval_rhs_at(rhs, &scratch, &mut k4, t)?;
        for i in 0..dim {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t_next = if step + 1 == total {
            spec.t_end
        } else {
            (step + 1) as f64 * spec.dt
        };
        traj.times.push(t_next);
        traj.states.push(x.clone());
        log_invariants(invariants, &x, t_next, &mut traj.invariant_values)?;
    }
    Ok(())
}

// Dormand-Prince 5(4) coefficients. The stage-time nodes are omitted: the
// vector fields here are autonomous, so stages never see the clock.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
// Fifth-order solution weights (also the last stage row: first-same-as-last).
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the fifth- and embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn run_dopri5(
    rhs: &Rhs,
    spec: &IntegratorSpec,
    invariants: &[ScalarField],
    traj: &mut Trajectory,
) -> Result<()> {
    let dim = rhs.dim();
    let mut x = traj.states[0].clone();
    let mut t = 0.0f64;
    let mut h = spec.dt.min(spec.t_end);

    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; dim]).collect();
    let mut y = vec![0.0; dim];
    let mut y5 = vec![0.0; dim];

    // PI controller state (Hairer's dopri5 defaults).
    const SAFE: f64 = 0.9;
    const BETA: f64 = 0.04;
    const EXPO1: f64 = 0.2 - 0.75 * BETA;
    let mut facold = 1e-4f64;
    let mut rejected_last = false;

    eval_rhs_at(rhs, &x, &mut k[0], t)?;

    while t < spec.t_end {
        h = h.min(spec.t_end - t);
        if h < 1e-12 * t.abs().max(1.0) {
            return Err(Error::Integration {
                message: format!("step size underflow (h = {h:.3e})"),
                t,
            });
        }

        macro_rules! stage {
            ($idx:expr, $($coeff:expr => $kj:expr),+) => {{
                for i in 0..dim {
                    y[i] = x[i] $(+ h * $coeff * k[$kj][i])+;
                }
                let (head, tail) = k.split_at_mut($idx);
                let _ = &head;
                eval_rhs_at(rhs, &y, &mut tail[0], t)?;
            }};
        }
        stage!(1, A21 => 0);
        stage!(2, A31 => 0, A32 => 1);
        stage!(3, A41 => 0, A42 => 1, A43 => 2);
        stage!(4, A51 => 0, A52 => 1, A53 => 2, A54 => 3);
        stage!(5, A61 => 0, A62 => 1, A63 => 2, A64 => 3, A65 => 4);
        for i in 0..dim {
            y5[i] = x[i]
                + h * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
        }
        {
            let (head, tail) = k.split_at_mut(6);
            let _ = &head;
            eval_rhs_at(rhs, &y5, &mut tail[0], t)?;
        }

        // RMS of the componentwise error over the mixed tolerance scale.
        let mut err2 = 0.0;
        for i in 0..dim {
            let e = h
                * (E1 * k[0][i]
                    + E3 * k[2][i]
                    + E4 * k[3][i]
                    + E5 * k[4][i]
                    + E6 * k[5][i]
                    + E7 * k[6][i]);
            let sc = spec.abs_tol + spec.rel_tol * x[i].abs().max(y5[i].abs());
            err2 += (e / sc) * (e / sc);
        }
        let err = (err2 / dim as f64).sqrt();

        let fac11 = err.powf(EXPO1);
        if err <= 1.0 {
            // Accept.
            t += h;
            if spec.t_end - t < 1e-12 * spec.t_end.abs().max(1.0) {
                t = spec.t_end;
            }
            x.copy_from_slice(&y5);
            k.swap(0, 6); // first-same-as-last
            traj.times.push(t);
            traj.states.push(x.clone());
            log_invariants(invariants, &x, t, &mut traj.invariant_values)?;

            let mut fac = fac11 / facold.powf(BETA);
            fac = (fac / SAFE).clamp(0.1, 5.0);
            facold = err.max(1e-4);
            let mut hnew = h / fac;
            if rejected_last {
                hnew = hnew.min(h);
            }
            rejected_last = false;
            h = hnew;
        } else {
            traj.rejected_steps += 1;
            rejected_last = true;
            h /= (fac11 / SAFE).min(5.0);
        }
    }
    Ok(())
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `t,<coordinates>,<invariants>` rows with 17 significant digits, so
/// values round-trip exactly through the text form.
pub fn write_csv<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    let mut header = String::from("t");
    for n in traj.coord_names.iter().chain(traj.invariant_names.iter()) {
        header.push(',');
        header.push_str(n);
    }
    writeln!(w, "{header}")?;
    for (step, t) in traj.times.iter().enumerate() {
        let mut line = fmt_float(*t);
        for v in &traj.states[step] {
            line.push(',');
            line.push_str(&fmt_float(*v));
        }
        for v in &traj.invariant_values[step] {
            line.push(',');
            line.push_str(&fmt_float(*v));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Writes one JSON object per accepted step:
/// `{"t": ..., "state": [...], "invariants": {...}}`, numbers with 17
/// significant digits.
pub fn write_jsonl<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    for (step, t) in traj.times.iter().enumerate() {
        let mut line = format!("{{\"t\":{}", fmt_float(*t));
        line.push_str(",\"state\":[");
        for (i, v) in traj.states[step].iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&fmt_float(*v));
        }
        line.push_str("],\"invariants\":{");
        for (i, (name, v)) in traj
            .invariant_names
            .iter()
            .zip(traj.invariant_values[step].iter())
            .enumerate()
        {
            if i > 0 {
                line.push(',');
            }
            // serde_json handles any escaping the name needs.
            line.push_str(&serde_json::to_string(name).expect("string serializes"));
            line.push(':');
            line.push_str(&fmt_float(*v));
        }
        line.push_str("}}");
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// A `(time, state)` row of a trajectory table.
pub type TimedState = (f64, Vec<f64>);

/// Reads a CSV produced by [`write_csv`] (or shaped like it): a header
/// starting with `t`, then numeric rows. Returns the non-time column names
/// and the rows as `(t, values)`.
pub fn read_states_csv<R: BufRead>(r: R) -> Result<(Vec<String>, Vec<TimedState>)> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        message: "empty CSV input".to_string(),
        position: 0,
    })??;
    let mut cols = header.split(',');
    if cols.next().map(str::trim) != Some("t") {
        return Err(Error::Parse {
            message: "CSV header must start with `t`".to_string(),
            position: 0,
        });
    }
    let names: Vec<String> = cols.map(|c| c.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut values = Vec::with_capacity(names.len() + 1);
        for cell in line.split(',') {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                message: format!(
                    "invalid number `{}` on data line {}",
                    cell.trim(),
                    lineno + 1
                ),
                position: 0,
            })?;
            values.push(v);
        }
        if values.len() != names.len() + 1 {
            return Err(Error::Parse {
                message: format!(
                    "data line {} has {} fields, header has {}",
                    lineno + 1,
                    values.len(),
                    names.len() + 1
                ),
                position: 0,
            });
        }
        let t = values.remove(0);
        rows.push((t, values));
    }
    Ok((names, rows))
}
