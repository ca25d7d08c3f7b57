//! Built-in systems with default states, parameters, and monitored
//! invariants.
//!
//! | name              | state space              | dynamics                         |
//! |-------------------|--------------------------|----------------------------------|
//! | `rigid_body`      | `L1, L2, L3`             | determinant bracket of `(C, H)`  |
//! | `symmetric_top`   | `L1, L2, L3`             | determinant bracket of `(C, H)`  |
//! | `hopf_oscillator` | `q1, p1, q2, p2`         | canonical flow of `H = r^2 / 2`  |
//! | `harmonic_2d`     | `q, p`                   | canonical flow of `H = r^2 / 2`  |
//!
//! `C = |L|^2 / 2` and `H` is the kinetic energy `sum L_k^2 / (2 I_k)`. For
//! the free rigid body the flow of `(C, H)` is exactly the Euler equations
//! `dL = L x (L/I)`; the symmetric top is the same system with `I2 = I1`,
//! which additionally conserves `L3`. The oscillator's four quadratic
//! invariants `x1, x2, x3` (the reduced coordinates) and the energy are all
//! monitored by default.

use std::collections::BTreeMap;

use crate::bracket::NambuSystem;
use crate::dynamics::Rhs;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::reduction::hopf_map;
use crate::space::PhaseSpace;

/// How a built-in system evolves.
#[derive(Debug, Clone)]
pub enum SystemKind {
    /// Determinant-bracket flow of an ordered Hamiltonian tuple.
    Nambu(NambuSystem),
    /// Canonical flow of a single Hamiltonian.
    Canonical(ScalarField),
}

/// A ready-to-integrate model: dynamics, monitored invariants, a default
/// initial state, and the resolved parameter values.
#[derive(Debug, Clone)]
pub struct BuiltinSystem {
    name: String,
    kind: SystemKind,
    invariants: Vec<ScalarField>,
    default_state: Vec<f64>,
    params: BTreeMap<String, f64>,
}

impl BuiltinSystem {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    pub fn space(&self) -> &PhaseSpace {
        match &self.kind {
            SystemKind::Nambu(s) => s.space(),
            SystemKind::Canonical(h) => h.space(),
        }
    }

    /// Borrows the dynamics as an integrable right-hand side.
    pub fn rhs(&self) -> Rhs<'_> {
        match &self.kind {
            SystemKind::Nambu(s) => Rhs::Nambu(s),
            SystemKind::Canonical(h) => Rhs::Canonical(h),
        }
    }

    pub fn invariants(&self) -> &[ScalarField] {
        &self.invariants
    }

    pub fn default_state(&self) -> &[f64] {
        &self.default_state
    }

    /// Resolved parameter values (defaults merged with overrides).
    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }
}

/// Names accepted by [`builtin_system`].
pub fn builtin_names() -> &'static [&'static str] {
    &[
        "rigid_body",
        "symmetric_top",
        "hopf_oscillator",
        "harmonic_2d",
    ]
}

/// Instantiates a built-in system, applying parameter overrides. Unknown
/// system names and unknown or invalid parameter values are
/// [`Error::Config`].
pub fn builtin_system(name: &str, overrides: &BTreeMap<String, f64>) -> Result<BuiltinSystem> {
    match name {
        "rigid_body" => {
            let params = resolve_params(name, &[("I1", 1.0), ("I2", 2.0), ("I3", 3.0)], overrides)?;
            let moments = [params["I1"], params["I2"], params["I3"]];
            check_moments(&moments)?;
            Ok(body_momentum_system(
                name,
                moments,
                vec![1.0, 1.0, 1.0],
                params,
                false,
            ))
        }
        "symmetric_top" => {
            let params = resolve_params(name, &[("I1", 2.0), ("I3", 1.0)], overrides)?;
            let moments = [params["I1"], params["I1"], params["I3"]];
            check_moments(&moments)?;
            Ok(body_momentum_system(
                name,
                moments,
                vec![1.0, 0.0, 1.0],
                params,
                true,
            ))
        }
        "hopf_oscillator" => {
            let params = resolve_params(name, &[], overrides)?;
            let map = hopf_map();
            let space = map.source().clone();
            let energy = half_norm_field(&space, "energy");
            let mut invariants: Vec<ScalarField> = map.components().to_vec();
            invariants.push(energy.clone());
            Ok(BuiltinSystem {
                name: name.to_string(),
                kind: SystemKind::Canonical(energy),
                invariants,
                default_state: vec![1.0, 0.0, 0.5, 0.2],
                params,
            })
        }
        "harmonic_2d" => {
            let params = resolve_params(name, &[], overrides)?;
            let space = PhaseSpace::canonical_interleaved(&["q", "p"]).expect("valid");
            let energy = half_norm_field(&space, "energy");
            Ok(BuiltinSystem {
                name: name.to_string(),
                kind: SystemKind::Canonical(energy.clone()),
                invariants: vec![energy],
                default_state: vec![1.0, 0.0],
                params,
            })
        }
        other => Err(Error::Config(format!(
            "unknown system `{other}`; available: {}",
            builtin_names().join(", ")
        ))),
    }
}

fn resolve_params(
    system: &str,
    defaults: &[(&str, f64)],
    overrides: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, f64>> {
    let mut out: BTreeMap<String, f64> =
        defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in overrides {
        if !out.contains_key(k) {
            let known: Vec<&str> = defaults.iter().map(|(k, _)| *k).collect();
            return Err(Error::Config(if known.is_empty() {
                format!("system `{system}` takes no parameters, got `{k}`")
            } else {
                format!(
                    "unknown parameter `{k}` for `{system}`; available: {}",
                    known.join(", ")
                )
            }));
        }
        out.insert(k.clone(), *v);
    }
    Ok(out)
}

fn check_moments(moments: &[f64; 3]) -> Result<()> {
    for (k, &m) in moments.iter().enumerate() {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Config(format!(
                "moment of inertia I{} must be positive and finite, got {m}",
                k + 1
            )));
        }
    }
    Ok(())
}

/// `|x|^2 / 2` with analytic gradient, on any space.
fn half_norm_field(space: &PhaseSpace, label: &str) -> ScalarField {
    ScalarField::from_closure(space.clone(), label, |x| {
        Ok(0.5 * x.iter().map(|v| v * v).sum::<f64>())
    })
    .with_analytic_gradient(|x, out| {
        out.copy_from_slice(x);
        Ok(())
    })
}

fn body_momentum_system(
    name: &str,
    moments: [f64; 3],
    default_state: Vec<f64>,
    params: BTreeMap<String, f64>,
    conserves_l3: bool,
) -> BuiltinSystem {
    let space = PhaseSpace::new(&["L1", "L2", "L3"]).expect("valid body space");
    let casimir = half_norm_field(&space, "casimir");
    let energy = ScalarField::from_closure(space.clone(), "energy", move |l| {
        Ok(l.iter()
            .zip(moments.iter())
            .map(|(v, i)| v * v / (2.0 * i))
            .sum())
    })
    .with_analytic_gradient(move |l, out| {
        for k in 0..3 {
            out[k] = l[k] / moments[k];
        }
        Ok(())
    });

    let mut invariants = vec![casimir.clone(), energy.clone()];
    if conserves_l3 {
        invariants.push(ScalarField::coordinate(space.clone(), 2).expect("L3 exists"));
    }
    let system = NambuSystem::new(space, vec![casimir, energy]).expect("well-formed");
    BuiltinSystem {
        name: name.to_string(),
        kind: SystemKind::Nambu(system),
        invariants,
        default_state,
        params,
    }
}
