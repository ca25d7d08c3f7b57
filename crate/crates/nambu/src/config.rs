//! JSON run configuration: a system to integrate, an integrator, and
//! monitoring options.
//!
//! ```json
//! {
//!   "system": {"builtin": {"name": "rigid_body", "parameters": {"I1": 1.0}}},
//!   "integrator": {"method": "rk4", "dt": 1e-3, "t_end": 50.0},
//!   "initial_state": [1.0, 1.0, 1.0],
//!   "drift_tolerance": 1e-8
//! }
//! ```
//!
//! Custom systems name their coordinates and give Hamiltonians (and optional
//! extra monitored invariants) as expression strings; `parameters` are bound
//! as literals when the expressions are parsed:
//!
//! ```json
//! {"system": {"custom": {
//!   "coordinates": ["L1", "L2", "L3"],
//!   "kind": "nambu",
//!   "hamiltonians": ["(L1^2 + L2^2 + L3^2)/2",
//!                    "L1^2/(2*a) + L2^2/(2*b) + L3^2/(2*c)"],
//!   "parameters": {"a": 1.0, "b": 2.0, "c": 3.0}
//! }}, ...}
//! ```
//!
//! Unknown keys anywhere are rejected rather than ignored.

use serde::Deserialize;
use std::collections::BTreeMap;

use crate::bracket::NambuSystem;
use crate::dynamics::{IntegratorSpec, Method, Rhs};
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::field::ScalarField;
use crate::space::PhaseSpace;
use crate::systems::{builtin_system, SystemKind};

fn default_drift_tolerance() -> f64 {
    1e-6
}

/// Top-level run configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub integrator: IntegratorConfig,
    /// Falls back to the built-in system's default state when omitted.
    #[serde(default)]
    pub initial_state: Option<Vec<f64>>,
    /// Default output path for trajectory writers; a CLI flag overrides it.
    #[serde(default)]
    pub output: Option<String>,
    /// Largest tolerated absolute drift of any monitored invariant.
    #[serde(default = "default_drift_tolerance")]
    pub drift_tolerance: f64,
}

/// Either a named built-in model or a fully spelled-out custom one.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    Builtin {
        name: String,
        #[serde(default)]
        parameters: BTreeMap<String, f64>,
    },
    Custom(CustomSystem),
}

/// How a custom system's state evolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicsKind {
    /// Determinant-bracket flow; needs `dim - 1` Hamiltonians.
    Nambu,
    /// Canonical flow of a single Hamiltonian; needs a `canonical_layout`.
    Canonical,
}

/// How coordinates pair up into (position, momentum) couples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CanonicalLayout {
    /// `q1, p1, q2, p2, ...`
    Interleaved,
    /// `q1, ..., qn, p1, ..., pn`
    Split,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSystem {
    pub coordinates: Vec<String>,
    pub kind: DynamicsKind,
    #[serde(default)]
    pub canonical_layout: Option<CanonicalLayout>,
    /// Expression strings over the coordinates and `parameters`.
    pub hamiltonians: Vec<String>,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    /// Expression scaling a Nambu flow pointwise.
    #[serde(default)]
    pub normalization: Option<String>,
    /// Extra expressions logged along trajectories. The Hamiltonians are
    /// always monitored and need not be repeated here.
    #[serde(default)]
    pub invariants: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodConfig {
    Rk4,
    Rk45,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: MethodConfig,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub rel_tol: Option<f64>,
    #[serde(default)]
    pub abs_tol: Option<f64>,
}

impl IntegratorConfig {
    pub fn to_spec(&self) -> Result<IntegratorSpec> {
        let spec = match self.method {
            MethodConfig::Rk4 => {
                if self.rel_tol.is_some() || self.abs_tol.is_some() {
                    return Err(Error::Config(
                        "rk4 is fixed-step and takes no tolerances; use rk45".to_string(),
                    ));
                }
                IntegratorSpec::rk4(self.dt, self.t_end)
            }
            MethodConfig::Rk45 => {
                let base = IntegratorSpec::rk4(self.dt, self.t_end);
                IntegratorSpec::rk45(
                    self.dt,
                    self.t_end,
                    self.rel_tol.unwrap_or(base.rel_tol),
                    self.abs_tol.unwrap_or(base.abs_tol),
                )
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// A system built from a [`SystemConfig`], ready to integrate.
#[derive(Debug, Clone)]
pub struct ConfiguredSystem {
    kind: SystemKind,
    invariants: Vec<ScalarField>,
    default_state: Option<Vec<f64>>,
}

impl ConfiguredSystem {
    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    pub fn space(&self) -> &PhaseSpace {
        match &self.kind {
            SystemKind::Nambu(s) => s.space(),
            SystemKind::Canonical(h) => h.space(),
        }
    }

    pub fn rhs(&self) -> Rhs<'_> {
        match &self.kind {
            SystemKind::Nambu(s) => Rhs::Nambu(s),
            SystemKind::Canonical(h) => Rhs::Canonical(h),
        }
    }

    pub fn invariants(&self) -> &[ScalarField] {
        &self.invariants
    }

    pub fn default_state(&self) -> Option<&[f64]> {
        self.default_state.as_deref()
    }
}

impl SystemConfig {
    pub fn build(&self) -> Result<ConfiguredSystem> {
        match self {
            SystemConfig::Builtin { name, parameters } => {
                let sys = builtin_system(name, parameters)?;
                Ok(ConfiguredSystem {
                    kind: sys.kind().clone(),
                    invariants: sys.invariants().to_vec(),
                    default_state: Some(sys.default_state().to_vec()),
                })
            }
            SystemConfig::Custom(custom) => build_custom(custom),
        }
    }
}

fn build_custom(custom: &CustomSystem) -> Result<ConfiguredSystem> {
    let space = match custom.canonical_layout {
        Some(CanonicalLayout::Interleaved) => {
            PhaseSpace::canonical_interleaved(&custom.coordinates)?
        }
        Some(CanonicalLayout::Split) => PhaseSpace::canonical_split(&custom.coordinates)?,
        None => PhaseSpace::new(&custom.coordinates)?,
    };
    let parse_field = |src: &str| -> Result<ScalarField> {
        Ok(ScalarField::from_expression(Expression::parse(
            src,
            &space,
            &custom.parameters,
        )?))
    };
    let hamiltonians: Result<Vec<ScalarField>> =
        custom.hamiltonians.iter().map(|h| parse_field(h)).collect();
    let hamiltonians = hamiltonians?;

    let kind = match custom.kind {
        DynamicsKind::Nambu => {
            let mut system = NambuSystem::new(space.clone(), hamiltonians.clone())?;
            if let Some(scale) = &custom.normalization {
                system = system.with_normalization(parse_field(scale)?)?;
            }
            SystemKind::Nambu(system)
        }
        DynamicsKind::Canonical => {
            if custom.normalization.is_some() {
                return Err(Error::Config(
                    "normalization applies only to nambu dynamics".to_string(),
                ));
            }
            if !space.is_canonical() {
                return Err(Error::Config(
                    "canonical dynamics needs a canonical_layout".to_string(),
                ));
            }
            if hamiltonians.len() != 1 {
                return Err(Error::Config(format!(
                    "canonical dynamics takes exactly one Hamiltonian, got {}",
                    hamiltonians.len()
                )));
            }
            SystemKind::Canonical(hamiltonians[0].clone())
        }
    };

    let mut invariants = hamiltonians;
    for src in &custom.invariants {
        invariants.push(parse_field(src)?);
    }
    Ok(ConfiguredSystem {
        kind,
        invariants,
        default_state: None,
    })
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let config: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("invalid run configuration: {e}")))?;
        if config.drift_tolerance.is_nan() || config.drift_tolerance <= 0.0 {
            return Err(Error::Config(format!(
                "drift_tolerance must be positive, got {}",
                config.drift_tolerance
            )));
        }
        Ok(config)
    }

    pub fn from_path(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        RunConfig::from_json(&text)
    }

    /// The state to start from: explicit `initial_state`, else the built-in
    /// default.
    pub fn resolve_initial_state(&self, system: &ConfiguredSystem) -> Result<Vec<f64>> {
        if let Some(state) = &self.initial_state {
            system.space().check_state(state)?;
            return Ok(state.clone());
        }
        system.default_state().map(<[f64]>::to_vec).ok_or_else(|| {
            Error::Config("custom systems need an explicit initial_state".to_string())
        })
    }

    pub fn method(&self) -> Method {
        match self.integrator.method {
            MethodConfig::Rk4 => Method::Rk4,
            MethodConfig::Rk45 => Method::Rk45,
        }
    }
}
