//! Jacobian-determinant N-brackets, momentum-map reductions, and
//! invariant-monitored flows.
//!
//! The crate is organized around a few small types:
//!
//! - [`PhaseSpace`] names coordinates and optionally records canonical
//!   (position, momentum) pairs.
//! - [`Expression`] is a parsed scalar expression over a space;
//!   [`ScalarField`] wraps an expression or closure together with a gradient
//!   strategy (analytic or central differences).
//! - [`nambu_bracket`] evaluates the determinant bracket of `dim` fields;
//!   [`NambuSystem`] fixes an ordered tuple of Hamiltonians and induces a
//!   [`flow_field`].
//! - [`MomentumMap`] carries phase-space points to a reduced space;
//!   `reduction` also checks the algebraic compatibility conditions such maps
//!   must satisfy.
//! - `actionangle` provides area-based charts for planar and spherical
//!   systems and the closed-form reduced flow of the free symmetric top.
//! - `dynamics` integrates flows (fixed-step RK4 or adaptive RK45) while
//!   logging invariants, and writes CSV/JSONL trajectories.
//! - `verify` runs seeded randomized structural checks and renders a report.

pub mod actionangle;
pub mod bracket;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod field;
mod linalg;
pub mod reduction;
pub mod space;
pub mod systems;
pub mod verify;

pub use bracket::{flow_field, nambu_bracket, poisson_bracket, NambuSystem};
pub use error::{Error, Result};
pub use expr::Expression;
pub use field::{GradientMode, ScalarField};
pub use reduction::{angular_momentum_map, hopf_map, MomentumMap};
pub use space::PhaseSpace;
pub use verify::{run_suite, Suite, VerifyReport};
