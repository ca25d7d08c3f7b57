//! Determinant brackets and the flows they induce.
//!
//! On an `n`-dimensional space the bracket of `n` scalar fields is the
//! Jacobian determinant of the map `x -> (f_1(x), ..., f_n(x))`: the rows of
//! the matrix are the gradients, in the order the fields are given. The
//! bracket is therefore totally antisymmetric in its arguments, and any field
//! that appears twice brackets to zero.
//!
//! A [`NambuSystem`] fixes an ordered tuple of `n - 1` Hamiltonians
//! `H_1, ..., H_{n-1}`; the induced flow moves coordinate `i` at the rate
//! `{x_i, H_1, ..., H_{n-1}}`. The order is part of the system's identity:
//! swapping two Hamiltonians negates every component of the flow, so two
//! systems with the same Hamiltonian set but different order integrate
//! time-reversed trajectories. Every Hamiltonian is automatically a first
//! integral, because its gradient row is then repeated in the determinant.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg;
use crate::space::PhaseSpace;

/// A bracket value together with the largest gradient entry that fed the
/// determinant, as a rough conditioning signal: values far below
/// `conditioning^n * eps` are below the noise floor of the computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketResult {
    pub value: f64,
    pub conditioning: f64,
}

/// Canonical two-field bracket `sum_i (d_{q_i}f d_{p_i}g - d_{p_i}f d_{q_i}g)`
/// over the space's (position, momentum) pairs. The space must declare a
/// canonical pairing.
pub fn poisson_bracket(f: &ScalarField, g: &ScalarField, x: &[f64]) -> Result<f64> {
    same_space(&[f, g])?;
    let Some(pairs) = f.space().canonical_pairs() else {
        return Err(Error::InvalidArgument(format!(
            "space with coordinates {:?} declares no canonical (q, p) pairs",
            f.space().names()
        )));
    };
    let gf = f.gradient(x)?;
    let gg = g.gradient(x)?;
    let mut acc = 0.0;
    for &(q, p) in pairs {
        acc += gf[q] * gg[p] - gf[p] * gg[q];
    }
    Ok(acc)
}

/// Determinant bracket of `dim` fields on a shared space.
pub fn nambu_bracket(fields: &[&ScalarField], x: &[f64]) -> Result<f64> {
    Ok(nambu_bracket_detailed(fields, x)?.value)
}

/// Like [`nambu_bracket`], also reporting the conditioning signal.
pub fn nambu_bracket_detailed(fields: &[&ScalarField], x: &[f64]) -> Result<BracketResult> {
    same_space(fields)?;
    let space = fields[0].space();
    if fields.len() != space.dim() {
        return Err(Error::Dimension {
            expected: space.dim(),
            got: fields.len(),
        });
    }
    let mut rows = Vec::with_capacity(fields.len());
    for f in fields {
        rows.push(f.gradient(x)?);
    }
    let conditioning = linalg::max_abs(&rows);
    let value = linalg::det(rows);
    Ok(BracketResult {
        value,
        conditioning,
    })
}

fn same_space(fields: &[&ScalarField]) -> Result<()> {
    let Some(first) = fields.first() else {
        return Err(Error::InvalidArgument("bracket of zero fields".to_string()));
    };
    for f in &fields[1..] {
        if f.space() != first.space() {
            return Err(Error::InvalidArgument(format!(
                "fields live on different spaces: {:?} vs {:?}",
                first.space().names(),
                f.space().names()
            )));
        }
    }
    Ok(())
}

/// An ordered tuple of `dim - 1` Hamiltonians on a space, optionally scaled
/// by a normalization field that multiplies every flow component.
#[derive(Debug, Clone)]
pub struct NambuSystem {
    space: PhaseSpace,
    hamiltonians: Vec<ScalarField>,
    normalization: Option<ScalarField>,
}

impl NambuSystem {
    /// Builds a system from its ordered Hamiltonians. Requires `dim >= 2` and
    /// exactly `dim - 1` fields, all on `space`.
    pub fn new(space: PhaseSpace, hamiltonians: Vec<ScalarField>) -> Result<NambuSystem> {
        if space.dim() < 2 {
            return Err(Error::InvalidArgument(format!(
                "flow needs dimension >= 2, got {}",
                space.dim()
            )));
        }
        if hamiltonians.len() != space.dim() - 1 {
            return Err(Error::Dimension {
                expected: space.dim() - 1,
                got: hamiltonians.len(),
            });
        }
        for h in &hamiltonians {
            if h.space() != &space {
                return Err(Error::InvalidArgument(format!(
                    "Hamiltonian `{}` lives on a different space",
                    h.label()
                )));
            }
        }
        Ok(NambuSystem {
            space,
            hamiltonians,
            normalization: None,
        })
    }

    /// Attaches a scalar normalization multiplying the whole flow field.
    pub fn with_normalization(mut self, factor: ScalarField) -> Result<NambuSystem> {
        if factor.space() != &self.space {
            return Err(Error::InvalidArgument(format!(
                "normalization `{}` lives on a different space",
                factor.label()
            )));
        }
        self.normalization = Some(factor);
        Ok(self)
    }

    pub fn space(&self) -> &PhaseSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// The Hamiltonians in flow order.
    pub fn hamiltonians(&self) -> &[ScalarField] {
        &self.hamiltonians
    }

    pub fn normalization(&self) -> Option<&ScalarField> {
        self.normalization.as_ref()
    }
}

/// Flow velocity at `x`: component `i` is `{x_i, H_1, ..., H_{n-1}}`, scaled
/// by the normalization if present.
///
/// The coordinate field's gradient row is a basis vector, so each component
/// reduces to a signed minor of the `(n-1) x n` matrix of Hamiltonian
/// gradients; the Hamiltonian gradients are computed once and shared across
/// components.
pub fn flow_field(system: &NambuSystem, x: &[f64]) -> Result<Vec<f64>> {
    let n = system.dim();
    let mut grads = Vec::with_capacity(n - 1);
    for h in &system.hamiltonians {
        grads.push(h.gradient(x)?);
    }
    let scale = match &system.normalization {
        Some(f) => f.eval(x)?,
        None => 1.0,
    };
    let mut out = vec![0.0; n];
    for (i, slot) in out.iter_mut().enumerate() {
        // {x_i, H_1, ..., H_{n-1}} expanded along the top basis-vector row:
        // the cofactor is (-1)^i times the minor dropping column i.
        let minor: Vec<Vec<f64>> = grads
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter_map(|(j, v)| (j != i).then_some(*v))
                    .collect()
            })
            .collect();
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        *slot = sign * linalg::det(minor) * scale;
    }
    Ok(out)
}

/// Residual of the structural identity tying a bracket-derived derivation to
/// the bracket itself, on three-dimensional spaces:
///
/// ```text
/// {f1, f2, {g1, g2, g3}}  -  {{f1, f2, g1}, g2, g3}
///                         -  {g1, {f1, f2, g2}, g3}
///                         -  {g1, g2, {f1, f2, g3}}
/// ```
///
/// Inner bracket values are wrapped as scalar fields and differentiated by
/// central differences, so the residual of smooth inputs is dominated by the
/// difference scheme's truncation error rather than by the identity itself.
pub fn fundamental_identity_residual(
    f: [&ScalarField; 2],
    g: [&ScalarField; 3],
    x: &[f64],
) -> Result<f64> {
    let all: Vec<&ScalarField> = f.iter().chain(g.iter()).copied().collect();
    same_space(&all)?;
    let space = f[0].space().clone();
    if space.dim() != 3 {
        return Err(Error::Dimension {
            expected: 3,
            got: space.dim(),
        });
    }

    let bracket_field = |a: &ScalarField, b: &ScalarField, c: &ScalarField| -> ScalarField {
        let (a, b, c) = (a.clone(), b.clone(), c.clone());
        let label = format!("{{{}, {}, {}}}", a.label(), b.label(), c.label());
        ScalarField::from_closure(space.clone(), label, move |y| {
            nambu_bracket(&[&a, &b, &c], y)
        })
    };

    let inner_g = bracket_field(g[0], g[1], g[2]);
    let t1 = nambu_bracket(&[f[0], f[1], &inner_g], x)?;

    let c1 = bracket_field(f[0], f[1], g[0]);
    let c2 = bracket_field(f[0], f[1], g[1]);
    let c3 = bracket_field(f[0], f[1], g[2]);
    let t2 = nambu_bracket(&[&c1, g[1], g[2]], x)?;
    let t3 = nambu_bracket(&[g[0], &c2, g[2]], x)?;
    let t4 = nambu_bracket(&[g[0], g[1], &c3], x)?;

    Ok(t1 - t2 - t3 - t4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expression;
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;

    fn body_space() -> PhaseSpace {
        PhaseSpace::new(&["x1", "x2", "x3"]).unwrap()
    }

    fn field(space: &PhaseSpace, src: &str) -> ScalarField {
        let e = Expression::parse(src, space, &BTreeMap::new()).unwrap();
        ScalarField::from_expression(e)
    }

    fn euler_space() -> PhaseSpace {
        PhaseSpace::canonical_split(&["theta", "phi", "psi", "P_theta", "P_phi", "P_psi"]).unwrap()
    }

    #[test]
    fn canonical_pair_brackets() {
        let s = PhaseSpace::canonical_interleaved(&["q", "p"]).unwrap();
        let q = ScalarField::coordinate(s.clone(), 0).unwrap();
        let p = ScalarField::coordinate(s.clone(), 1).unwrap();
        assert_relative_eq!(poisson_bracket(&q, &p, &[0.3, -0.7]).unwrap(), 1.0);
        assert_relative_eq!(poisson_bracket(&p, &q, &[0.3, -0.7]).unwrap(), -1.0);
        assert_eq!(poisson_bracket(&q, &q, &[0.3, -0.7]).unwrap(), 0.0);
    }

    #[test]
    fn poisson_requires_canonical_structure() {
        let s = body_space();
        let f = field(&s, "x1");
        let g = field(&s, "x2");
        assert!(matches!(
            poisson_bracket(&f, &g, &[0.0; 3]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn body_momentum_bracket_closes_with_minus_sign() {
        // On T*SO(3) in Euler angles the body-frame momentum components
        // close as {L1, L2} = -L3 (and cyclic).
        let s = euler_space();
        let l1 = field(
            &s,
            "P_theta*cos(psi) + (P_phi - P_psi*cos(theta))/sin(theta)*sin(psi)",
        );
        let l2 = field(
            &s,
            "-P_theta*sin(psi) + (P_phi - P_psi*cos(theta))/sin(theta)*cos(psi)",
        );
        let z = [std::f64::consts::FRAC_PI_3, 0.2, 0.7, 0.4, 1.1, -0.3];
        // L3 = P_psi = -0.3 here, so the bracket value is +0.3.
        let v = poisson_bracket(&l1, &l2, &z).unwrap();
        assert_relative_eq!(v, 0.3, epsilon = 1e-8);
    }

    #[test]
    fn determinant_bracket_oracle() {
        let s = body_space();
        let l1 = field(&s, "x1");
        let sphere = field(&s, "(x1^2 + x2^2 + x3^2)/2");
        let kinetic = field(&s, "x1^2/2 + x2^2/4 + x3^2/6");
        let v = nambu_bracket(&[&l1, &sphere, &kinetic], &[1.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(v, -1.0 / 6.0, epsilon = 1e-9);
    }

    #[test]
    fn bracket_is_antisymmetric_and_kills_repeats() {
        let s = body_space();
        let f = field(&s, "x1*x2 + x3^2");
        let g = field(&s, "sin(x1) + x2");
        let h = field(&s, "x3*x1 - 2*x2");
        let x = [0.4, -1.2, 0.9];
        let fgh = nambu_bracket(&[&f, &g, &h], &x).unwrap();
        let gfh = nambu_bracket(&[&g, &f, &h], &x).unwrap();
        assert_relative_eq!(fgh, -gfh, epsilon = 1e-12);
        let ffh = nambu_bracket(&[&f, &f, &h], &x).unwrap();
        assert_eq!(ffh, 0.0); // identical gradient rows: exactly singular
    }

    #[test]
    fn detailed_bracket_reports_conditioning() {
        let s = body_space();
        let f = field(&s, "10*x1");
        let g = field(&s, "x2");
        let h = field(&s, "x3");
        let r = nambu_bracket_detailed(&[&f, &g, &h], &[1.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(r.value, 10.0, epsilon = 1e-9);
        assert_relative_eq!(r.conditioning, 10.0, epsilon = 1e-9);
    }

    #[test]
    fn wrong_field_count_is_a_dimension_error() {
        let s = body_space();
        let f = field(&s, "x1");
        let g = field(&s, "x2");
        assert!(matches!(
            nambu_bracket(&[&f, &g], &[0.0; 3]),
            Err(Error::Dimension {
                expected: 3,
                got: 2
            })
        ));
    }

    fn rigid_body_system() -> NambuSystem {
        let s = body_space();
        let sphere = field(&s, "(x1^2 + x2^2 + x3^2)/2");
        let kinetic = field(&s, "x1^2/2 + x2^2/4 + x3^2/6");
        NambuSystem::new(s, vec![sphere, kinetic]).unwrap()
    }

    #[test]
    fn flow_matches_componentwise_brackets() {
        let sys = rigid_body_system();
        let s = sys.space().clone();
        let x = [0.7, -0.3, 1.4];
        let v = flow_field(&sys, &x).unwrap();
        for (i, vi) in v.iter().enumerate() {
            let xi = ScalarField::coordinate(s.clone(), i).unwrap();
            let refs: Vec<&ScalarField> = std::iter::once(&xi)
                .chain(sys.hamiltonians().iter())
                .collect();
            let direct = nambu_bracket(&refs, &x).unwrap();
            assert_relative_eq!(*vi, direct, epsilon = 1e-10);
        }
    }

    #[test]
    fn rigid_body_flow_oracle() {
        let sys = rigid_body_system();
        let v = flow_field(&sys, &[1.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(v[0], -1.0 / 6.0, epsilon = 1e-9);
        assert_relative_eq!(v[1], 2.0 / 3.0, epsilon = 1e-9);
        assert_relative_eq!(v[2], -1.0 / 2.0, epsilon = 1e-9);
    }

    #[test]
    fn hamiltonian_order_flips_the_flow() {
        let sys = rigid_body_system();
        let swapped = NambuSystem::new(
            sys.space().clone(),
            vec![sys.hamiltonians()[1].clone(), sys.hamiltonians()[0].clone()],
        )
        .unwrap();
        let x = [1.0, 1.0, 1.0];
        let v = flow_field(&sys, &x).unwrap();
        let w = flow_field(&swapped, &x).unwrap();
        for i in 0..3 {
            assert_relative_eq!(v[i], -w[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn normalization_scales_the_flow() {
        let sys = rigid_body_system();
        let s = sys.space().clone();
        let scaled = rigid_body_system()
            .with_normalization(field(&s, "2 + x1^2"))
            .unwrap();
        let x = [0.5, 1.0, -0.25];
        let v = flow_field(&sys, &x).unwrap();
        let w = flow_field(&scaled, &x).unwrap();
        let c = 2.0 + 0.25;
        for i in 0..3 {
            assert_relative_eq!(w[i], c * v[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn system_validation() {
        let s = body_space();
        let f = field(&s, "x1");
        assert!(matches!(
            NambuSystem::new(s.clone(), vec![f.clone()]),
            Err(Error::Dimension {
                expected: 2,
                got: 1
            })
        ));
        let one = PhaseSpace::new(&["x"]).unwrap();
        assert!(NambuSystem::new(one, vec![]).is_err());
        let other = PhaseSpace::new(&["a", "b", "c"]).unwrap();
        let g = field(&other, "a");
        assert!(NambuSystem::new(s, vec![f, g]).is_err());
    }

    #[test]
    fn fundamental_identity_on_quadratics() {
        let s = body_space();
        let f1 = field(&s, "x1^2 - 0.5*x2*x3");
        let f2 = field(&s, "x2^2 + x1*x3");
        let g1 = field(&s, "x3^2 - x1*x2");
        let g2 = field(&s, "0.25*x1^2 + x2^2");
        let g3 = field(&s, "x1*x2 + x2*x3 + x3*x1");
        let r =
            fundamental_identity_residual([&f1, &f2], [&g1, &g2, &g3], &[0.6, -0.4, 0.8]).unwrap();
        assert!(r.abs() < 1e-6, "residual {r}");
    }

    #[test]
    fn fundamental_identity_needs_dimension_three() {
        let s = PhaseSpace::new(&["a", "b"]).unwrap();
        let f = field(&s, "a");
        let g = field(&s, "b");
        assert!(matches!(
            fundamental_identity_residual([&f, &f], [&g, &g, &g], &[0.0, 0.0]),
            Err(Error::Dimension { expected: 3, .. })
        ));
    }
}
