//! Area-based action-angle charts and the reduced free symmetric top.
//!
//! Planar chart: on a canonical plane `(q, p)` the action is the enclosed
//! area over `2 pi`, which for circles centered at the origin is
//! `(q^2 + p^2) / 2`; the angle is the polar angle of `(q, p)`.
//!
//! Spherical chart: a point `x` in a three-dimensional target space is
//! charted by `(J, mu, phi)` with `3J = |x|^3`, `mu = -x3 / |x|`, and `phi`
//! the azimuth of `(x1, x2)`. The chart is volume preserving: the Jacobian
//! determinant of `x -> (J, mu, phi)` is exactly `+1` away from the polar
//! axis, so `dJ ^ dmu ^ dphi` is the Euclidean volume form. On the axis
//! (`x1 = x2 = 0`) the azimuth degenerates.
//!
//! The free symmetric top becomes one-dimensional in this chart: with
//! moments `(I1, I1, I3)` the reduced Hamiltonian pair is
//!
//! ```text
//! K1 = (3J)^(2/3) / 2 * (1/I1 - mu^2 (1/I1 - 1/I3))   (kinetic energy)
//! K2 = (3J)^(2/3) / 2                                  (squared radius / 2)
//! ```
//!
//! and the induced flow fixes `J` and `mu` while `phi` advances at the
//! constant rate `omega = L mu (1/I1 - 1/I3)` with `L = (3J)^(1/3)`. The
//! closed form and the determinant-bracket flow of `(K1, K2)` are two
//! independent routes to the same field; the verify suite compares them.

use crate::bracket::NambuSystem;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::space::PhaseSpace;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Planar action-angle pair: `action = (q^2 + p^2) / 2`, `angle` in
/// `[0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarActionAngle {
    pub action: f64,
    pub angle: f64,
}

/// Charts a canonical plane point. Total: the origin maps to zero action
/// with angle `0`.
pub fn planar_action_angle(q: f64, p: f64) -> PlanarActionAngle {
    let mut angle = p.atan2(q);
    if angle < 0.0 {
        angle += TWO_PI;
    }
    PlanarActionAngle {
        action: 0.5 * (q * q + p * p),
        angle,
    }
}

/// Spherical chart values. `phi` is wrapped to `[0, 2 pi)`. `degenerate` is
/// set on the polar axis, where the azimuth carries no information and is
/// reported as `0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalActionAngle {
    pub action: f64,
    pub mu: f64,
    pub phi: f64,
    pub degenerate: bool,
}

/// Charts a target-space point: `3 action = |x|^3`, `mu = -x3 / |x|`,
/// `phi = atan2(x2, x1)` wrapped to `[0, 2 pi)`. The origin has no chart
/// image and yields [`Error::Domain`].
pub fn cartesian_to_spherical_aa(x: &[f64; 3]) -> Result<SphericalActionAngle> {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if r == 0.0 {
        return Err(Error::Domain(
            "spherical chart is undefined at the origin".to_string(),
        ));
    }
    let action = r * r * r / 3.0;
    let rho = x[0].hypot(x[1]);
    if rho == 0.0 {
        // On the axis r = |x3|, so mu is exactly -sign(x3).
        return Ok(SphericalActionAngle {
            action,
            mu: if x[2] > 0.0 { -1.0 } else { 1.0 },
            phi: 0.0,
            degenerate: true,
        });
    }
    let mu = (-x[2] / r).clamp(-1.0, 1.0);
    let mut phi = x[1].atan2(x[0]);
    if phi < 0.0 {
        phi += TWO_PI;
    }
    Ok(SphericalActionAngle {
        action,
        mu,
        phi,
        degenerate: false,
    })
}

/// Inverts the spherical chart: `r = (3 action)^(1/3)`,
/// `x = (r s cos(phi), r s sin(phi), -r mu)` with `s = sqrt(1 - mu^2)`.
/// Needs `action > 0` and `|mu| <= 1`.
pub fn spherical_aa_to_cartesian(action: f64, mu: f64, phi: f64) -> Result<[f64; 3]> {
    if action.is_nan() || action <= 0.0 {
        return Err(Error::Domain(format!(
            "action must be positive, got {action}"
        )));
    }
    if !(-1.0..=1.0).contains(&mu) {
        return Err(Error::Domain(format!("mu must be in [-1, 1], got {mu}")));
    }
    let r = (3.0 * action).cbrt();
    let s = (1.0 - mu * mu).max(0.0).sqrt();
    Ok([r * s * phi.cos(), r * s * phi.sin(), -r * mu])
}

/// The chart components `(J, mu, phi)` as scalar fields on a
/// three-dimensional space, with analytic gradients:
///
/// ```text
/// grad J   = r x
/// grad mu  = (x3 x1 / r^3, x3 x2 / r^3, -(x1^2 + x2^2) / r^3)
/// grad phi = (-x2 / rho^2, x1 / rho^2, 0)        rho^2 = x1^2 + x2^2
/// ```
///
/// For differentiability the `phi` field returns the principal `atan2`
/// branch in `(-pi, pi]` rather than the `[0, 2 pi)` wrap of
/// [`cartesian_to_spherical_aa`]; the two differ by `2 pi` where `x2 < 0`,
/// which shifts no derivative. Evaluations on the polar axis (and gradients
/// at the origin) fail with [`Error::Singular`].
pub fn spherical_chart_fields(space: &PhaseSpace) -> Result<[ScalarField; 3]> {
    if space.dim() != 3 {
        return Err(Error::Dimension {
            expected: 3,
            got: space.dim(),
        });
    }
    fn radius(x: &[f64]) -> f64 {
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
    }
    fn off_axis(x: &[f64]) -> Result<f64> {
        let rho2 = x[0] * x[0] + x[1] * x[1];
        if rho2 == 0.0 {
            Err(Error::Singular(format!(
                "spherical chart azimuth is undefined on the polar axis, at {x:?}"
            )))
        } else {
            Ok(rho2)
        }
    }
    fn off_origin(x: &[f64]) -> Result<f64> {
        let r = radius(x);
        if r == 0.0 {
            Err(Error::Singular(
                "spherical chart is undefined at the origin".to_string(),
            ))
        } else {
            Ok(r)
        }
    }

    let j = ScalarField::from_closure(space.clone(), "J", move |x| {
        let r = radius(x);
        Ok(r * r * r / 3.0)
    })
    .with_analytic_gradient(move |x, out| {
        let r = radius(x);
        for i in 0..3 {
            out[i] = r * x[i];
        }
        Ok(())
    });

    let mu = ScalarField::from_closure(space.clone(), "mu", move |x| {
        let r = off_origin(x)?;
        Ok(-x[2] / r)
    })
    .with_analytic_gradient(move |x, out| {
        let r = off_origin(x)?;
        let r3 = r * r * r;
        out[0] = x[2] * x[0] / r3;
        out[1] = x[2] * x[1] / r3;
        out[2] = -(x[0] * x[0] + x[1] * x[1]) / r3;
        Ok(())
    });

    let phi = ScalarField::from_closure(space.clone(), "phi", move |x| {
        off_axis(x)?;
        Ok(x[1].atan2(x[0]))
    })
    .with_analytic_gradient(move |x, out| {
        let rho2 = off_axis(x)?;
        out[0] = -x[1] / rho2;
        out[1] = x[0] / rho2;
        out[2] = 0.0;
        Ok(())
    });

    Ok([j, mu, phi])
}

/// Moments of inertia of a symmetric top: transverse `i1` (doubled axis) and
/// axial `i3`, both positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopParams {
    pub i1: f64,
    pub i3: f64,
}

impl TopParams {
    pub fn new(i1: f64, i3: f64) -> Result<TopParams> {
        if !(i1 > 0.0 && i1.is_finite()) || !(i3 > 0.0 && i3.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "moments of inertia must be positive and finite, got ({i1}, {i3})"
            )));
        }
        Ok(TopParams { i1, i3 })
    }
}

/// The space the reduced top lives on.
pub fn top_reduced_space() -> PhaseSpace {
    PhaseSpace::new(&["J", "mu", "phi"]).expect("valid reduced space")
}

/// Reduced Hamiltonian pair `(K1, K2)` at `(J, mu)`; see the module docs.
/// Needs `action > 0`.
pub fn top_reduced_hamiltonians(params: TopParams, action: f64, mu: f64) -> Result<(f64, f64)> {
    if action.is_nan() || action <= 0.0 {
        return Err(Error::Domain(format!(
            "action must be positive, got {action}"
        )));
    }
    let r2 = (3.0 * action).cbrt().powi(2);
    let d = 1.0 / params.i1 - 1.0 / params.i3;
    let k1 = 0.5 * r2 * (1.0 / params.i1 - mu * mu * d);
    let k2 = 0.5 * r2;
    Ok((k1, k2))
}

/// The reduced top as a determinant-bracket system on `(J, mu, phi)`, with
/// Hamiltonians ordered `(K1, K2)` and analytic gradients attached.
pub fn top_reduced_system(params: TopParams) -> NambuSystem {
    let space = top_reduced_space();
    let positive_action = |j: f64| -> Result<f64> {
        if j > 0.0 {
            Ok(j)
        } else {
            Err(Error::Singular(format!(
                "reduced top needs positive action, got {j}"
            )))
        }
    };

    let p = params;
    let k1 = ScalarField::from_closure(space.clone(), "K1", move |y| {
        let (k1, _) = top_reduced_hamiltonians(p, positive_action(y[0])?, y[1])?;
        Ok(k1)
    })
    .with_analytic_gradient(move |y, out| {
        let j = positive_action(y[0])?;
        let mu = y[1];
        let l = (3.0 * j).cbrt();
        let d = 1.0 / p.i1 - 1.0 / p.i3;
        out[0] = (1.0 / p.i1 - mu * mu * d) / l;
        out[1] = -l * l * mu * d;
        out[2] = 0.0;
        Ok(())
    });

    let k2 = ScalarField::from_closure(space.clone(), "K2", move |y| {
        let (_, k2) = top_reduced_hamiltonians(p, positive_action(y[0])?, y[1])?;
        Ok(k2)
    })
    .with_analytic_gradient(move |y, out| {
        let j = positive_action(y[0])?;
        out[0] = 1.0 / (3.0 * j).cbrt();
        out[1] = 0.0;
        out[2] = 0.0;
        Ok(())
    });

    NambuSystem::new(space, vec![k1, k2]).expect("well-formed reduced system")
}

/// Closed-form reduced flow at `(J, mu)`: `J` and `mu` are fixed and `phi`
/// advances at `omega = L mu (1/I1 - 1/I3)` with `L = (3J)^(1/3)`. Poles
/// (`|mu| = 1`) are excluded because the azimuth is degenerate there.
pub fn top_reduced_flow(params: TopParams, action: f64, mu: f64) -> Result<[f64; 3]> {
    if action.is_nan() || action <= 0.0 {
        return Err(Error::Domain(format!(
            "action must be positive, got {action}"
        )));
    }
    if mu.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "reduced flow needs |mu| < 1 (azimuth degenerates at the poles), got {mu}"
        )));
    }
    let l = (3.0 * action).cbrt();
    let omega = l * mu * (1.0 / params.i1 - 1.0 / params.i3);
    Ok([0.0, 0.0, omega])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bracket::flow_field;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn planar_oracle_points() {
        let a = planar_action_angle(1.0, 0.0);
        assert_eq!(a.action, 0.5);
        assert_eq!(a.angle, 0.0);
        let b = planar_action_angle(0.0, 2.0);
        assert_eq!(b.action, 2.0);
        assert_relative_eq!(b.angle, FRAC_PI_2);
        // Negative momentum wraps into [0, 2 pi).
        let c = planar_action_angle(0.0, -2.0);
        assert_relative_eq!(c.angle, 3.0 * FRAC_PI_2);
    }

    #[test]
    fn spherical_oracle_points() {
        let a = cartesian_to_spherical_aa(&[1.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(a.action, 1.0 / 3.0);
        assert_eq!(a.mu, 0.0);
        assert_eq!(a.phi, 0.0);
        assert!(!a.degenerate);

        let b = cartesian_to_spherical_aa(&[0.0, 2.0, 0.0]).unwrap();
        assert_relative_eq!(b.action, 8.0 / 3.0);
        assert_eq!(b.mu, 0.0);
        assert_relative_eq!(b.phi, FRAC_PI_2);

        let inv = spherical_aa_to_cartesian(9.0, -1.0, 0.3).unwrap();
        assert_relative_eq!(inv[0], 0.0);
        assert_relative_eq!(inv[1], 0.0);
        assert_relative_eq!(inv[2], 3.0);
    }

    #[test]
    fn spherical_degenerate_axis() {
        let up = cartesian_to_spherical_aa(&[0.0, 0.0, 2.0]).unwrap();
        assert!(up.degenerate);
        assert_eq!(up.mu, -1.0);
        assert_eq!(up.phi, 0.0);
        let down = cartesian_to_spherical_aa(&[0.0, 0.0, -2.0]).unwrap();
        assert_eq!(down.mu, 1.0);
        assert!(cartesian_to_spherical_aa(&[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn spherical_chart_round_trips() {
        let x = [0.8, -1.1, 0.6];
        let aa = cartesian_to_spherical_aa(&x).unwrap();
        let back = spherical_aa_to_cartesian(aa.action, aa.mu, aa.phi).unwrap();
        for (u, v) in x.iter().zip(back.iter()) {
            assert_relative_eq!(u, v, epsilon = 1e-12);
        }
        let again = cartesian_to_spherical_aa(&back).unwrap();
        assert_relative_eq!(again.action, aa.action, epsilon = 1e-12);
        assert_relative_eq!(again.mu, aa.mu, epsilon = 1e-12);
        assert_relative_eq!(again.phi, aa.phi, epsilon = 1e-12);
    }

    #[test]
    fn chart_fields_match_chart_and_are_volume_preserving() {
        let space = PhaseSpace::new(&["x1", "x2", "x3"]).unwrap();
        let [j, mu, phi] = spherical_chart_fields(&space).unwrap();
        let x = [0.8, 1.1, -0.6]; // x2 > 0: field phi agrees with the wrap
        let aa = cartesian_to_spherical_aa(&[x[0], x[1], x[2]]).unwrap();
        assert_relative_eq!(j.eval(&x).unwrap(), aa.action, epsilon = 1e-14);
        assert_relative_eq!(mu.eval(&x).unwrap(), aa.mu, epsilon = 1e-14);
        assert_relative_eq!(phi.eval(&x).unwrap(), aa.phi, epsilon = 1e-14);

        // det d(J, mu, phi) / dx = +1 exactly, up to rounding.
        let rows = vec![
            j.gradient(&x).unwrap(),
            mu.gradient(&x).unwrap(),
            phi.gradient(&x).unwrap(),
        ];
        assert_relative_eq!(crate::linalg::det(rows), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn chart_fields_guard_the_axis() {
        let space = PhaseSpace::new(&["x1", "x2", "x3"]).unwrap();
        let [j, mu, phi] = spherical_chart_fields(&space).unwrap();
        assert!(j.eval(&[0.0, 0.0, 1.0]).is_ok());
        assert!(mu.eval(&[0.0, 0.0, 1.0]).is_ok());
        assert!(matches!(
            phi.eval(&[0.0, 0.0, 1.0]),
            Err(Error::Singular(_))
        ));
        assert!(mu.gradient(&[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn reduced_hamiltonian_oracles() {
        // L = 2 so J = 8/3; mu = -1/2; I = (2, 1).
        let p = TopParams::new(2.0, 1.0).unwrap();
        let (k1, k2) = top_reduced_hamiltonians(p, 8.0 / 3.0, -0.5).unwrap();
        assert_relative_eq!(k2, 2.0, epsilon = 1e-12);
        assert_relative_eq!(k1, 1.25, epsilon = 1e-12);
    }

    #[test]
    fn reduced_flow_oracle_and_routes_agree() {
        let p = TopParams::new(2.0, 1.0).unwrap();
        let (j, mu) = (8.0 / 3.0, -0.5);
        let closed = top_reduced_flow(p, j, mu).unwrap();
        assert_eq!(closed[0], 0.0);
        assert_eq!(closed[1], 0.0);
        assert_relative_eq!(closed[2], 0.5, epsilon = 1e-12);

        let system = top_reduced_system(p);
        let v = flow_field(&system, &[j, mu, 1.234]).unwrap();
        for (a, b) in closed.iter().zip(v.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn reduced_top_conserves_k_fields() {
        // Gradient of K1 and K2 both lie in the (J, mu) plane, so the flow
        // is purely azimuthal for any parameter values.
        let p = TopParams::new(1.7, 0.4).unwrap();
        let system = top_reduced_system(p);
        let v = flow_field(&system, &[1.9, 0.3, -2.0]).unwrap();
        assert_relative_eq!(v[0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(v[1], 0.0, epsilon = 1e-14);
        let closed = top_reduced_flow(p, 1.9, 0.3).unwrap();
        assert_relative_eq!(v[2], closed[2], epsilon = 1e-12);
    }

    #[test]
    fn domain_validation() {
        assert!(TopParams::new(0.0, 1.0).is_err());
        assert!(TopParams::new(1.0, -2.0).is_err());
        let p = TopParams::new(2.0, 1.0).unwrap();
        assert!(top_reduced_flow(p, -1.0, 0.0).is_err());
        assert!(top_reduced_flow(p, 1.0, 1.0).is_err());
        assert!(spherical_aa_to_cartesian(0.0, 0.0, 0.0).is_err());
        assert!(spherical_aa_to_cartesian(1.0, 1.5, 0.0).is_err());
    }
}
