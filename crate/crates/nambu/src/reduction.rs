//! Momentum maps from canonical phase spaces to reduced spaces, and the
//! structural checks they must satisfy.
//!
//! A [`MomentumMap`] is a tuple of scalar fields on a canonical source space,
//! one per coordinate of a reduced target space. Two maps are built in:
//!
//! - [`angular_momentum_map`]: body-frame angular momentum on the cotangent
//!   space of orientation space in Euler angles
//!   `(theta, phi, psi, P_theta, P_phi, P_psi)`. Singular where
//!   `sin(theta) = 0` (the two coordinate-chart poles).
//! - [`hopf_map`]: the quadratic map from `(q1, p1, q2, p2)` to three
//!   oscillator invariants `x1, x2, x3` with `|x| = q1^2+p1^2+q2^2+p2^2`.
//!
//! The checks:
//!
//! - [`commutation_residual`]: the component brackets `{X_j, X_k}` on the
//!   source must equal `eps_{jkl} d_l h2` evaluated at the mapped point, for
//!   the map's structure function `h2` (here `-|L|^2/2` and `-2|x|^2`).
//! - [`conservation_residual`]: for a source Hamiltonian `h0`, each component
//!   must evolve as the target's Nambu flow prescribes:
//!   `{X_j, h0} = flow_j(map(z))`.
//! - [`induced_three_form`] versus [`jacobian_minor_three_form`]: the
//!   three-form obtained by running each component differential through the
//!   symplectic structure (gradient, Hamiltonian vector field, contraction
//!   back to a covector) and wedging, versus the 3x3 minors of the map's
//!   Jacobian. The two routes share only the gradient evaluations.
//! - [`wedge_identity_residual`]: volume factors of coordinate charts
//!   composed with the quadratic map, against their closed forms.

use crate::bracket::{flow_field, poisson_bracket, NambuSystem};
use crate::error::{Error, Result};
use crate::field::{fd_step, GradientMode, ScalarField};
use crate::linalg;
use crate::space::PhaseSpace;

/// A smooth map from a canonical phase space onto a reduced space, given by
/// one scalar component per target coordinate.
#[derive(Debug, Clone)]
pub struct MomentumMap {
    source: PhaseSpace,
    target: PhaseSpace,
    components: Vec<ScalarField>,
}

impl MomentumMap {
    pub fn new(
        source: PhaseSpace,
        target: PhaseSpace,
        components: Vec<ScalarField>,
    ) -> Result<MomentumMap> {
        if components.len() != target.dim() {
            return Err(Error::Dimension {
                expected: target.dim(),
                got: components.len(),
            });
        }
        for c in &components {
            if c.space() != &source {
                return Err(Error::InvalidArgument(format!(
                    "component `{}` lives on a different space",
                    c.label()
                )));
            }
        }
        Ok(MomentumMap {
            source,
            target,
            components,
        })
    }

    pub fn source(&self) -> &PhaseSpace {
        &self.source
    }

    pub fn target(&self) -> &PhaseSpace {
        &self.target
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn component(&self, j: usize) -> &ScalarField {
        &self.components[j]
    }

    /// Evaluates the map at a source point.
    pub fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.eval(z)).collect()
    }

    /// Jacobian at `z`: row `j` is the gradient of component `j`.
    pub fn jacobian(&self, z: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.components.iter().map(|c| c.gradient(z)).collect()
    }

    /// Returns a copy whose components all use `mode` for gradients.
    pub fn with_gradient_mode(&self, mode: GradientMode) -> MomentumMap {
        MomentumMap {
            source: self.source.clone(),
            target: self.target.clone(),
            components: self
                .components
                .iter()
                .map(|c| c.clone().with_gradient_mode(mode))
                .collect(),
        }
    }
}

const GIMBAL_EPS: f64 = 1e-12;

fn gimbal_check(theta: f64) -> Result<f64> {
    let s = theta.sin();
    if s.abs() <= GIMBAL_EPS {
        Err(Error::Singular(format!(
            "angular momentum chart is singular at sin(theta) = {s:.3e} (theta = {theta})"
        )))
    } else {
        Ok(s)
    }
}

/// Body-frame angular momentum on the Euler-angle cotangent space
/// `(theta, phi, psi, P_theta, P_phi, P_psi)`:
///
/// ```text
/// A  = (P_phi - P_psi cos(theta)) / sin(theta)
/// L1 =  P_theta cos(psi) + A sin(psi)
/// L2 = -P_theta sin(psi) + A cos(psi)
/// L3 =  P_psi
/// ```
///
/// Components carry analytic gradients. The components close under the
/// canonical bracket as `{L_j, L_k} = -eps_{jkl} L_l`, so the matching
/// structure function is `h2 = -|L|^2 / 2`. Value and gradient evaluations
/// fail with [`Error::Singular`] within `1e-12` of `sin(theta) = 0`.
pub fn angular_momentum_map() -> MomentumMap {
    let source = PhaseSpace::canonical_split(&["theta", "phi", "psi", "P_theta", "P_phi", "P_psi"])
        .expect("valid Euler-angle space");
    let target = PhaseSpace::new(&["L1", "L2", "L3"]).expect("valid target");

    // Indices: theta 0, phi 1, psi 2, P_theta 3, P_phi 4, P_psi 5.
    let a_of = |z: &[f64], s: f64| (z[4] - z[5] * z[0].cos()) / s;

    let l1 = ScalarField::from_closure(source.clone(), "L1", move |z| {
        let s = gimbal_check(z[0])?;
        Ok(z[3] * z[2].cos() + a_of(z, s) * z[2].sin())
    })
    .with_analytic_gradient(move |z, out| {
        let s = gimbal_check(z[0])?;
        let (c, a) = (z[0].cos(), a_of(z, s));
        let (sp, cp) = z[2].sin_cos();
        out[0] = (z[5] - a * c / s) * sp;
        out[1] = 0.0;
        out[2] = -z[3] * sp + a * cp; // = L2
        out[3] = cp;
        out[4] = sp / s;
        out[5] = -c * sp / s;
        Ok(())
    });

    let l2 = ScalarField::from_closure(source.clone(), "L2", move |z| {
        let s = gimbal_check(z[0])?;
        Ok(-z[3] * z[2].sin() + a_of(z, s) * z[2].cos())
    })
    .with_analytic_gradient(move |z, out| {
        let s = gimbal_check(z[0])?;
        let (c, a) = (z[0].cos(), a_of(z, s));
        let (sp, cp) = z[2].sin_cos();
        out[0] = (z[5] - a * c / s) * cp;
        out[1] = 0.0;
        out[2] = -z[3] * cp - a * sp; // = -L1
        out[3] = -sp;
        out[4] = cp / s;
        out[5] = -c * cp / s;
        Ok(())
    });

    let l3 = ScalarField::from_closure(source.clone(), "L3", |z| Ok(z[5])).with_analytic_gradient(
        |_, out| {
            out.fill(0.0);
            out[5] = 1.0;
            Ok(())
        },
    );

    MomentumMap::new(source, target, vec![l1, l2, l3]).expect("well-formed map")
}

/// [`angular_momentum_map`] evaluated at a point.
pub fn angular_momentum(z: &[f64; 6]) -> Result<[f64; 3]> {
    let v = angular_momentum_map().apply(z)?;
    Ok([v[0], v[1], v[2]])
}

/// Quadratic oscillator-invariant map from `(q1, p1, q2, p2)`:
///
/// ```text
/// x1 = 2 (q1 q2 + p1 p2)
/// x2 = 2 (q2 p1 - q1 p2)
/// x3 = q1^2 + p1^2 - q2^2 - p2^2
/// ```
///
/// `|x|` equals the squared radius `q1^2+p1^2+q2^2+p2^2`, so spheres in the
/// target correspond to level sets of the isotropic oscillator energy. The
/// components close as `{x_j, x_k} = -4 eps_{jkl} x_l`, matching the
/// structure function `h2 = -2 |x|^2`. Components carry analytic gradients.
pub fn hopf_map() -> MomentumMap {
    let source = PhaseSpace::canonical_interleaved(&["q1", "p1", "q2", "p2"])
        .expect("valid oscillator space");
    let target = PhaseSpace::new(&["x1", "x2", "x3"]).expect("valid target");

    let x1 = ScalarField::from_closure(source.clone(), "x1", |z| {
        Ok(2.0 * (z[0] * z[2] + z[1] * z[3]))
    })
    .with_analytic_gradient(|z, out| {
        out[0] = 2.0 * z[2];
        out[1] = 2.0 * z[3];
        out[2] = 2.0 * z[0];
        out[3] = 2.0 * z[1];
        Ok(())
    });

    let x2 = ScalarField::from_closure(source.clone(), "x2", |z| {
        Ok(2.0 * (z[2] * z[1] - z[0] * z[3]))
    })
    .with_analytic_gradient(|z, out| {
        out[0] = -2.0 * z[3];
        out[1] = 2.0 * z[2];
        out[2] = 2.0 * z[1];
        out[3] = -2.0 * z[0];
        Ok(())
    });

    let x3 = ScalarField::from_closure(source.clone(), "x3", |z| {
        Ok(z[0] * z[0] + z[1] * z[1] - z[2] * z[2] - z[3] * z[3])
    })
    .with_analytic_gradient(|z, out| {
        out[0] = 2.0 * z[0];
        out[1] = 2.0 * z[1];
        out[2] = -2.0 * z[2];
        out[3] = -2.0 * z[3];
        Ok(())
    });

    MomentumMap::new(source, target, vec![x1, x2, x3]).expect("well-formed map")
}

/// [`hopf_map`] evaluated at a point (total, hence infallible).
pub fn hopf(z: &[f64; 4]) -> [f64; 3] {
    [
        2.0 * (z[0] * z[2] + z[1] * z[3]),
        2.0 * (z[2] * z[1] - z[0] * z[3]),
        z[0] * z[0] + z[1] * z[1] - z[2] * z[2] - z[3] * z[3],
    ]
}

fn require_target3(map: &MomentumMap) -> Result<()> {
    if map.target.dim() != 3 {
        return Err(Error::Dimension {
            expected: 3,
            got: map.target.dim(),
        });
    }
    Ok(())
}

/// Componentwise closure check at `z`: entry `(j, k)` is
///
/// ```text
/// {X_j, X_k}_source(z)  -  sum_l eps_{jkl} (d h2 / d y_l)(map(z))
/// ```
///
/// where `eps` is the alternating symbol with `eps_{123} = +1` and `h2` is
/// the map's structure function on the target. Brackets use whatever gradient
/// mode the map's components carry, so pass the map through
/// [`MomentumMap::with_gradient_mode`] to test the finite-difference path.
pub fn commutation_residual(
    map: &MomentumMap,
    h2: &ScalarField,
    z: &[f64],
) -> Result<[[f64; 3]; 3]> {
    require_target3(map)?;
    if h2.space() != &map.target {
        return Err(Error::InvalidArgument(format!(
            "structure function `{}` does not live on the target space",
            h2.label()
        )));
    }
    let y = map.apply(z)?;
    let gh = h2.gradient(&y)?;
    let mut out = [[0.0; 3]; 3];
    for (j, row) in out.iter_mut().enumerate() {
        for (k, slot) in row.iter_mut().enumerate() {
            if j == k {
                continue; // bracket of a field with itself is identically zero
            }
            let pb = poisson_bracket(&map.components[j], &map.components[k], z)?;
            let expected = match (j, k) {
                (0, 1) => gh[2],
                (1, 0) => -gh[2],
                (1, 2) => gh[0],
                (2, 1) => -gh[0],
                (2, 0) => gh[1],
                (0, 2) => -gh[1],
                _ => unreachable!(),
            };
            *slot = pb - expected;
        }
    }
    Ok(out)
}

/// Reduced-flow check at `z`: component `j` of the result is
///
/// ```text
/// {X_j, h0}_source(z)  -  flow_j(map(z))
/// ```
///
/// for a source Hamiltonian `h0` and the reduced system on the target. Zero
/// residual means the map sends the canonical flow of `h0` to the target's
/// determinant-bracket flow, which also forces every target invariant to be
/// conserved along the source dynamics.
pub fn conservation_residual(
    map: &MomentumMap,
    h0: &ScalarField,
    system: &NambuSystem,
    z: &[f64],
) -> Result<Vec<f64>> {
    if h0.space() != &map.source {
        return Err(Error::InvalidArgument(format!(
            "Hamiltonian `{}` does not live on the source space",
            h0.label()
        )));
    }
    if system.space() != &map.target {
        return Err(Error::InvalidArgument(
            "reduced system does not live on the map's target space".to_string(),
        ));
    }
    let y = map.apply(z)?;
    let v = flow_field(system, &y)?;
    let mut out = Vec::with_capacity(map.components.len());
    for (j, comp) in map.components.iter().enumerate() {
        out.push(poisson_bracket(comp, h0, z)? - v[j]);
    }
    Ok(out)
}

/// A constant-coefficient 3-form on a 4-dimensional space, stored on the
/// lexicographic basis of coordinate triples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeForm4D {
    components: [f64; 4],
}

impl ThreeForm4D {
    /// Index triples `(i, j, k)` with `i < j < k`, in the order the
    /// components are stored: `(0,1,2), (0,1,3), (0,2,3), (1,2,3)`.
    pub const TRIPLES: [(usize, usize, usize); 4] = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)];

    pub fn new(components: [f64; 4]) -> ThreeForm4D {
        ThreeForm4D { components }
    }

    pub fn components(&self) -> [f64; 4] {
        self.components
    }

    pub fn max_abs_diff(&self, other: &ThreeForm4D) -> f64 {
        self.components
            .iter()
            .zip(other.components.iter())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

fn require_symplectic4(map: &MomentumMap) -> Result<&[(usize, usize)]> {
    require_target3(map)?;
    if map.source.dim() != 4 {
        return Err(Error::Dimension {
            expected: 4,
            got: map.source.dim(),
        });
    }
    map.source.canonical_pairs().ok_or_else(|| {
        Error::InvalidArgument(
            "induced three-form needs canonical (q, p) pairs on the source".to_string(),
        )
    })
}

/// Wedge of the three component differentials at `z`, computed through the
/// symplectic structure: each gradient is first turned into its Hamiltonian
/// vector field (`V[q] = +g[p]`, `V[p] = -g[q]` per canonical pair), the
/// vector field is contracted back into the symplectic form to recover a
/// covector, and the three covectors are wedged by explicit permutation sums
/// over each basis triple. The contraction inverts the vector-field step
/// exactly, so this route and [`jacobian_minor_three_form`] must agree to
/// rounding whenever both see the same gradients.
pub fn induced_three_form(map: &MomentumMap, z: &[f64]) -> Result<ThreeForm4D> {
    let pairs = require_symplectic4(map)?;
    let mut covectors = Vec::with_capacity(3);
    for comp in &map.components {
        let g = comp.gradient(z)?;
        // Hamiltonian vector field of the component.
        let mut v = [0.0; 4];
        for &(q, p) in pairs {
            v[q] = g[p];
            v[p] = -g[q];
        }
        // Contract into sum_i dq_i ^ dp_i: c[q] = -V[p], c[p] = +V[q].
        let mut c = vec![0.0; 4];
        for &(q, p) in pairs {
            c[q] = -v[p];
            c[p] = v[q];
        }
        covectors.push(c);
    }
    let (a, b, c) = (&covectors[0], &covectors[1], &covectors[2]);
    let mut components = [0.0; 4];
    for (slot, &(i, j, k)) in components.iter_mut().zip(ThreeForm4D::TRIPLES.iter()) {
        // Six-term alternating sum: det of the 3x3 restriction to (i, j, k).
        *slot = a[i] * (b[j] * c[k] - b[k] * c[j]) - a[j] * (b[i] * c[k] - b[k] * c[i])
            + a[k] * (b[i] * c[j] - b[j] * c[i]);
    }
    Ok(ThreeForm4D { components })
}

/// Wedge of the component differentials at `z`, computed as the 3x3 minors of
/// the map's Jacobian over each lexicographic column triple.
pub fn jacobian_minor_three_form(map: &MomentumMap, z: &[f64]) -> Result<ThreeForm4D> {
    require_symplectic4(map)?;
    let jac = map.jacobian(z)?;
    let mut components = [0.0; 4];
    for (slot, &(i, j, k)) in components.iter_mut().zip(ThreeForm4D::TRIPLES.iter()) {
        let minor: Vec<Vec<f64>> = jac.iter().map(|row| vec![row[i], row[j], row[k]]).collect();
        *slot = linalg::det(minor);
    }
    Ok(ThreeForm4D { components })
}

/// Coordinate charts whose composition with [`hopf_map`] has a closed-form
/// volume factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WedgeChart {
    /// Parameters `(r1, r2, psi)` with `r1, r2 > 0`: polar radii of the two
    /// oscillator planes and their relative phase. The mapped point is
    /// `(2 r1 r2 cos(psi), 2 r1 r2 sin(psi), r1^2 - r2^2)`; the Jacobian
    /// determinant of the composition is `8 r1 r2 (r1^2 + r2^2)`.
    HopfR1R2,
    /// Parameters `(r, theta, phi)` with `r > 0`, `0 < theta < pi`: spherical
    /// coordinates of the target point, embedded through
    /// `r1 = sqrt(r) cos(theta/2)`, `r2 = sqrt(r) sin(theta/2)`, `psi = phi`.
    /// The Jacobian determinant of the composition is `r^2 sin(theta)`.
    HopfSpherical,
}

// The embedding fixes the overall phase sum: only the relative phase
// psi = theta1 - theta2 reaches the target, so any constant works here.
// HopfR1R2 uses a nonzero sum and HopfSpherical uses zero; their mapped
// points still agree on chart overlaps, which the verify suite exercises.
const PHASE_SUM: f64 = 0.7;

/// Lifts chart parameters to a source-space point `(q1, p1, q2, p2)`.
pub fn chart_embedding(kind: WedgeChart, p: &[f64; 3]) -> Result<[f64; 4]> {
    let (r1, r2, psi, sum) = match kind {
        WedgeChart::HopfR1R2 => {
            let [r1, r2, psi] = *p;
            if r1 <= 0.0 || r2 <= 0.0 {
                return Err(Error::Domain(format!(
                    "chart needs r1, r2 > 0, got ({r1}, {r2})"
                )));
            }
            (r1, r2, psi, PHASE_SUM)
        }
        WedgeChart::HopfSpherical => {
            let [r, theta, phi] = *p;
            if r <= 0.0 {
                return Err(Error::Domain(format!("chart needs r > 0, got {r}")));
            }
            if !(0.0..=std::f64::consts::PI).contains(&theta)
                || theta == 0.0
                || theta == std::f64::consts::PI
            {
                return Err(Error::Domain(format!(
                    "chart needs 0 < theta < pi, got {theta}"
                )));
            }
            let rs = r.sqrt();
            (rs * (theta / 2.0).cos(), rs * (theta / 2.0).sin(), phi, 0.0)
        }
    };
    let t1 = (sum + psi) / 2.0;
    let t2 = (sum - psi) / 2.0;
    Ok([r1 * t1.cos(), r1 * t1.sin(), r2 * t2.cos(), r2 * t2.sin()])
}

fn chart_reference_det(kind: WedgeChart, p: &[f64; 3]) -> f64 {
    match kind {
        WedgeChart::HopfR1R2 => {
            let [r1, r2, _] = *p;
            8.0 * r1 * r2 * (r1 * r1 + r2 * r2)
        }
        WedgeChart::HopfSpherical => {
            let [r, theta, _] = *p;
            r * r * theta.sin()
        }
    }
}

/// Difference between the finite-difference Jacobian determinant of
/// `parameters -> chart embedding -> quadratic map` and the chart's
/// closed-form volume factor, at chart parameters `p`.
pub fn wedge_identity_residual(kind: WedgeChart, p: &[f64; 3]) -> Result<f64> {
    // Central-difference Jacobian of the composite map, column by column.
    let mut jac = vec![vec![0.0; 3]; 3];
    for col in 0..3 {
        let h = fd_step(p[col]);
        let mut pp = *p;
        pp[col] = p[col] + h;
        let xp = hopf(&chart_embedding(kind, &pp)?);
        pp[col] = p[col] - h;
        let xm = hopf(&chart_embedding(kind, &pp)?);
        let dx = (p[col] + h) - (p[col] - h);
        for row in 0..3 {
            jac[row][col] = (xp[row] - xm[row]) / dx;
        }
    }
    Ok(linalg::det(jac) - chart_reference_det(kind, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expression;
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn angular_momentum_oracle_points() {
        let l = angular_momentum(&[FRAC_PI_2, 123.4, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(l[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(l[1], 0.0, epsilon = 1e-14);
        assert_relative_eq!(l[2], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn angular_momentum_magnitude_identity() {
        // |L|^2 = P_theta^2 + A^2 + P_psi^2.
        let z = [1.1, -0.4, 2.2, 0.8, -0.6, 0.9];
        let l = angular_momentum(&z).unwrap();
        let a = (z[4] - z[5] * z[0].cos()) / z[0].sin();
        let expected = z[3] * z[3] + a * a + z[5] * z[5];
        let got = l.iter().map(|v| v * v).sum::<f64>();
        assert_relative_eq!(got, expected, epsilon = 1e-12);
    }

    #[test]
    fn angular_momentum_gimbal_is_singular() {
        assert!(matches!(
            angular_momentum(&[0.0, 0.1, 0.2, 0.3, 0.4, 0.5]),
            Err(Error::Singular(_))
        ));
        assert!(matches!(
            angular_momentum(&[PI, 0.1, 0.2, 0.3, 0.4, 0.5]),
            Err(Error::Singular(_))
        ));
        // Gradients fail too, not just values.
        let map = angular_momentum_map();
        assert!(map.component(0).gradient(&[0.0; 6]).is_err());
    }

    #[test]
    fn angular_momentum_analytic_gradients_match_fd() {
        let map = angular_momentum_map();
        let z = [1.2, -0.3, 0.8, 0.5, 1.1, -0.7];
        for comp in map.components() {
            let ga = comp.gradient(&z).unwrap();
            let gf = comp
                .gradient_with(&z, GradientMode::CentralDifference)
                .unwrap();
            for (a, f) in ga.iter().zip(gf.iter()) {
                assert_relative_eq!(a, f, epsilon = 1e-7, max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn hopf_oracle_points() {
        assert_eq!(hopf(&[1.0, 0.0, 0.0, 0.0]), [0.0, 0.0, 1.0]);
        assert_eq!(hopf(&[0.0, 0.0, 1.0, 0.0]), [0.0, 0.0, -1.0]);
        assert_eq!(hopf(&[1.0, 1.0, 1.0, 1.0]), [4.0, 0.0, 0.0]);
    }

    #[test]
    fn hopf_norm_identity() {
        let z = [0.7, -1.2, 0.4, 0.9];
        let x = hopf(&z);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let r2 = z.iter().map(|v| v * v).sum::<f64>();
        assert_relative_eq!(norm, r2, epsilon = 1e-12);
    }

    #[test]
    fn hopf_analytic_gradients_match_fd() {
        let map = hopf_map();
        let z = [0.7, -1.2, 0.4, 0.9];
        for comp in map.components() {
            let ga = comp.gradient(&z).unwrap();
            let gf = comp
                .gradient_with(&z, GradientMode::CentralDifference)
                .unwrap();
            for (a, f) in ga.iter().zip(gf.iter()) {
                assert_relative_eq!(a, f, epsilon = 1e-7, max_relative = 1e-7);
            }
        }
    }

    fn target_field(map: &MomentumMap, src: &str) -> ScalarField {
        let e = Expression::parse(src, map.target(), &BTreeMap::new()).unwrap();
        ScalarField::from_expression(e)
    }

    #[test]
    fn angular_momentum_commutation_closes() {
        let map = angular_momentum_map();
        let h2 = target_field(&map, "-(L1^2 + L2^2 + L3^2)/2");
        let z = [1.05, 0.3, -0.8, 0.6, -0.2, 1.3];
        let r = commutation_residual(&map, &h2, &z).unwrap();
        for row in r {
            for v in row {
                assert!(v.abs() < 1e-9, "residual {v}");
            }
        }
    }

    #[test]
    fn hopf_commutation_closes() {
        let map = hopf_map();
        let h2 = target_field(&map, "-2*(x1^2 + x2^2 + x3^2)");
        let z = [0.8, -0.5, 1.1, 0.4];
        let r = commutation_residual(&map, &h2, &z).unwrap();
        for row in r {
            for v in row {
                assert!(v.abs() < 1e-9, "residual {v}");
            }
        }
        // FD mode stays within the loose tolerance.
        let fd = map.with_gradient_mode(GradientMode::CentralDifference);
        let r = commutation_residual(&fd, &h2, &z).unwrap();
        for row in r {
            for v in row {
                assert!(v.abs() < 1e-6, "fd residual {v}");
            }
        }
    }

    #[test]
    fn rigid_body_reduction_matches_target_flow() {
        // h0 = kinetic energy composed with the map; the target system is the
        // rigid body. Residual should vanish identically in exact arithmetic.
        let map = angular_momentum_map();
        let sphere = target_field(&map, "(L1^2 + L2^2 + L3^2)/2");
        let kinetic = target_field(&map, "L1^2/2 + L2^2/4 + L3^2/6");
        let system = NambuSystem::new(map.target().clone(), vec![sphere, kinetic.clone()]).unwrap();
        let m2 = map.clone();
        let h0 = ScalarField::from_closure(map.source().clone(), "kinetic(L(z))", move |z| {
            let y = m2.apply(z)?;
            kinetic.eval(&y)
        });
        let z = [1.05, 0.3, -0.8, 0.6, -0.2, 1.3];
        let r = conservation_residual(&map, &h0, &system, &z).unwrap();
        for v in r {
            assert!(v.abs() < 1e-6, "residual {v}");
        }
    }

    #[test]
    fn three_form_routes_agree_for_hopf() {
        let map = hopf_map();
        let z = [0.9, -0.4, 0.3, 1.2];
        let a = induced_three_form(&map, &z).unwrap();
        let b = jacobian_minor_three_form(&map, &z).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12, "{a:?} vs {b:?}");
        // The form is not trivially zero.
        assert!(a.components().iter().any(|v| v.abs() > 0.1));
    }

    #[test]
    fn rank_deficient_map_gives_zero_form() {
        let source = PhaseSpace::canonical_interleaved(&["q1", "p1", "q2", "p2"]).unwrap();
        let target = PhaseSpace::new(&["a", "b", "c"]).unwrap();
        let comps = vec![
            ScalarField::coordinate(source.clone(), 0).unwrap(),
            ScalarField::coordinate(source.clone(), 1).unwrap(),
            ScalarField::from_closure(source.clone(), "q1*p1", |z| Ok(z[0] * z[1]))
                .with_analytic_gradient(|z, out| {
                    out.fill(0.0);
                    out[0] = z[1];
                    out[1] = z[0];
                    Ok(())
                }),
        ];
        let map = MomentumMap::new(source, target, comps).unwrap();
        let z = [0.5, -1.1, 0.2, 0.9];
        let zero = ThreeForm4D::new([0.0; 4]);
        assert!(induced_three_form(&map, &z).unwrap().max_abs_diff(&zero) < 1e-14);
        assert!(
            jacobian_minor_three_form(&map, &z)
                .unwrap()
                .max_abs_diff(&zero)
                < 1e-14
        );
    }

    #[test]
    fn wedge_identity_r1r2_oracle() {
        // At r1 = r2 = 1, psi = 0.4 the closed form is 8 * 1 * 1 * 2 = 16.
        let r = wedge_identity_residual(WedgeChart::HopfR1R2, &[1.0, 1.0, 0.4]).unwrap();
        assert!(r.abs() < 1e-7, "residual {r}");
        assert_relative_eq!(
            chart_reference_det(WedgeChart::HopfR1R2, &[1.0, 1.0, 0.4]),
            16.0
        );
    }

    #[test]
    fn wedge_identity_spherical() {
        let r = wedge_identity_residual(WedgeChart::HopfSpherical, &[1.3, 0.9, -0.6]).unwrap();
        assert!(r.abs() < 1e-7, "residual {r}");
    }

    #[test]
    fn charts_agree_on_overlap() {
        // Corresponding parameters map to the same target point even though
        // the two embeddings fix different phase sums.
        let (r, theta, phi) = (1.7, 1.1, 0.35);
        let a = hopf(&chart_embedding(WedgeChart::HopfSpherical, &[r, theta, phi]).unwrap());
        let r1 = r.sqrt() * (theta / 2.0).cos();
        let r2 = r.sqrt() * (theta / 2.0).sin();
        let b = hopf(&chart_embedding(WedgeChart::HopfR1R2, &[r1, r2, phi]).unwrap());
        for (u, v) in a.iter().zip(b.iter()) {
            assert_relative_eq!(u, v, epsilon = 1e-12);
        }
    }

    #[test]
    fn chart_domain_checks() {
        assert!(matches!(
            chart_embedding(WedgeChart::HopfR1R2, &[0.0, 1.0, 0.0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            chart_embedding(WedgeChart::HopfSpherical, &[1.0, 0.0, 0.0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            chart_embedding(WedgeChart::HopfSpherical, &[1.0, PI, 0.0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            chart_embedding(WedgeChart::HopfSpherical, &[-1.0, 1.0, 0.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn map_validation() {
        let source = PhaseSpace::canonical_interleaved(&["q1", "p1", "q2", "p2"]).unwrap();
        let target = PhaseSpace::new(&["a", "b"]).unwrap();
        let comps = vec![ScalarField::coordinate(source.clone(), 0).unwrap()];
        assert!(matches!(
            MomentumMap::new(source, target, comps),
            Err(Error::Dimension {
                expected: 2,
                got: 1
            })
        ));
    }
}
