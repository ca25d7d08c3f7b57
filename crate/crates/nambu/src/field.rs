//! Scalar fields on a phase space, with analytic or finite-difference
//! gradients.
//!
//! A [`ScalarField`] is the common currency of the bracket and flow code: it
//! pairs a function of the state with a way to get its gradient. Fields built
//! from parsed expressions or plain closures default to central finite
//! differences; fields with a hand-written gradient closure use it instead.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::space::PhaseSpace;

/// How [`ScalarField::gradient`] obtains derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMode {
    /// Use the gradient closure attached to the field. Erroring if none is.
    Analytic,
    /// Second-order central differences with per-coordinate steps
    /// `h_i = cbrt(eps) * max(1, |x_i|)`.
    CentralDifference,
}

type ValueFn = dyn Fn(&[f64]) -> Result<f64> + Send + Sync;
type GradFn = dyn Fn(&[f64], &mut [f64]) -> Result<()> + Send + Sync;

enum Body {
    Expr(Arc<Expression>),
    Closure {
        f: Arc<ValueFn>,
        grad: Option<Arc<GradFn>>,
        label: String,
    },
}

impl Clone for Body {
    fn clone(&self) -> Self {
        match self {
            Body::Expr(e) => Body::Expr(Arc::clone(e)),
            Body::Closure { f, grad, label } => Body::Closure {
                f: Arc::clone(f),
                grad: grad.as_ref().map(Arc::clone),
                label: label.clone(),
            },
        }
    }
}

/// A scalar function of the state together with a gradient strategy.
#[derive(Clone)]
pub struct ScalarField {
    space: PhaseSpace,
    body: Body,
    mode: GradientMode,
}

impl ScalarField {
    /// Wraps a parsed expression; gradients default to central differences.
    pub fn from_expression(expr: Expression) -> ScalarField {
        ScalarField {
            space: expr.space().clone(),
            body: Body::Expr(Arc::new(expr)),
            mode: GradientMode::CentralDifference,
        }
    }

    /// Wraps a value closure; gradients default to central differences.
    /// `label` identifies the field in error messages and output headers.
    pub fn from_closure<F>(space: PhaseSpace, label: impl Into<String>, f: F) -> ScalarField
    where
        F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        ScalarField {
            space,
            body: Body::Closure {
                f: Arc::new(f),
                grad: None,
                label: label.into(),
            },
            mode: GradientMode::CentralDifference,
        }
    }

    /// Attaches a gradient closure and switches the field to analytic mode.
    /// The closure fills `out` (length = space dimension) in place.
    pub fn with_analytic_gradient<G>(mut self, grad: G) -> ScalarField
    where
        G: Fn(&[f64], &mut [f64]) -> Result<()> + Send + Sync + 'static,
    {
        let g: Arc<GradFn> = Arc::new(grad);
        match &mut self.body {
            Body::Closure { grad, .. } => *grad = Some(g),
            Body::Expr(e) => {
                // Keep the expression's value path; only the gradient changes.
                let e = Arc::clone(e);
                let label = e.to_text();
                self.body = Body::Closure {
                    f: Arc::new(move |x| e.eval(x)),
                    grad: Some(g),
                    label,
                };
            }
        }
        self.mode = GradientMode::Analytic;
        self
    }

    /// The constant field `c`.
    pub fn constant(space: PhaseSpace, c: f64) -> ScalarField {
        let dim = space.dim();
        ScalarField::from_closure(space, format!("{c:?}"), move |_| Ok(c)).with_analytic_gradient(
            move |_, out| {
                out[..dim].fill(0.0);
                Ok(())
            },
        )
    }

    /// The coordinate field `x_i`.
    pub fn coordinate(space: PhaseSpace, i: usize) -> Result<ScalarField> {
        if i >= space.dim() {
            return Err(Error::InvalidArgument(format!(
                "coordinate index {i} out of range for dimension {}",
                space.dim()
            )));
        }
        let label = space.name(i).to_string();
        Ok(
            ScalarField::from_closure(space, label, move |x| Ok(x[i])).with_analytic_gradient(
                move |_, out| {
                    out.fill(0.0);
                    out[i] = 1.0;
                    Ok(())
                },
            ),
        )
    }

    /// Overrides the gradient strategy. Selecting [`GradientMode::Analytic`]
    /// on a field without a gradient closure makes `gradient` return
    /// [`Error::InvalidArgument`].
    pub fn with_gradient_mode(mut self, mode: GradientMode) -> ScalarField {
        self.mode = mode;
        self
    }

    pub fn space(&self) -> &PhaseSpace {
        &self.space
    }

    pub fn gradient_mode(&self) -> GradientMode {
        self.mode
    }

    /// A short human-readable name: the expression text or the closure label.
    pub fn label(&self) -> String {
        match &self.body {
            Body::Expr(e) => e.to_text(),
            Body::Closure { label, .. } => label.clone(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.space.check_state(x)?;
        let v = match &self.body {
            Body::Expr(e) => e.eval(x)?,
            Body::Closure { f, .. } => f(x)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Singular(format!(
                "field `{}` evaluated to {v} at {x:?}",
                self.label()
            )))
        }
    }

    /// Gradient using the field's configured mode.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.gradient_with(x, self.mode)
    }

    /// Gradient using an explicit mode, regardless of the configured one.
    pub fn gradient_with(&self, x: &[f64], mode: GradientMode) -> Result<Vec<f64>> {
        self.space.check_state(x)?;
        match mode {
            GradientMode::Analytic => {
                let g = match &self.body {
                    Body::Closure { grad: Some(g), .. } => g,
                    _ => {
                        return Err(Error::InvalidArgument(format!(
                            "field `{}` has no analytic gradient",
                            self.label()
                        )))
                    }
                };
                let mut out = vec![0.0; self.space.dim()];
                g(x, &mut out)?;
                for (i, v) in out.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(Error::Singular(format!(
                            "gradient of `{}` has non-finite component {} at {x:?}",
                            self.label(),
                            self.space.name(i)
                        )));
                    }
                }
                Ok(out)
            }
            GradientMode::CentralDifference => self.central_difference(x),
        }
    }

    fn central_difference(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.space.dim();
        let mut out = vec![0.0; n];
        let mut xp = x.to_vec();
        for i in 0..n {
            let h = fd_step(x[i]);
            xp[i] = x[i] + h;
            let fp = self.eval(&xp)?;
            xp[i] = x[i] - h;
            let fm = self.eval(&xp)?;
            xp[i] = x[i];
            // Use the actually-realized spacing: (x+h) - (x-h) need not be 2h.
            let dx = (x[i] + h) - (x[i] - h);
            out[i] = (fp - fm) / dx;
        }
        Ok(out)
    }
}

/// Central-difference step: `cbrt(eps) * max(1, |x|)`, the usual balance of
/// truncation against round-off for second-order differences.
pub(crate) fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("label", &self.label())
            .field("dim", &self.space.dim())
            .field("mode", &self.mode)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;

    fn space2() -> PhaseSpace {
        PhaseSpace::new(&["q", "p"]).unwrap()
    }

    fn expr_field(src: &str) -> ScalarField {
        let e = Expression::parse(src, &space2(), &BTreeMap::new()).unwrap();
        ScalarField::from_expression(e)
    }

    #[test]
    fn fd_gradient_matches_polynomial_derivative() {
        let f = expr_field("q^2*p + 3*p");
        let g = f.gradient(&[1.5, -0.5]).unwrap();
        assert_relative_eq!(g[0], 2.0 * 1.5 * -0.5, max_relative = 1e-9);
        assert_relative_eq!(g[1], 1.5 * 1.5 + 3.0, max_relative = 1e-9);
    }

    #[test]
    fn analytic_gradient_is_used_when_attached() {
        let f = ScalarField::from_closure(space2(), "q*p", |x| Ok(x[0] * x[1]))
            .with_analytic_gradient(|x, out| {
                out[0] = x[1];
                out[1] = x[0];
                Ok(())
            });
        assert_eq!(f.gradient_mode(), GradientMode::Analytic);
        let g = f.gradient(&[2.0, 7.0]).unwrap();
        assert_eq!(g, vec![7.0, 2.0]);
        // Explicit FD request still works and agrees.
        let g_fd = f
            .gradient_with(&[2.0, 7.0], GradientMode::CentralDifference)
            .unwrap();
        assert_relative_eq!(g_fd[0], 7.0, max_relative = 1e-9);
    }

    #[test]
    fn analytic_mode_without_closure_is_rejected() {
        let f = expr_field("q+p").with_gradient_mode(GradientMode::Analytic);
        assert!(matches!(
            f.gradient(&[0.0, 0.0]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn coordinate_and_constant_fields() {
        let c = ScalarField::constant(space2(), 4.25);
        assert_eq!(c.eval(&[9.0, 9.0]).unwrap(), 4.25);
        assert_eq!(c.gradient(&[9.0, 9.0]).unwrap(), vec![0.0, 0.0]);

        let q = ScalarField::coordinate(space2(), 0).unwrap();
        assert_eq!(q.eval(&[3.0, 1.0]).unwrap(), 3.0);
        assert_eq!(q.gradient(&[3.0, 1.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(q.label(), "q");
        assert!(ScalarField::coordinate(space2(), 2).is_err());
    }

    #[test]
    fn non_finite_values_become_singular_errors() {
        let f = ScalarField::from_closure(space2(), "1/q", |x| Ok(1.0 / x[0]));
        assert!(matches!(f.eval(&[0.0, 0.0]), Err(Error::Singular(_))));
        // FD across the pole also fails, through the eval path.
        assert!(f.gradient(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn expression_with_attached_gradient_keeps_value_path() {
        let e = Expression::parse("q^2+p^2", &space2(), &BTreeMap::new()).unwrap();
        let f = ScalarField::from_expression(e).with_analytic_gradient(|x, out| {
            out[0] = 2.0 * x[0];
            out[1] = 2.0 * x[1];
            Ok(())
        });
        assert_eq!(f.eval(&[3.0, 4.0]).unwrap(), 25.0);
        assert_eq!(f.gradient(&[3.0, 4.0]).unwrap(), vec![6.0, 8.0]);
        assert_eq!(f.label(), "q^2.0+p^2.0");
    }
}
