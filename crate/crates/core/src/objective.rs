//! Objective functions `F` and their gradients.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

pub type ScalarField<S> = Arc<dyn Fn(&[S]) -> S + Send + Sync>;
pub type VectorField<S> = Arc<dyn Fn(&[S], &mut [S]) + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradKind {
    Analytic,
    CentralDifference,
}

/// Known minimizer and minimum value of an objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum<S> {
    pub point: Vec<S>,
    pub value: S,
}

/// A differentiable scalar field on `S^dim` with gradient access.
#[derive(Clone)]
pub struct Objective<S> {
    dim: usize,
    eval: ScalarField<S>,
    grad: Option<VectorField<S>>,
    minimum: Option<Minimum<S>>,
}

impl<S> fmt::Debug for Objective<S>
where
    S: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("dim", &self.dim)
            .field("analytic_grad", &self.grad.is_some())
            .field("minimum", &self.minimum)
            .finish()
    }
}

/// `F(x) = x^2 + b x + c` with analytic gradient `2x + b`.
pub fn quadratic_objective<S: Scalar>(b: S, c: S) -> Objective<S> {
    let two = S::lit(2.0);
    let x_min = -b / two;
    Objective {
        dim: 1,
        eval: Arc::new(move |x: &[S]| x[0] * x[0] + b * x[0] + c),
        grad: Some(Arc::new(move |x: &[S], g: &mut [S]| g[0] = two * x[0] + b)),
        minimum: Some(Minimum {
            point: vec![x_min],
            value: c - b * b / S::lit(4.0),
        }),
    }
}

/// `F(x) = |x|^3` with gradient `3 x |x|`, continuous through the origin.
pub fn abs_cubed_objective<S: Scalar>() -> Objective<S> {
    let three = S::lit(3.0);
    Objective {
        dim: 1,
        eval: Arc::new(|x: &[S]| x[0].abs().powi(3)),
        grad: Some(Arc::new(move |x: &[S], g: &mut [S]| g[0] = three * x[0] * x[0].abs())),
        minimum: Some(Minimum {
            point: vec![S::zero()],
            value: S::zero(),
        }),
    }
}

/// Wraps a user scalar field. Without `grad` the gradient falls back to
/// central differences with step `1e-6 * max(1, |x_i|)` per coordinate.
pub fn custom_objective<S, E>(dim: usize, eval: E, grad: Option<VectorField<S>>) -> Result<Objective<S>>
where
    S: Scalar,
    E: Fn(&[S]) -> S + Send + Sync + 'static,
{
    if dim == 0 {
        return Err(invalid("objective dimension must be at least 1"));
    }
    Ok(Objective {
        dim,
        eval: Arc::new(eval),
        grad,
        minimum: None,
    })
}

impl<S: Scalar> Objective<S> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grad_kind(&self) -> GradKind {
        if self.grad.is_some() {
            GradKind::Analytic
        } else {
            GradKind::CentralDifference
        }
    }

    pub fn minimum(&self) -> Option<&Minimum<S>> {
        self.minimum.as_ref()
    }

    /// Attaches a known minimizer, used for Lyapunov bookkeeping.
    pub fn with_minimum(mut self, point: Vec<S>, value: S) -> Self {
        self.minimum = Some(Minimum { point, value });
        self
    }

    pub fn eval(&self, x: &[S]) -> S {
        debug_assert_eq!(x.len(), self.dim);
        (self.eval)(x)
    }

    pub fn grad_into(&self, x: &[S], out: &mut [S]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        match &self.grad {
            Some(g) => g(x, out),
            None => self.central_difference(x, out),
        }
    }

    pub fn grad(&self, x: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim];
        self.grad_into(x, &mut out);
        out
    }

    /// Central-difference gradient regardless of `grad_kind`.
    pub fn central_difference(&self, x: &[S], out: &mut [S]) {
        let base = fd_base_step::<S>();
        let mut probe = x.to_vec();
        for i in 0..self.dim {
            let h = base * S::one().max(x[i].abs());
            probe[i] = x[i] + h;
            let up = (self.eval)(&probe);
            probe[i] = x[i] - h;
            let down = (self.eval)(&probe);
            probe[i] = x[i];
            out[i] = (up - down) / (h + h);
        }
    }

    /// Scalar evaluation for one-dimensional objectives.
    #[inline]
    pub fn eval1(&self, x: S) -> S {
        debug_assert_eq!(self.dim, 1);
        (self.eval)(std::slice::from_ref(&x))
    }

    /// Scalar derivative for one-dimensional objectives.
    #[inline]
    pub fn grad1(&self, x: S) -> S {
        let mut g = [S::zero()];
        self.grad_into(std::slice::from_ref(&x), &mut g);
        g[0]
    }

    pub(crate) fn require_scalar(&self) -> Result<()> {
        if self.dim == 1 {
            Ok(())
        } else {
            Err(invalid(format!(
                "needle approximations are scalar; objective has dimension {}",
                self.dim
            )))
        }
    }
}

// 1e-6 at double precision; coarser types get a cube-root-of-epsilon step.
fn fd_base_step<S: Scalar>() -> S {
    S::lit(1e-6).max(S::lit(0.1) * S::epsilon().cbrt())
}
