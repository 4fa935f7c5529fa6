//! Scalar state-transition values of the variational equation
//! `v' = F'(x*(t)) u1(t) v` along a stored trajectory `x*`.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::objective::Objective;
use crate::quad::cumulative_one_sided;
use crate::scalar::Scalar;
use crate::signals::Signal;
use crate::sim::Trajectory;

/// Evaluates `Phi(t, t0) = exp(int_{t0}^{t} F'(x*) u1)` by composite
/// trapezoid on the trajectory grid. Query times snap to grid nodes.
#[derive(Debug, Clone)]
pub struct TransitionEvaluator<S> {
    base: Arc<Trajectory<S>>,
    right: Vec<S>,
    left: Vec<S>,
    cumulative: Vec<S>,
}

impl<S: Scalar> TransitionEvaluator<S> {
    /// `u1 = None` means `u1 = 1`. At a jump of `u1` the trapezoid uses the
    /// one-sided values of the adjacent segment.
    pub fn new(base: Arc<Trajectory<S>>, f: &Objective<S>, u1: Option<&Signal<S>>) -> Result<Self> {
        f.require_scalar()?;
        if base.dim() != 1 {
            return Err(invalid("transition values need a scalar base trajectory"));
        }
        let n = base.len();
        let mut right = Vec::with_capacity(n);
        let mut left = Vec::with_capacity(n);
        for k in 0..n {
            let d = f.grad1(base.x(k));
            match u1 {
                None => {
                    right.push(d);
                    left.push(d);
                }
                Some(u) => {
                    let t = base.time(k);
                    right.push(d * u.eval(t));
                    left.push(d * u.eval_left(t));
                }
            }
        }
        let cumulative = cumulative_one_sided(&right, &left, base.spacing());
        Ok(Self {
            base,
            right,
            left,
            cumulative,
        })
    }

    pub fn base(&self) -> &Trajectory<S> {
        &self.base
    }

    /// Node index for `t`, rejecting times outside the trajectory or not
    /// within half a grid spacing of a node.
    pub fn index(&self, t: S) -> Result<usize> {
        let start = self.base.t0();
        let end = self.base.final_time();
        let dt = self.base.spacing();
        let slack = end.abs().max(S::one()) * S::snap_tolerance();
        if !(t >= start - slack && t <= end + slack) {
            return Err(Error::OutOfCoverage {
                time: t.as_f64(),
                start: start.as_f64(),
                end: end.as_f64(),
            });
        }
        let q = (t - start) / dt;
        let k = q.round();
        if (q - k).abs() >= S::lit(0.5) {
            return Err(Error::OffGrid { time: t.as_f64() });
        }
        Ok(k.to_usize().unwrap_or(0).min(self.cumulative.len() - 1))
    }

    /// `log Phi(t_k, 0)` at node `k`.
    pub fn log_stm_at(&self, k: usize) -> S {
        self.cumulative[k]
    }

    /// Integrand `F'(x*) u1` leaving node `k`.
    pub fn integrand_right(&self, k: usize) -> S {
        self.right[k]
    }

    /// Integrand `F'(x*) u1` arriving at node `k`.
    pub fn integrand_left(&self, k: usize) -> S {
        self.left[k]
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }
}

/// `Phi(t, t0)`. Swapping the arguments inverts the value.
pub fn stm<S: Scalar>(ev: &TransitionEvaluator<S>, t: S, t0: S) -> Result<S> {
    let a = ev.index(t)?;
    let b = ev.index(t0)?;
    Ok((ev.cumulative[a] - ev.cumulative[b]).exp())
}

/// `Phi_2(t, t0) = Phi(T - t, T - t0)`: the transition over the second half
/// period, where `u1 = -1` retraces `x*` backwards.
pub fn stm_reflected<S: Scalar>(ev: &TransitionEvaluator<S>, t: S, t0: S, period: S) -> Result<S> {
    stm(ev, period - t, period - t0)
}

/// Transition over a full square-wave period composed from the first-half
/// evaluator and its reflection across `T/2`.
pub fn stm_piecewise<S: Scalar>(ev: &TransitionEvaluator<S>, t: S, t0: S, period: S) -> Result<S> {
    let tol = period * S::snap_tolerance();
    let inside = |s: S| s >= -tol && s <= period + tol;
    if !inside(t) || !inside(t0) {
        return Err(invalid(format!(
            "transition arguments must lie in [0, T] (t = {t}, t0 = {t0}, T = {period})"
        )));
    }
    let half = period / S::lit(2.0);
    let first = |s: S| s <= half + tol;
    let second = |s: S| s >= half - tol;
    if first(t) && first(t0) {
        stm(ev, t, t0)
    } else if second(t) && second(t0) {
        stm_reflected(ev, t, t0, period)
    } else if second(t) {
        Ok(stm_reflected(ev, t, half, period)? * stm(ev, half, t0)?)
    } else {
        Ok(stm(ev, t, half)? * stm_reflected(ev, half, t0, period)?)
    }
}
