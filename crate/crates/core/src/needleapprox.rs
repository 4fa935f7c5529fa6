//! First-order predictions of `x(T)` for needle dithers.
//!
//! Every integral is a composite trapezoid on the grid of the unperturbed
//! trajectory `x*` (the solution with `u2 = 0`).

use std::sync::Arc;

use crate::error::{invalid, Error, PartialRun, Result};
use crate::objective::Objective;
use crate::scalar::{integer_ratio, Scalar};
use crate::signals::{two_needle_u1, NeedleSpec, Signal};
use crate::sim::{integrate_affine, SolverConfig, Termination, Trajectory};
use crate::variational::TransitionEvaluator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxResult<S> {
    /// Predicted state at `eval_time`: `base + first_order_term`.
    pub value: S,
    pub first_order_term: S,
    /// State the correction is added to: `x0` for the two-needle formulas,
    /// `x*(T)` for the many-needle ones.
    pub base: S,
    pub eval_time: S,
}

fn unperturbed_path<S: Scalar>(
    f: &Objective<S>,
    u1: &Signal<S>,
    x0: S,
    horizon: S,
    cfg: &SolverConfig<S>,
) -> Result<Arc<Trajectory<S>>> {
    let cfg = cfg.with_stride(1);
    let zero = Signal::zero(u1.period());
    let traj = integrate_affine(|x| f.eval1(x), |_| S::one(), u1, &zero, x0, horizon, &cfg)?;
    if let Termination::Diverged { time } = traj.termination() {
        return Err(Error::Escape {
            time: time.as_f64(),
            bound: cfg.max_state.as_f64(),
        });
    }
    Ok(Arc::new(traj))
}

fn require_aligned<S: Scalar>(x: S, h: S, what: &'static str) -> Result<()> {
    integer_ratio(x, h).map(|_| ()).ok_or(Error::Misaligned {
        step: h.as_f64(),
        what,
        value: x.as_f64(),
    })
}

/// One period of two needles from `x0`:
/// `x0 + eps alpha Phi(0, eps) int_eps^{T/2-eps} F'(x*(s)) Phi(s, T/2-eps) ds`.
///
/// Only `[0, T/2]` is simulated; the second half mirrors the first.
pub fn two_needle_estimate<S: Scalar>(
    f: &Objective<S>,
    spec: &NeedleSpec<S>,
    x0: S,
    cfg: &SolverConfig<S>,
) -> Result<ApproxResult<S>> {
    f.require_scalar()?;
    let (eps, half) = (spec.epsilon(), spec.half_period());
    let quarter = half / S::lit(2.0);
    if eps > quarter * (S::one() + S::snap_tolerance()) {
        return Err(invalid(format!(
            "constraint violated: epsilon <= T/4 (epsilon = {eps}, T/4 = {quarter})"
        )));
    }
    require_aligned(eps, cfg.h, "epsilon")?;
    let u1 = two_needle_u1(spec);
    let path = unperturbed_path(f, &u1, x0, half, cfg)?;
    let ev = TransitionEvaluator::new(path, f, None)?;

    let start = ev.index(eps)?;
    let end = ev.index(half - eps)?;
    let phi_lead = (ev.log_stm_at(0) - ev.log_stm_at(start)).exp();
    let dt = ev.base().spacing();
    let weight = |k: usize| (ev.log_stm_at(k) - ev.log_stm_at(end)).exp();
    let mut integral = S::zero();
    for k in start..end {
        integral = integral
            + S::lit(0.5) * dt * (ev.integrand_right(k) * weight(k) + ev.integrand_left(k + 1) * weight(k + 1));
    }
    let first = eps * spec.alpha() * phi_lead * integral;
    Ok(ApproxResult {
        value: x0 + first,
        first_order_term: first,
        base: x0,
        eval_time: spec.period(),
    })
}

/// Repeats [`two_needle_estimate`] for `k` periods, re-simulating `x*` from
/// each predicted period-start state. Returns `x(T), ..., x(kT)`.
pub fn two_needle_iterate<S: Scalar>(
    f: &Objective<S>,
    spec: &NeedleSpec<S>,
    x0: S,
    k: usize,
    cfg: &SolverConfig<S>,
) -> std::result::Result<Vec<ApproxResult<S>>, PartialRun<ApproxResult<S>>> {
    if k == 0 {
        return Err(PartialRun {
            completed: Vec::new(),
            period: 0,
            source: invalid("iteration count k must be at least 1"),
        });
    }
    let mut out: Vec<ApproxResult<S>> = Vec::with_capacity(k);
    let mut x = x0;
    for j in 0..k {
        match two_needle_estimate(f, spec, x, cfg) {
            Ok(mut r) => {
                r.eval_time = S::from_index(j + 1) * spec.period();
                x = r.value;
                out.push(r);
            }
            Err(source) => {
                return Err(PartialRun {
                    completed: out,
                    period: j,
                    source,
                })
            }
        }
    }
    Ok(out)
}

/// Period `T = 8 eps`: `x0 + eps^2 alpha (F'(x*(4 eps)) + F'(x0))`.
pub fn lie_bracket_estimate<S: Scalar>(
    f: &Objective<S>,
    epsilon: S,
    alpha: S,
    x0: S,
    cfg: &SolverConfig<S>,
) -> Result<ApproxResult<S>> {
    f.require_scalar()?;
    let spec = NeedleSpec::new(S::lit(8.0) * epsilon, epsilon, alpha)?;
    let path = unperturbed_path(f, &two_needle_u1(&spec), x0, spec.half_period(), cfg)?;
    let mid = path.x(path.len() - 1);
    let first = epsilon * epsilon * alpha * (f.grad1(mid) + f.grad1(x0));
    Ok(ApproxResult {
        value: x0 + first,
        first_order_term: first,
        base: x0,
        eval_time: spec.period(),
    })
}

/// Unperturbed path on `[0, T]` plus the scaled cumulative integral
/// `J_k = int_0^{t_k} F'(x*) u1 exp(I - M)`, where `I` is the log transition
/// from 0 and `M = max I`, so that
/// `int_{t_m}^T F'(x*) u1 Phi(s, t_m) ds = (J_n - J_m) exp(M - I_m)`.
struct TailIntegrals<S> {
    ev: TransitionEvaluator<S>,
    scaled: Vec<S>,
    shift: S,
}

impl<S: Scalar> TailIntegrals<S> {
    fn new(f: &Objective<S>, u1: &Signal<S>, u2: &Signal<S>, x0: S, cfg: &SolverConfig<S>) -> Result<Self> {
        f.require_scalar()?;
        let period = u1.period();
        if (u2.period() - period).abs() > period * S::snap_tolerance() {
            return Err(invalid(format!(
                "u1 and u2 must share the period (T1 = {period}, T2 = {})",
                u2.period()
            )));
        }
        let path = unperturbed_path(f, u1, x0, period, cfg)?;
        let ev = TransitionEvaluator::new(path, f, Some(u1))?;
        let n = ev.len();
        let shift = (0..n).map(|k| ev.log_stm_at(k)).fold(S::neg_infinity(), S::max);
        let dt = ev.base().spacing();
        let mut scaled = Vec::with_capacity(n);
        let mut acc = S::zero();
        scaled.push(acc);
        let w = |k: usize| (ev.log_stm_at(k) - shift).exp();
        for k in 1..n {
            acc = acc
                + S::lit(0.5) * dt * (ev.integrand_right(k - 1) * w(k - 1) + ev.integrand_left(k) * w(k));
            scaled.push(acc);
        }
        Ok(Self { ev, scaled, shift })
    }

    fn last(&self) -> usize {
        self.scaled.len() - 1
    }

    fn tail(&self, m: usize) -> S {
        (self.scaled[self.last()] - self.scaled[m]) * (self.shift - self.ev.log_stm_at(m)).exp()
    }

    fn x_end(&self) -> S {
        self.ev.base().x(self.last())
    }
}

/// `x*(T) + eps sum_i (int_{t_{i+1}}^T F'(x*) u1 Phi(s, t_{i+1}) ds + 1) u2(t_{i+1})`
/// with `eps = T / N`, `t_i = i eps`.
///
/// `u2(t_{i+1})` is read as the limit from the left, the value
/// [`needle_discretize`](crate::signals::needle_discretize) assigns to needle `i`.
pub fn many_needles_estimate<S: Scalar>(
    f: &Objective<S>,
    u1: &Signal<S>,
    u2: &Signal<S>,
    n: usize,
    x0: S,
    cfg: &SolverConfig<S>,
) -> Result<ApproxResult<S>> {
    if n == 0 {
        return Err(invalid("needle count N must be at least 1"));
    }
    let period = u1.period();
    let eps = period / S::from_index(n);
    require_aligned(eps, cfg.h, "T/N")?;
    let tails = TailIntegrals::new(f, u1, u2, x0, cfg)?;
    let mut sum = S::zero();
    for i in 1..=n {
        let t = S::from_index(i) * eps;
        let m = tails.ev.index(t)?;
        sum = sum + (tails.tail(m) + S::one()) * u2.eval_left(t);
    }
    let first = eps * sum;
    let base = tails.x_end();
    Ok(ApproxResult {
        value: base + first,
        first_order_term: first,
        base,
        eval_time: period,
    })
}

/// `x*(T) + int_0^T int_t^T F'(x*(s)) u1(s) Phi(s, t) u2(t) ds dt`.
pub fn many_needles_limit<S: Scalar>(
    f: &Objective<S>,
    u1: &Signal<S>,
    u2: &Signal<S>,
    x0: S,
    cfg: &SolverConfig<S>,
) -> Result<ApproxResult<S>> {
    let tails = TailIntegrals::new(f, u1, u2, x0, cfg)?;
    let base_traj = tails.ev.base();
    let dt = base_traj.spacing();
    let mut first = S::zero();
    let mut prev = (tails.tail(0) + S::one()) * u2.eval(base_traj.time(0));
    for k in 1..=tails.last() {
        let t = base_traj.time(k);
        let tail = tails.tail(k) + S::one();
        first = first + S::lit(0.5) * dt * (prev + tail * u2.eval_left(t));
        prev = tail * u2.eval(t);
    }
    let base = tails.x_end();
    Ok(ApproxResult {
        value: base + first,
        first_order_term: first,
        base,
        eval_time: u1.period(),
    })
}
