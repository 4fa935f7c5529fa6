//! Fixed-step integration of `x' = g1(x) u1(t) + g2(x) u2(t)` and of general
//! ODEs, with dense trajectory storage.

use std::io::{self, Write};

use crate::error::{invalid, Error, Result};
use crate::objective::Objective;
use crate::scalar::{integer_ratio, Scalar};
use crate::signals::{two_needle_u1, two_needle_u2, NeedleSpec, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Euler,
    Rk4,
}

/// Which one-sided value a piecewise signal contributes at a stage time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    Right,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<S> {
    pub method: Method,
    pub h: S,
    /// Integration stops once any component exceeds this magnitude.
    pub max_state: S,
    /// Store every `stride`-th step only.
    pub stride: usize,
}

impl<S: Scalar> SolverConfig<S> {
    pub fn new(method: Method, h: S) -> Self {
        Self {
            method,
            h,
            max_state: S::lit(1e6),
            stride: 1,
        }
    }

    pub fn rk4(h: S) -> Self {
        Self::new(Method::Rk4, h)
    }

    pub fn euler(h: S) -> Self {
        Self::new(Method::Euler, h)
    }

    pub fn with_max_state(mut self, max_state: S) -> Self {
        self.max_state = max_state;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > S::zero()) || !self.h.is_finite() {
            return Err(invalid(format!("step h must be positive (h = {})", self.h)));
        }
        if !(self.max_state > S::zero()) {
            return Err(invalid(format!(
                "max_state must be positive (max_state = {})",
                self.max_state
            )));
        }
        if self.stride == 0 {
            return Err(invalid("stride must be at least 1"));
        }
        Ok(())
    }

    /// Default rk4 configuration for a two-needle dither: `h = eps / m` with
    /// `m >= max(20, 20000 eps / T)` the smallest such integer for which
    /// `T / (2h)` is also an integer, so `h <= min(eps/20, T/20000)`.
    pub fn for_needles(spec: &NeedleSpec<S>) -> Result<Self> {
        let (eps, half) = (spec.epsilon(), spec.half_period());
        let ratio = S::lit(20000.0) * eps / spec.period();
        let m0 = ratio.ceil().to_usize().unwrap_or(usize::MAX).max(20);
        let limit = m0.saturating_mul(64);
        (m0..=limit)
            .map(|m| eps / S::from_index(m))
            .find(|&h| integer_ratio(half, h).is_some())
            .map(Self::rk4)
            .ok_or(Error::Misaligned {
                step: (eps / S::from_index(m0)).as_f64(),
                what: "T/2",
                value: half.as_f64(),
            })
    }

    /// Default rk4 configuration for signals whose breakpoints sit on a grid
    /// of `pieces` equal intervals per period (1 for smooth signals).
    pub fn for_period(period: S, pieces: usize) -> Self {
        let pieces = pieces.max(1);
        let m = 20000usize.div_ceil(pieces);
        Self::rk4(period / S::from_index(pieces * m.max(20)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination<S> {
    Completed,
    /// The next state would have left the `max_state` box at `time`.
    Diverged { time: S },
}

/// States on a uniform grid: sample `k` lies at `t0 + k * stride * h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    t0: S,
    h: S,
    stride: usize,
    dim: usize,
    data: Vec<S>,
    termination: Termination<S>,
}

impl<S: Scalar> Trajectory<S> {
    pub fn t0(&self) -> S {
        self.t0
    }

    /// Integrator step.
    pub fn step(&self) -> S {
        self.h
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Time between stored samples.
    pub fn spacing(&self) -> S {
        self.h * S::from_index(self.stride)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn time(&self, k: usize) -> S {
        self.t0 + S::from_index(k * self.stride) * self.h
    }

    pub fn state(&self, k: usize) -> &[S] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    /// First component of sample `k`.
    pub fn x(&self, k: usize) -> S {
        self.data[k * self.dim]
    }

    pub fn last_state(&self) -> &[S] {
        self.state(self.len() - 1)
    }

    pub fn final_time(&self) -> S {
        self.time(self.len() - 1)
    }

    pub fn states(&self) -> impl Iterator<Item = &[S]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn termination(&self) -> Termination<S> {
        self.termination
    }

    pub fn terminated_early(&self) -> bool {
        matches!(self.termination, Termination::Diverged { .. })
    }

    /// Sample index closest to `t` if `t` is within `tol` of it.
    pub fn index_near(&self, t: S, tol: S) -> Option<usize> {
        let q = (t - self.t0) / self.spacing();
        let k = q.round();
        if k < S::zero() || (q - k).abs() * self.spacing() > tol {
            return None;
        }
        k.to_usize().filter(|&k| k < self.len())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "t")?;
        for i in 1..=self.dim {
            write!(out, ",x{i}")?;
        }
        writeln!(out)?;
        for (k, state) in self.states().enumerate() {
            write!(out, "{}", csv_number(self.time(k)))?;
            for &v in state {
                write!(out, ",{}", csv_number(v))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Formats a number with 17 significant digits.
pub fn csv_number<S: Scalar>(x: S) -> String {
    format!("{:.16e}", x.as_f64())
}

fn run<S, F>(x0: &[S], horizon: S, cfg: &SolverConfig<S>, mut f: F) -> Result<Trajectory<S>>
where
    S: Scalar,
    F: FnMut(S, &[S], Side, &mut [S]),
{
    cfg.validate()?;
    if !(horizon > S::zero()) {
        return Err(invalid(format!("horizon must be positive (horizon = {horizon})")));
    }
    if x0.is_empty() {
        return Err(invalid("initial state must not be empty"));
    }
    if x0.iter().any(|v| !v.is_finite() || v.abs() > cfg.max_state) {
        return Err(invalid("initial state outside the max_state bound"));
    }
    let steps = integer_ratio(horizon, cfg.h).ok_or(Error::Misaligned {
        step: cfg.h.as_f64(),
        what: "horizon",
        value: horizon.as_f64(),
    })?;
    if steps == 0 {
        return Err(invalid("horizon shorter than one step"));
    }
    if steps % cfg.stride != 0 {
        return Err(invalid(format!(
            "stride {} does not divide the step count {steps}",
            cfg.stride
        )));
    }

    let dim = x0.len();
    let h = cfg.h;
    let half_h = h / S::lit(2.0);
    let sixth = h / S::lit(6.0);
    let two = S::lit(2.0);

    let mut data = Vec::with_capacity((steps / cfg.stride + 1) * dim);
    data.extend_from_slice(x0);
    let mut x = x0.to_vec();
    let mut k1 = vec![S::zero(); dim];
    let mut k2 = vec![S::zero(); dim];
    let mut k3 = vec![S::zero(); dim];
    let mut k4 = vec![S::zero(); dim];
    let mut probe = vec![S::zero(); dim];
    let mut termination = Termination::Completed;

    for k in 0..steps {
        let t = S::from_index(k) * h;
        let t_next = S::from_index(k + 1) * h;
        match cfg.method {
            Method::Euler => {
                f(t, &x, Side::Right, &mut k1);
                for i in 0..dim {
                    x[i] = x[i] + h * k1[i];
                }
            }
            Method::Rk4 => {
                let t_mid = t + half_h;
                f(t, &x, Side::Right, &mut k1);
                for i in 0..dim {
                    probe[i] = x[i] + half_h * k1[i];
                }
                f(t_mid, &probe, Side::Right, &mut k2);
                for i in 0..dim {
                    probe[i] = x[i] + half_h * k2[i];
                }
                f(t_mid, &probe, Side::Right, &mut k3);
                for i in 0..dim {
                    probe[i] = x[i] + h * k3[i];
                }
                f(t_next, &probe, Side::Left, &mut k4);
                for i in 0..dim {
                    x[i] = x[i] + sixth * (k1[i] + two * (k2[i] + k3[i]) + k4[i]);
                }
            }
        }
        if x.iter().any(|v| !v.is_finite() || v.abs() > cfg.max_state) {
            termination = Termination::Diverged { time: t_next };
            break;
        }
        if (k + 1) % cfg.stride == 0 {
            data.extend_from_slice(&x);
        }
    }

    Ok(Trajectory {
        t0: S::zero(),
        h,
        stride: cfg.stride,
        dim,
        data,
        termination,
    })
}

fn check_alignment<S: Scalar>(signal: &Signal<S>, h: S) -> Result<()> {
    let period = signal.period();
    let mut marks = signal.breakpoints();
    if !marks.is_empty() {
        marks.push(period);
    }
    for b in marks.into_iter().filter(|&b| b > S::zero()) {
        if integer_ratio(b, h).is_none() {
            let what = if b == period { "the period" } else { "a signal breakpoint" };
            return Err(Error::Misaligned {
                step: h.as_f64(),
                what,
                value: b.as_f64(),
            });
        }
    }
    Ok(())
}

#[inline]
fn sample<S: Scalar>(signal: &Signal<S>, t: S, side: Side) -> S {
    match side {
        Side::Right => signal.eval(t),
        Side::Left => signal.eval_left(t),
    }
}

/// Integrates the scalar system `x' = g1(x) u1(t) + g2(x) u2(t)` over `[0, horizon]`.
pub fn integrate_affine<S, G1, G2>(
    g1: G1,
    g2: G2,
    u1: &Signal<S>,
    u2: &Signal<S>,
    x0: S,
    horizon: S,
    cfg: &SolverConfig<S>,
) -> Result<Trajectory<S>>
where
    S: Scalar,
    G1: Fn(S) -> S,
    G2: Fn(S) -> S,
{
    cfg.validate()?;
    check_alignment(u1, cfg.h)?;
    check_alignment(u2, cfg.h)?;
    run(&[x0], horizon, cfg, |t, x, side, out| {
        let x = x[0];
        let a = sample(u1, t, side);
        let b = sample(u2, t, side);
        let mut v = S::zero();
        if a != S::zero() {
            v = v + g1(x) * a;
        }
        if b != S::zero() {
            v = v + g2(x) * b;
        }
        out[0] = v;
    })
}

/// Integrates `x' = f(t, x)` over `[0, horizon]`.
pub fn integrate_ode<S, F>(f: F, x0: &[S], horizon: S, cfg: &SolverConfig<S>) -> Result<Trajectory<S>>
where
    S: Scalar,
    F: Fn(S, &[S], &mut [S]),
{
    run(x0, horizon, cfg, |t, x, _, out| f(t, x, out))
}

/// Solution of `x' = F(x) u1(t)` with the square-wave `u1` and no needles,
/// over `periods` periods. Leaving the `max_state` box within the first
/// period is an error; later escapes end the trajectory early.
pub fn unperturbed_solution<S: Scalar>(
    f: &Objective<S>,
    spec: &NeedleSpec<S>,
    x0: S,
    periods: usize,
    cfg: &SolverConfig<S>,
) -> Result<Trajectory<S>> {
    f.require_scalar()?;
    if periods == 0 {
        return Err(invalid("periods must be at least 1"));
    }
    let u1 = two_needle_u1(spec);
    let zero = Signal::zero(spec.period());
    let horizon = spec.period() * S::from_index(periods);
    let traj = integrate_affine(|x| f.eval1(x), |_| S::one(), &u1, &zero, x0, horizon, cfg)?;
    if let Termination::Diverged { time } = traj.termination() {
        if time <= spec.period() {
            return Err(Error::Escape {
                time: time.as_f64(),
                bound: cfg.max_state.as_f64(),
            });
        }
    }
    Ok(traj)
}

/// Solution of `x' = F(x) u1(t) + u2(t)` with both needles active.
pub fn perturbed_solution<S: Scalar>(
    f: &Objective<S>,
    spec: &NeedleSpec<S>,
    x0: S,
    periods: usize,
    cfg: &SolverConfig<S>,
) -> Result<Trajectory<S>> {
    f.require_scalar()?;
    if periods == 0 {
        return Err(invalid("periods must be at least 1"));
    }
    let horizon = spec.period() * S::from_index(periods);
    integrate_affine(
        |x| f.eval1(x),
        |_| S::one(),
        &two_needle_u1(spec),
        &two_needle_u2(spec),
        x0,
        horizon,
        cfg,
    )
}
