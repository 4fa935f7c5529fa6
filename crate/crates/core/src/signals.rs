//! Periodic dither signals.
//!
//! Piecewise signals are right-continuous: the value at a breakpoint belongs
//! to the interval starting there. [`Signal::eval_left`] returns the limit
//! from the left, which integrators use at the end of a step.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::quad::cumulative_one_sided;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    SquareU1,
    TwoNeedleU2,
    TrigCos,
    TrigSin,
    SmoothRoot,
    Custom,
    NeedleDiscretized,
}

/// Period, needle width and needle amplitude of the two-needle sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeedleSpec<S> {
    period: S,
    epsilon: S,
    alpha: S,
}

impl<S: Scalar> NeedleSpec<S> {
    pub fn new(period: S, epsilon: S, alpha: S) -> Result<Self> {
        if !(period > S::zero()) || !period.is_finite() {
            return Err(invalid(format!("period T must be positive (T = {period})")));
        }
        if !(epsilon > S::zero()) {
            return Err(invalid(format!("epsilon must be positive (epsilon = {epsilon})")));
        }
        let half = period / S::lit(2.0);
        if !(epsilon < half) {
            return Err(invalid(format!(
                "constraint violated: epsilon < T/2 (epsilon = {epsilon}, T/2 = {half})"
            )));
        }
        if !alpha.is_finite() {
            return Err(invalid("alpha must be finite"));
        }
        Ok(Self { period, epsilon, alpha })
    }

    pub fn period(&self) -> S {
        self.period
    }

    pub fn epsilon(&self) -> S {
        self.epsilon
    }

    pub fn alpha(&self) -> S {
        self.alpha
    }

    pub fn half_period(&self) -> S {
        self.period / S::lit(2.0)
    }
}

type CustomFn<S> = Arc<dyn Fn(S) -> S + Send + Sync>;

#[derive(Clone)]
enum Shape<S> {
    /// Constant `values[i]` on `[breaks[i], breaks[i+1])`, the last interval ending at `T`.
    Piecewise { breaks: Vec<S>, values: Vec<S> },
    Cos { omega: S, gain: S },
    Sin { omega: S, gain: S },
    RootSin { omega: S, root: S },
    PowCos { omega: S, power: i32 },
    Custom(CustomFn<S>),
    Discretized { inner: Arc<Signal<S>>, needles: usize },
}

/// A `T`-periodic, bounded input signal evaluated by formula.
#[derive(Clone)]
pub struct Signal<S> {
    kind: SignalKind,
    period: S,
    bound: S,
    shape: Shape<S>,
}

impl<S: fmt::Debug> fmt::Debug for Signal<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Signal")
            .field("kind", &self.kind)
            .field("period", &self.period)
            .field("bound", &self.bound)
            .finish()
    }
}

/// Square wave: `+1` on `[0, T/2)`, `-1` on `[T/2, T)`.
pub fn two_needle_u1<S: Scalar>(spec: &NeedleSpec<S>) -> Signal<S> {
    Signal {
        kind: SignalKind::SquareU1,
        period: spec.period,
        bound: S::one(),
        shape: Shape::Piecewise {
            breaks: vec![S::zero(), spec.half_period()],
            values: vec![S::one(), -S::one()],
        },
    }
}

/// Needle pair: `alpha` on `[0, eps)`, `-alpha` on `[T/2, T/2 + eps)`, zero elsewhere.
pub fn two_needle_u2<S: Scalar>(spec: &NeedleSpec<S>) -> Signal<S> {
    let half = spec.half_period();
    Signal {
        kind: SignalKind::TwoNeedleU2,
        period: spec.period,
        bound: spec.alpha.abs(),
        shape: Shape::Piecewise {
            breaks: vec![S::zero(), spec.epsilon, half, half + spec.epsilon],
            values: vec![spec.alpha, S::zero(), -spec.alpha, S::zero()],
        },
    }
}

/// `(sqrt(w) cos(w t), sqrt(w) sin(w t))` with `w = 2 pi / T`.
pub fn trig_pair<S: Scalar>(period: S) -> Result<(Signal<S>, Signal<S>)> {
    check_period(period)?;
    let omega = S::TAU() / period;
    let gain = omega.sqrt();
    let cos = Signal {
        kind: SignalKind::TrigCos,
        period,
        bound: gain,
        shape: Shape::Cos { omega, gain },
    };
    let sin = Signal {
        kind: SignalKind::TrigSin,
        period,
        bound: gain,
        shape: Shape::Sin { omega, gain },
    };
    Ok((cos, sin))
}

/// Smooth square-wave approximants: the sign-preserving `(2N+1)`-th root of
/// `sin(2 pi t / T)` and `cos(2 pi t / T)^(2N+1)`.
pub fn smooth_root_pair<S: Scalar>(period: S, n: usize) -> Result<(Signal<S>, Signal<S>)> {
    check_period(period)?;
    if n == 0 {
        return Err(invalid("smooth root order N must be at least 1"));
    }
    let omega = S::TAU() / period;
    let odd = 2 * n + 1;
    let power = i32::try_from(odd).map_err(|_| invalid("smooth root order N too large"))?;
    let u1 = Signal {
        kind: SignalKind::SmoothRoot,
        period,
        bound: S::one(),
        shape: Shape::RootSin {
            omega,
            root: S::one() / S::from_index(odd),
        },
    };
    let u2 = Signal {
        kind: SignalKind::SmoothRoot,
        period,
        bound: S::one(),
        shape: Shape::PowCos { omega, power },
    };
    Ok((u1, u2))
}

/// A user signal given on one period. `f` is queried on `[0, T)` for
/// [`Signal::eval`] and on `(0, T]` for [`Signal::eval_left`], so `f(T)` is
/// read as the left limit at the period boundary.
pub fn custom_signal<S, F>(period: S, bound: S, f: F) -> Result<Signal<S>>
where
    S: Scalar,
    F: Fn(S) -> S + Send + Sync + 'static,
{
    check_period(period)?;
    Ok(Signal {
        kind: SignalKind::Custom,
        period,
        bound,
        shape: Shape::Custom(Arc::new(f)),
    })
}

/// Piecewise-constant needle approximation of `u2` with `n` needles of width
/// `eps = T / n`: on `[t_i, t_{i+1})` it takes the value `u2(t_{i+1})`.
///
/// The sample is the limit from the left at `t_{i+1}`, which coincides with
/// `u2(t_{i+1})` wherever `u2` is continuous and reproduces a piecewise
/// constant `u2` whose jumps lie on the needle grid exactly.
pub fn needle_discretize<S: Scalar>(u2: &Signal<S>, n: usize) -> Result<Signal<S>> {
    if n == 0 {
        return Err(invalid("needle count N must be at least 1"));
    }
    Ok(Signal {
        kind: SignalKind::NeedleDiscretized,
        period: u2.period,
        bound: u2.bound,
        shape: Shape::Discretized {
            inner: Arc::new(u2.clone()),
            needles: n,
        },
    })
}

fn check_period<S: Scalar>(period: S) -> Result<()> {
    if period > S::zero() && period.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("period T must be positive (T = {period})")))
    }
}

impl<S: Scalar> Signal<S> {
    /// The identically zero signal with the given period.
    pub fn zero(period: S) -> Self {
        Signal {
            kind: SignalKind::Custom,
            period,
            bound: S::zero(),
            shape: Shape::Piecewise {
                breaks: vec![S::zero()],
                values: vec![S::zero()],
            },
        }
    }

    pub fn kind(&self) -> SignalKind {
        self.kind
    }

    pub fn period(&self) -> S {
        self.period
    }

    pub fn bound(&self) -> S {
        self.bound
    }

    /// Jump locations inside one period (always including 0 for piecewise
    /// shapes). Smooth signals report none.
    pub fn breakpoints(&self) -> Vec<S> {
        match &self.shape {
            Shape::Piecewise { breaks, .. } => breaks.clone(),
            Shape::Discretized { needles, .. } => {
                let width = self.period / S::from_index(*needles);
                (0..*needles).map(|i| S::from_index(i) * width).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Right-continuous value at `t`.
    pub fn eval(&self, t: S) -> S {
        self.eval_side(t, false)
    }

    /// Limit from the left at `t`; equal to [`Signal::eval`] away from jumps.
    pub fn eval_left(&self, t: S) -> S {
        self.eval_side(t, true)
    }

    fn phase(&self, t: S) -> S {
        let r = t - self.period * (t / self.period).floor();
        if r < S::zero() {
            S::zero()
        } else if r >= self.period {
            r - self.period
        } else {
            r
        }
    }

    fn eval_side(&self, t: S, left: bool) -> S {
        let tol = self.period * S::snap_tolerance();
        match &self.shape {
            Shape::Cos { omega, gain } => *gain * (*omega * t).cos(),
            Shape::Sin { omega, gain } => *gain * (*omega * t).sin(),
            Shape::RootSin { omega, root } => {
                let s = (*omega * t).sin();
                s.signum() * s.abs().powf(*root)
            }
            Shape::PowCos { omega, power } => (*omega * t).cos().powi(*power),
            Shape::Custom(f) => {
                let mut r = self.phase(t);
                if r > self.period - tol {
                    r = S::zero();
                }
                if left && r <= tol {
                    r = self.period;
                }
                f(r)
            }
            Shape::Piecewise { breaks, values } => {
                let r = self.phase(t);
                values[piece_index(breaks, self.period, r, tol, left)]
            }
            Shape::Discretized { inner, needles } => {
                let width = self.period / S::from_index(*needles);
                let r = self.phase(t);
                let q = r / width;
                let nearest = q.round();
                let idx = if (q - nearest).abs() * width <= tol {
                    let on = nearest.to_usize().unwrap_or(0) % needles;
                    if left {
                        (on + needles - 1) % needles
                    } else {
                        on
                    }
                } else {
                    q.floor().to_usize().unwrap_or(0).min(needles - 1)
                };
                inner.eval_left(S::from_index(idx + 1) * width)
            }
        }
    }

    /// Period average by composite trapezoid on `samples` intervals, taking
    /// one-sided values at the segment ends.
    pub fn mean(&self, samples: usize) -> S {
        let n = samples.max(1);
        let h = self.period / S::from_index(n);
        let times: Vec<S> = (0..=n).map(|k| S::from_index(k) * h).collect();
        let right: Vec<S> = times.iter().map(|&t| self.eval(t)).collect();
        let left: Vec<S> = times.iter().map(|&t| self.eval_left(t)).collect();
        cumulative_one_sided(&right, &left, h)[n] / self.period
    }
}

fn piece_index<S: Scalar>(breaks: &[S], period: S, r: S, tol: S, left: bool) -> usize {
    let last = breaks.len() - 1;
    if left {
        if r <= tol || r >= period - tol {
            return last;
        }
        breaks.iter().rposition(|&b| b < r - tol).unwrap_or(last)
    } else {
        if r >= period - tol {
            return 0;
        }
        breaks.iter().rposition(|&b| b <= r + tol).unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig4() -> NeedleSpec<f64> {
        NeedleSpec::new(1.3, 1e-5, -10.0).unwrap()
    }

    #[test]
    fn square_wave_branches() {
        let u1 = two_needle_u1(&fig4());
        assert_eq!(u1.eval(0.1), 1.0);
        assert_eq!(u1.eval(0.7), -1.0);
        assert_eq!(u1.eval(1.4), 1.0);
        assert_eq!(u1.eval(0.65), -1.0);
        assert_eq!(u1.eval_left(0.65), 1.0);
        assert_eq!(u1.eval_left(1.3), -1.0);
        assert_eq!(u1.eval(1.3), 1.0);
    }

    #[test]
    fn needle_pair_values() {
        let u2 = two_needle_u2(&fig4());
        assert_eq!(u2.eval(5e-6), -10.0);
        assert_eq!(u2.eval(0.3), 0.0);
        assert_eq!(u2.eval(0.65 + 5e-6), 10.0);
        assert_eq!(u2.eval(1e-5), 0.0);
        assert_eq!(u2.eval_left(1e-5), -10.0);
    }

    #[test]
    fn breakpoints_survive_rounding() {
        let spec = NeedleSpec::new(1.3, 1e-3, 2.0).unwrap();
        let u1 = two_needle_u1(&spec);
        let h = 1e-3 / 50.0;
        let t = 32_500.0 * h;
        assert_eq!(u1.eval(t), -1.0);
        assert_eq!(u1.eval_left(t), 1.0);
    }

    #[test]
    fn needle_spec_validation() {
        assert!(NeedleSpec::new(1.0, 0.5, 1.0).is_err());
        assert!(NeedleSpec::new(1.0, 0.0, 1.0).is_err());
        assert!(NeedleSpec::new(-1.0, 0.1, 1.0).is_err());
        let msg = NeedleSpec::new(1.3, 0.7, 1.0).unwrap_err().to_string();
        assert!(msg.contains("epsilon < T/2"), "{msg}");
    }

    #[test]
    fn trig_values() {
        let (c, s) = trig_pair(std::f64::consts::TAU).unwrap();
        assert_eq!(c.eval(0.0), 1.0);
        assert_eq!(s.eval(0.0), 0.0);
        let (c4, _) = trig_pair(std::f64::consts::FRAC_PI_2).unwrap();
        assert!((c4.eval(0.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn smooth_root_values() {
        let (u1, u2) = smooth_root_pair(1.0_f64, 1).unwrap();
        assert!((u1.eval(0.25) - 1.0).abs() < 1e-15);
        assert_eq!(u2.eval(0.0), 1.0);
        let (_, u2) = smooth_root_pair(1.0_f64, 10).unwrap();
        assert!(u2.eval(0.25).abs() < 1e-15);
        let (u1, _) = smooth_root_pair(1.0_f64, 2).unwrap();
        assert!((u1.eval(0.75) + 1.0).abs() < 1e-15);
        assert!(smooth_root_pair(1.0_f64, 0).is_err());
    }

    #[test]
    fn discretization_samples_right_endpoints() {
        let zero = Signal::<f64>::zero(1.0);
        let d = needle_discretize(&zero, 7).unwrap();
        assert!((0..50).all(|k| d.eval(k as f64 * 0.031) == 0.0));

        let ramp = custom_signal(1.0, 1.0, |t: f64| t).unwrap();
        let d = needle_discretize(&ramp, 2).unwrap();
        assert_eq!(d.eval(0.25), 0.5);
        assert_eq!(d.eval(0.75), 1.0);

        let (_, s) = trig_pair(std::f64::consts::TAU).unwrap();
        let d = needle_discretize(&s, 4).unwrap();
        assert!((d.eval(0.1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn discretizing_a_grid_aligned_needle_pair_reproduces_it() {
        let spec = NeedleSpec::new(1.3, 1e-3, -10.0).unwrap();
        let u2 = two_needle_u2(&spec);
        let d = needle_discretize(&u2, 1300).unwrap();
        for k in 0..2600 {
            let t = (k as f64 + 0.5) * 5e-4;
            assert_eq!(d.eval(t), u2.eval(t), "t = {t}");
        }
    }

    #[test]
    fn discretization_converges_for_trig() {
        let (_, s) = trig_pair(1.0).unwrap();
        let dev = |n: usize| {
            let d = needle_discretize(&s, n).unwrap();
            (0..997)
                .map(|k| {
                    let t = k as f64 / 997.0;
                    (d.eval(t) - s.eval(t)).abs()
                })
                .fold(0.0, f64::max)
        };
        let (a, b, c) = (dev(8), dev(32), dev(128));
        assert!(a > b && b > c, "{a} {b} {c}");
    }

    #[test]
    fn needle_pair_integrates_to_zero() {
        let u2 = two_needle_u2(&NeedleSpec::new(1.0, 0.125, 3.0).unwrap());
        assert_eq!(u2.mean(8), 0.0);
    }

    #[test]
    fn builtin_signals_are_periodic_bounded_and_zero_mean() {
        let spec = NeedleSpec::new(1.3, 0.01, -10.0).unwrap();
        let mut all = vec![two_needle_u1(&spec), two_needle_u2(&spec)];
        let (a, b) = trig_pair(0.7).unwrap();
        all.extend([a, b]);
        let (a, b) = smooth_root_pair(2.0, 3).unwrap();
        all.extend([a, b]);
        for s in &all {
            let period = s.period();
            for k in 0..500 {
                let t = k as f64 * 0.01237 + 0.003;
                assert!((s.eval(t + period) - s.eval(t)).abs() < 1e-9, "{:?}", s.kind());
                assert!(s.eval(t).abs() <= s.bound() + 1e-12);
            }
            let mean = s.mean(20_000);
            assert!(mean.abs() < 1e-6, "{:?} mean {mean}", s.kind());
        }
    }
}
