//! Closed forms for `F(x) = x^2 + b x + c` with `4c - b^2 > 0`.
//!
//! On the first half of period `j` the unperturbed solution anchored at
//! `x*(jT + eps) = x_j` is `x*(t) = (tan(p (t + K_j)) sqrt(D) - b) / 2` with
//! `D = 4c - b^2`, `p = sqrt(D) / 2` and
//! `K_j = -jT - eps + atan((b + 2 x_j) / sqrt(D)) / p`.
//! Angles are formed from the in-period offset `t - jT`.

use crate::error::{invalid, Error, PartialRun, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCase<S> {
    b: S,
    c: S,
    discriminant: S,
    root_d: S,
    p: S,
}

impl<S: Scalar> QuadraticCase<S> {
    pub fn new(b: S, c: S) -> Self {
        let discriminant = S::lit(4.0) * c - b * b;
        let root_d = discriminant.sqrt();
        Self {
            b,
            c,
            discriminant,
            root_d,
            p: root_d / S::lit(2.0),
        }
    }

    pub fn b(&self) -> S {
        self.b
    }

    pub fn c(&self) -> S {
        self.c
    }

    /// `4c - b^2`.
    pub fn discriminant(&self) -> S {
        self.discriminant
    }

    pub fn discriminant_positive(&self) -> bool {
        self.discriminant > S::zero()
    }

    /// `sqrt(4c - b^2) / 2`; NaN unless the discriminant is positive.
    pub fn p(&self) -> S {
        self.p
    }

    pub fn x_min(&self) -> S {
        -self.b / S::lit(2.0)
    }

    fn require(&self) -> Result<()> {
        if self.discriminant_positive() {
            Ok(())
        } else {
            Err(Error::NonPositiveDiscriminant(self.discriminant.as_f64()))
        }
    }

    /// `atan((b + 2 x_j) / sqrt(D))`, the angle `p (t + K_j)` at `t = jT + eps`.
    fn anchor_angle(&self, x_j: S) -> S {
        ((self.b + S::lit(2.0) * x_j) / self.root_d).atan()
    }

    fn x_from_angle(&self, theta: S) -> S {
        (theta.tan() * self.root_d - self.b) / S::lit(2.0)
    }

    /// `K_j`.
    pub fn k_offset(&self, j: usize, x_j: S, period: S, epsilon: S) -> Result<S> {
        self.require()?;
        Ok(-S::from_index(j) * period - epsilon + self.anchor_angle(x_j) / self.p)
    }

    /// Angle `p (t + K_j)` from the in-period offset `s = t - jT`.
    fn angle(&self, theta0: S, s: S, epsilon: S) -> S {
        theta0 + self.p * (s - epsilon)
    }
}

fn in_period_offset<S: Scalar>(t: S, j: usize, period: S) -> Result<S> {
    let s = t - S::from_index(j) * period;
    let tol = period.max(t.abs()) * S::snap_tolerance();
    let half = period / S::lit(2.0);
    if s < -tol || s > half + tol {
        return Err(invalid(format!(
            "closed form covers [jT, jT + T/2]; t = {t} lies outside for j = {j}, T = {period}"
        )));
    }
    Ok(s)
}

fn cos_guard<S: Scalar>(theta: S, time: S, reason: &'static str) -> Result<S> {
    let c = theta.cos();
    if c.abs() <= S::snap_tolerance() {
        Err(Error::Singular {
            time: time.as_f64(),
            reason,
        })
    } else {
        Ok(c)
    }
}

/// Unperturbed solution on the first half of period `j`. Times at or past
/// the escape time of the branch through `x_j` are rejected.
pub fn xstar_closed_form<S: Scalar>(
    q: &QuadraticCase<S>,
    t: S,
    j: usize,
    x_j: S,
    period: S,
    epsilon: S,
) -> Result<S> {
    q.require()?;
    let s = in_period_offset(t, j, period)?;
    let theta = q.angle(q.anchor_angle(x_j), s, epsilon);
    let limit = S::FRAC_PI_2();
    if theta >= limit || theta <= -limit {
        return Err(Error::Singular {
            time: t.as_f64(),
            reason: "time at or beyond the escape time",
        });
    }
    cos_guard(theta, t, "solution escapes")?;
    Ok(q.x_from_angle(theta))
}

/// `Phi(t, t_j) = cos^2(p (t_j + K_j)) / cos^2(p (t + K_j))`.
///
/// The ratio is the analytic continuation of the transition value through
/// an escape of `x*`; only a vanishing cosine is rejected.
pub fn phi_closed_form<S: Scalar>(
    q: &QuadraticCase<S>,
    t: S,
    t_j: S,
    j: usize,
    x_j: S,
    period: S,
    epsilon: S,
) -> Result<S> {
    q.require()?;
    let s = in_period_offset(t, j, period)?;
    let s0 = in_period_offset(t_j, j, period)?;
    let theta0 = q.anchor_angle(x_j);
    let num = cos_guard(q.angle(theta0, s0, epsilon), t_j, "solution escapes at t_j")?;
    let den = cos_guard(q.angle(theta0, s, epsilon), t, "solution escapes at t")?;
    let r = num / den;
    Ok(r * r)
}

/// First escape time `(pi/2 + m pi) / p - K_j` not earlier than `jT`.
pub fn escape_time<S: Scalar>(q: &QuadraticCase<S>, j: usize, x_j: S, period: S, epsilon: S) -> Result<S> {
    q.require()?;
    let start = S::from_index(j) * period;
    // Offset from jT of the m = 0 branch, then shifted by whole multiples of pi / p.
    let base = epsilon + (S::FRAC_PI_2() - q.anchor_angle(x_j)) / q.p;
    let step = S::PI() / q.p;
    let shift = (-base / step).ceil().max(S::zero());
    Ok(start + base + shift * step)
}

/// One period of the closed-form iteration
/// `x_{j+1} = x_j + eps alpha Phi(jT, jT + eps) (1 - Phi(jT + eps, jT + T/2 - eps))`.
pub fn period_map<S: Scalar>(q: &QuadraticCase<S>, period: S, epsilon: S, alpha: S, x_j: S) -> Result<S> {
    q.require()?;
    let theta0 = q.anchor_angle(x_j);
    let c0 = theta0.cos();
    let a = q.p * (period / S::lit(2.0) - S::lit(2.0) * epsilon);
    let before = cos_guard(theta0 - q.p * epsilon, S::zero(), "solution escapes at jT")?;
    let after = cos_guard(theta0 + a, period / S::lit(2.0) - epsilon, "solution escapes at jT + T/2 - eps")?;
    let phi_lead = (c0 / before) * (c0 / before);
    let phi_half = (after / c0) * (after / c0);
    let next = x_j + epsilon * alpha * phi_lead * (S::one() - phi_half);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::Singular {
            time: period.as_f64(),
            reason: "iterate is not finite",
        })
    }
}

/// `k` iterates `x(T), ..., x(kT)` of [`period_map`].
pub fn iterate_closed_form<S: Scalar>(
    q: &QuadraticCase<S>,
    period: S,
    epsilon: S,
    alpha: S,
    x0: S,
    k: usize,
) -> std::result::Result<Vec<S>, PartialRun<S>> {
    let abort = |completed, period, source| PartialRun {
        completed,
        period,
        source,
    };
    if k == 0 {
        return Err(abort(Vec::new(), 0, invalid("iteration count k must be at least 1")));
    }
    let mut out = Vec::with_capacity(k);
    let mut x = x0;
    for j in 0..k {
        match period_map(q, period, epsilon, alpha, x) {
            Ok(next) => {
                out.push(next);
                x = next;
            }
            Err(e) => return Err(abort(out, j, e)),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoints<S> {
    pub x_bar_1: S,
    pub x_bar_2: S,
    pub stability: [Stability; 2],
    /// `a = pT/2 - 2 p eps`.
    pub angle: S,
}

impl<S: Copy> FixedPoints<S> {
    pub fn roots(&self) -> [S; 2] {
        [self.x_bar_1, self.x_bar_2]
    }
}

/// `1 - Phi(jT + eps, jT + T/2 - eps)` as a function of the period start `x_j`.
pub fn root_residual<S: Scalar>(q: &QuadraticCase<S>, period: S, epsilon: S, x: S) -> Result<S> {
    let phi = phi_closed_form(q, epsilon, period / S::lit(2.0) - epsilon, 0, x, period, epsilon)?;
    Ok(S::one() - phi)
}

/// `sin(a) (1 - w^2) + 2 cos(a) w` with `w = (b + 2x) / sqrt(4c - b^2)`.
pub fn angle_residual<S: Scalar>(q: &QuadraticCase<S>, period: S, epsilon: S, x: S) -> Result<S> {
    q.require()?;
    let a = q.p * (period / S::lit(2.0) - S::lit(2.0) * epsilon);
    let w = (q.b + S::lit(2.0) * x) / q.root_d;
    Ok(a.sin() * (S::one() - w * w) + S::lit(2.0) * a.cos() * w)
}

/// Zeros of `1 - Phi(jT + eps, jT + T/2 - eps)`:
/// `x = (sqrt(4c - b^2) (cos a -+ 1) / sin a - b) / 2`.
///
/// The roots do not depend on `alpha`; stability does, and is found by
/// iterating 50 periods from `x +- 1e-4 (1 + |x|)`.
pub fn fixed_points<S: Scalar>(q: &QuadraticCase<S>, period: S, epsilon: S, alpha: S) -> Result<FixedPoints<S>> {
    q.require()?;
    let a = q.p * (period / S::lit(2.0) - S::lit(2.0) * epsilon);
    let (sin_a, cos_a) = a.sin_cos();
    if sin_a.abs() < S::lit(1e-12) {
        return Err(Error::DegenerateAngle(sin_a.as_f64()));
    }
    let root = |w: S| (q.root_d * w - q.b) / S::lit(2.0);
    let x_bar_1 = root((cos_a - S::one()) / sin_a);
    let x_bar_2 = root((cos_a + S::one()) / sin_a);
    let stability = [
        classify(q, period, epsilon, alpha, x_bar_1),
        classify(q, period, epsilon, alpha, x_bar_2),
    ];
    Ok(FixedPoints {
        x_bar_1,
        x_bar_2,
        stability,
        angle: a,
    })
}

fn classify<S: Scalar>(q: &QuadraticCase<S>, period: S, epsilon: S, alpha: S, x_bar: S) -> Stability {
    if alpha == S::zero() {
        return Stability::Undetermined;
    }
    let delta = S::lit(1e-4) * (S::one() + x_bar.abs());
    let distance = |start: S| {
        iterate_closed_form(q, period, epsilon, alpha, start, 50)
            .ok()
            .and_then(|xs| xs.last().copied())
            .map(|x| (x - x_bar).abs())
    };
    match (distance(x_bar + delta), distance(x_bar - delta)) {
        (Some(up), Some(down)) if up < delta && down < delta => Stability::Stable,
        (Some(up), Some(down)) if up > delta && down > delta => Stability::Unstable,
        _ => Stability::Undetermined,
    }
}
