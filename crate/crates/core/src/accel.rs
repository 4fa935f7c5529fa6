//! Second-order gradient dynamics
//! `z1' = z2`, `z2' = -k z2 - c1 grad F(z1) - c2 grad F(z1 + gamma z2)`
//! and its heavy-ball and Nesterov special cases.

use crate::error::{invalid, Result};
use crate::objective::Objective;
use crate::scalar::Scalar;
use crate::sim::{integrate_ode, SolverConfig, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccelMethod {
    Hybrid,
    /// Drops the look-ahead term (`c2` unused).
    HeavyBall,
    /// Drops the `c1` term.
    Nesterov,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelParams<S> {
    pub k: S,
    pub c1: S,
    pub c2: S,
    pub gamma: S,
    pub method: AccelMethod,
}

impl<S: Scalar> AccelParams<S> {
    pub fn hybrid(k: S, c1: S, c2: S, gamma: S) -> Self {
        Self {
            k,
            c1,
            c2,
            gamma,
            method: AccelMethod::Hybrid,
        }
    }

    pub fn heavy_ball(k: S, c1: S) -> Self {
        Self {
            k,
            c1,
            c2: S::zero(),
            gamma: S::zero(),
            method: AccelMethod::HeavyBall,
        }
    }

    pub fn nesterov(k: S, c2: S, gamma: S) -> Self {
        Self {
            k,
            c1: S::zero(),
            c2,
            gamma,
            method: AccelMethod::Nesterov,
        }
    }

    /// Heavy ball with gain `c1 + c2`: same linearization at the minimizer
    /// when `gamma = 0`.
    pub fn matched_heavy_ball(&self) -> Self {
        Self::heavy_ball(self.k, self.c1 + self.c2)
    }

    /// Nesterov parameters `c2' = c1 + c2`, `gamma' = c2 gamma / (c1 + c2)`,
    /// which give the identical vector field when `F` is quadratic.
    pub fn matched_nesterov(&self) -> Self {
        let gain = self.c1 + self.c2;
        Self::nesterov(self.k, gain, self.c2 * self.gamma / gain)
    }

    /// Coefficient of `F - F*` in the Lyapunov function.
    pub fn potential_gain(&self) -> S {
        match self.method {
            AccelMethod::Hybrid => self.c1 + self.c2,
            AccelMethod::HeavyBall => self.c1,
            AccelMethod::Nesterov => self.c2,
        }
    }

    /// Requires every parameter the method uses to be positive.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: S| {
            if v > S::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive ({name} = {v})")))
            }
        };
        positive("k", self.k)?;
        match self.method {
            AccelMethod::Hybrid => {
                positive("c1", self.c1)?;
                positive("c2", self.c2)?;
                positive("gamma", self.gamma)
            }
            AccelMethod::HeavyBall => positive("c1", self.c1),
            AccelMethod::Nesterov => {
                positive("c2", self.c2)?;
                positive("gamma", self.gamma)
            }
        }
    }
}

fn rhs<S: Scalar>(f: &Objective<S>, p: &AccelParams<S>, state: &[S], out: &mut [S], scratch: &mut [S]) {
    let n = f.dim();
    let (z1, z2) = state.split_at(n);
    let (d1, d2) = out.split_at_mut(n);
    let (grad, ahead) = scratch.split_at_mut(n);
    d1.copy_from_slice(z2);
    for i in 0..n {
        d2[i] = -p.k * z2[i];
    }
    if p.method != AccelMethod::Nesterov {
        f.grad_into(z1, grad);
        for i in 0..n {
            d2[i] = d2[i] - p.c1 * grad[i];
        }
    }
    if p.method != AccelMethod::HeavyBall {
        for i in 0..n {
            ahead[i] = z1[i] + p.gamma * z2[i];
        }
        f.grad_into(ahead, grad);
        for i in 0..n {
            d2[i] = d2[i] - p.c2 * grad[i];
        }
    }
}

/// Vector field of the selected method at `state = (z1, z2)`.
/// Parameters are not range-checked here.
pub fn accel_rhs<S: Scalar>(f: &Objective<S>, params: &AccelParams<S>, state: &[S]) -> Result<Vec<S>> {
    if state.len() != 2 * f.dim() {
        return Err(invalid(format!(
            "state has length {}, expected 2 * dim = {}",
            state.len(),
            2 * f.dim()
        )));
    }
    let mut out = vec![S::zero(); state.len()];
    let mut scratch = vec![S::zero(); 2 * f.dim()];
    rhs(f, params, state, &mut out, &mut scratch);
    Ok(out)
}

/// `V = |z2|^2 / 2 + gain (F(z1) - F*)` at every stored sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovTrace<S> {
    pub times: Vec<S>,
    pub values: Vec<S>,
    /// `F*` used in `V`.
    pub reference: S,
    /// False when `F*` is the smallest `F(z1)` seen along the trajectory.
    pub exact_reference: bool,
}

pub fn run_accel<S: Scalar>(
    f: &Objective<S>,
    params: &AccelParams<S>,
    z0: &[S],
    horizon: S,
    cfg: &SolverConfig<S>,
) -> Result<(Trajectory<S>, LyapunovTrace<S>)> {
    params.validate()?;
    let n = f.dim();
    if z0.len() != 2 * n {
        return Err(invalid(format!(
            "initial state has length {}, expected 2 * dim = {}",
            z0.len(),
            2 * n
        )));
    }
    let scratch = std::cell::RefCell::new(vec![S::zero(); 2 * n]);
    let traj = integrate_ode(
        |_, z: &[S], out: &mut [S]| rhs(f, params, z, out, &mut scratch.borrow_mut()),
        z0,
        horizon,
        cfg,
    )?;
    let potentials: Vec<S> = traj.states().map(|z| f.eval(&z[..n])).collect();
    let (reference, exact_reference) = match f.minimum() {
        Some(m) => (m.value, true),
        None => (potentials.iter().copied().fold(S::infinity(), S::min), false),
    };
    let gain = params.potential_gain();
    let half = S::lit(0.5);
    let values = traj
        .states()
        .zip(&potentials)
        .map(|(z, &fz)| {
            let kinetic = z[n..].iter().fold(S::zero(), |acc, &v| acc + v * v);
            half * kinetic + gain * (fz - reference)
        })
        .collect();
    let times = (0..traj.len()).map(|k| traj.time(k)).collect();
    Ok((
        traj,
        LyapunovTrace {
            times,
            values,
            reference,
            exact_reference,
        },
    ))
}

/// Iterates `xi1+ = xi2`, `xi2+ = xi1 + eps^2 alpha (F'(xi1) + F'(xi2))`.
/// The returned sequence starts with `xi0` and has `k_steps + 1` entries.
pub fn euler_discretize_xi<S: Scalar>(
    f: &Objective<S>,
    epsilon: S,
    alpha: S,
    xi0: (S, S),
    k_steps: usize,
) -> Result<Vec<(S, S)>> {
    f.require_scalar()?;
    if k_steps == 0 {
        return Err(invalid("k_steps must be at least 1"));
    }
    let gain = epsilon * epsilon * alpha;
    let mut out = Vec::with_capacity(k_steps + 1);
    let (mut a, mut b) = xi0;
    out.push((a, b));
    for _ in 0..k_steps {
        let next = a + gain * (f.grad1(a) + f.grad1(b));
        a = b;
        b = next;
        out.push((a, b));
    }
    Ok(out)
}
