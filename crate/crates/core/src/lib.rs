//! Needle-shaped dither signals for gradient estimation in scalar
//! control-affine systems `x' = F(x) u1(t) + u2(t)`, their first-order
//! approximations, closed forms for quadratic objectives, and a
//! continuous-time accelerated gradient flow.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix double precision.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accel;
pub mod error;
pub mod needleapprox;
pub mod objective;
pub mod quad;
pub mod quadratic;
pub mod scalar;
pub mod signals;
pub mod sim;
pub mod variational;

pub use error::{Error, PartialRun, Result};
pub use scalar::Scalar;

pub type Objective64 = objective::Objective<f64>;
pub type Signal64 = signals::Signal<f64>;
pub type NeedleSpec64 = signals::NeedleSpec<f64>;
pub type SolverConfig64 = sim::SolverConfig<f64>;
pub type Trajectory64 = sim::Trajectory<f64>;
pub type TransitionEvaluator64 = variational::TransitionEvaluator<f64>;
pub type QuadraticCase64 = quadratic::QuadraticCase<f64>;
pub type FixedPoints64 = quadratic::FixedPoints<f64>;
pub type ApproxResult64 = needleapprox::ApproxResult<f64>;
pub type AccelParams64 = accel::AccelParams<f64>;
pub type LyapunovTrace64 = accel::LyapunovTrace<f64>;
