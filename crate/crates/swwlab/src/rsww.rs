//! Rotating shallow water solutions by point transformation.
//!
//! Each solution (u, v, h) of the stationary system yields a solution
//! (ũ, ṽ, h̃) of the rotating system with Coriolis parameter f = 2Ω. With
//! t★ = t + t₀ and κ = cot(Ωt★), the independent variables map as
//!
//!   t′ = −κ/(2Ω),  x′ = (y − κx)/2,  y′ = −(x + κy)/2,
//!
//! the stationary solution is read at (t′, x′, y′), and the state lifts as
//!
//!   ũ = −κu − v + Ω(y + κx),
//!   ṽ = u − κv − Ω(x − κy),
//!   h̃ = h·csc²(Ωt★).
//!
//! The composition is valid on every time slice with sin(Ωt★) ≠ 0 and
//! covers one rotation period per branch. The shift t₀ picks the branch;
//! its default, a quarter period π/(2Ω), places the rotating frame's t = 0
//! slice on the stationary solution's reference point, so the analytic
//! seed r = 0 remains exact at the space-time origin.

use crate::catalog::Solution;
use crate::core::{Point, State};
use crate::solver::{ImplicitSystem, SolveError, SolveReport};
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

/// Times with |sin(Ωt★)| below this are treated as singular.
pub const SINGULAR_SIN: f64 = 1e-12;

/// Branch shift t₀ of the rotating composition.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum TimeShift {
    /// t₀ = π/(2Ω).
    #[default]
    QuarterPeriod,
    Value(f64),
}

impl TimeShift {
    pub fn resolve(self, omega: f64) -> f64 {
        match self {
            TimeShift::QuarterPeriod => FRAC_PI_2 / omega,
            TimeShift::Value(v) => v,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RswwError {
    #[error("singular time slice: sin(Ω·(t + t0)) vanishes")]
    SingularTime,
    #[error("rotating composition needs omega > 0, got {0}")]
    NonRotating(f64),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Check a rotating-frame time for singularity of the composition.
pub fn is_singular_time(t: f64, omega: f64, t0: f64) -> bool {
    (omega * (t + t0)).sin().abs() < SINGULAR_SIN
}

/// Map rotating-frame coordinates (with `pt.t` the absolute time t★) to
/// the stationary solution's coordinates.
pub fn map_independent(pt: Point, omega: f64) -> Result<Point, RswwError> {
    let w = omega * pt.t;
    if w.sin().abs() < SINGULAR_SIN {
        return Err(RswwError::SingularTime);
    }
    let k = w.cos() / w.sin();
    Ok(Point::new(
        -k / (2.0 * omega),
        0.5 * (pt.y - k * pt.x),
        -0.5 * (pt.x + k * pt.y),
    ))
}

/// Lift a stationary state read at the mapped point to the rotating frame
/// at `pt` (with `pt.t` the absolute time t★).
pub fn lift_state(st: State, pt: Point, omega: f64) -> Result<State, RswwError> {
    let w = omega * pt.t;
    let s = w.sin();
    if s.abs() < SINGULAR_SIN {
        return Err(RswwError::SingularTime);
    }
    let k = w.cos() / s;
    Ok(State::new(
        -k * st.u - st.v + omega * (pt.y + k * pt.x),
        st.u - k * st.v - omega * (pt.x - k * pt.y),
        st.h / (s * s),
    ))
}

/// Evaluate the rotating solution at a rotating-frame point. The
/// stationary root is found on the seed-connected branch; the report's
/// invariants are those of the stationary solution at the mapped point.
pub fn eval_rsww(
    sol: &Solution,
    pt: Point,
    shift: TimeShift,
    tol: f64,
) -> Result<(State, SolveReport), RswwError> {
    let omega = sol.params().omega;
    if !(omega > 0.0) {
        return Err(RswwError::NonRotating(omega));
    }
    let t0 = shift.resolve(omega);
    let star = Point::new(pt.t + t0, pt.x, pt.y);
    let mapped = map_independent(star, omega)?;
    let (st, rep) = sol.eval_sww(mapped, tol)?;
    let lifted = lift_state(st, star, omega)?;
    Ok((lifted, rep))
}

/// Implicit system of the rotating composition, in rotating-frame
/// coordinates. Its reference point is the slice where the map lands on
/// the stationary origin, so the analytic seed stays exact. Singular
/// slices surface as domain errors.
pub fn implicit_system(sol: &Solution, shift: TimeShift) -> Result<ImplicitSystem<'_>, RswwError> {
    let omega = sol.params().omega;
    if !(omega > 0.0) {
        return Err(RswwError::NonRotating(omega));
    }
    let t0 = shift.resolve(omega);
    Ok(ImplicitSystem {
        dim: sol.invariant_dim(),
        residual: Box::new(move |r, pt, out| {
            let star = Point::new(pt.t + t0, pt.x, pt.y);
            let mapped = map_independent(star, omega).map_err(|e| e.to_string())?;
            sol.residual(r, mapped, out)
        }),
        jacobian: None,
        ref_pt: Point::new(FRAC_PI_2 / omega - t0, 0.0, 0.0),
        seed: [0.0, 0.0],
    })
}

/// The lifted solution as a space-time field, for residual checks.
pub fn field_fn(
    sol: &Solution,
    shift: TimeShift,
    tol: f64,
) -> impl Fn(Point) -> Result<State, String> + Sync + '_ {
    move |pt| {
        eval_rsww(sol, pt, shift, tol)
            .map(|(st, _)| st)
            .map_err(|e| e.to_string())
    }
}
