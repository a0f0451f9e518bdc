//! Exact shallow-water-wave solutions built from Riemann invariants.
//!
//! The irrotational shallow water system for (u, v, h) on flat topography,
//!
//! ```text
//!   uₜ + u uₓ + v u_y + g hₓ = 0
//!   vₜ + u vₓ + v v_y + g h_y = 0
//!   hₜ + u hₓ + v h_y + h (uₓ + v_y) = 0
//! ```
//!
//! admits families of rank-1 and rank-2 solutions parameterized by Riemann
//! invariants r(t, x, y) that are defined implicitly. This crate constructs
//! those families ([`catalog`]), solves the implicit invariant equations on
//! points and grids with deterministic continuation ([`solver`]), maps every
//! family to the rotating system with Coriolis parameter 2Ω through a point
//! transformation ([`rsww`]), and verifies the results numerically: PDE
//! residuals, Jacobian rank, trace conditions, differential constraints, and
//! the nine-generator symmetry algebra of the rotating system ([`verify`],
//! [`symmetry`]). Fresnel integrals and the Weierstrass ℘ function needed by
//! some profiles live in [`specfn`].

pub mod catalog;
pub mod core;
pub mod rsww;
pub mod solver;
pub mod specfn;
pub mod symmetry;
pub mod verify;
