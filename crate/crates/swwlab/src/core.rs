//! Domain types, coefficient matrices, the dispersion relation, and wave
//! vectors of the shallow water system.
//!
//! The system in matrix evolutionary form is uₜ + a¹(u) uₓ + a²(u) u_y = 0
//! with u = (u, v, h). Its characteristic covectors λ = (λ₀, λ₁, λ₂) satisfy
//! det(λ₀𝓘 + λ₁a¹ + λ₂a²) = q (q² − gh(λ₁² + λ₂²)), q = λ₀ + λ₁u + λ₂v,
//! giving the entropic root q = 0 and the acoustic roots q = ∓ε√(gh) for
//! unit spatial direction. The same system in trace form reads
//! Tr(𝒜^µ ∂u) = 0, µ = 1..3, with constant-sparsity matrices 𝒜^µ(u).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Physical parameters: gravitational acceleration and rotation rate.
///
/// `omega` is the angular velocity of the rotating frame; zero selects the
/// irrotational system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysParams {
    pub g: f64,
    pub omega: f64,
}

impl Default for PhysParams {
    fn default() -> Self {
        PhysParams { g: 1.0, omega: 0.0 }
    }
}

impl PhysParams {
    /// Construction guard: g > 0, omega ≥ 0, both finite.
    pub fn new(g: f64, omega: f64) -> Result<Self, CoreError> {
        if !(g.is_finite() && g > 0.0) {
            return Err(CoreError::InvalidParams("g must be finite and > 0"));
        }
        if !(omega.is_finite() && omega >= 0.0) {
            return Err(CoreError::InvalidParams("omega must be finite and >= 0"));
        }
        Ok(PhysParams { g, omega })
    }
}

/// Space-time point (t, x, y).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(t: f64, x: f64, y: f64) -> Self {
        Point { t, x, y }
    }
}

/// Fluid state (u, v, h): horizontal velocities and layer height.
///
/// h ≥ 0 is expected by physically valid states; h = 0 is accepted as a
/// degenerate evaluation (the acoustic shift √(gh) vanishes there).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub u: f64,
    pub v: f64,
    pub h: f64,
}

impl State {
    pub fn new(u: f64, v: f64, h: f64) -> Self {
        State { u, v, h }
    }
}

/// Wave-vector kind: entropic (characteristic speed equals the flow speed)
/// or acoustic (speed shifted by ±√(gh)).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaveKind {
    Entropic,
    Acoustic,
}

/// A characteristic covector λ = (λ₀, λ₁, λ₂) of the system at some state.
///
/// Acoustic covectors carry the sign ε of their √(gh) shift and a unit
/// spatial part; entropic covectors keep the caller's spatial part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveVector {
    pub lam0: f64,
    pub lam1: f64,
    pub lam2: f64,
    pub kind: WaveKind,
    pub eps: f64,
}

impl WaveVector {
    pub fn as_array(&self) -> [f64; 3] {
        [self.lam0, self.lam1, self.lam2]
    }
}

/// A pair of wave vectors with the two scalar invariants of their spatial
/// parts: delta = λ₁¹λ₂² − λ₂¹λ₁² and dot = λ⃗¹·λ⃗². For unit spatial parts
/// these satisfy the Lagrange identity delta² + dot² = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveVectorPair {
    pub a: WaveVector,
    pub b: WaveVector,
    pub delta: f64,
    pub dot: f64,
}

impl WaveVectorPair {
    pub fn new(a: WaveVector, b: WaveVector) -> Self {
        let delta = a.lam1 * b.lam2 - a.lam2 * b.lam1;
        let dot = a.lam1 * b.lam1 + a.lam2 * b.lam2;
        WaveVectorPair { a, b, delta, dot }
    }
}

/// Coefficient matrices of the evolutionary form (a¹, a²) and of the trace
/// form (𝒜¹, 𝒜², 𝒜³), all row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientMatrices {
    pub a1: [[f64; 3]; 3],
    pub a2: [[f64; 3]; 3],
    pub big_a1: [[f64; 3]; 3],
    pub big_a2: [[f64; 3]; 3],
    pub big_a3: [[f64; 3]; 3],
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("wave-vector direction must be nonzero")]
    ZeroDirection,
    #[error("invalid physical parameters: {0}")]
    InvalidParams(&'static str),
}

/// Populate a¹, a², 𝒜¹, 𝒜², 𝒜³ at the given state.
///
/// Row/column convention: matrices act on state-component index order
/// (u, v, h); Tr(𝒜^µ ∂u) with ∂u[α][i] = ∂u^α/∂x^i recovers the µ-th
/// equation (µ = 1: x-momentum, 2: y-momentum, 3: mass).
pub fn build_coefficient_matrices(s: State, p: PhysParams) -> CoefficientMatrices {
    let State { u, v, h } = s;
    let g = p.g;
    CoefficientMatrices {
        a1: [[u, 0.0, g], [0.0, u, 0.0], [h, 0.0, u]],
        a2: [[v, 0.0, 0.0], [0.0, v, g], [0.0, h, v]],
        big_a1: [[1.0, 0.0, 0.0], [u, 0.0, g], [v, 0.0, 0.0]],
        big_a2: [[0.0, 1.0, 0.0], [0.0, u, 0.0], [0.0, v, g]],
        big_a3: [[0.0, 0.0, 1.0], [h, 0.0, u], [0.0, h, v]],
    }
}

/// det(λ₀𝓘₃ + λ₁a¹ + λ₂a²) by cofactor expansion.
pub fn dispersion_det(s: State, p: PhysParams, lam: [f64; 3]) -> f64 {
    let m = build_coefficient_matrices(s, p);
    let [l0, l1, l2] = lam;
    let mut d = [[0.0f64; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            d[r][c] = l1 * m.a1[r][c] + l2 * m.a2[r][c];
        }
        d[r][r] += l0;
    }
    det3(&d)
}

/// 3×3 determinant, first-row cofactor expansion.
pub fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Build a wave vector of the requested kind at a state.
///
/// Entropic: λ₀ = −(λ₁u + λ₂v) with the direction passed through unchanged.
/// Acoustic: the direction is normalized to unit length and
/// λ₀ = −(λ₁u + λ₂v + ε√(gh)).
pub fn make_wave_vector(
    kind: WaveKind,
    eps: f64,
    dir: (f64, f64),
    s: State,
    p: PhysParams,
) -> Result<WaveVector, CoreError> {
    let (d1, d2) = dir;
    let norm = d1.hypot(d2);
    if norm == 0.0 {
        return Err(CoreError::ZeroDirection);
    }
    match kind {
        WaveKind::Entropic => Ok(WaveVector {
            lam0: -(d1 * s.u + d2 * s.v),
            lam1: d1,
            lam2: d2,
            kind,
            eps,
        }),
        WaveKind::Acoustic => {
            let (l1, l2) = (d1 / norm, d2 / norm);
            let c = (p.g * s.h.max(0.0)).sqrt();
            Ok(WaveVector {
                lam0: -(l1 * s.u + l2 * s.v + eps * c),
                lam1: l1,
                lam2: l2,
                kind,
                eps,
            })
        }
    }
}

/// The Riemann-invariant linear form r = λ₀t + λ₁x + λ₂y.
pub fn riemann_invariant(lam: &WaveVector, pt: Point) -> f64 {
    lam.lam0 * pt.t + lam.lam1 * pt.x + lam.lam2 * pt.y
}
