//! Numerical verification of candidate solutions.
//!
//! A field t, x, y ↦ (u, v, h) is checked directly against the governing
//! equations with high-order finite differences: `pde_residual` evaluates
//! the three equation residuals (optionally Richardson-extrapolated),
//! `trace_form_residual` evaluates the same equations as Tr(𝒜^µ ∂u),
//! `jacobian_rank` measures the rank of ∂(u, v, h)/∂(x, y) on a time
//! slice, and `dc_check` tests conditional invariance: the wave covectors
//! annihilate the symmetry fields and the field is constant along them.
//!
//! `trace_condition_residual` checks the algebraic admissibility of a
//! rank-k ansatz u = f(r¹, …, r^k) with covectors λ^A(u): the traces
//! Tr(𝒜^µ J Λ) for all µ, and for k = 2 also Tr(𝒜^µ J η_a J Λ) with
//! η_a = ∂Λ/∂u^a, where J = ∂f/∂r and Λ stacks the covectors.
//!
//! `gamma_identity_residual` checks the scalar identity constraining the
//! coefficient functions γ₁(Ψ), γ₂(Ψ) of the implicit direction-field
//! construction, using their raw rational forms:
//!
//!   γ₁d₁ + γ₂d₂ + γ₁γ₂√(1+Ψ²)(√3 − Ψ) = 0,
//!   d₁ = √3Ψ² − 2Ψ − √3,  d₂ = Ψ² − 2√3Ψ + 3.

use crate::catalog::StateFieldFn;
use crate::core::{build_coefficient_matrices, PhysParams, Point, State};
use thiserror::Error;

/// A space-time state field. Errors mark points outside the field's
/// domain.
pub type FieldFn<'a> = dyn Fn(Point) -> Result<State, String> + Sync + 'a;

/// Which first-order system the residuals refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    /// Stationary frame: no Coriolis terms.
    Sww,
    /// Rotating frame: −2Ωv in the x-momentum, +2Ωu in the y-momentum.
    Rsww,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("stencil evaluation failed: {0}")]
    StencilFailure(String),
    #[error("singular argument: {0}")]
    DomainSingular(String),
}

/// Residuals of the three equations at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    /// (x-momentum, y-momentum, mass) residuals.
    pub res: [f64; 3],
    pub fd_step: f64,
    pub richardson: bool,
}

impl ResidualReport {
    pub fn max_abs(&self) -> f64 {
        self.res.iter().fold(0.0f64, |m, r| m.max(r.abs()))
    }
}

/// Rank measurement of the spatial Jacobian ∂(u, v, h)/∂(x, y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankReport {
    pub rank: usize,
    /// Singular values, descending.
    pub sv: [f64; 2],
}

impl RankReport {
    /// σ₂/σ₁, or 0 when σ₁ = 0.
    pub fn ratio(&self) -> f64 {
        if self.sv[0] > 0.0 {
            self.sv[1] / self.sv[0]
        } else {
            0.0
        }
    }
}

/// A rank-k ansatz in invariant space: the state map f(r¹, …, r^k) and one
/// covector function per invariant.
pub struct SolutionAnsatz<'a> {
    pub k: usize,
    pub f: Box<dyn Fn(&[f64]) -> Result<State, String> + Sync + 'a>,
    pub lambdas: Vec<StateFieldFn<'a>>,
}

/// Fourth-order first derivative along one coordinate.
fn d1_4th(
    field: &FieldFn<'_>,
    pt: Point,
    axis: usize,
    h: f64,
) -> Result<[f64; 3], VerifyError> {
    let shift = |k: f64| -> Point {
        let mut q = pt;
        match axis {
            0 => q.t += k * h,
            1 => q.x += k * h,
            _ => q.y += k * h,
        }
        q
    };
    let at = |k: f64| -> Result<State, VerifyError> {
        field(shift(k)).map_err(VerifyError::StencilFailure)
    };
    let (p2, p1, m1, m2) = (at(2.0)?, at(1.0)?, at(-1.0)?, at(-2.0)?);
    // Grouped so equal samples cancel exactly (constant fields give 0.0).
    let d = |f2: f64, f1: f64, g1: f64, g2: f64| ((g2 - f2) + 8.0 * (f1 - g1)) / (12.0 * h);
    Ok([
        d(p2.u, p1.u, m1.u, m2.u),
        d(p2.v, p1.v, m1.v, m2.v),
        d(p2.h, p1.h, m1.h, m2.h),
    ])
}

/// Full first-derivative matrix J[α][i] = ∂u^α/∂x^i, i over (t, x, y).
fn jac3x3(field: &FieldFn<'_>, pt: Point, h: f64) -> Result<[[f64; 3]; 3], VerifyError> {
    let dt = d1_4th(field, pt, 0, h)?;
    let dx = d1_4th(field, pt, 1, h)?;
    let dy = d1_4th(field, pt, 2, h)?;
    Ok([
        [dt[0], dx[0], dy[0]],
        [dt[1], dx[1], dy[1]],
        [dt[2], dx[2], dy[2]],
    ])
}

fn residual_from_jac(st: State, jac: &[[f64; 3]; 3], p: PhysParams, kind: SystemKind) -> [f64; 3] {
    let State { u, v, h } = st;
    let [ut, ux, uy] = jac[0];
    let [vt, vx, vy] = jac[1];
    let [ht, hx, hy] = jac[2];
    let mut r = [
        ut + u * ux + v * uy + p.g * hx,
        vt + u * vx + v * vy + p.g * hy,
        ht + u * hx + v * hy + h * (ux + vy),
    ];
    if kind == SystemKind::Rsww {
        r[0] -= 2.0 * p.omega * v;
        r[1] += 2.0 * p.omega * u;
    }
    r
}

/// Residuals of the governing equations at `pt`, by fourth-order centered
/// differences of step `fd_step`. With `richardson` the step-halved
/// derivatives are combined as (16·D(h/2) − D(h))/15, cancelling the
/// leading truncation term.
pub fn pde_residual(
    field: &FieldFn<'_>,
    pt: Point,
    p: PhysParams,
    kind: SystemKind,
    fd_step: f64,
    richardson: bool,
) -> Result<ResidualReport, VerifyError> {
    assert!(fd_step > 0.0);
    let st = field(pt).map_err(VerifyError::StencilFailure)?;
    let jac = if richardson {
        let jh = jac3x3(field, pt, fd_step)?;
        let jh2 = jac3x3(field, pt, 0.5 * fd_step)?;
        let mut j = [[0.0f64; 3]; 3];
        for a in 0..3 {
            for i in 0..3 {
                j[a][i] = (16.0 * jh2[a][i] - jh[a][i]) / 15.0;
            }
        }
        j
    } else {
        jac3x3(field, pt, fd_step)?
    };
    Ok(ResidualReport {
        res: residual_from_jac(st, &jac, p, kind),
        fd_step,
        richardson,
    })
}

/// Largest equation residual computed in trace form, max_µ |Tr(𝒜^µ ∂u)|
/// (plus Coriolis terms in the rotating frame). Agrees with
/// `pde_residual` up to round-off; the matrices are the object under
/// test here.
pub fn trace_form_residual(
    field: &FieldFn<'_>,
    pt: Point,
    p: PhysParams,
    kind: SystemKind,
    fd_step: f64,
) -> Result<f64, VerifyError> {
    let st = field(pt).map_err(VerifyError::StencilFailure)?;
    let jac = jac3x3(field, pt, fd_step)?;
    let m = build_coefficient_matrices(st, p);
    let tr = |a: &[[f64; 3]; 3]| -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for k in 0..3 {
                s += a[i][k] * jac[k][i];
            }
        }
        s
    };
    let mut r = [tr(&m.big_a1), tr(&m.big_a2), tr(&m.big_a3)];
    if kind == SystemKind::Rsww {
        r[0] -= 2.0 * p.omega * st.v;
        r[1] += 2.0 * p.omega * st.u;
    }
    Ok(r.iter().fold(0.0f64, |mx, v| mx.max(v.abs())))
}

/// Rank of the 3×2 spatial Jacobian on a time slice, via the closed-form
/// eigenvalues of JᵀJ. `rank_tol` is the relative σ₂/σ₁ cutoff.
pub fn jacobian_rank(
    field: &FieldFn<'_>,
    pt: Point,
    rank_tol: f64,
    fd_step: f64,
) -> Result<RankReport, VerifyError> {
    let dx = d1_4th(field, pt, 1, fd_step)?;
    let dy = d1_4th(field, pt, 2, fd_step)?;
    // Gram matrix of the two columns.
    let gxx = dx.iter().map(|a| a * a).sum::<f64>();
    let gyy = dy.iter().map(|a| a * a).sum::<f64>();
    let gxy = dx.iter().zip(&dy).map(|(a, b)| a * b).sum::<f64>();
    let tr = gxx + gyy;
    let det = gxx * gyy - gxy * gxy;
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let e1 = 0.5 * (tr + disc);
    let e2 = 0.5 * (tr - disc);
    let sv = [e1.max(0.0).sqrt(), e2.max(0.0).sqrt()];
    let rank = if sv[0] <= 1e-12 {
        0
    } else if sv[1] > rank_tol * sv[0] {
        2
    } else {
        1
    };
    Ok(RankReport { rank, sv })
}

/// Conditional-invariance check at one point. Returns
/// (max_A,a |λ^A·ξ_a| at the state, max_a,α |ξ_a^i ∂_i u^α|): the
/// covector-field contractions and the derivatives of the field along the
/// symmetry directions.
pub fn dc_check(
    field: &FieldFn<'_>,
    lambdas: &[StateFieldFn],
    xis: &[StateFieldFn],
    pt: Point,
    fd_step: f64,
) -> Result<(f64, f64), VerifyError> {
    let st = field(pt).map_err(VerifyError::StencilFailure)?;
    let mut contraction = 0.0f64;
    for lam in lambdas {
        let l = lam(st);
        for xi in xis {
            let x = xi(st);
            contraction = contraction.max((l[0] * x[0] + l[1] * x[1] + l[2] * x[2]).abs());
        }
    }
    let jac = jac3x3(field, pt, fd_step)?;
    let mut derivative = 0.0f64;
    for xi in xis {
        let x = xi(st);
        for row in &jac {
            derivative = derivative.max((x[0] * row[0] + x[1] * row[1] + x[2] * row[2]).abs());
        }
    }
    Ok((contraction, derivative))
}

fn mat_mul<const R: usize, const K: usize, const C: usize>(
    a: &[[f64; K]; R],
    b: &[[f64; C]; K],
) -> [[f64; C]; R] {
    let mut out = [[0.0f64; C]; R];
    for i in 0..R {
        for j in 0..C {
            for k in 0..K {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn trace_prod(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for k in 0..3 {
            s += a[i][k] * b[k][i];
        }
    }
    s
}

/// Algebraic trace conditions of a rank-k ansatz at invariant values
/// `rvals`. Returns 3 residuals Tr(𝒜^µ J Λ) for k = 1 and those plus the
/// 9 residuals Tr(𝒜^µ J η_ν J Λ), ν over (t, x, y), for k = 2.
pub fn trace_condition_residual(
    ansatz: &SolutionAnsatz,
    rvals: &[f64],
    p: PhysParams,
) -> Result<Vec<f64>, VerifyError> {
    let k = ansatz.k;
    assert!(k == 1 || k == 2);
    assert_eq!(rvals.len(), k);
    assert_eq!(ansatz.lambdas.len(), k);
    let eval = |r: &[f64]| (ansatz.f)(r).map_err(VerifyError::StencilFailure);
    let st = eval(rvals)?;

    // J[α][A] = ∂f^α/∂r^A, central differences.
    let mut j = [[0.0f64; 2]; 3];
    for a_inv in 0..k {
        let dh = 1e-6 * rvals[a_inv].abs().max(1.0);
        let mut rp = [0.0f64; 2];
        rp[..k].copy_from_slice(rvals);
        rp[a_inv] += dh;
        let sp = eval(&rp[..k])?;
        rp[a_inv] -= 2.0 * dh;
        let sm = eval(&rp[..k])?;
        j[0][a_inv] = (sp.u - sm.u) / (2.0 * dh);
        j[1][a_inv] = (sp.v - sm.v) / (2.0 * dh);
        j[2][a_inv] = (sp.h - sm.h) / (2.0 * dh);
    }

    // Λ[A][i] = λ^A_i(state).
    let mut lam = [[0.0f64; 3]; 2];
    for (a_inv, lf) in ansatz.lambdas.iter().enumerate() {
        lam[a_inv] = lf(st);
    }

    let m = build_coefficient_matrices(st, p);
    let mats = [&m.big_a1, &m.big_a2, &m.big_a3];

    // JΛ as full 3×3 (unused columns of J are zero for k = 1).
    let jl = mat_mul::<3, 2, 3>(&j, &lam);
    let mut out: Vec<f64> = mats.iter().map(|a| trace_prod(a, &jl)).collect();

    if k == 2 {
        // η_ν[A][b] = ∂λ^A_ν/∂u^b by central differences on the state,
        // one matrix per space-time component ν. These arise from the x^ν
        // terms of ∂_µ r^A when the covectors depend on the fields.
        let comps = [st.u, st.v, st.h];
        for nu in 0..3 {
            let mut eta = [[0.0f64; 3]; 2];
            for b in 0..3 {
                let dh = 1e-6 * comps[b].abs().max(1.0);
                let mut s1 = st;
                let mut s2 = st;
                match b {
                    0 => {
                        s1.u += dh;
                        s2.u -= dh;
                    }
                    1 => {
                        s1.v += dh;
                        s2.v -= dh;
                    }
                    _ => {
                        s1.h += dh;
                        s2.h -= dh;
                    }
                }
                for (a_inv, lf) in ansatz.lambdas.iter().enumerate() {
                    eta[a_inv][b] = (lf(s1)[nu] - lf(s2)[nu]) / (2.0 * dh);
                }
            }
            let etaj = mat_mul::<2, 3, 2>(&eta, &j);
            let jetaj = mat_mul::<3, 2, 2>(&j, &etaj);
            let full = mat_mul::<3, 2, 3>(&jetaj, &lam);
            for a in &mats {
                out.push(trace_prod(a, &full));
            }
        }
    }
    Ok(out)
}

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Coefficient functions γ₁(Ψ), γ₂(Ψ) in their raw rational forms. The
/// shared denominator factor vanishes at Ψ = √3 and Ψ = −1/√3.
pub fn gamma_coefficients(psi: f64) -> Result<(f64, f64), VerifyError> {
    let p = psi;
    let den1 = SQRT3 * p * p - 2.0 * p - SQRT3;
    let scale = 1.0 + p * p;
    if den1.abs() < 1e-9 * scale {
        return Err(VerifyError::DomainSingular(format!(
            "gamma coefficients are singular at psi = {p}"
        )));
    }
    let s = scale.sqrt();
    let num1 = SQRT3 * p.powi(3) - 5.0 * p * p + SQRT3 * p + 3.0;
    let g1 = 2.0 * num1 / (den1 * s);
    let num2 = 3.0 * p.powi(4) - 4.0 * SQRT3 * p.powi(3) - 2.0 * p * p + 4.0 * SQRT3 * p + 3.0;
    let g2 = 2.0 * num2 / (num1 * s);
    Ok((g1, g2))
}

/// Residuals of the two γ constraints: the defining identity
/// γ₁d₁ + γ₂d₂ + γ₁γ₂√(1+Ψ²)(√3 − Ψ) and the consistency of the ratio
/// function, (Ψ − √3)γ₂/((1 + √3Ψ)γ₁) − 1. Both vanish identically on the
/// nonsingular domain.
pub fn gamma_identity_residual(psi: f64) -> Result<(f64, f64), VerifyError> {
    let (g1, g2) = gamma_coefficients(psi)?;
    let p = psi;
    let d1 = SQRT3 * p * p - 2.0 * p - SQRT3;
    let d2 = p * p - 2.0 * SQRT3 * p + 3.0;
    let identity = g1 * d1 + g2 * d2 + g1 * g2 * (1.0 + p * p).sqrt() * (SQRT3 - p);
    let ratio = (p - SQRT3) * g2 / ((1.0 + SQRT3 * p) * g1) - 1.0;
    Ok((identity.abs(), ratio.abs()))
}
