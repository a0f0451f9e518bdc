//! Families of conditionally invariant solutions of the shallow water
//! system, as validated descriptors with implicit Riemann-invariant
//! equations and point/grid evaluation.
//!
//! Every family prescribes a state map f: r ↦ (u, v, h) together with one
//! implicit equation per invariant, r^A = λ^A₀(u)t + λ^A₁(u)x + λ^A₂(u)y,
//! whose covectors λ^A are entropic (E) or acoustic (S) wave vectors
//! evaluated on the state itself. At the reference point (0, 0, 0) each
//! equation degenerates to r^A = 0, so the analytic seed r = 0 is exact
//! there and continuation keeps evaluation on the seed-connected branch.
//!
//! Rank-1 families (one invariant, one wave): E_GENERIC, E_PERIODIC,
//! E_HYPERBOLIC, S_SIMPLE, S_ROTATING, S_FRESNEL. Two-wave families:
//! EE_DEGENERATE and SS_BRANCH_A (two invariants or two covectors but
//! Jacobian rank 1), ES_RANK2, SS_RANK2, SS_MIXED (rank 2). SS pairs are
//! admissible only under the angle constraints λ⃗¹·λ⃗² = −ε/2 (SS_RANK2)
//! and λ⃗¹·λ⃗² = 1/2 (SS_MIXED), both on unit spatial directions.

use crate::core::{PhysParams, Point, State};
use crate::solver::{
    solve_at, sweep_grid_with, Grid, ImplicitSystem, SolveError, SolveReport, SweepField,
    SweepParams,
};
use crate::specfn::{fresnel_c, fresnel_s, weierstrass_p, WeierstrassInvariants};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// A scalar profile r ↦ φ(r), the free function of a solution family.
///
/// All kinds are C¹ on their domain; `CustomTable` interpolates its knots
/// with a monotonicity-limited cubic that stays C¹ and extrapolates
/// linearly beyond the end knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileFn {
    Const { value: f64 },
    /// amplitude · tanh²(shape·r)
    TanhSq { amplitude: f64, shape: f64 },
    /// amplitude / cosh²(shape·r)
    SechSq { amplitude: f64, shape: f64 },
    /// amplitude · r / √(1 + shape·r²); shape = 0 degenerates to a line.
    Kink { amplitude: f64, shape: f64 },
    /// amplitude / ℘(r; 4/3, 8/27 + (4/3)·amplitude⁴), a bounded positive
    /// periodic profile (the real branch of ℘ stays above its real root).
    WeierstrassRecip { amplitude: f64 },
    /// offset + amplitude · sin(shape·r)
    Sin { amplitude: f64, shape: f64, offset: f64 },
    /// Monotonicity-limited C¹ cubic through (x, y) knots with strictly
    /// increasing x.
    CustomTable { knots: Vec<[f64; 2]> },
}

impl ProfileFn {
    pub fn eval(&self, r: f64) -> Result<f64, String> {
        match self {
            ProfileFn::Const { value } => Ok(*value),
            ProfileFn::TanhSq { amplitude, shape } => {
                let t = (shape * r).tanh();
                Ok(amplitude * t * t)
            }
            ProfileFn::SechSq { amplitude, shape } => {
                let c = (shape * r).cosh();
                Ok(amplitude / (c * c))
            }
            ProfileFn::Kink { amplitude, shape } => {
                Ok(amplitude * r / (1.0 + shape * r * r).sqrt())
            }
            ProfileFn::WeierstrassRecip { amplitude } => {
                let a = *amplitude;
                // ℘(r) = r⁻² + O(r²) near the pole, so A/℘ = A·r² + O(r⁶).
                if r.abs() < 1e-4 {
                    return Ok(a * r * r);
                }
                let inv = WeierstrassInvariants::new(4.0 / 3.0, 8.0 / 27.0 + 4.0 / 3.0 * a.powi(4));
                let p = weierstrass_p(r, inv).map_err(|e| e.to_string())?;
                if p.abs() < 1e-12 {
                    return Err("weierstrass profile: ℘ vanishes at the argument".into());
                }
                Ok(a / p)
            }
            ProfileFn::Sin { amplitude, shape, offset } => Ok(offset + amplitude * (shape * r).sin()),
            ProfileFn::CustomTable { knots } => Ok(table_eval(knots, r)),
        }
    }

    /// Structural validity; numeric domain errors stay with `eval`.
    pub fn validate(&self) -> Result<(), String> {
        let finite = |v: f64, name: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(format!("{name} must be finite"))
            }
        };
        match self {
            ProfileFn::Const { value } => finite(*value, "value"),
            ProfileFn::TanhSq { amplitude, shape }
            | ProfileFn::SechSq { amplitude, shape } => {
                finite(*amplitude, "amplitude")?;
                finite(*shape, "shape")
            }
            ProfileFn::Kink { amplitude, shape } => {
                finite(*amplitude, "amplitude")?;
                finite(*shape, "shape")?;
                if *shape < 0.0 {
                    return Err("kink shape must be nonnegative".into());
                }
                Ok(())
            }
            ProfileFn::WeierstrassRecip { amplitude } => finite(*amplitude, "amplitude"),
            ProfileFn::Sin { amplitude, shape, offset } => {
                finite(*amplitude, "amplitude")?;
                finite(*shape, "shape")?;
                finite(*offset, "offset")
            }
            ProfileFn::CustomTable { knots } => {
                if knots.len() < 2 {
                    return Err("table needs at least two knots".into());
                }
                for w in knots.windows(2) {
                    if !(w[0][0].is_finite() && w[0][1].is_finite() && w[1][1].is_finite()) {
                        return Err("table knots must be finite".into());
                    }
                    if !(w[1][0] > w[0][0]) {
                        return Err("table x-knots must be strictly increasing".into());
                    }
                }
                Ok(())
            }
        }
    }
}

/// Monotonicity-limited cubic Hermite interpolation (secant-averaged
/// tangents, clamped so each segment stays monotone), linear beyond the
/// end knots. C¹ everywhere.
fn table_eval(knots: &[[f64; 2]], r: f64) -> f64 {
    let n = knots.len();
    let mut sec = vec![0.0f64; n - 1];
    for i in 0..n - 1 {
        sec[i] = (knots[i + 1][1] - knots[i][1]) / (knots[i + 1][0] - knots[i][0]);
    }
    let mut m = vec![0.0f64; n];
    m[0] = sec[0];
    m[n - 1] = sec[n - 2];
    for i in 1..n - 1 {
        m[i] = if sec[i - 1] * sec[i] <= 0.0 { 0.0 } else { 0.5 * (sec[i - 1] + sec[i]) };
    }
    for i in 0..n - 1 {
        if sec[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        let a = m[i] / sec[i];
        let b = m[i + 1] / sec[i];
        let s = a * a + b * b;
        if s > 9.0 {
            let tau = 3.0 / s.sqrt();
            m[i] = tau * a * sec[i];
            m[i + 1] = tau * b * sec[i];
        }
    }
    if r <= knots[0][0] {
        return knots[0][1] + m[0] * (r - knots[0][0]);
    }
    if r >= knots[n - 1][0] {
        return knots[n - 1][1] + m[n - 1] * (r - knots[n - 1][0]);
    }
    let j = knots.partition_point(|k| k[0] <= r).min(n - 1) - 1;
    let h = knots[j + 1][0] - knots[j][0];
    let t = (r - knots[j][0]) / h;
    let (t2, t3) = (t * t, t * t * t);
    knots[j][1] * (2.0 * t3 - 3.0 * t2 + 1.0)
        + h * m[j] * (t3 - 2.0 * t2 + t)
        + knots[j + 1][1] * (-2.0 * t3 + 3.0 * t2)
        + h * m[j + 1] * (t3 - t2)
}

/// Solution family identifier. E_* ride a single entropic wave, S_* a
/// single acoustic wave; two-letter families superpose two waves of the
/// named kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Family {
    EGeneric,
    EPeriodic,
    EHyperbolic,
    SSimple,
    SRotating,
    SFresnel,
    EeDegenerate,
    SsBranchA,
    EsRank2,
    SsRank2,
    SsMixed,
}

impl Family {
    pub const ALL: [Family; 11] = [
        Family::EGeneric,
        Family::EPeriodic,
        Family::EHyperbolic,
        Family::SSimple,
        Family::SRotating,
        Family::SFresnel,
        Family::EeDegenerate,
        Family::SsBranchA,
        Family::EsRank2,
        Family::SsRank2,
        Family::SsMixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::EGeneric => "E_GENERIC",
            Family::EPeriodic => "E_PERIODIC",
            Family::EHyperbolic => "E_HYPERBOLIC",
            Family::SSimple => "S_SIMPLE",
            Family::SRotating => "S_ROTATING",
            Family::SFresnel => "S_FRESNEL",
            Family::EeDegenerate => "EE_DEGENERATE",
            Family::SsBranchA => "SS_BRANCH_A",
            Family::EsRank2 => "ES_RANK2",
            Family::SsRank2 => "SS_RANK2",
            Family::SsMixed => "SS_MIXED",
        }
    }

    pub fn from_name(name: &str) -> Result<Family, CatalogError> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| CatalogError::UnknownFamily(name.to_string()))
    }

    /// Number of Riemann invariants the implicit system solves for.
    pub fn invariant_dim(self) -> usize {
        match self {
            Family::EeDegenerate | Family::EsRank2 | Family::SsRank2 | Family::SsMixed => 2,
            _ => 1,
        }
    }

    /// Generic rank of ∂(u, v, h)/∂(x, y) at fixed t.
    pub fn expected_rank(self) -> usize {
        match self {
            Family::EsRank2 | Family::SsRank2 | Family::SsMixed => 2,
            _ => 1,
        }
    }

    pub fn required_profiles(self) -> &'static [&'static str] {
        match self {
            Family::EPeriodic | Family::EeDegenerate => &[],
            Family::EsRank2 | Family::SsRank2 | Family::SsMixed => &["phi", "psi"],
            _ => &["phi"],
        }
    }

    pub fn optional_profiles(self) -> &'static [&'static str] {
        match self {
            Family::EsRank2 => &["coupling"],
            _ => &[],
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Family constants. Unused entries are ignored by families that do not
/// reference them; see each family's documentation for which apply.
///
/// Wave directions for the SS pairs may be given either as angles
/// (`phi1`, `phi2`, mapped to (cos, sin)) or as explicit unit vectors
/// (`dir1`, `dir2`), not both. Left unset they default to λ⃗¹ = (1, 0) and
/// the admissible second direction for the family's angle constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constants {
    pub u0: f64,
    pub v0: f64,
    pub h0: f64,
    /// Free constant C of E_PERIODIC and E_HYPERBOLIC.
    pub c: f64,
    /// Acoustic orientation, ±1.
    pub eps: f64,
    /// Exponent of EE_DEGENERATE (any integer except −1).
    pub m: i32,
    /// Coefficients C₁..C₅ of EE_DEGENERATE.
    pub cc: [f64; 5],
    /// Spatial direction of the single-wave families.
    pub dir: [f64; 2],
    pub dir1: Option<[f64; 2]>,
    pub dir2: Option<[f64; 2]>,
    pub phi1: Option<f64>,
    pub phi2: Option<f64>,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            u0: 0.0,
            v0: 0.0,
            h0: 1.0,
            c: 1.0,
            eps: 1.0,
            m: 2,
            cc: [1.0, 2.0, 1.0, 4.0, 1.0],
            dir: [1.0, 0.0],
            dir1: None,
            dir2: None,
            phi1: None,
            phi2: None,
        }
    }
}

/// Profile slots. `phi` is the primary free function (h₁ or F of the
/// two-wave families), `psi` the secondary (h₂ or G), `coupling` the
/// state-dependent covector scale λ₂¹(v) of ES_RANK2 (default 1).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Profiles {
    pub phi: Option<ProfileFn>,
    pub psi: Option<ProfileFn>,
    pub coupling: Option<ProfileFn>,
}

/// Serialized form of a solution: family, constants, free profiles, and
/// physical parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionDescriptor {
    pub family: Family,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub profiles: Profiles,
    #[serde(default)]
    pub params: PhysParams,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("family {family} requires profile slot `{slot}`")]
    MissingProfile { family: &'static str, slot: &'static str },
    #[error("wave-direction constraint violated: {0}")]
    AngleViolation(String),
    #[error("h0 must be positive, got {0}")]
    NonPositiveH0(f64),
    #[error("invalid constants: {0}")]
    InvalidConstants(String),
    #[error("invalid profile in slot `{slot}`: {msg}")]
    InvalidProfile { slot: &'static str, msg: String },
}

/// A state-dependent covector or vector-field coefficient map.
pub type StateFieldFn<'a> = Box<dyn Fn(State) -> [f64; 3] + Sync + 'a>;

/// A validated solution: descriptor plus resolved wave directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    desc: SolutionDescriptor,
    /// Unit direction of S_SIMPLE, raw direction of E_GENERIC.
    dir: [f64; 2],
    /// Resolved unit pair of SS_RANK2 / SS_MIXED.
    dir1: [f64; 2],
    dir2: [f64; 2],
}

/// Validate and resolve a descriptor assembled from parts.
pub fn make_solution(
    family: Family,
    constants: Constants,
    profiles: Profiles,
    params: PhysParams,
) -> Result<Solution, CatalogError> {
    Solution::from_descriptor(SolutionDescriptor { family, constants, profiles, params })
}

const ANGLE_TOL: f64 = 1e-10;
static COUPLING_ONE: ProfileFn = ProfileFn::Const { value: 1.0 };

impl Solution {
    pub fn from_descriptor(desc: SolutionDescriptor) -> Result<Solution, CatalogError> {
        let c = &desc.constants;
        let p = desc.params;
        if !(p.g.is_finite() && p.g > 0.0) {
            return Err(CatalogError::InvalidConstants("g must be finite and > 0".into()));
        }
        if !p.omega.is_finite() {
            return Err(CatalogError::InvalidConstants("omega must be finite".into()));
        }
        for (v, n) in [
            (c.u0, "u0"),
            (c.v0, "v0"),
            (c.h0, "h0"),
            (c.c, "c"),
            (c.eps, "eps"),
            (c.dir[0], "dir"),
            (c.dir[1], "dir"),
        ] {
            if !v.is_finite() {
                return Err(CatalogError::InvalidConstants(format!("{n} must be finite")));
            }
        }
        for v in c.cc {
            if !v.is_finite() {
                return Err(CatalogError::InvalidConstants("cc entries must be finite".into()));
            }
        }

        let fam = desc.family;
        for slot in fam.required_profiles() {
            let got = match *slot {
                "phi" => desc.profiles.phi.as_ref(),
                "psi" => desc.profiles.psi.as_ref(),
                _ => desc.profiles.coupling.as_ref(),
            };
            if got.is_none() {
                return Err(CatalogError::MissingProfile { family: fam.name(), slot });
            }
        }
        for (slot, prof) in [
            ("phi", desc.profiles.phi.as_ref()),
            ("psi", desc.profiles.psi.as_ref()),
            ("coupling", desc.profiles.coupling.as_ref()),
        ] {
            if let Some(pf) = prof {
                pf.validate().map_err(|msg| CatalogError::InvalidProfile { slot, msg })?;
            }
        }

        let needs_h0 = matches!(
            fam,
            Family::EGeneric
                | Family::EPeriodic
                | Family::EHyperbolic
                | Family::SRotating
                | Family::SFresnel
                | Family::EeDegenerate
                | Family::SsBranchA
                | Family::EsRank2
        );
        if needs_h0 && !(c.h0 > 0.0) {
            return Err(CatalogError::NonPositiveH0(c.h0));
        }

        let needs_eps = matches!(
            fam,
            Family::SSimple | Family::SsBranchA | Family::EsRank2 | Family::SsRank2
        );
        if needs_eps && (c.eps.abs() - 1.0).abs() > 1e-12 {
            return Err(CatalogError::InvalidConstants(format!(
                "eps must be +1 or -1, got {}",
                c.eps
            )));
        }

        let mut dir = c.dir;
        match fam {
            Family::EGeneric => {
                if dir[0].abs() < 1e-12 {
                    return Err(CatalogError::InvalidConstants(
                        "E_GENERIC needs lambda1 != 0 (dir[0])".into(),
                    ));
                }
            }
            Family::SSimple => {
                let n = dir[0].hypot(dir[1]);
                if n < 1e-12 {
                    return Err(CatalogError::InvalidConstants(
                        "S_SIMPLE direction must be nonzero".into(),
                    ));
                }
                dir = [dir[0] / n, dir[1] / n];
            }
            Family::EeDegenerate => {
                if c.cc[0].abs() < 1e-12 || c.cc[4].abs() < 1e-12 {
                    return Err(CatalogError::InvalidConstants(
                        "EE_DEGENERATE needs cc[0] != 0 and cc[4] != 0".into(),
                    ));
                }
                if c.m == -1 {
                    return Err(CatalogError::InvalidConstants(
                        "EE_DEGENERATE exponent m = -1 is excluded".into(),
                    ));
                }
            }
            _ => {}
        }

        let (dir1, dir2) = match fam {
            Family::SsRank2 => resolve_pair(c, -0.5 * c.eps)?,
            Family::SsMixed => resolve_pair(c, 0.5)?,
            _ => ([1.0, 0.0], [1.0, 0.0]),
        };

        Ok(Solution { desc, dir, dir1, dir2 })
    }

    pub fn family(&self) -> Family {
        self.desc.family
    }

    pub fn params(&self) -> PhysParams {
        self.desc.params
    }

    pub fn constants(&self) -> &Constants {
        &self.desc.constants
    }

    pub fn descriptor(&self) -> &SolutionDescriptor {
        &self.desc
    }

    pub fn invariant_dim(&self) -> usize {
        self.desc.family.invariant_dim()
    }

    pub fn expected_rank(&self) -> usize {
        self.desc.family.expected_rank()
    }

    /// Resolved unit wave directions of the SS pairs.
    pub fn wave_directions(&self) -> ([f64; 2], [f64; 2]) {
        (self.dir1, self.dir2)
    }

    fn phi(&self) -> &ProfileFn {
        self.desc.profiles.phi.as_ref().expect("validated: phi present")
    }

    fn psi(&self) -> &ProfileFn {
        self.desc.profiles.psi.as_ref().expect("validated: psi present")
    }

    fn coupling(&self) -> &ProfileFn {
        self.desc.profiles.coupling.as_ref().unwrap_or(&COUPLING_ONE)
    }

    /// Inner scalar equation of ES_RANK2: s = r² − √3ε r¹ / (2 λ₂¹(G(s))).
    /// Explicit for a constant coupling, otherwise a damped Newton solve.
    fn es_inner_s(&self, r1: f64, r2: f64) -> Result<f64, String> {
        let e = self.desc.constants.eps;
        let half_shift = 0.5 * SQRT3 * e * r1;
        if let ProfileFn::Const { value } = self.coupling() {
            if value.abs() < 1e-12 {
                return Err("coupling profile vanishes".into());
            }
            return Ok(r2 - half_shift / value);
        }
        let target = |s: f64| -> Result<f64, String> {
            let gv = self.psi().eval(s)?;
            let lc = self.coupling().eval(gv)?;
            if lc.abs() < 1e-12 {
                return Err("coupling profile vanishes at the inner root".into());
            }
            Ok(r2 - half_shift / lc)
        };
        let mut s = r2;
        for _ in 0..60 {
            let w = s - target(s)?;
            if w.abs() <= 1e-14 * s.abs().max(1.0) {
                return Ok(s);
            }
            let dh = 1e-7 * s.abs().max(1.0);
            let wp = s + dh - target(s + dh)?;
            let wm = s - dh - target(s - dh)?;
            let d = (wp - wm) / (2.0 * dh);
            if d.abs() < 1e-12 {
                s -= w;
            } else {
                s -= w / d;
            }
        }
        let w = s - target(s)?;
        if w.abs() <= 1e-12 * s.abs().max(1.0) {
            Ok(s)
        } else {
            Err(format!("inner invariant solve stalled at residual {w:e}"))
        }
    }

    /// The state map f(r). `r` holds `invariant_dim` entries.
    pub fn state_at(&self, r: &[f64]) -> Result<State, String> {
        let c = &self.desc.constants;
        let g = self.desc.params.g;
        let sqg = g.sqrt();
        match self.desc.family {
            Family::EGeneric => {
                let phi = self.phi().eval(r[0])?;
                Ok(State::new(c.u0 - self.dir[1] / self.dir[0] * phi, phi, c.h0))
            }
            Family::EPeriodic => Ok(State::new(c.c * r[0].sin(), c.c * r[0].cos(), c.h0)),
            Family::EHyperbolic => {
                let phi = self.phi().eval(r[0])?;
                if phi.abs() < 1e-12 {
                    return Err("profile vanishes where u·v = C requires u != 0".into());
                }
                Ok(State::new(phi, c.c / phi, c.h0))
            }
            Family::SSimple => {
                let phi = self.phi().eval(r[0])?;
                let a = 2.0 * c.eps * sqg * phi;
                Ok(State::new(c.u0 + a * self.dir[0], c.v0 + a * self.dir[1], phi * phi))
            }
            Family::SRotating => {
                let phi = self.phi().eval(r[0])?;
                let d = phi + c.h0;
                Ok(State::new(
                    c.u0 - 2.0 * sqg * phi.cos(),
                    c.v0 + 2.0 * sqg * phi.sin(),
                    d * d,
                ))
            }
            Family::SFresnel => {
                let phi = self.phi().eval(r[0])?;
                if phi < 0.0 {
                    return Err("fresnel profile must be nonnegative".into());
                }
                let a = (2.0 * phi / std::f64::consts::PI).sqrt();
                let scale = (2.0 * std::f64::consts::PI * g).sqrt();
                let d = phi.sqrt() + c.h0;
                Ok(State::new(
                    c.u0 + scale * fresnel_s(a),
                    c.v0 + scale * fresnel_c(a),
                    d * d,
                ))
            }
            Family::EeDegenerate => {
                let [c1, c2, c3, c4, c5] = c.cc;
                let den = c3 * r[0] + c4;
                if den.abs() < 1e-12 {
                    return Err("invariant combination hits a pole".into());
                }
                let s = (c1 * r[1] + c2) / den;
                if c.m < 0 && s.abs() < 1e-12 {
                    return Err("s vanishes with a negative exponent".into());
                }
                let u = (-1.0f64).powi(c.m) * s.powi(c.m);
                let v = c5 * (c3 / c1 * c.m as f64 * s).exp();
                Ok(State::new(u, v, c.h0))
            }
            Family::SsBranchA => {
                let f = self.phi().eval(r[0])?;
                Ok(State::new(f, c.v0 + 0.5 * f * f, c.h0))
            }
            Family::EsRank2 => {
                let s = self.es_inner_s(r[0], r[1])?;
                let gv = self.psi().eval(s)?;
                let fv = self.phi().eval(r[1])?;
                let e = c.eps;
                let root = fv - 2.0 * SQRT3 / 3.0 * e * gv + c.h0;
                Ok(State::new(
                    SQRT3 / 3.0 * e * gv + fv,
                    gv,
                    root * root / (4.0 * g),
                ))
            }
            Family::SsRank2 => {
                let h1 = self.phi().eval(r[0])?;
                let h2 = self.psi().eval(r[1])?;
                let e = c.eps;
                let hh = h1 + h2;
                Ok(State::new(
                    c.u0 + 2.0 * sqg * (self.dir1[0] * h1 + e * self.dir2[0] * h2),
                    c.v0 + 2.0 * sqg * (self.dir1[1] * h1 + e * self.dir2[1] * h2),
                    hh * hh,
                ))
            }
            Family::SsMixed => {
                let h1 = self.phi().eval(r[0])?;
                let h2 = self.psi().eval(r[1])?;
                let hh = h1 + h2;
                Ok(State::new(
                    c.u0 + 2.0 * sqg * (self.dir1[0] * h1 - self.dir2[0] * h2),
                    c.v0 + 2.0 * sqg * (self.dir1[1] * h1 - self.dir2[1] * h2),
                    hh * hh,
                ))
            }
        }
    }

    /// Implicit residuals R(r; t, x, y), one per invariant. All vanish at
    /// r = 0, (t, x, y) = 0.
    pub fn residual(&self, r: &[f64], pt: Point, out: &mut [f64]) -> Result<(), String> {
        let c = &self.desc.constants;
        let g = self.desc.params.g;
        let sqg = g.sqrt();
        let Point { t, x, y } = pt;
        match self.desc.family {
            Family::EGeneric => {
                let [l1, l2] = self.dir;
                out[0] = r[0] + c.u0 * l1 * t - l1 * x - l2 * y;
            }
            Family::EPeriodic => {
                out[0] = r[0] + c.c * c.c * t - c.c * x * r[0].sin() - c.c * y * r[0].cos();
            }
            Family::EHyperbolic => {
                let phi = self.phi().eval(r[0])?;
                if phi.abs() < 1e-12 {
                    return Err("profile vanishes where u·v = C requires u != 0".into());
                }
                out[0] = r[0] + 2.0 * c.c * t - c.c / phi * x - phi * y;
            }
            Family::SSimple => {
                let phi = self.phi().eval(r[0])?;
                let [l1, l2] = self.dir;
                out[0] = r[0] + (l1 * c.u0 + l2 * c.v0 + 3.0 * c.eps * sqg * phi) * t
                    - l1 * x
                    - l2 * y;
            }
            Family::SRotating => {
                let phi = self.phi().eval(r[0])?;
                let (sp, cp) = phi.sin_cos();
                out[0] = r[0] + (c.u0 * sp + c.v0 * cp + sqg * (phi + c.h0)) * t - sp * x - cp * y;
            }
            Family::SFresnel => {
                let phi = self.phi().eval(r[0])?;
                if phi < 0.0 {
                    return Err("fresnel profile must be nonnegative".into());
                }
                let st = self.state_at(r)?;
                let (sp, cp) = phi.sin_cos();
                out[0] = r[0] + (st.u * sp + st.v * cp + sqg * (phi.sqrt() + c.h0)) * t
                    - sp * x
                    - cp * y;
            }
            Family::EeDegenerate => {
                let st = self.state_at(r)?;
                if st.u.abs() < 1e-12 {
                    return Err("u vanishes; its invariant is undefined".into());
                }
                if st.v.abs() < 1e-12 {
                    return Err("v vanishes; its invariant is undefined".into());
                }
                out[0] = r[0] - t + x / st.u;
                out[1] = r[1] - t + y / st.v;
            }
            Family::SsBranchA => {
                let f = self.phi().eval(r[0])?;
                let den = 1.0 + f * f;
                out[0] = r[0] + f * (f * f - 2.0 * c.v0) / den * t - 2.0 * f * f / den * x
                    + 2.0 * f / den * y;
            }
            Family::EsRank2 => {
                let s = self.es_inner_s(r[0], r[1])?;
                let gv = self.psi().eval(s)?;
                let fv = self.phi().eval(r[1])?;
                let lc = self.coupling().eval(gv)?;
                let e = c.eps;
                out[0] = r[0] - lc * ((2.0 * gv + SQRT3 * e * fv) * t - SQRT3 * e * x - y);
                out[1] = r[1] - (1.5 * fv + 0.5 * c.h0) * t + x;
            }
            Family::SsRank2 => {
                let h1 = self.phi().eval(r[0])?;
                let h2 = self.psi().eval(r[1])?;
                let [a1, a2] = self.dir1;
                let [b1, b2] = self.dir2;
                out[0] = r[0] + (a1 * c.u0 + a2 * c.v0 + 3.0 * sqg * h1) * t - a1 * x - a2 * y;
                out[1] =
                    r[1] + (b1 * c.u0 + b2 * c.v0 + 3.0 * c.eps * sqg * h2) * t - b1 * x - b2 * y;
            }
            Family::SsMixed => {
                let h1 = self.phi().eval(r[0])?;
                let h2 = self.psi().eval(r[1])?;
                let [a1, a2] = self.dir1;
                let [b1, b2] = self.dir2;
                out[0] = r[0] + (a1 * c.u0 + a2 * c.v0 + 3.0 * sqg * h1) * t - a1 * x - a2 * y;
                out[1] = r[1] + (b1 * c.u0 + b2 * c.v0 - 3.0 * sqg * h2) * t - b1 * x - b2 * y;
            }
        }
        Ok(())
    }

    /// The family's implicit system with its analytic seed at the origin.
    pub fn implicit_system(&self) -> ImplicitSystem<'_> {
        ImplicitSystem {
            dim: self.invariant_dim(),
            residual: Box::new(move |r, pt, out| self.residual(r, pt, out)),
            jacobian: None,
            ref_pt: Point::new(0.0, 0.0, 0.0),
            seed: [0.0, 0.0],
        }
    }

    /// Point evaluation on the seed-connected branch.
    pub fn eval_sww(&self, pt: Point, tol: f64) -> Result<(State, SolveReport), SolveError> {
        let sys = self.implicit_system();
        let rep = solve_at(&sys, pt, tol, 100)?;
        let st = self
            .state_at(&rep.root[..sys.dim])
            .map_err(SolveError::Domain)?;
        Ok((st, rep))
    }

    /// Grid evaluation: deterministic sweep plus per-cell states (None on
    /// unconverged cells).
    pub fn eval_grid(&self, grid: &Grid, tol: f64, params: &SweepParams) -> GridEval {
        let sys = self.implicit_system();
        let field = sweep_grid_with(&sys, grid, tol, params);
        let dim = sys.dim;
        let states = field
            .cells
            .iter()
            .map(|cell| {
                if cell.report.converged {
                    self.state_at(&cell.report.root[..dim]).ok()
                } else {
                    None
                }
            })
            .collect();
        GridEval { field, states }
    }

    /// Wave covectors λ^A as functions of the state, consistent with the
    /// implemented invariants. Acoustic entries use √(gh) ≥ 0 and match the
    /// smooth-branch invariants where the profile sum is nonnegative.
    pub fn wave_covectors(&self) -> Vec<StateFieldFn<'_>> {
        let c = self.desc.constants.clone();
        let g = self.desc.params.g;
        let sqg = g.sqrt();
        let gh = move |h: f64| (g * h.max(0.0)).sqrt();
        match self.desc.family {
            Family::EGeneric => {
                let [l1, l2] = self.dir;
                vec![Box::new(move |s: State| [-(l1 * s.u + l2 * s.v), l1, l2])]
            }
            Family::EPeriodic => {
                vec![Box::new(move |s: State| [-(s.u * s.u + s.v * s.v), s.u, s.v])]
            }
            Family::EHyperbolic => {
                vec![Box::new(move |s: State| [-2.0 * s.u * s.v, s.v, s.u])]
            }
            Family::SSimple => {
                let [l1, l2] = self.dir;
                let e = c.eps;
                vec![Box::new(move |s: State| {
                    [-(l1 * s.u + l2 * s.v + e * gh(s.h)), l1, l2]
                })]
            }
            Family::SRotating => {
                let (u0, v0) = (c.u0, c.v0);
                vec![Box::new(move |s: State| {
                    let sp = (s.v - v0) / (2.0 * sqg);
                    let cp = -(s.u - u0) / (2.0 * sqg);
                    [-(s.u * sp + s.v * cp + gh(s.h)), sp, cp]
                })]
            }
            Family::SFresnel => {
                let h0 = c.h0;
                vec![Box::new(move |s: State| {
                    let phi = (s.h.max(0.0).sqrt() - h0).powi(2);
                    let (sp, cp) = phi.sin_cos();
                    [-(s.u * sp + s.v * cp + gh(s.h)), sp, cp]
                })]
            }
            Family::EeDegenerate => vec![
                Box::new(move |s: State| [1.0, -1.0 / s.u, 0.0]),
                Box::new(move |s: State| [1.0, 0.0, -1.0 / s.v]),
            ],
            Family::SsBranchA => {
                let e = c.eps;
                vec![
                    Box::new(move |s: State| [-(s.u + e * gh(s.h)), 1.0, 0.0]),
                    Box::new(move |s: State| {
                        let den = 1.0 + s.u * s.u;
                        [
                            -((s.u * (1.0 - s.u * s.u) + 2.0 * s.u * s.v) / den + e * gh(s.h)),
                            (1.0 - s.u * s.u) / den,
                            2.0 * s.u / den,
                        ]
                    }),
                ]
            }
            Family::EsRank2 => {
                let e = c.eps;
                let h0 = c.h0;
                let lc = self.coupling().clone();
                vec![
                    Box::new(move |s: State| {
                        let scale = lc.eval(s.v).unwrap_or(f64::NAN);
                        [
                            scale * (s.v + SQRT3 * e * s.u),
                            scale * (-SQRT3 * e),
                            scale * (-1.0),
                        ]
                    }),
                    Box::new(move |s: State| {
                        [1.5 * (s.u - SQRT3 / 3.0 * e * s.v) + 0.5 * h0, -1.0, 0.0]
                    }),
                ]
            }
            Family::SsRank2 => {
                let [a1, a2] = self.dir1;
                let [b1, b2] = self.dir2;
                let e = c.eps;
                vec![
                    Box::new(move |s: State| [-(a1 * s.u + a2 * s.v + gh(s.h)), a1, a2]),
                    Box::new(move |s: State| [-(b1 * s.u + b2 * s.v + e * gh(s.h)), b1, b2]),
                ]
            }
            Family::SsMixed => {
                let [a1, a2] = self.dir1;
                let [b1, b2] = self.dir2;
                vec![
                    Box::new(move |s: State| [-(a1 * s.u + a2 * s.v + gh(s.h)), a1, a2]),
                    Box::new(move |s: State| [-(b1 * s.u + b2 * s.v - gh(s.h)), b1, b2]),
                ]
            }
        }
    }

    /// Conditional-symmetry vector fields (coefficients of ∂t, ∂x, ∂y as
    /// functions of the state). Single-wave families carry the pair
    /// X₁ = (λ₁, −λ₀, 0), X₂ = (λ₂, 0, −λ₀); two-wave families the cross
    /// field ξ = λ¹ × λ². All satisfy λ^A·ξ = 0 identically.
    pub fn conditional_symmetries(&self) -> Vec<StateFieldFn<'_>> {
        let mut lams = self.wave_covectors();
        if lams.len() == 1 {
            let lam = lams.pop().expect("one covector");
            let lam2 = self.wave_covectors().pop().expect("one covector");
            vec![
                Box::new(move |s: State| {
                    let l = lam(s);
                    [l[1], -l[0], 0.0]
                }),
                Box::new(move |s: State| {
                    let l = lam2(s);
                    [l[2], 0.0, -l[0]]
                }),
            ]
        } else {
            let l2 = lams.pop().expect("two covectors");
            let l1 = lams.pop().expect("two covectors");
            vec![Box::new(move |s: State| {
                let a = l1(s);
                let b = l2(s);
                [
                    a[1] * b[2] - a[2] * b[1],
                    a[2] * b[0] - a[0] * b[2],
                    a[0] * b[1] - a[1] * b[0],
                ]
            })]
        }
    }
}

impl Solution {
    /// The family as a rank-k ansatz for the algebraic trace conditions:
    /// state map over invariant space plus one covector per invariant.
    /// None where the wave structure has more covectors than invariants
    /// (the degenerate two-covector branch), which the trace formulation
    /// does not cover.
    pub fn ansatz(&self) -> Option<crate::verify::SolutionAnsatz<'_>> {
        if self.desc.family == Family::SsBranchA {
            return None;
        }
        Some(crate::verify::SolutionAnsatz {
            k: self.invariant_dim(),
            f: Box::new(move |r: &[f64]| self.state_at(r)),
            lambdas: self.wave_covectors(),
        })
    }
}

/// Resolve the SS direction pair against a required dot product.
fn resolve_pair(c: &Constants, want_dot: f64) -> Result<([f64; 2], [f64; 2]), CatalogError> {
    let from_angles = c.phi1.is_some() || c.phi2.is_some();
    let from_dirs = c.dir1.is_some() || c.dir2.is_some();
    if from_angles && from_dirs {
        return Err(CatalogError::InvalidConstants(
            "give wave directions as angles (phi1, phi2) or vectors (dir1, dir2), not both".into(),
        ));
    }
    let (d1, d2) = if from_angles {
        let p1 = c.phi1.unwrap_or(0.0);
        let p2 = c.phi2.unwrap_or_else(|| p1 + (want_dot.clamp(-1.0, 1.0)).acos());
        if !(p1.is_finite() && p2.is_finite()) {
            return Err(CatalogError::InvalidConstants("phi1/phi2 must be finite".into()));
        }
        ([p1.cos(), p1.sin()], [p2.cos(), p2.sin()])
    } else {
        let d1 = c.dir1.unwrap_or([1.0, 0.0]);
        let th = (want_dot.clamp(-1.0, 1.0)).acos();
        let d2 = c.dir2.unwrap_or([th.cos(), th.sin()]);
        (d1, d2)
    };
    for d in [d1, d2] {
        if !(d[0].is_finite() && d[1].is_finite()) {
            return Err(CatalogError::InvalidConstants("directions must be finite".into()));
        }
        let n = d[0].hypot(d[1]);
        if (n - 1.0).abs() > ANGLE_TOL {
            return Err(CatalogError::AngleViolation(format!(
                "wave directions must be unit vectors, |({}, {})| = {n}",
                d[0], d[1]
            )));
        }
    }
    let dot = d1[0] * d2[0] + d1[1] * d2[1];
    if (dot - want_dot).abs() > ANGLE_TOL {
        return Err(CatalogError::AngleViolation(format!(
            "wave directions must satisfy dot = {want_dot}, got {dot}"
        )));
    }
    Ok((d1, d2))
}

/// Grid evaluation result: the sweep field plus per-cell states.
#[derive(Debug, Clone)]
pub struct GridEval {
    pub field: SweepField,
    pub states: Vec<Option<State>>,
}

impl GridEval {
    pub fn state(&self, it: usize, ix: usize, iy: usize) -> Option<State> {
        self.states[self.field.grid.linear_index(it, ix, iy)]
    }
}

/// A representative validated solution per family, used by the
/// verification suites. Profiles are smooth and domain-safe near the
/// origin.
pub fn example_solution(family: Family) -> Solution {
    let mut c = Constants::default();
    let mut p = Profiles::default();
    match family {
        Family::EGeneric => {
            c.u0 = 0.3;
            c.h0 = 1.5;
            c.dir = [1.0, 0.7];
            p.phi = Some(ProfileFn::TanhSq { amplitude: 0.8, shape: 1.0 });
        }
        Family::EPeriodic => {
            c.c = 1.0;
            c.h0 = 2.0;
        }
        Family::EHyperbolic => {
            c.c = 1.0;
            p.phi = Some(ProfileFn::Sin { amplitude: 0.5, shape: 1.0, offset: 2.0 });
        }
        Family::SSimple => {
            c.u0 = 0.1;
            c.v0 = -0.2;
            c.dir = [0.6, 0.8];
            p.phi = Some(ProfileFn::SechSq { amplitude: 1.0, shape: 1.0 });
        }
        Family::SRotating => {
            c.u0 = 0.1;
            c.h0 = 2.0;
            p.phi = Some(ProfileFn::Sin { amplitude: 0.5, shape: 1.0, offset: 0.0 });
        }
        Family::SFresnel => {
            p.phi = Some(ProfileFn::TanhSq { amplitude: 0.7, shape: 1.0 });
        }
        Family::EeDegenerate => {}
        Family::SsBranchA => {
            c.v0 = 0.2;
            p.phi = Some(ProfileFn::Sin { amplitude: 0.8, shape: 1.0, offset: 0.3 });
        }
        Family::EsRank2 => {
            p.phi = Some(ProfileFn::SechSq { amplitude: 1.0, shape: 1.0 });
            p.psi = Some(ProfileFn::SechSq { amplitude: 0.8, shape: 1.0 });
        }
        Family::SsRank2 => {
            p.phi = Some(ProfileFn::TanhSq { amplitude: 0.6, shape: 1.0 });
            p.psi = Some(ProfileFn::SechSq { amplitude: 0.5, shape: 1.0 });
        }
        Family::SsMixed => {
            p.phi = Some(ProfileFn::SechSq { amplitude: 0.7, shape: 1.0 });
            p.psi = Some(ProfileFn::SechSq { amplitude: 0.4, shape: 1.0 });
        }
    }
    make_solution(family, c, p, PhysParams::default()).expect("example descriptors are valid")
}

pub const PRESET_NAMES: [&str; 5] = [
    "es_tanh_antibump",
    "es_sech_bump",
    "ss_sech_bump",
    "ss_kink",
    "ss_elliptic_periodic",
];

/// Named bounded two-wave solutions (g = 1): ES anti-bump and bump pairs,
/// the SS colliding-bump pair, an SS kink pair, and an SS periodic pair on
/// the reciprocal elliptic profile.
pub fn preset(name: &str) -> Result<Solution, CatalogError> {
    let mut c = Constants::default();
    let mut p = Profiles::default();
    let family = match name {
        "es_tanh_antibump" => {
            p.phi = Some(ProfileFn::TanhSq { amplitude: 1.0, shape: 1.0 });
            p.psi = Some(ProfileFn::TanhSq { amplitude: 1.0, shape: 1.0 });
            Family::EsRank2
        }
        "es_sech_bump" => {
            p.phi = Some(ProfileFn::SechSq { amplitude: 1.0, shape: 1.0 });
            p.psi = Some(ProfileFn::SechSq { amplitude: 1.0, shape: 1.0 });
            Family::EsRank2
        }
        "ss_sech_bump" => {
            p.phi = Some(ProfileFn::SechSq { amplitude: 1.0, shape: 1.0 });
            p.psi = Some(ProfileFn::SechSq { amplitude: 1.0, shape: 1.0 });
            Family::SsRank2
        }
        "ss_kink" => {
            p.phi = Some(ProfileFn::Kink { amplitude: 1.0, shape: 1.0 });
            p.psi = Some(ProfileFn::Kink { amplitude: 1.0, shape: 1.0 });
            Family::SsRank2
        }
        "ss_elliptic_periodic" => {
            p.phi = Some(ProfileFn::WeierstrassRecip { amplitude: 1.0 });
            p.psi = Some(ProfileFn::WeierstrassRecip { amplitude: 1.0 });
            Family::SsRank2
        }
        other => return Err(CatalogError::UnknownPreset(other.to_string())),
    };
    c.h0 = 1.0;
    make_solution(family, c, p, PhysParams::default())
}
