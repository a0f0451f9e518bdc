//! Special functions used by the solution profiles: Fresnel sine/cosine
//! integrals and the Weierstrass ℘ function for real arguments.
//!
//! Fresnel: S(x) = ∫₀ˣ sin(πt²/2) dt, C(x) = ∫₀ˣ cos(πt²/2) dt, absolute
//! error ≤ 1e-12 on |x| ≤ 10. Maclaurin series for small |x|; composite
//! Gauss–Legendre panels aligned with the oscillation phase otherwise.
//!
//! ℘(z; g₂, g₃): Laurent series 1/z² + Σ c_k z^(2k−2) near the origin with
//! the classical coefficient recurrence, extended by repeated argument
//! duplication; relative error ≤ 1e-10 away from poles, and
//! ℘′² = 4℘³ − g₂℘ − g₃ holds to matching accuracy.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;
use thiserror::Error;

/// Elliptic invariants (g₂, g₃). The discriminant g₂³ − 27g₃² may vanish
/// (degenerate lattice); evaluation handles it, `is_degenerate` reports it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeierstrassInvariants {
    pub g2: f64,
    pub g3: f64,
}

impl WeierstrassInvariants {
    pub fn new(g2: f64, g3: f64) -> Self {
        WeierstrassInvariants { g2, g3 }
    }

    /// Flags g₂³ − 27g₃² ≈ 0 relative to the invariant scale.
    pub fn is_degenerate(&self) -> bool {
        let disc = self.g2.powi(3) - 27.0 * self.g3 * self.g3;
        let scale = self.g2.abs().powi(3).max(27.0 * self.g3 * self.g3).max(1e-300);
        disc.abs() <= 1e-12 * scale
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecFnError {
    #[error("argument within 1e-8 of the pole at z = 0")]
    PoleProximity,
}

/// Fresnel sine integral S(x).
pub fn fresnel_s(x: f64) -> f64 {
    fresnel(x).0
}

/// Fresnel cosine integral C(x).
pub fn fresnel_c(x: f64) -> f64 {
    fresnel(x).1
}

/// Both Fresnel integrals at once: (S(x), C(x)).
pub fn fresnel(x: f64) -> (f64, f64) {
    // Both integrands are even, so S and C are odd.
    let ax = x.abs();
    let (s, c) = if ax <= 1.6 { fresnel_series(ax) } else { fresnel_panels(ax) };
    if x < 0.0 { (-s, -c) } else { (s, c) }
}

/// Maclaurin series, accurate to full precision for |x| ≤ 1.6:
/// S = Σ (−1)ⁿ (π/2)^(2n+1) x^(4n+3) / ((2n+1)! (4n+3)),
/// C = Σ (−1)ⁿ (π/2)^(2n)   x^(4n+1) / ((2n)!   (4n+1)).
fn fresnel_series(x: f64) -> (f64, f64) {
    let x2 = x * x;
    let w = FRAC_PI_2 * x2; // phase πx²/2

    // S: term_n = (−1)ⁿ w^(2n+1) x / ((2n+1)! (4n+3))
    let mut s = 0.0;
    let mut pw = w * x; // w^(2n+1) x / (2n+1)! at n = 0
    for n in 0..40 {
        let term = pw / (4 * n + 3) as f64;
        s += if n % 2 == 0 { term } else { -term };
        if term.abs() < 1e-17 {
            break;
        }
        pw *= w * w / (((2 * n + 2) * (2 * n + 3)) as f64);
    }

    // C: term_n = (−1)ⁿ w^(2n) x / ((2n)! (4n+1))
    let mut c = 0.0;
    let mut pw = x; // w^(2n) x / (2n)! at n = 0
    for n in 0..40 {
        let term = pw / (4 * n + 1) as f64;
        c += if n % 2 == 0 { term } else { -term };
        if term.abs() < 1e-17 {
            break;
        }
        pw *= w * w / (((2 * n + 1) * (2 * n + 2)) as f64);
    }
    (s, c)
}

/// Composite 20-point Gauss–Legendre quadrature with panel boundaries at
/// t_j = √(2j): each panel spans one π of phase of πt²/2, so 20 nodes per
/// panel resolve the oscillation to machine precision.
fn fresnel_panels(x: f64) -> (f64, f64) {
    let mut s = 0.0;
    let mut c = 0.0;
    let mut a = 0.0f64;
    let mut j = 1u32;
    while a < x {
        let b = (2.0 * j as f64).sqrt().min(x);
        let (ds, dc) = gl20(a, b);
        s += ds;
        c += dc;
        a = b;
        j += 1;
    }
    (s, c)
}

/// 20-point Gauss–Legendre integral of (sin, cos)(πt²/2) over [a, b].
fn gl20(a: f64, b: f64) -> (f64, f64) {
    let (nodes, weights) = gl20_rule();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut s = 0.0;
    let mut c = 0.0;
    for i in 0..20 {
        let t = mid + half * nodes[i];
        let ph = FRAC_PI_2 * t * t;
        s += weights[i] * ph.sin();
        c += weights[i] * ph.cos();
    }
    (s * half, c * half)
}

/// Nodes/weights of the 20-point Gauss–Legendre rule on [−1, 1], computed
/// once by Newton iteration on P₂₀ (Bonnet recurrence).
fn gl20_rule() -> &'static ([f64; 20], [f64; 20]) {
    static RULE: OnceLock<([f64; 20], [f64; 20])> = OnceLock::new();
    RULE.get_or_init(|| {
        const N: usize = 20;
        let mut nodes = [0.0; N];
        let mut weights = [0.0; N];
        for i in 0..N {
            // Chebyshev initial guess, refined by Newton on P_N(x) = 0.
            let mut x = (PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_and_deriv(N, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_and_deriv(N, x);
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

/// (P_n(x), P_n'(x)) via the Bonnet recurrence.
fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// ℘(z; g₂, g₃) for real z ≠ 0.
///
/// |z| below the series radius is evaluated by the Laurent expansion; larger
/// arguments are reduced by halving and rebuilt with the duplication formula
/// for (℘, ℘′). Errors with `PoleProximity` for |z| < 1e-8.
pub fn weierstrass_p(z: f64, inv: WeierstrassInvariants) -> Result<f64, SpecFnError> {
    weierstrass_p_and_dp(z, inv).map(|(p, _)| p)
}

/// (℘(z), ℘′(z)); the derivative is exposed for the duplication and ODE
/// self-checks.
pub fn weierstrass_p_and_dp(
    z: f64,
    inv: WeierstrassInvariants,
) -> Result<(f64, f64), SpecFnError> {
    if z.abs() < 1e-8 {
        return Err(SpecFnError::PoleProximity);
    }
    // Series radius keyed to the invariant scale: with ρ = max((g₂/20)^¼,
    // (g₃/28)^⅙) the recurrence gives c_k ≤ ρ^(2k) by induction, so the
    // k > 24 tail is below 2e-16 of the 1/z² head whenever |z|ρ ≤ 0.45.
    // Duplication roughly triples the error, so fewer steps is better.
    // ρ = 0 (degenerate to 1/z²) makes the series exact at any radius.
    let rho = (inv.g2.abs() / 20.0).powf(0.25).max((inv.g3.abs() / 28.0).powf(1.0 / 6.0));
    let r0 = 0.45 / rho;
    let mut m = 0u32;
    let mut zr = z;
    while zr.abs() > r0 {
        zr *= 0.5;
        m += 1;
        if m > 64 {
            break;
        }
    }
    let coeffs = laurent_coeffs(inv);
    let (mut p, mut q) = laurent_eval(zr, &coeffs);
    for _ in 0..m {
        // Duplication: ℘(2z) = −2P + W², ℘′(2z) = −Q + W·W′ with
        // W = ℘″/(2℘′), ℘″ = 6P² − g₂/2, W′ = (12PQ² − ℘″²)/(2Q²).
        let r = 6.0 * p * p - 0.5 * inv.g2;
        let w = r / (2.0 * q);
        let wp = (12.0 * p * q * q - r * r) / (2.0 * q * q);
        let p2 = -2.0 * p + w * w;
        let q2 = -q + w * wp;
        p = p2;
        q = q2;
    }
    Ok((p, q))
}

/// Laurent coefficients c₂..c₂₄ of ℘(z) = 1/z² + Σ_{k≥2} c_k z^(2k−2):
/// c₂ = g₂/20, c₃ = g₃/28, c_k = 3/((2k+1)(k−3)) Σ_{m=2}^{k−2} c_m c_{k−m}.
fn laurent_coeffs(inv: WeierstrassInvariants) -> [f64; 25] {
    let mut c = [0.0f64; 25];
    c[2] = inv.g2 / 20.0;
    c[3] = inv.g3 / 28.0;
    for k in 4..=24usize {
        let mut acc = 0.0;
        for m in 2..=(k - 2) {
            acc += c[m] * c[k - m];
        }
        c[k] = 3.0 * acc / (((2 * k + 1) * (k - 3)) as f64);
    }
    c
}

/// (℘, ℘′) by the truncated Laurent series (valid only within the radius
/// chosen by the caller).
fn laurent_eval(z: f64, c: &[f64; 25]) -> (f64, f64) {
    let z2 = z * z;
    let mut p = 1.0 / z2;
    let mut dp = -2.0 / (z2 * z);
    let mut zp = z2; // z^(2k−2) at k = 2
    for k in 2..=24usize {
        p += c[k] * zp;
        dp += (2 * k - 2) as f64 * c[k] * zp / z;
        zp *= z2;
    }
    (p, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresnel_at_zero_and_parity() {
        assert_eq!(fresnel_s(0.0), 0.0);
        assert_eq!(fresnel_c(0.0), 0.0);
        for &x in &[0.3, 0.9, 1.7, 4.2, 9.5] {
            assert_eq!(fresnel_s(-x), -fresnel_s(x));
            assert_eq!(fresnel_c(-x), -fresnel_c(x));
        }
    }

    #[test]
    fn fresnel_frozen_values() {
        // Independent Maclaurin oracle values at x = 1.
        assert!((fresnel_s(1.0) - 0.4382591473903548).abs() < 1e-14);
        assert!((fresnel_c(1.0) - 0.7798934003768228).abs() < 1e-14);
    }

    #[test]
    fn fresnel_series_and_quadrature_agree_across_the_switch() {
        // The two evaluation schemes must agree where both apply.
        for i in 0..=40 {
            let x = 0.8 + 0.02 * i as f64; // [0.8, 1.6]
            let (s1, c1) = fresnel_series(x);
            let (s2, c2) = fresnel_panels(x);
            assert!((s1 - s2).abs() < 1e-13, "S mismatch at {x}: {s1} vs {s2}");
            assert!((c1 - c2).abs() < 1e-13, "C mismatch at {x}: {c1} vs {c2}");
        }
    }

    #[test]
    fn fresnel_derivative_matches_integrand() {
        // dS/dx = sin(πx²/2), dC/dx = cos(πx²/2). 4th-order stencil: the
        // 2nd-order one is too coarse near |x| = 10 where f''' ~ (πx)².
        let h = 1e-4;
        let d4 = |f: &dyn Fn(f64) -> f64, x: f64| {
            (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
        };
        for i in 0..60 {
            let x = -9.8 + i as f64 * 0.33;
            let ds = d4(&fresnel_s, x);
            let dc = d4(&fresnel_c, x);
            let ph = FRAC_PI_2 * x * x;
            assert!((ds - ph.sin()).abs() < 1e-8, "x = {x}");
            assert!((dc - ph.cos()).abs() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn wp_degenerate_invariants_reduce_to_inverse_square() {
        let inv = WeierstrassInvariants::new(0.0, 0.0);
        let p = weierstrass_p(0.5, inv).unwrap();
        assert!((p - 4.0).abs() < 1e-12);
        // Larger arguments exercise the duplication chain in the same case.
        let p = weierstrass_p(3.0, inv).unwrap();
        assert!((p - 1.0 / 9.0).abs() < 1e-12);
        assert!(inv.is_degenerate());
    }

    #[test]
    fn wp_laurent_leading_order() {
        let inv = WeierstrassInvariants::new(4.0 / 3.0, 8.0 / 27.0);
        let z = 1e-3;
        let p = weierstrass_p(z, inv).unwrap();
        let lead = 1.0 / (z * z) + inv.g2 * z * z / 20.0 + inv.g3 * z.powi(4) / 28.0;
        assert!((p - lead).abs() <= 1e-6 * lead.abs());
        assert!(inv.is_degenerate()); // g2³ = 27 g3² for this pair
    }

    #[test]
    fn wp_pole_proximity() {
        let inv = WeierstrassInvariants::new(1.0, 1.0);
        assert_eq!(weierstrass_p(1e-9, inv), Err(SpecFnError::PoleProximity));
    }

    #[test]
    fn wp_satisfies_defining_ode() {
        // ℘′² = 4℘³ − g₂℘ − g₃ with ℘′ by 5-point numerical derivative.
        let inv = WeierstrassInvariants::new(4.0 / 3.0, 44.0 / 27.0);
        let z = 0.7;
        let h = 1e-3;
        let f = |z: f64| weierstrass_p(z, inv).unwrap();
        let dp = (-f(z + 2.0 * h) + 8.0 * f(z + h) - 8.0 * f(z - h) + f(z - 2.0 * h)) / (12.0 * h);
        let v = f(z);
        let resid = dp * dp - (4.0 * v.powi(3) - inv.g2 * v - inv.g3);
        assert!(resid.abs() <= 1e-8, "ODE residual {resid}");
    }

    #[test]
    fn wp_duplication_consistency() {
        // ℘(2z) from the duplication formula vs direct evaluation.
        let cases = [
            WeierstrassInvariants::new(4.0 / 3.0, 44.0 / 27.0),
            WeierstrassInvariants::new(2.5, -0.7),
            WeierstrassInvariants::new(0.1, 0.3),
        ];
        for inv in cases {
            for i in 1..=30 {
                let z = 0.02 * i as f64; // up to 0.6, 2z up to 1.2
                let (p, q) = weierstrass_p_and_dp(z, inv).unwrap();
                let r = 6.0 * p * p - 0.5 * inv.g2;
                let w = r / (2.0 * q);
                let dup = -2.0 * p + w * w;
                let direct = weierstrass_p(2.0 * z, inv).unwrap();
                assert!(
                    (dup - direct).abs() <= 1e-9 * direct.abs().max(1.0),
                    "inv {inv:?} z {z}: {dup} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn wp_analytic_derivative_matches_numeric() {
        let inv = WeierstrassInvariants::new(4.0 / 3.0, 44.0 / 27.0);
        for i in 1..=12 {
            let z = 0.1 * i as f64;
            let (_, q) = weierstrass_p_and_dp(z, inv).unwrap();
            let h = 1e-4;
            let f = |z: f64| weierstrass_p(z, inv).unwrap();
            let dp =
                (-f(z + 2.0 * h) + 8.0 * f(z + h) - 8.0 * f(z - h) + f(z - 2.0 * h)) / (12.0 * h);
            assert!((q - dp).abs() <= 1e-6 * dp.abs().max(1.0), "z = {z}: {q} vs {dp}");
        }
    }
}
