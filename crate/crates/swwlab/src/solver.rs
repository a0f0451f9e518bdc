//! Scalar and 2-component nonlinear solvers for implicit Riemann-invariant
//! equations, plus a deterministic two-pass grid sweep with gradient-
//! catastrophe detection.
//!
//! A root r(t, x, y) of F(r; t, x, y) = 0 defines the invariant implicitly;
//! where ∂F/∂r degenerates the invariant's gradient blows up (gradient
//! catastrophe). The sweep keeps every cell on the branch continuously
//! connected to the family's analytic seed: roots that jump outside a
//! connectivity window are replaced by an in-window bracket root when one
//! exists, otherwise by the fold point of F, flagged and never jumped.

use crate::core::Point;
use thiserror::Error;

/// Residual map F(r; pt) → out. `Err` strings signal domain violations
/// (e.g. a profile evaluated where it is undefined).
pub type ResidualFn<'a> = Box<dyn Fn(&[f64], Point, &mut [f64]) -> Result<(), String> + Sync + 'a>;

/// An implicit system of `dim` equations in `dim` invariants (1 or 2),
/// together with the family's analytic seed: the exact root at a reference
/// point where the implicit equations degenerate to linear.
pub struct ImplicitSystem<'a> {
    pub dim: usize,
    pub residual: ResidualFn<'a>,
    /// Optional analytic Jacobian ∂F/∂r (row-major); finite differences
    /// otherwise.
    pub jacobian: Option<Box<dyn Fn(&[f64], Point, &mut [[f64; 2]; 2]) + Sync + 'a>>,
    pub ref_pt: Point,
    pub seed: [f64; 2],
}

impl<'a> ImplicitSystem<'a> {
    pub fn scalar<F>(residual: F, ref_pt: Point, seed: f64) -> Self
    where
        F: Fn(f64, Point) -> Result<f64, String> + Sync + 'a,
    {
        ImplicitSystem {
            dim: 1,
            residual: Box::new(move |r, pt, out| {
                out[0] = residual(r[0], pt)?;
                Ok(())
            }),
            jacobian: None,
            ref_pt,
            seed: [seed, 0.0],
        }
    }

    pub fn pair<F>(residual: F, ref_pt: Point, seed: [f64; 2]) -> Self
    where
        F: Fn([f64; 2], Point) -> Result<[f64; 2], String> + Sync + 'a,
    {
        ImplicitSystem {
            dim: 2,
            residual: Box::new(move |r, pt, out| {
                let f = residual([r[0], r[1]], pt)?;
                out[0] = f[0];
                out[1] = f[1];
                Ok(())
            }),
            jacobian: None,
            ref_pt,
            seed,
        }
    }

    fn eval(&self, r: &[f64], pt: Point, out: &mut [f64]) -> Result<(), SolveError> {
        (self.residual)(r, pt, out).map_err(SolveError::Domain)
    }
}

/// Outcome of a point solve. `converged` guarantees max|F(root)| ≤ tol;
/// `jac_min_sv` is the smallest singular value of ∂F/∂r at the root and is
/// the gradient-catastrophe indicator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub root: [f64; 2],
    pub dim: usize,
    pub converged: bool,
    pub iterations: u32,
    pub jac_min_sv: f64,
    pub residual_norm: f64,
}

impl SolveReport {
    pub fn r1(&self) -> f64 {
        self.root[0]
    }
    pub fn r2(&self) -> Option<f64> {
        (self.dim == 2).then_some(self.root[1])
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("no convergence after {iterations} iterations (last residual {last_residual:e})")]
    NoConvergence { iterations: u32, last_residual: f64 },
    #[error("singular Jacobian with no bisection bracket available")]
    SingularJacobian,
    #[error("residual undefined: {0}")]
    Domain(String),
}

/// Grid axis: `n` samples from `min` to `max` inclusive (`n = 1` pins the
/// axis at `min`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize) -> Self {
        assert!(n >= 1 && min.is_finite() && max.is_finite());
        Axis { min, max, n }
    }

    pub fn single(v: f64) -> Self {
        Axis::new(v, v, 1)
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.n == 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.n - 1) as f64
        }
    }
}

/// Evaluation grid; cells are ordered row-major with t slowest and y
/// fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub t: Axis,
    pub x: Axis,
    pub y: Axis,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.t.n * self.x.n * self.y.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, it: usize, ix: usize, iy: usize) -> Point {
        Point::new(self.t.value(it), self.x.value(ix), self.y.value(iy))
    }

    pub fn linear_index(&self, it: usize, ix: usize, iy: usize) -> usize {
        (it * self.x.n + ix) * self.y.n + iy
    }
}

/// Sweep tuning knobs; `Default` matches the documented behavior.
#[derive(Debug, Clone, Copy)]
pub struct SweepParams {
    /// Coarse-subgrid stride for pass 1.
    pub stride: usize,
    /// Cells whose jac_min_sv falls below this are flagged catastrophe.
    pub catastrophe_tol: f64,
    pub max_iter: u32,
    /// Worker threads for pass 2; 0 = available parallelism.
    pub threads: usize,
    /// Connectivity window |root − seed| ≤ window_abs + window_rel·|seed|.
    pub window_abs: f64,
    pub window_rel: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            stride: 8,
            catastrophe_tol: 1e-8,
            max_iter: 100,
            threads: 0,
            window_abs: 1.0,
            window_rel: 0.05,
        }
    }
}

/// Per-cell sweep outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub report: SolveReport,
    pub catastrophe: bool,
    pub error: Option<SolveError>,
}

/// Sweep result: cells in row-major order (t slowest, y fastest).
#[derive(Debug, Clone)]
pub struct SweepField {
    pub grid: Grid,
    pub cells: Vec<SweepCell>,
}

impl SweepField {
    pub fn cell(&self, it: usize, ix: usize, iy: usize) -> &SweepCell {
        &self.cells[self.grid.linear_index(it, ix, iy)]
    }

    pub fn all_converged(&self) -> bool {
        self.cells.iter().all(|c| c.report.converged)
    }
}

const SINGULAR_JAC: f64 = 1e-14;
const MAX_HALVINGS: u32 = 6; // damping down to 1/64

/// Damped Newton iteration with finite-difference Jacobian and, for scalar
/// systems, a bisection fallback when a sign-changing bracket exists near
/// the seed. `converged` in the report means max|F(root)| ≤ tol.
pub fn solve_newton(
    sys: &ImplicitSystem,
    pt: Point,
    seed: &[f64],
    tol: f64,
    max_iter: u32,
) -> Result<SolveReport, SolveError> {
    assert!(tol > 0.0);
    let dim = sys.dim;
    let mut r = [0.0f64; 2];
    r[..dim].copy_from_slice(&seed[..dim]);
    let mut f = [0.0f64; 2];
    sys.eval(&r[..dim], pt, &mut f[..dim])?;
    let mut norm = max_abs(&f[..dim]);
    let mut iters = 0u32;

    while iters < max_iter {
        if norm <= tol {
            return Ok(finish(sys, pt, &r, dim, true, iters, norm));
        }
        let jac = jacobian_at(sys, pt, &r, dim)?;
        let minsv = min_singular_value(&jac, dim);
        if minsv < SINGULAR_JAC {
            if dim == 1 {
                if let Some(rep) = bisect_near(sys, pt, r[0], tol, iters) {
                    return Ok(rep);
                }
            }
            return Err(SolveError::SingularJacobian);
        }
        let step = solve_linear(&jac, &f, dim).ok_or(SolveError::SingularJacobian)?;

        // Line search: accept the first damping that beats (1 − α/4)·|F|.
        let mut alpha = 1.0f64;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let mut cand = [0.0f64; 2];
            for i in 0..dim {
                cand[i] = r[i] - alpha * step[i];
            }
            let mut fc = [0.0f64; 2];
            if sys.eval(&cand[..dim], pt, &mut fc[..dim]).is_ok() {
                let nc = max_abs(&fc[..dim]);
                if nc <= (1.0 - 0.25 * alpha) * norm {
                    r = cand;
                    f = fc;
                    norm = nc;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        iters += 1;
        if !accepted {
            if dim == 1 {
                if let Some(rep) = bisect_near(sys, pt, r[0], tol, iters) {
                    return Ok(rep);
                }
            }
            return Err(SolveError::NoConvergence { iterations: iters, last_residual: norm });
        }
    }
    if norm <= tol {
        return Ok(finish(sys, pt, &r, dim, true, iters, norm));
    }
    if dim == 1 {
        if let Some(rep) = bisect_near(sys, pt, r[0], tol, iters) {
            return Ok(rep);
        }
    }
    Err(SolveError::NoConvergence { iterations: max_iter, last_residual: norm })
}

fn finish(
    sys: &ImplicitSystem,
    pt: Point,
    r: &[f64; 2],
    dim: usize,
    converged: bool,
    iterations: u32,
    residual_norm: f64,
) -> SolveReport {
    let jac_min_sv = jacobian_at(sys, pt, r, dim)
        .map(|j| min_singular_value(&j, dim))
        .unwrap_or(f64::NAN);
    SolveReport { root: *r, dim, converged, iterations, jac_min_sv, residual_norm }
}

/// Central-difference Jacobian, step ∛ε·max(1, |rᵢ|) per component.
fn jacobian_at(
    sys: &ImplicitSystem,
    pt: Point,
    r: &[f64; 2],
    dim: usize,
) -> Result<[[f64; 2]; 2], SolveError> {
    if let Some(j) = &sys.jacobian {
        let mut out = [[0.0; 2]; 2];
        j(&r[..dim], pt, &mut out);
        return Ok(out);
    }
    let mut jac = [[0.0f64; 2]; 2];
    let base = f64::EPSILON.cbrt();
    for c in 0..dim {
        let h = base * r[c].abs().max(1.0);
        let mut rp = *r;
        let mut rm = *r;
        rp[c] += h;
        rm[c] -= h;
        let mut fp = [0.0f64; 2];
        let mut fm = [0.0f64; 2];
        sys.eval(&rp[..dim], pt, &mut fp[..dim])?;
        sys.eval(&rm[..dim], pt, &mut fm[..dim])?;
        for rix in 0..dim {
            jac[rix][c] = (fp[rix] - fm[rix]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Smallest singular value: |J| for 1×1, closed-form JᵀJ eigenvalue for 2×2.
fn min_singular_value(jac: &[[f64; 2]; 2], dim: usize) -> f64 {
    if dim == 1 {
        return jac[0][0].abs();
    }
    let (a, b, c, d) = (jac[0][0], jac[0][1], jac[1][0], jac[1][1]);
    let q = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    let disc = (q * q - 4.0 * det * det).max(0.0).sqrt();
    (0.5 * (q - disc)).max(0.0).sqrt()
}

fn solve_linear(jac: &[[f64; 2]; 2], f: &[f64; 2], dim: usize) -> Option<[f64; 2]> {
    if dim == 1 {
        let j = jac[0][0];
        if j.abs() < SINGULAR_JAC {
            return None;
        }
        return Some([f[0] / j, 0.0]);
    }
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    if det.abs() < SINGULAR_JAC * SINGULAR_JAC {
        return None;
    }
    Some([
        (f[0] * jac[1][1] - f[1] * jac[0][1]) / det,
        (jac[0][0] * f[1] - jac[1][0] * f[0]) / det,
    ])
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn eval_scalar(sys: &ImplicitSystem, pt: Point, r: f64) -> Option<f64> {
    let mut out = [0.0f64; 2];
    sys.eval(&[r], pt, &mut out[..1]).ok().map(|_| out[0])
}

/// Scalar fallback: scan seed ± 8·max(1, |seed|) for a sign change and
/// bisect the bracket nearest the seed.
fn bisect_near(
    sys: &ImplicitSystem,
    pt: Point,
    seed: f64,
    tol: f64,
    base_iters: u32,
) -> Option<SolveReport> {
    let radius = 8.0 * seed.abs().max(1.0);
    let (lo, hi) = (seed - radius, seed + radius);
    let bracket = scan_bracket(sys, pt, lo, hi, 512, seed)?;
    let (root, iters) = bisect(sys, pt, bracket, tol)?;
    let f = eval_scalar(sys, pt, root)?;
    let r = [root, 0.0];
    Some(finish(sys, pt, &r, 1, f.abs() <= tol, base_iters + iters, f.abs()))
}

/// Locate the sign-change interval nearest `near` among `n` uniform samples
/// of F on [lo, hi].
fn scan_bracket(
    sys: &ImplicitSystem,
    pt: Point,
    lo: f64,
    hi: f64,
    n: usize,
    near: f64,
) -> Option<(f64, f64)> {
    let mut best: Option<((f64, f64), f64)> = None;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=n {
        let r = lo + (hi - lo) * i as f64 / n as f64;
        let Some(f) = eval_scalar(sys, pt, r) else {
            prev = None;
            continue;
        };
        if let Some((rp, fp)) = prev {
            if fp == 0.0 || fp * f < 0.0 {
                let mid = 0.5 * (rp + r);
                let d = (mid - near).abs();
                if best.map_or(true, |(_, bd)| d < bd) {
                    best = Some(((rp, r), d));
                }
            }
        }
        prev = Some((r, f));
    }
    best.map(|(b, _)| b)
}

/// Plain bisection on a sign-changing bracket, to interval width ≤ 1e-15
/// scale or residual ≤ tol.
fn bisect(
    sys: &ImplicitSystem,
    pt: Point,
    (mut lo, mut hi): (f64, f64),
    tol: f64,
) -> Option<(f64, u32)> {
    let mut flo = eval_scalar(sys, pt, lo)?;
    let mut iters = 0u32;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = eval_scalar(sys, pt, mid)?;
        iters += 1;
        if fm.abs() <= tol || (hi - lo).abs() <= 4.0 * f64::EPSILON * mid.abs().max(1e-3) {
            return Some((mid, iters));
        }
        if flo * fm <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    Some((0.5 * (lo + hi), iters))
}

/// Two-pass deterministic continuation sweep with default parameters.
pub fn sweep_grid(sys: &ImplicitSystem, grid: &Grid, tol: f64) -> SweepField {
    sweep_grid_with(sys, grid, tol, &SweepParams::default())
}

/// Two-pass deterministic continuation sweep.
///
/// Pass 1 solves a coarse subgrid (every `stride`-th cell per axis)
/// serially in row-major order, each cell seeded by its nearest previously
/// solved coarse neighbor; the first coarse cell is seeded by continuation
/// from the system's reference point and analytic seed. Pass 2 solves every
/// cell independently, seeded by the nearest coarse root, so the result is
/// identical however pass 2 is parallelized.
pub fn sweep_grid_with(
    sys: &ImplicitSystem,
    grid: &Grid,
    tol: f64,
    params: &SweepParams,
) -> SweepField {
    assert!(grid.len() >= 1);
    let k = params.stride.max(1);
    let (nt, nx, ny) = (grid.t.n, grid.x.n, grid.y.n);
    let coarse_t: Vec<usize> = (0..nt).step_by(k).collect();
    let coarse_x: Vec<usize> = (0..nx).step_by(k).collect();
    let coarse_y: Vec<usize> = (0..ny).step_by(k).collect();

    // Pass 0: walk from the reference point to the first coarse cell.
    let first_pt = grid.point(coarse_t[0], coarse_x[0], coarse_y[0]);
    let mut seed = continuation_seed(sys, first_pt, tol, params.max_iter);

    // Pass 1: serial coarse sweep.
    let mut coarse_roots: Vec<Option<[f64; 2]>> =
        vec![None; coarse_t.len() * coarse_x.len() * coarse_y.len()];
    let cidx =
        |a: usize, b: usize, c: usize| (a * coarse_x.len() + b) * coarse_y.len() + c;
    let mut last_good = seed;
    for a in 0..coarse_t.len() {
        for b in 0..coarse_x.len() {
            for c in 0..coarse_y.len() {
                // Nearest previously solved coarse neighbor.
                let neighbor = [
                    (a, b, c.wrapping_sub(1)),
                    (a, b.wrapping_sub(1), c),
                    (a.wrapping_sub(1), b, c),
                ]
                .into_iter()
                .find_map(|(pa, pb, pc)| {
                    if pa < coarse_t.len() && pb < coarse_x.len() && pc < coarse_y.len() {
                        coarse_roots[cidx(pa, pb, pc)]
                    } else {
                        None
                    }
                });
                seed = neighbor.unwrap_or(last_good);
                let pt = grid.point(coarse_t[a], coarse_x[b], coarse_y[c]);
                let cell = solve_cell(sys, pt, &seed, tol, params);
                if cell.report.converged {
                    coarse_roots[cidx(a, b, c)] = Some(cell.report.root);
                    last_good = cell.report.root;
                }
            }
        }
    }

    // Pass 2: every cell, seeded from the nearest coarse root.
    let fallback = last_good;
    let nearest_seed = |it: usize, ix: usize, iy: usize| -> [f64; 2] {
        let pick = |i: usize, list: &[usize]| -> (usize, usize) {
            // Indices of the two nearest coarse planes along the axis.
            let lo = (i / k).min(list.len() - 1);
            let hi = (lo + 1).min(list.len() - 1);
            (lo, hi)
        };
        let (ta, tb) = pick(it, &coarse_t);
        let (xa, xb) = pick(ix, &coarse_x);
        let (ya, yb) = pick(iy, &coarse_y);
        let mut best: Option<(i64, usize, [f64; 2])> = None;
        for &a in &[ta, tb] {
            for &b in &[xa, xb] {
                for &c in &[ya, yb] {
                    let Some(root) = coarse_roots[cidx(a, b, c)] else { continue };
                    let dt = coarse_t[a] as i64 - it as i64;
                    let dx = coarse_x[b] as i64 - ix as i64;
                    let dy = coarse_y[c] as i64 - iy as i64;
                    let d2 = dt * dt + dx * dx + dy * dy;
                    let lin = grid.linear_index(coarse_t[a], coarse_x[b], coarse_y[c]);
                    match best {
                        Some((bd, bl, _)) if (d2, lin) >= (bd, bl) => {}
                        _ => best = Some((d2, lin, root)),
                    }
                }
            }
        }
        best.map(|(_, _, r)| r).unwrap_or(fallback)
    };

    let n = grid.len();
    let mut cells: Vec<Option<SweepCell>> = vec![None; n];
    let threads = if params.threads == 0 {
        std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1)
    } else {
        params.threads
    }
    .max(1)
    .min(n);

    let chunk = n.div_ceil(threads);
    std::thread::scope(|scope| {
        for (ci, slot) in cells.chunks_mut(chunk).enumerate() {
            let start = ci * chunk;
            let nearest_seed = &nearest_seed;
            scope.spawn(move || {
                for (off, cell) in slot.iter_mut().enumerate() {
                    let lin = start + off;
                    let iy = lin % ny;
                    let ix = (lin / ny) % nx;
                    let it = lin / (ny * nx);
                    let seed = nearest_seed(it, ix, iy);
                    let pt = grid.point(it, ix, iy);
                    *cell = Some(solve_cell(sys, pt, &seed, tol, params));
                }
            });
        }
    });

    SweepField { grid: *grid, cells: cells.into_iter().map(Option::unwrap).collect() }
}

/// Point evaluation: walk a 16-step linear continuation from the system's
/// reference point (where the analytic seed is exact) to `target`, then
/// solve at `target` itself. Keeps the root on the seed-connected branch.
pub fn solve_at(
    sys: &ImplicitSystem,
    target: Point,
    tol: f64,
    max_iter: u32,
) -> Result<SolveReport, SolveError> {
    let mut seed = sys.seed;
    let steps = 16;
    for i in 1..steps {
        let f = i as f64 / steps as f64;
        let pt = Point::new(
            sys.ref_pt.t + (target.t - sys.ref_pt.t) * f,
            sys.ref_pt.x + (target.x - sys.ref_pt.x) * f,
            sys.ref_pt.y + (target.y - sys.ref_pt.y) * f,
        );
        if let Ok(rep) = solve_newton(sys, pt, &seed[..sys.dim], tol, max_iter) {
            if rep.converged {
                seed = rep.root;
            }
        }
    }
    solve_newton(sys, target, &seed[..sys.dim], tol, max_iter)
}

/// Short linear continuation from the reference point to `target`.
fn continuation_seed(sys: &ImplicitSystem, target: Point, tol: f64, max_iter: u32) -> [f64; 2] {
    let mut seed = sys.seed;
    let steps = 8;
    for i in 1..=steps {
        let f = i as f64 / steps as f64;
        let pt = Point::new(
            sys.ref_pt.t + (target.t - sys.ref_pt.t) * f,
            sys.ref_pt.x + (target.x - sys.ref_pt.x) * f,
            sys.ref_pt.y + (target.y - sys.ref_pt.y) * f,
        );
        if let Ok(rep) = solve_newton(sys, pt, &seed[..sys.dim], tol, max_iter) {
            if rep.converged {
                seed = rep.root;
            }
        }
    }
    seed
}

/// One sweep cell: Newton from the seed under the branch-connectivity
/// policy (in-window bracket, else fold point; flag, never jump).
fn solve_cell(
    sys: &ImplicitSystem,
    pt: Point,
    seed: &[f64; 2],
    tol: f64,
    params: &SweepParams,
) -> SweepCell {
    let attempt = solve_newton(sys, pt, &seed[..sys.dim], tol, params.max_iter);
    if sys.dim == 2 {
        return match attempt {
            Ok(report) => SweepCell {
                catastrophe: report.jac_min_sv < params.catastrophe_tol,
                report,
                error: None,
            },
            Err(e) => SweepCell { report: failed_report(seed, sys.dim), catastrophe: false, error: Some(e) },
        };
    }

    let s = seed[0];
    let window = params.window_abs + params.window_rel * s.abs();
    match &attempt {
        Ok(report) if report.converged && (report.root[0] - s).abs() <= window => {
            let catastrophe = report.jac_min_sv < params.catastrophe_tol;
            return SweepCell { report: *report, catastrophe, error: None };
        }
        _ => {}
    }

    // Jump or failure: prefer a bracket inside the window.
    if let Some(bracket) = scan_bracket(sys, pt, s - window, s + window, 256, s) {
        if let Some((root, iters)) = bisect(sys, pt, bracket, tol) {
            if let Some(f) = eval_scalar(sys, pt, root) {
                let rep = finish(sys, pt, &[root, 0.0], 1, f.abs() <= tol, iters, f.abs());
                let catastrophe = rep.jac_min_sv < params.catastrophe_tol;
                return SweepCell { report: rep, catastrophe, error: None };
            }
        }
    }

    // No root in the window. A fold of F inside it means the seed branch
    // ends here: report the fold point and flag the catastrophe.
    if let Some(fold) = find_fold(sys, pt, s - window, s + window) {
        if let Some(f) = eval_scalar(sys, pt, fold) {
            let rep = finish(sys, pt, &[fold, 0.0], 1, f.abs() <= tol, 0, f.abs());
            let catastrophe = rep.jac_min_sv < params.catastrophe_tol;
            return SweepCell { report: rep, catastrophe, error: None };
        }
    }

    // Monotone across the window with the root beyond it: the connected
    // branch is unique here, so a converged Newton root is legitimate.
    match attempt {
        Ok(report) if report.converged => {
            let catastrophe = report.jac_min_sv < params.catastrophe_tol;
            SweepCell { report, catastrophe, error: None }
        }
        Ok(report) => SweepCell {
            catastrophe: report.jac_min_sv < params.catastrophe_tol,
            report,
            error: Some(SolveError::NoConvergence {
                iterations: report.iterations,
                last_residual: report.residual_norm,
            }),
        },
        Err(e) => SweepCell { report: failed_report(seed, sys.dim), catastrophe: false, error: Some(e) },
    }
}

fn failed_report(seed: &[f64; 2], dim: usize) -> SolveReport {
    SolveReport {
        root: *seed,
        dim,
        converged: false,
        iterations: 0,
        jac_min_sv: f64::NAN,
        residual_norm: f64::NAN,
    }
}

/// Locate a sign change of F′ (a fold) in [lo, hi], refined by bisection on
/// the finite-difference derivative. Returns the fold point.
fn find_fold(sys: &ImplicitSystem, pt: Point, lo: f64, hi: f64) -> Option<f64> {
    let n = 256;
    let deriv = |r: f64| -> Option<f64> {
        let d = 1e-6 * r.abs().max(1.0);
        Some((eval_scalar(sys, pt, r + d)? - eval_scalar(sys, pt, r - d)?) / (2.0 * d))
    };
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    for i in 0..=n {
        let r = lo + (hi - lo) * i as f64 / n as f64;
        let Some(g) = deriv(r) else {
            prev = None;
            continue;
        };
        if let Some((rp, gp)) = prev {
            if gp == 0.0 || gp * g < 0.0 {
                bracket = Some((rp, r));
                break;
            }
        }
        prev = Some((r, g));
    }
    let (mut a, mut b) = bracket?;
    let mut ga = deriv(a)?;
    for _ in 0..100 {
        let mid = 0.5 * (a + b);
        let gm = deriv(mid)?;
        if gm == 0.0 || (b - a).abs() < 1e-13 * mid.abs().max(1.0) {
            return Some(mid);
        }
        if ga * gm < 0.0 {
            b = mid;
        } else {
            a = mid;
            ga = gm;
        }
    }
    Some(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_sys<'a, F>(f: F) -> ImplicitSystem<'a>
    where
        F: Fn(f64, Point) -> f64 + Sync + 'a,
    {
        ImplicitSystem::scalar(move |r, pt| Ok(f(r, pt)), Point::default(), 0.0)
    }

    #[test]
    fn newton_frozen_roots() {
        let sys = scalar_sys(|r, _| r - r.cos());
        let rep = solve_newton(&sys, Point::default(), &[0.5], 1e-12, 100).unwrap();
        assert!(rep.converged);
        assert!((rep.r1() - 0.7390851332151607).abs() < 1e-12);

        let sys = scalar_sys(|r, _| r - r.sin());
        let rep = solve_newton(&sys, Point::default(), &[0.3], 1e-12, 100).unwrap();
        assert!(rep.converged);
        assert!(rep.r1().abs() < 1e-3); // triple root: residual r³/6 ≤ 1e-12
        assert!(rep.r1().abs().powi(3) / 6.0 <= 1e-12);

        // Periodic-family invariant at C=1, t=0, x=0, y=2: r = 2 cos r.
        let sys = scalar_sys(|r, pt| r + pt.t - pt.x * r.sin() - pt.y * r.cos());
        let rep = solve_newton(&sys, Point::new(0.0, 0.0, 2.0), &[1.0], 1e-12, 100).unwrap();
        assert!(rep.converged);
        assert!((rep.r1() - 1.0298665293222589).abs() < 1e-12);
    }

    #[test]
    fn converged_roots_satisfy_reported_tolerance() {
        let sys = scalar_sys(|r, pt| r + pt.t - 0.8 * (r + pt.x).sin());
        for i in 0..50 {
            let pt = Point::new(-0.5 + 0.02 * i as f64, 0.1 * i as f64 - 2.0, 0.0);
            let rep = solve_newton(&sys, pt, &[0.0], 1e-11, 100).unwrap();
            assert!(rep.converged);
            let f = rep.r1() + pt.t - 0.8 * (rep.r1() + pt.x).sin();
            assert!(f.abs() <= 1e-11);
        }
    }

    #[test]
    fn scalar_matches_bisection_oracle_on_contractions() {
        // Fixed-point problems r = a + b sin(r + φ), |b| < 0.9.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let a = rng.gen_range(-2.0..2.0);
            let b = rng.gen_range(-0.89..0.89);
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            let f = move |r: f64, _: Point| r - a - b * (r + phi).sin();
            let sys = scalar_sys(f);
            let rep = solve_newton(&sys, Point::default(), &[0.0], 1e-13, 200).unwrap();
            assert!(rep.converged);

            // Oracle: bisection on a bracket that must contain the root.
            let (mut lo, mut hi) = (a - b.abs() - 1.0, a + b.abs() + 1.0);
            let flo = f(lo, Point::default());
            assert!(flo * f(hi, Point::default()) < 0.0);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if flo * f(mid, Point::default()) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            assert!((rep.r1() - 0.5 * (lo + hi)).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_jacobian_without_bracket_is_reported() {
        // F = 1 + r²: F′(0) = 0 and F has no real root.
        let sys = scalar_sys(|r, _| 1.0 + r * r);
        let err = solve_newton(&sys, Point::default(), &[0.0], 1e-12, 50).unwrap_err();
        assert_eq!(err, SolveError::SingularJacobian);
    }

    #[test]
    fn domain_failures_propagate() {
        let sys = ImplicitSystem::scalar(
            |r: f64, _| if r < -0.5 { Err("left of domain".into()) } else { Ok(r + 1.0) },
            Point::default(),
            0.0,
        );
        // The root sits at −1, outside the residual's domain; Newton's first
        // full step leaves the domain and the damped retries stagnate.
        let out = solve_newton(&sys, Point::default(), &[0.0], 1e-12, 50);
        assert!(out.is_err());
    }

    #[test]
    fn sweep_constant_system() {
        let sys = ImplicitSystem {
            dim: 1,
            residual: Box::new(|r, _pt, out| {
                out[0] = r[0] - 5.0;
                Ok(())
            }),
            jacobian: None,
            ref_pt: Point::default(),
            seed: [5.0, 0.0],
        };
        let grid = Grid {
            t: Axis::new(0.0, 1.0, 4),
            x: Axis::new(-1.0, 1.0, 5),
            y: Axis::new(0.0, 0.0, 1),
        };
        let field = sweep_grid(&sys, &grid, 1e-12);
        assert_eq!(field.cells.len(), 20);
        for cell in &field.cells {
            assert!(cell.report.converged);
            assert!(!cell.catastrophe);
            assert!((cell.report.r1() - 5.0).abs() < 1e-12);
        }
    }

    /// Periodic-family invariant: F(r) = r + C²t − Cx sin r − Cy cos r.
    fn periodic_sys<'a>(c: f64) -> ImplicitSystem<'a> {
        ImplicitSystem::scalar(
            move |r, pt: Point| Ok(r + c * c * pt.t - c * pt.x * r.sin() - c * pt.y * r.cos()),
            Point::default(),
            0.0,
        )
    }

    #[test]
    fn sweep_periodic_c1_converges_and_stays_continuous() {
        let sys = periodic_sys(1.0);
        let grid = Grid {
            t: Axis::new(0.0, 0.5, 32),
            x: Axis::new(-1.0, 1.0, 32),
            y: Axis::single(0.0),
        };
        let field = sweep_grid(&sys, &grid, 1e-12);
        assert!(field.all_converged());

        // Dense serial reference: row-major, each cell seeded by its
        // predecessor's root.
        let mut seed = 0.0f64;
        let mut reference = Vec::with_capacity(grid.len());
        for it in 0..grid.t.n {
            for ix in 0..grid.x.n {
                let pt = grid.point(it, ix, 0);
                let rep = solve_newton(&sys, pt, &[seed], 1e-12, 100).unwrap();
                assert!(rep.converged);
                seed = rep.r1();
                reference.push(seed);
            }
        }
        for (cell, want) in field.cells.iter().zip(&reference) {
            assert!(
                (cell.report.r1() - want).abs() < 1e-9,
                "sweep {} vs serial {}",
                cell.report.r1(),
                want
            );
        }

        // Neighbor continuity along rows. The root is single-valued here
        // (F′ = 1 − x cos r ≥ 1 − |x|) but steepens like a cube root near
        // the corner x = 1, t → 0⁺ where F′(0) = 0: |∂r/∂x| = |sin r/F′|
        // reaches ≈ 4.2, so steps of Δx ≈ 0.065 move the root by ≈ 0.27.
        for it in 0..grid.t.n {
            for ix in 1..grid.x.n {
                let a = field.cell(it, ix - 1, 0).report.r1();
                let b = field.cell(it, ix, 0).report.r1();
                assert!((a - b).abs() < 0.35, "jump {} at ({it},{ix})", (a - b).abs());
            }
        }
    }

    #[test]
    fn sweep_periodic_c5_flags_catastrophe_cells() {
        // 1 − ∂RHS/∂r vanishes along fold lines for C = 5.
        let sys = periodic_sys(5.0);
        let grid = Grid {
            t: Axis::new(0.0, 2.0, 32),
            x: Axis::new(-1.0, 1.0, 32),
            y: Axis::single(0.0),
        };
        let field = sweep_grid(&sys, &grid, 1e-10);
        let flagged = field.cells.iter().filter(|c| c.catastrophe).count();
        assert!(flagged > 0, "expected catastrophe flags on the fold");
    }

    #[test]
    fn sweep_is_deterministic_across_thread_counts() {
        let sys = periodic_sys(1.0);
        let grid = Grid {
            t: Axis::new(0.0, 0.4, 9),
            x: Axis::new(-1.0, 1.0, 13),
            y: Axis::new(-0.5, 0.5, 3),
        };
        let base = sweep_grid_with(&sys, &grid, 1e-12, &SweepParams { threads: 1, ..SweepParams::default() });
        for threads in [2, 4, 7] {
            let field = sweep_grid_with(
                &sys,
                &grid,
                1e-12,
                &SweepParams { threads, ..SweepParams::default() },
            );
            for (a, b) in base.cells.iter().zip(field.cells.iter()) {
                assert_eq!(a.report.root[0].to_bits(), b.report.root[0].to_bits());
                assert_eq!(a.report.converged, b.report.converged);
                assert_eq!(a.catastrophe, b.catastrophe);
            }
        }
        // And bit-identical across repeated runs.
        let again = sweep_grid(&sys, &grid, 1e-12);
        let first = sweep_grid(&sys, &grid, 1e-12);
        for (a, b) in first.cells.iter().zip(again.cells.iter()) {
            assert_eq!(a.report.root[0].to_bits(), b.report.root[0].to_bits());
        }
    }

    #[test]
    fn pair_system_solves_coupled_roots() {
        // F1 = r1 − 0.3 sin(r2) − x, F2 = r2 − 0.3 cos(r1) − y.
        let sys = ImplicitSystem::pair(
            |r, pt: Point| {
                Ok([r[0] - 0.3 * r[1].sin() - pt.x, r[1] - 0.3 * r[0].cos() - pt.y])
            },
            Point::default(),
            [0.0, 0.3],
        );
        let pt = Point::new(0.0, 0.7, -0.4);
        let rep = solve_newton(&sys, pt, &[0.0, 0.0], 1e-13, 100).unwrap();
        assert!(rep.converged);
        let r = rep.root;
        assert!((r[0] - 0.3 * r[1].sin() - pt.x).abs() < 1e-13);
        assert!((r[1] - 0.3 * r[0].cos() - pt.y).abs() < 1e-13);
    }
}
