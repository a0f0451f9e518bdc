//! Command implementations. Every command returns one of the five exit
//! codes: 0 pass, 1 usage or config error, 2 verification failure,
//! 3 partial convergence, 4 total singularity. Nothing else is emitted.

use std::fs::File;
use std::io::{self, BufWriter, Write as _};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use swwlab::catalog::{Family, Solution};
use swwlab::core::{Point, State};
use swwlab::rsww;
use swwlab::solver::{sweep_grid_with, Grid, SolveReport};
use swwlab::symmetry::{expected_table, structure_constants, GenId};
use swwlab::verify::{
    dc_check, jacobian_rank, pde_residual, trace_condition_residual, SystemKind,
};

use crate::config::{threads_from_env, Format, RunConfig};
use crate::output::{write_csv, write_plotdata, FieldOutput};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;
pub const EXIT_SINGULAR: i32 = 4;

fn family_summary(f: Family) -> &'static str {
    match f {
        Family::EGeneric => "entropic wave with a free transverse velocity profile",
        Family::EPeriodic => "entropic wave with velocity on a circle of radius |c|",
        Family::EHyperbolic => "entropic wave holding u·v = c on constant depth",
        Family::SSimple => "acoustic simple wave along a fixed direction, depth phi^2",
        Family::SRotating => "acoustic wave whose direction angle equals the invariant",
        Family::SFresnel => "acoustic wave tracing a Fresnel spiral in the velocity plane",
        Family::EeDegenerate => "two entropic invariants driving a rank-1 power/exponential state",
        Family::SsBranchA => "double-acoustic branch with one free profile, rank 1",
        Family::EsRank2 => "entropic wave superposed with an acoustic wave, rank 2",
        Family::SsRank2 => "two acoustic waves crossing at the admissible angle, rank 2",
        Family::SsMixed => "two acoustic waves with opposite orientations, rank 2",
    }
}

fn family_constants(f: Family) -> &'static str {
    match f {
        Family::EGeneric => "u0, h0, dir",
        Family::EPeriodic | Family::EHyperbolic => "c, h0",
        Family::SSimple => "u0, v0, eps, dir",
        Family::SRotating | Family::SFresnel => "u0, v0, h0",
        Family::EeDegenerate => "cc (C1..C5), m, h0",
        Family::SsBranchA => "v0, h0",
        Family::EsRank2 => "eps, h0",
        Family::SsRank2 => "u0, v0, eps, dir1/dir2 or phi1/phi2",
        Family::SsMixed => "u0, v0, dir1/dir2 or phi1/phi2",
    }
}

fn profile_list(slots: &[&str]) -> String {
    if slots.is_empty() {
        "-".to_string()
    } else {
        slots.join(", ")
    }
}

pub fn cmd_list(family: Option<&str>) -> i32 {
    if let Some(name) = family {
        let f = match Family::from_name(name) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        };
        println!("{}", f.name());
        println!("  {}", family_summary(f));
        println!("  rank: {}", f.expected_rank());
        println!("  invariants: {}", f.invariant_dim());
        println!("  constants: {}", family_constants(f));
        println!("  profiles: {}", profile_list(f.required_profiles()));
        if !f.optional_profiles().is_empty() {
            println!("  optional profiles: {}", profile_list(f.optional_profiles()));
        }
        return EXIT_PASS;
    }
    println!(
        "{:<14} {:>4} {:>10}  {:<14} {}",
        "family", "rank", "invariants", "profiles", "description"
    );
    for f in Family::ALL {
        println!(
            "{:<14} {:>4} {:>10}  {:<14} {}",
            f.name(),
            f.expected_rank(),
            f.invariant_dim(),
            profile_list(f.required_profiles()),
            family_summary(f)
        );
    }
    EXIT_PASS
}

fn load_common(path: &Path) -> Result<(RunConfig, Solution, Grid), String> {
    let cfg = RunConfig::load(path)?;
    let sol = cfg.solution()?;
    let grid = cfg.grid.grid()?;
    Ok((cfg, sol, grid))
}

pub fn cmd_eval(config: &Path, out_flag: Option<&Path>, format_flag: Option<Format>) -> i32 {
    let (cfg, sol, grid) = match load_common(config) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let threads = match threads_from_env() {
        Ok(n) => n,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let sweep = cfg.solver.sweep_params(threads);
    let rotating = cfg.rsww.enabled;
    let shift = cfg.rsww.shift.shift();
    let omega = cfg.params.omega;

    let sys = if rotating {
        match rsww::implicit_system(&sol, shift) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        }
    } else {
        sol.implicit_system()
    };
    let t0 = shift.resolve(omega);
    if rotating {
        let all_singular = (0..grid.t.n)
            .all(|it| rsww::is_singular_time(grid.point(it, 0, 0).t, omega, t0));
        if all_singular {
            eprintln!("error: every requested time slice hits the rotation singularity");
            return EXIT_SINGULAR;
        }
    }

    let field = sweep_grid_with(&sys, &grid, cfg.solver.tol, &sweep);
    let dim = sol.invariant_dim();
    let mut states: Vec<Option<State>> = Vec::with_capacity(field.cells.len());
    let mut complete = true;
    let mut i = 0usize;
    for it in 0..grid.t.n {
        for ix in 0..grid.x.n {
            for iy in 0..grid.y.n {
                let cell = &field.cells[i];
                i += 1;
                let st = if cell.report.converged {
                    let base = sol.state_at(&cell.report.root[..dim]).ok();
                    if rotating {
                        base.and_then(|s| {
                            let pt = grid.point(it, ix, iy);
                            rsww::lift_state(s, Point::new(pt.t + t0, pt.x, pt.y), omega).ok()
                        })
                    } else {
                        base
                    }
                } else {
                    None
                };
                complete &= st.is_some();
                states.push(st);
            }
        }
    }

    let out = FieldOutput { grid: &grid, dim, cells: &field.cells, states: &states };
    let format = format_flag.or(cfg.output.format).unwrap_or(Format::Csv);
    let dest: Option<PathBuf> =
        out_flag.map(Path::to_path_buf).or_else(|| cfg.output.path.as_deref().map(PathBuf::from));
    let written = match &dest {
        Some(path) => File::create(path)
            .map_err(|e| format!("cannot create {}: {e}", path.display()))
            .and_then(|f| {
                let mut w = BufWriter::new(f);
                let r = match format {
                    Format::Csv => write_csv(&out, &mut w),
                    Format::Plotdata => write_plotdata(&out, &mut w),
                };
                r.and_then(|()| w.flush()).map_err(|e| e.to_string())
            }),
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            match format {
                Format::Csv => write_csv(&out, &mut w),
                Format::Plotdata => write_plotdata(&out, &mut w),
            }
            .map_err(|e| e.to_string())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    if complete {
        EXIT_PASS
    } else {
        let failed = states.iter().filter(|s| s.is_none()).count();
        eprintln!("warning: {failed} of {} cells did not converge", states.len());
        EXIT_PARTIAL
    }
}

pub fn cmd_verify(
    config: &Path,
    tol_flag: Option<f64>,
    fd_flag: Option<f64>,
    samples_flag: Option<usize>,
    expect_rank: Option<usize>,
) -> i32 {
    let (cfg, sol, grid) = match load_common(config) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let tol = tol_flag.unwrap_or(cfg.verify.tol);
    let fd = fd_flag.unwrap_or(cfg.verify.fd_step);
    let samples = samples_flag.unwrap_or(cfg.verify.samples);
    if !(tol > 0.0) || !(fd > 0.0) || samples == 0 {
        eprintln!("error: tol, fd-step and samples must be positive");
        return EXIT_USAGE;
    }
    let expected_rank = match expect_rank {
        None => sol.expected_rank(),
        Some(k @ (1 | 2)) => k,
        Some(k) => {
            eprintln!("error: expect-rank must be 1 or 2, got {k}");
            return EXIT_USAGE;
        }
    };
    let rotating = cfg.rsww.enabled;
    let shift = cfg.rsww.shift.shift();
    if rotating && !(cfg.params.omega > 0.0) {
        eprintln!("error: rotating verification needs omega > 0");
        return EXIT_USAGE;
    }
    let solve_tol = cfg.solver.tol;
    let kind = if rotating { SystemKind::Rsww } else { SystemKind::Sww };
    let sol_ref = &sol;

    // The checked space-time field: lifted for rotating runs, the solution
    // itself otherwise. Slice checks (rank, trace, contraction) always run
    // on the stationary frame, where the family's rank statement lives.
    let field: Box<dyn Fn(Point) -> Result<State, String> + Sync + '_> = if rotating {
        Box::new(rsww::field_fn(sol_ref, shift, solve_tol))
    } else {
        Box::new(move |pt| {
            sol_ref.eval_sww(pt, solve_tol).map(|(st, _)| st).map_err(|e| e.to_string())
        })
    };
    let stationary: Box<dyn Fn(Point) -> Result<State, String> + Sync + '_> = Box::new(
        move |pt| sol_ref.eval_sww(pt, solve_tol).map(|(st, _)| st).map_err(|e| e.to_string()),
    );

    // Deterministic sampling in the grid bounding box. A point is admitted
    // when the solve converges away from a fold (smallest Jacobian singular
    // value bounded below) and the residual stencil evaluates throughout.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spans = [
        (grid.t.min, grid.t.max),
        (grid.x.min, grid.x.max),
        (grid.y.min, grid.y.max),
    ];
    let draw = move |rng: &mut ChaCha8Rng| {
        let coord = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| {
            if hi > lo {
                rng.gen_range(lo..hi)
            } else {
                lo
            }
        };
        Point::new(coord(rng, spans[0]), coord(rng, spans[1]), coord(rng, spans[2]))
    };
    let eval_center = |pt: Point| -> Option<SolveReport> {
        let rep = if rotating {
            rsww::eval_rsww(sol_ref, pt, shift, solve_tol).ok()?.1
        } else {
            sol_ref.eval_sww(pt, solve_tol).ok()?.1
        };
        (rep.converged && rep.jac_min_sv >= 0.05).then_some(rep)
    };

    let mut kept: Vec<(Point, [f64; 2])> = Vec::new();
    let mut worst_res = 0.0f64;
    let mut attempts = 0usize;
    while kept.len() < samples && attempts < 400 * samples {
        attempts += 1;
        let pt = draw(&mut rng);
        let Some(rep) = eval_center(pt) else { continue };
        let Ok(res) = pde_residual(&*field, pt, sol.params(), kind, fd, true) else { continue };
        worst_res = worst_res.max(res.max_abs());
        kept.push((pt, rep.root));
    }
    let mut all_pass = true;
    let frame = if rotating { "rotating" } else { "stationary" };
    if kept.len() < samples {
        println!(
            "residual suite ({frame} frame): only {} of {samples} sample points usable  FAIL",
            kept.len()
        );
        println!("overall: FAIL");
        return EXIT_VERIFY;
    }
    let res_pass = worst_res <= tol;
    all_pass &= res_pass;
    println!(
        "residual suite ({frame} frame): {samples} points, max |residual| {worst_res:.2e}, tol {tol:.1e}  {}",
        verdict(res_pass)
    );

    // The residual suite pairs `fd` with step-halving, cancelling the
    // leading truncation term; the slice checks difference the field at a
    // single step, so they run at fd/4 to keep fourth-order truncation
    // under tolerance without drowning in round-off.
    let slice_fd = 0.25 * fd;

    // Stationary sample points for the slice checks.
    let slice_pts: Vec<(Point, [f64; 2])> = if rotating {
        let mut v = Vec::new();
        let mut att = 0usize;
        while v.len() < 20 && att < 8000 {
            att += 1;
            let pt = draw(&mut rng);
            if let Ok((_, rep)) = sol_ref.eval_sww(pt, solve_tol) {
                if rep.converged && rep.jac_min_sv >= 0.05 {
                    v.push((pt, rep.root));
                }
            }
        }
        v
    } else {
        kept.iter().take(20).copied().collect()
    };

    let mut measured = 0usize;
    let mut rank_pass = true;
    let mut worst_ratio = 0.0f64;
    for (pt, _) in &slice_pts {
        let Ok(rep) = jacobian_rank(&*stationary, *pt, 1e-4, slice_fd) else { continue };
        if rep.sv[0] < 1e-10 {
            continue;
        }
        measured += 1;
        worst_ratio = worst_ratio.max(rep.ratio());
        rank_pass &= rep.rank == expected_rank;
    }
    if measured == 0 {
        println!("jacobian rank: state constant on the sampled slices, nothing to measure");
    } else {
        all_pass &= rank_pass;
        println!(
            "jacobian rank: expected {expected_rank}, checked {measured} points, sv ratio up to {worst_ratio:.2e}  {}",
            verdict(rank_pass)
        );
    }

    match sol.ansatz() {
        None => println!("trace conditions: not applicable (two covectors share one invariant)"),
        Some(ansatz) => {
            let mut worst = 0.0f64;
            let mut used = 0usize;
            for (_, root) in &slice_pts {
                let Ok(res) = trace_condition_residual(&ansatz, &root[..ansatz.k], sol.params())
                else {
                    continue;
                };
                used += 1;
                for v in res {
                    worst = worst.max(v.abs());
                }
            }
            let pass = used > 0 && worst <= tol;
            all_pass &= pass;
            println!(
                "trace conditions: {used} invariant samples, max |residual| {worst:.2e}, tol {tol:.1e}  {}",
                verdict(pass)
            );
        }
    }

    let lambdas = sol.wave_covectors();
    let xis = sol.conditional_symmetries();
    let mut worst_contraction = 0.0f64;
    let mut worst_derivative = 0.0f64;
    let mut used = 0usize;
    for (pt, _) in &slice_pts {
        let Ok((c, d)) = dc_check(&*stationary, &lambdas, &xis, *pt, slice_fd) else { continue };
        used += 1;
        worst_contraction = worst_contraction.max(c);
        worst_derivative = worst_derivative.max(d);
    }
    let dc_pass = used > 0 && worst_contraction <= tol && worst_derivative <= tol;
    all_pass &= dc_pass;
    println!(
        "symmetry contraction: max {worst_contraction:.2e}; field derivative along symmetries: max {worst_derivative:.2e}, tol {tol:.1e}  {}",
        verdict(dc_pass)
    );

    println!("overall: {}", verdict(all_pass));
    if all_pass {
        EXIT_PASS
    } else {
        EXIT_VERIFY
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn cmd_symmetry(omega: f64, samples: usize, tol: f64) -> i32 {
    if !(tol > 0.0) {
        eprintln!("error: tol must be positive");
        return EXIT_USAGE;
    }
    let table = match structure_constants(omega, samples) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let names: Vec<&str> = GenId::BASIS.iter().map(|g| g.name()).collect();
    for a in 0..9 {
        for b in (a + 1)..9 {
            let mut terms: Vec<String> = Vec::new();
            for (k, name) in names.iter().enumerate() {
                let c = table.coeff(a, b, k);
                if c.abs() > 1e-4 {
                    terms.push(format!("{c:+.4}·{name}"));
                }
            }
            let rhs = if terms.is_empty() { "0".to_string() } else { terms.join(" ") };
            println!("[{}, {}] = {rhs}", names[a], names[b]);
        }
    }
    let deviation = table.max_diff(&expected_table(omega));
    println!("antisymmetry residual: {:.2e}", table.antisymmetry_residual());
    println!("max deviation from the reference table: {deviation:.2e}, tol {tol:.1e}");
    if deviation <= tol {
        println!("PASS");
        EXIT_PASS
    } else {
        println!("FAIL");
        EXIT_VERIFY
    }
}
