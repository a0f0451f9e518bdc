//! End-to-end tests of the `swwlab` binary: exit codes, output formats,
//! and agreement between written fields and direct library evaluation.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use swwlab::catalog::{Family, ProfileFn, Profiles, Solution, SolutionDescriptor};
use swwlab::core::{PhysParams, Point, State};
use swwlab::rsww::{self, TimeShift};
use swwlab::verify::{pde_residual, SystemKind};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_swwlab"));
    c.env_remove("SWWLAB_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn out_text(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn err_text(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_cfg(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

/// Parsed CSV data rows, header checked.
fn parse_csv(text: &str) -> Vec<Vec<String>> {
    let mut lines = text.lines();
    assert_eq!(
        lines.next().expect("header"),
        "t,x,y,u,v,h,r1,r2,converged,catastrophe"
    );
    lines
        .map(|l| l.split(',').map(str::to_string).collect::<Vec<_>>())
        .inspect(|row| assert_eq!(row.len(), 10, "row width: {row:?}"))
        .collect()
}

#[test]
fn list_names_every_family() {
    let o = run(&["list"]);
    assert_eq!(code(&o), 0);
    let text = out_text(&o);
    for name in [
        "E_GENERIC",
        "E_PERIODIC",
        "E_HYPERBOLIC",
        "S_SIMPLE",
        "S_ROTATING",
        "S_FRESNEL",
        "EE_DEGENERATE",
        "SS_BRANCH_A",
        "ES_RANK2",
        "SS_RANK2",
        "SS_MIXED",
    ] {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn list_family_detail_shows_profile_slots() {
    let o = run(&["list", "--family", "ES_RANK2"]);
    assert_eq!(code(&o), 0);
    let text = out_text(&o);
    assert!(text.contains("phi, psi"));
    assert!(text.contains("coupling"));
    assert!(text.contains("rank: 2"));
}

#[test]
fn list_unknown_family_exits_1() {
    let o = run(&["list", "--family", "NOPE"]);
    assert_eq!(code(&o), 1);
    assert!(err_text(&o).contains("unknown family"));
}

#[test]
fn eval_constant_profile_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "const.json",
        r#"{
            "solution": {
                "family": "E_GENERIC",
                "constants": {"u0": 0.3, "h0": 1.5, "dir": [1.0, 0.7]},
                "profiles": {"phi": {"kind": "const", "value": 0.25}}
            },
            "grid": {"t": 0.0, "x": [-1, 1, 2], "y": [-1, 1, 2]}
        }"#,
    );
    let o = run(&["eval", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "stderr: {}", err_text(&o));
    let rows = parse_csv(&out_text(&o));
    assert_eq!(rows.len(), 4);
    for row in &rows {
        assert_eq!(row[3].parse::<f64>().unwrap(), 0.3 - 0.7 * 0.25);
        assert_eq!(row[4].parse::<f64>().unwrap(), 0.25);
        assert_eq!(row[5].parse::<f64>().unwrap(), 1.5);
        assert_eq!(row[7], "", "r2 empty for a single-invariant family");
        assert_eq!((row[8].as_str(), row[9].as_str()), ("1", "0"));
    }
}

#[test]
fn eval_double_peak_height() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "ss2.json",
        r#"{
            "solution": {
                "family": "SS_RANK2",
                "profiles": {
                    "phi": {"kind": "sech_sq", "amplitude": 1.0, "shape": 1.0},
                    "psi": {"kind": "sech_sq", "amplitude": 1.0, "shape": 1.0}
                }
            },
            "params": {"g": 1.0, "omega": 0.0},
            "grid": {"t": 0.0, "x": [-2, 2, 33], "y": [-2, 2, 33]}
        }"#,
    );
    let o = run(&["eval", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "stderr: {}", err_text(&o));
    let rows = parse_csv(&out_text(&o));
    assert_eq!(rows.len(), 33 * 33);
    let hmax = rows
        .iter()
        .map(|r| r[5].parse::<f64>().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    // Aligned double peak: h = (1 + 1)² where both bumps sit at the origin.
    assert!(hmax >= 4.0 * (1.0 - 1e-6), "hmax = {hmax}");
    assert!(rows.iter().all(|r| !r[7].is_empty()), "r2 written for a two-invariant family");
}

#[test]
fn eval_plotdata_blocks_per_slice() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "plot.json",
        r#"{
            "solution": {
                "family": "S_SIMPLE",
                "constants": {"u0": 0.1, "v0": -0.2, "dir": [0.6, 0.8]},
                "profiles": {"phi": {"kind": "sech_sq", "amplitude": 1.0, "shape": 1.0}}
            },
            "grid": {"t": [0.0, 0.2, 2], "x": 0.0, "y": [-1, 1, 3]}
        }"#,
    );
    let o = run(&["eval", "--config", cfg.to_str().unwrap(), "--format", "plotdata"]);
    assert_eq!(code(&o), 0, "stderr: {}", err_text(&o));
    let text = out_text(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# t = 0");
    assert_eq!(lines.iter().filter(|l| l.starts_with("# t = ")).count(), 2);
    assert_eq!(lines.iter().filter(|l| l.is_empty()).count(), 1, "one blank separator");
    let data: Vec<&&str> =
        lines.iter().filter(|l| !l.is_empty() && !l.starts_with('#')).collect();
    assert_eq!(data.len(), 6);
    for row in data {
        assert_eq!(row.split_whitespace().count(), 6, "x y u v h r1");
    }
}

#[test]
fn eval_unknown_format_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "c.json",
        r#"{"solution": {"family": "E_PERIODIC"}}"#,
    );
    let o = run(&["eval", "--config", cfg.to_str().unwrap(), "--format", "bogus"]);
    assert_eq!(code(&o), 1);
    assert!(err_text(&o).contains("unknown format"));
}

#[test]
fn eval_config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let unknown_family = write_cfg(
        dir.path(),
        "fam.json",
        r#"{"solution": {"family": "NOPE"}}"#,
    );
    let o = run(&["eval", "--config", unknown_family.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(err_text(&o).contains("unknown family"));

    let unknown_key = write_cfg(
        dir.path(),
        "key.json",
        r#"{"solution": {"family": "E_PERIODIC"}, "gird": {}}"#,
    );
    let o = run(&["eval", "--config", unknown_key.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(err_text(&o).contains("invalid config"));

    let o = run(&["eval", "--config", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(err_text(&o).contains("cannot read config"));
}

fn rotating_cfg(grid: &str) -> String {
    format!(
        r#"{{
            "solution": {{
                "family": "S_SIMPLE",
                "constants": {{"u0": 0.1, "v0": -0.2, "dir": [0.6, 0.8]}},
                "profiles": {{"phi": {{"kind": "sech_sq", "amplitude": 1.0, "shape": 1.0}}}}
            }},
            "params": {{"g": 1.0, "omega": 1.0}},
            "rsww": {{"enabled": true, "shift": 0.0}},
            "grid": {grid}
        }}"#
    )
}

#[test]
fn eval_rotating_fully_singular_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "sing.json",
        &rotating_cfg(r#"{"t": 0.0, "x": [-0.5, 0.5, 3], "y": [-0.5, 0.5, 3]}"#),
    );
    let o = run(&["eval", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    assert!(err_text(&o).contains("singular"));
}

#[test]
fn eval_rotating_partial_exits_3_and_lifts_states() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "part.json",
        &rotating_cfg(r#"{"t": [0.0, 0.3, 2], "x": 0.1, "y": 0.1}"#),
    );
    let o = run(&["eval", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "stderr: {}", err_text(&o));
    let rows = parse_csv(&out_text(&o));
    assert_eq!(rows.len(), 2);
    // Singular slice: flags written, state and invariants empty.
    assert_eq!(rows[0][8], "0");
    assert!(rows[0][3].is_empty() && rows[0][6].is_empty());
    // Regular slice matches direct point evaluation of the lifted field.
    assert_eq!(rows[1][8], "1");
    let sol = Solution::from_descriptor(SolutionDescriptor {
        family: Family::SSimple,
        constants: {
            let mut c = swwlab::catalog::Constants::default();
            c.u0 = 0.1;
            c.v0 = -0.2;
            c.dir = [0.6, 0.8];
            c
        },
        profiles: Profiles {
            phi: Some(ProfileFn::SechSq { amplitude: 1.0, shape: 1.0 }),
            psi: None,
            coupling: None,
        },
        params: PhysParams { g: 1.0, omega: 1.0 },
    })
    .unwrap();
    let (want, _) = rsww::eval_rsww(
        &sol,
        Point::new(0.3, 0.1, 0.1),
        TimeShift::Value(0.0),
        1e-12,
    )
    .unwrap();
    let got: Vec<f64> = rows[1][3..6].iter().map(|s| s.parse().unwrap()).collect();
    assert!((got[0] - want.u).abs() < 1e-9, "u {} vs {}", got[0], want.u);
    assert!((got[1] - want.v).abs() < 1e-9);
    assert!((got[2] - want.h).abs() < 1e-9);
}

#[test]
fn eval_output_re_read_reproduces_residuals() {
    // Grid and step are dyadic, so every stencil point is a grid node with
    // bit-identical coordinates and the CSV round trip is exact.
    let s = 2f64.powi(-11);
    let fd = 2f64.powi(-10);
    let (cx, cy) = (0.125, -0.0625);
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "rt.json",
        &format!(
            r#"{{
                "solution": {{
                    "family": "E_GENERIC",
                    "constants": {{"u0": 0.3, "h0": 1.5, "dir": [1.0, 0.7]}},
                    "profiles": {{"phi": {{"kind": "tanh_sq", "amplitude": 0.8, "shape": 1.0}}}}
                }},
                "grid": {{
                    "t": [{}, {}, 9],
                    "x": [{}, {}, 9],
                    "y": [{}, {}, 9]
                }}
            }}"#,
            -4.0 * s,
            4.0 * s,
            cx - 4.0 * s,
            cx + 4.0 * s,
            cy - 4.0 * s,
            cy + 4.0 * s,
        ),
    );
    let out_path = dir.path().join("field.csv");
    let o = run(&[
        "eval",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "stderr: {}", err_text(&o));

    let text = std::fs::read_to_string(&out_path).unwrap();
    let mut table: HashMap<(u64, u64, u64), State> = HashMap::new();
    for row in parse_csv(&text) {
        let f = |i: usize| row[i].parse::<f64>().unwrap();
        table.insert(
            (f(0).to_bits(), f(1).to_bits(), f(2).to_bits()),
            State::new(f(3), f(4), f(5)),
        );
    }
    assert_eq!(table.len(), 9 * 9 * 9);
    let from_csv = move |pt: Point| -> Result<State, String> {
        table
            .get(&(pt.t.to_bits(), pt.x.to_bits(), pt.y.to_bits()))
            .copied()
            .ok_or_else(|| format!("off-grid stencil point {pt:?}"))
    };

    let sol = Solution::from_descriptor(SolutionDescriptor {
        family: Family::EGeneric,
        constants: {
            let mut c = swwlab::catalog::Constants::default();
            c.u0 = 0.3;
            c.h0 = 1.5;
            c.dir = [1.0, 0.7];
            c
        },
        profiles: Profiles {
            phi: Some(ProfileFn::TanhSq { amplitude: 0.8, shape: 1.0 }),
            psi: None,
            coupling: None,
        },
        params: PhysParams::default(),
    })
    .unwrap();
    let direct = move |pt: Point| -> Result<State, String> {
        sol.eval_sww(pt, 1e-12).map(|(st, _)| st).map_err(|e| e.to_string())
    };

    let center = Point::new(0.0, cx, cy);
    let p = PhysParams::default();
    let a = pde_residual(&from_csv, center, p, SystemKind::Sww, fd, true)
        .unwrap()
        .max_abs();
    let b = pde_residual(&direct, center, p, SystemKind::Sww, fd, true)
        .unwrap()
        .max_abs();
    assert!(b <= 1e-6, "direct residual {b}");
    assert!(a <= 2.0 * b + 1e-15 && b <= 2.0 * a + 1e-15, "csv {a} vs direct {b}");
}

#[test]
fn verify_passes_on_smooth_family() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "ep.json",
        r#"{"solution": {"family": "E_PERIODIC", "constants": {"c": 1.0, "h0": 2.0}}}"#,
    );
    let o = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--samples",
        "50",
        "--tol",
        "1e-6",
    ]);
    assert_eq!(code(&o), 0, "output: {}", out_text(&o));
    assert!(out_text(&o).contains("overall: PASS"));
}

#[test]
fn verify_kinked_table_fails_with_residual_printed() {
    // A staircase of C¹ cubic segments: the curvature jumps at every knot,
    // so difference stencils near a knot cannot reach the tolerance.
    let mut knots = String::new();
    for i in 0..=40 {
        let r = -1.0 + 0.05 * i as f64;
        let v = 0.2 * ((i + 1) / 2) as f64;
        if i > 0 {
            knots.push_str(", ");
        }
        knots.push_str(&format!("[{r}, {v}]"));
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "kink.json",
        &format!(
            r#"{{
                "solution": {{
                    "family": "E_GENERIC",
                    "constants": {{"u0": 0.3, "h0": 1.0, "dir": [1.0, 0.0]}},
                    "profiles": {{"phi": {{"kind": "custom_table", "knots": [{knots}]}}}}
                }},
                "grid": {{"t": 0.0, "x": [-0.0015, 0.0015, 3], "y": [-1, 1, 3]}}
            }}"#
        ),
    );
    let o = run(&["verify", "--config", cfg.to_str().unwrap(), "--samples", "50"]);
    assert_eq!(code(&o), 2, "output: {}", out_text(&o));
    let text = out_text(&o);
    let line = text
        .lines()
        .find(|l| l.starts_with("residual suite"))
        .expect("residual line present");
    assert!(line.contains("FAIL"), "offending line: {line}");
    assert!(text.contains("overall: FAIL"));
}

#[test]
fn verify_expect_rank_gates_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "ee.json",
        r#"{"solution": {"family": "EE_DEGENERATE"}}"#,
    );
    let o = run(&["verify", "--config", cfg.to_str().unwrap(), "--expect-rank", "1"]);
    assert_eq!(code(&o), 0, "output: {}", out_text(&o));
    let o = run(&["verify", "--config", cfg.to_str().unwrap(), "--expect-rank", "2"]);
    assert_eq!(code(&o), 2, "output: {}", out_text(&o));
    assert!(out_text(&o).contains("jacobian rank"));
    let o = run(&["verify", "--config", cfg.to_str().unwrap(), "--expect-rank", "3"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn symmetry_matches_reference_table() {
    let o = run(&["symmetry", "--omega", "0.5", "--samples", "20", "--tol", "1e-6"]);
    assert_eq!(code(&o), 0, "output: {}", out_text(&o));
    let text = out_text(&o);
    assert!(text.contains("PASS"));
    assert!(text.contains("max deviation from the reference table"));
    // A few structure relations visible in the printed table.
    assert!(text.contains("[Y8, Y9] = +2.0000·Y8"));
    assert!(text.contains("[Y7, Y9] = -2.0000·Y7"));
}

#[test]
fn symmetry_rejects_bad_inputs() {
    let o = run(&["symmetry", "--omega", "0.5", "--samples", "3"]);
    assert_eq!(code(&o), 1);
    assert!(err_text(&o).contains("degenerate sample set"));
    let o = run(&["symmetry", "--omega", "0"]);
    assert_eq!(code(&o), 1);
    assert!(err_text(&o).contains("omega must be positive"));
}

#[test]
fn threads_env_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "c.json",
        r#"{"solution": {"family": "E_PERIODIC"}, "grid": {"t": 0.0, "x": [-0.5, 0.5, 3], "y": [-0.5, 0.5, 3]}}"#,
    );
    let o = bin()
        .args(["eval", "--config", cfg.to_str().unwrap()])
        .env("SWWLAB_THREADS", "abc")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    assert!(err_text(&o).contains("SWWLAB_THREADS"));
    let o = bin()
        .args(["eval", "--config", cfg.to_str().unwrap()])
        .env("SWWLAB_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "stderr: {}", err_text(&o));
}

#[test]
fn usage_errors_exit_1_help_exits_0() {
    let o = run(&[]);
    assert_eq!(code(&o), 1);
    let o = run(&["--help"]);
    assert_eq!(code(&o), 0);
    let o = run(&["eval"]);
    assert_eq!(code(&o), 1, "missing --config is a usage error");
    let o = run(&["frobnicate"]);
    assert_eq!(code(&o), 1);
}
