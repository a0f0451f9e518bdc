//! Field writers. CSV carries one row per grid cell with the solved
//! invariants and flags; plotdata groups rows into one block per t-slice
//! with blank-line separators, ready for contour plotters. Numbers are
//! printed as shortest round-trip decimals, so re-reading the file
//! reproduces the evaluated field bit for bit.

use std::io::{self, Write};

use swwlab::core::State;
use swwlab::solver::{Grid, SweepCell};

pub struct FieldOutput<'a> {
    pub grid: &'a Grid,
    /// Invariant count of the solution; 1 leaves the r2 column empty.
    pub dim: usize,
    /// Row-major cells (t slowest, y fastest), as produced by the sweep.
    pub cells: &'a [SweepCell],
    /// Lifted or stationary states; None where the cell failed.
    pub states: &'a [Option<State>],
}

fn push_f64(buf: &mut String, v: f64) {
    use std::fmt::Write as _;
    write!(buf, "{v}").expect("string write");
}

pub fn write_csv(field: &FieldOutput, out: &mut dyn Write) -> io::Result<()> {
    let mut buf = String::with_capacity(80);
    writeln!(out, "t,x,y,u,v,h,r1,r2,converged,catastrophe")?;
    let g = field.grid;
    let mut i = 0usize;
    for it in 0..g.t.n {
        for ix in 0..g.x.n {
            for iy in 0..g.y.n {
                let pt = g.point(it, ix, iy);
                let cell = &field.cells[i];
                buf.clear();
                push_f64(&mut buf, pt.t);
                buf.push(',');
                push_f64(&mut buf, pt.x);
                buf.push(',');
                push_f64(&mut buf, pt.y);
                buf.push(',');
                if let Some(st) = &field.states[i] {
                    push_f64(&mut buf, st.u);
                    buf.push(',');
                    push_f64(&mut buf, st.v);
                    buf.push(',');
                    push_f64(&mut buf, st.h);
                } else {
                    buf.push_str(",,");
                }
                buf.push(',');
                if field.states[i].is_some() {
                    push_f64(&mut buf, cell.report.root[0]);
                    buf.push(',');
                    if field.dim == 2 {
                        push_f64(&mut buf, cell.report.root[1]);
                    }
                } else {
                    buf.push(',');
                }
                buf.push(',');
                buf.push(if cell.report.converged { '1' } else { '0' });
                buf.push(',');
                buf.push(if cell.catastrophe { '1' } else { '0' });
                writeln!(out, "{buf}")?;
                i += 1;
            }
        }
    }
    Ok(())
}

pub fn write_plotdata(field: &FieldOutput, out: &mut dyn Write) -> io::Result<()> {
    let g = field.grid;
    let mut buf = String::with_capacity(80);
    let mut i = 0usize;
    for it in 0..g.t.n {
        if it > 0 {
            writeln!(out)?;
        }
        writeln!(out, "# t = {}", g.point(it, 0, 0).t)?;
        for ix in 0..g.x.n {
            for iy in 0..g.y.n {
                let pt = g.point(it, ix, iy);
                let cell = &field.cells[i];
                buf.clear();
                push_f64(&mut buf, pt.x);
                buf.push(' ');
                push_f64(&mut buf, pt.y);
                if let Some(st) = &field.states[i] {
                    for v in [st.u, st.v, st.h, cell.report.root[0]] {
                        buf.push(' ');
                        push_f64(&mut buf, v);
                    }
                    if field.dim == 2 {
                        buf.push(' ');
                        push_f64(&mut buf, cell.report.root[1]);
                    }
                } else {
                    buf.push_str(" nan nan nan nan");
                    if field.dim == 2 {
                        buf.push_str(" nan");
                    }
                }
                writeln!(out, "{buf}")?;
                i += 1;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use swwlab::solver::{Axis, SolveReport};

    fn one_cell_field(grid: &Grid) -> (Vec<SweepCell>, Vec<Option<State>>) {
        let n = grid.len();
        let cells = (0..n)
            .map(|k| SweepCell {
                report: SolveReport {
                    root: [0.1 + k as f64, 0.0],
                    dim: 1,
                    converged: true,
                    iterations: 3,
                    jac_min_sv: 1.0,
                    residual_norm: 1e-15,
                },
                catastrophe: false,
                error: None,
            })
            .collect();
        let states =
            (0..n).map(|k| Some(State::new(k as f64, -1.5, 2.0 + 0.5 * k as f64))).collect();
        (cells, states)
    }

    #[test]
    fn csv_round_trips_numbers_exactly() {
        let grid = Grid {
            t: Axis::single(0.125),
            x: Axis::new(-1.0, 1.0, 2),
            y: Axis::single(1.0 / 3.0),
        };
        let (cells, states) = one_cell_field(&grid);
        let mut out = Vec::new();
        write_csv(&FieldOutput { grid: &grid, dim: 1, cells: &cells, states: &states }, &mut out)
            .unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,x,y,u,v,h,r1,r2,converged,catastrophe");
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 10);
        // Shortest round-trip: parsing the text recovers the exact f64.
        assert_eq!(row[2].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(row[6].parse::<f64>().unwrap(), 0.1);
        assert_eq!(row[7], "");
        assert_eq!((row[8], row[9]), ("1", "0"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn failed_cells_keep_flags_but_no_state() {
        let grid =
            Grid { t: Axis::single(0.0), x: Axis::single(0.0), y: Axis::single(0.0) };
        let (mut cells, mut states) = one_cell_field(&grid);
        cells[0].report.converged = false;
        cells[0].catastrophe = true;
        states[0] = None;
        let mut out = Vec::new();
        write_csv(&FieldOutput { grid: &grid, dim: 2, cells: &cells, states: &states }, &mut out)
            .unwrap();
        let text = String::from_utf8(out).unwrap();
        let row = text.lines().nth(1).unwrap();
        assert_eq!(row, "0,0,0,,,,,,0,1");
    }

    #[test]
    fn plotdata_blocks_per_slice() {
        let grid = Grid {
            t: Axis::new(0.0, 1.0, 2),
            x: Axis::single(0.5),
            y: Axis::new(0.0, 1.0, 2),
        };
        let (cells, states) = one_cell_field(&grid);
        let mut out = Vec::new();
        write_plotdata(
            &FieldOutput { grid: &grid, dim: 1, cells: &cells, states: &states },
            &mut out,
        )
        .unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# t = 0");
        assert_eq!(lines[3], "");
        assert_eq!(lines[4], "# t = 1");
        assert_eq!(lines[1].split_whitespace().count(), 6);
    }
}
