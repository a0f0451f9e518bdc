//! Run configuration: a single JSON document selecting a catalog solution,
//! a space-time grid, solver and verification settings, and the output
//! target. Unknown keys are rejected everywhere; every section except
//! `solution` is optional and falls back to the defaults below.

use serde::Deserialize;
use swwlab::catalog::{Constants, Family, Profiles, Solution, SolutionDescriptor};
use swwlab::core::PhysParams;
use swwlab::rsww::TimeShift;
use swwlab::solver::{Axis, Grid, SweepParams};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub solution: SolutionSpec,
    #[serde(default)]
    pub params: PhysParams,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub rsww: RswwSpec,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionSpec {
    /// Catalog family id, as printed by `swwlab list`.
    pub family: String,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub profiles: Profiles,
}

/// One grid axis: either a single value or `[min, max, n]`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum AxisSpec {
    Single(f64),
    Span(f64, f64, usize),
}

impl AxisSpec {
    pub fn axis(self) -> Result<Axis, String> {
        match self {
            AxisSpec::Single(v) if v.is_finite() => Ok(Axis::single(v)),
            AxisSpec::Span(min, max, n) if min.is_finite() && max.is_finite() && n >= 1 => {
                Ok(Axis::new(min, max, n))
            }
            _ => Err("axis needs finite bounds and n >= 1".into()),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub t: AxisSpec,
    pub x: AxisSpec,
    pub y: AxisSpec,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            t: AxisSpec::Single(0.0),
            x: AxisSpec::Span(-1.0, 1.0, 9),
            y: AxisSpec::Span(-1.0, 1.0, 9),
        }
    }
}

impl GridSpec {
    pub fn grid(&self) -> Result<Grid, String> {
        Ok(Grid { t: self.t.axis()?, x: self.x.axis()?, y: self.y.axis()? })
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub tol: f64,
    pub max_iter: u32,
    pub stride: usize,
    pub catastrophe_tol: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = SweepParams::default();
        SolverSpec {
            tol: 1e-12,
            max_iter: d.max_iter,
            stride: d.stride,
            catastrophe_tol: d.catastrophe_tol,
        }
    }
}

impl SolverSpec {
    /// Sweep parameters with the worker count from `SWWLAB_THREADS`
    /// (0 or unset = available parallelism).
    pub fn sweep_params(&self, threads: usize) -> SweepParams {
        SweepParams {
            stride: self.stride.max(1),
            catastrophe_tol: self.catastrophe_tol,
            max_iter: self.max_iter,
            threads,
            ..SweepParams::default()
        }
    }
}

/// `"quarter_period"` or an explicit shift value.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum ShiftSpec {
    Named(ShiftName),
    Value(f64),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftName {
    QuarterPeriod,
}

impl ShiftSpec {
    pub fn shift(self) -> TimeShift {
        match self {
            ShiftSpec::Named(ShiftName::QuarterPeriod) => TimeShift::QuarterPeriod,
            ShiftSpec::Value(v) => TimeShift::Value(v),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RswwSpec {
    pub enabled: bool,
    pub shift: ShiftSpec,
}

impl Default for RswwSpec {
    fn default() -> Self {
        RswwSpec { enabled: false, shift: ShiftSpec::Named(ShiftName::QuarterPeriod) }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    pub fd_step: f64,
    pub tol: f64,
    pub samples: usize,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec { fd_step: 1e-3, tol: 1e-6, samples: 50 }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Output file; stdout when unset.
    pub path: Option<String>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Plotdata,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "plotdata" => Ok(Format::Plotdata),
            other => Err(format!("unknown format `{other}` (csv|plotdata)")),
        }
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<RunConfig, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config: {e}"))
    }

    pub fn family(&self) -> Result<Family, String> {
        Family::from_name(&self.solution.family).map_err(|e| e.to_string())
    }

    pub fn solution(&self) -> Result<Solution, String> {
        let family = self.family()?;
        Solution::from_descriptor(SolutionDescriptor {
            family,
            constants: self.solution.constants.clone(),
            profiles: self.solution.profiles.clone(),
            params: self.params,
        })
        .map_err(|e| e.to_string())
    }
}

/// Worker thread cap from `SWWLAB_THREADS`; 0 or unset means automatic.
pub fn threads_from_env() -> Result<usize, String> {
    match std::env::var("SWWLAB_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("SWWLAB_THREADS must be a non-negative integer, got `{v}`")),
        Err(_) => Ok(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"solution": {"family": "E_PERIODIC"}}"#).unwrap();
        assert_eq!(cfg.verify.samples, 50);
        assert!(!cfg.rsww.enabled);
        assert!(cfg.output.path.is_none());
        let grid = cfg.grid.grid().unwrap();
        assert_eq!(grid.t.n, 1);
        assert_eq!(grid.x.n, 9);
        let sol = cfg.solution().unwrap();
        assert_eq!(sol.family().name(), "E_PERIODIC");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(
            r#"{"solution": {"family": "E_GENERIC"}, "gird": {}}"#
        )
        .is_err());
        assert!(serde_json::from_str::<RunConfig>(
            r#"{"solution": {"family": "E_GENERIC", "constant": {}}}"#
        )
        .is_err());
    }

    #[test]
    fn axis_forms_parse() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"solution": {"family": "S_SIMPLE"},
                "grid": {"t": 0.5, "x": [-2, 2, 41], "y": [0, 1, 3]}}"#,
        )
        .unwrap();
        let grid = cfg.grid.grid().unwrap();
        assert_eq!((grid.t.n, grid.x.n, grid.y.n), (1, 41, 3));
        assert_eq!(grid.x.min, -2.0);
    }

    #[test]
    fn shift_forms_parse() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"solution": {"family": "SS_RANK2"}, "rsww": {"enabled": true, "shift": 0.0}}"#,
        )
        .unwrap();
        assert_eq!(cfg.rsww.shift.shift(), TimeShift::Value(0.0));
        let cfg: RunConfig = serde_json::from_str(
            r#"{"solution": {"family": "SS_RANK2"},
                "rsww": {"enabled": true, "shift": "quarter_period"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.rsww.shift.shift(), TimeShift::QuarterPeriod);
    }
}
