//! Work extraction from `n` thermal qubits into a two-level battery.

use serde::{Deserialize, Serialize};

use crate::atoms::AtomDist;
use crate::error::{Error, Result};
use crate::grid::{Axis, Cell, MaskReason, SweepGrid};
use crate::resonance::{nu_contour, HeatEngine, HeatEngineFamily, TemperatureAxis};
use crate::solver::ConversionSolver;

use super::{mask_error, parse_params, require_nonempty, Experiment, SweepContext};

const SCAN_STEP: f64 = 0.005;
const BISECT_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HeatEngineMode {
    /// Extract `fraction · W_C` per qubit; record the infidelity.
    FixedWork { fraction: f64 },
    /// Record the largest work fraction whose infidelity stays below `threshold`.
    FixedError { threshold: f64 },
}

/// What the infidelity is measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FigureOfMerit {
    /// Full joint state of working body and battery.
    #[default]
    Joint,
    /// Battery marginal only.
    Battery,
}

fn default_n() -> usize {
    200
}
fn default_t_hot() -> f64 {
    10.0
}
fn default_gap() -> f64 {
    1.0
}
fn default_range() -> [f64; 2] {
    [0.5, 5.0]
}
fn default_points() -> usize {
    60
}
fn default_mode() -> HeatEngineMode {
    HeatEngineMode::FixedWork { fraction: 0.95 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatEngineSpec {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_t_hot")]
    pub t_hot: f64,
    #[serde(default = "default_gap")]
    pub gap: f64,
    /// Whether `range` holds temperatures or inverse temperatures `gap/T`.
    #[serde(default)]
    pub axis: TemperatureAxis,
    /// Same range for both the initial and the final cold temperature.
    #[serde(default = "default_range")]
    pub range: [f64; 2],
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_mode")]
    pub mode: HeatEngineMode,
    #[serde(default)]
    pub figure_of_merit: FigureOfMerit,
}

impl Default for HeatEngineSpec {
    fn default() -> Self {
        Self {
            n: default_n(),
            t_hot: default_t_hot(),
            gap: default_gap(),
            axis: TemperatureAxis::default(),
            range: default_range(),
            points: default_points(),
            mode: default_mode(),
            figure_of_merit: FigureOfMerit::default(),
        }
    }
}

impl HeatEngineSpec {
    fn validate(&self) -> Result<()> {
        require_nonempty("temperature grid", self.points)?;
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        if !(self.t_hot > 0.0 && self.gap > 0.0 && self.range[0] > 0.0 && self.range[1] > 0.0) {
            return Err(Error::InvalidParameter(
                "temperatures, range and gap must be positive".into(),
            ));
        }
        match self.mode {
            HeatEngineMode::FixedWork { fraction } if !(0.0..=1.0).contains(&fraction) => Err(
                Error::InvalidParameter(format!("work fraction {fraction} outside [0, 1]")),
            ),
            HeatEngineMode::FixedError { threshold } if !(threshold > 0.0 && threshold < 1.0) => {
                Err(Error::InvalidParameter(format!(
                    "error threshold {threshold} outside (0, 1)"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn engine(&self, fraction: f64) -> HeatEngine {
        HeatEngine {
            t_hot: self.t_hot,
            gap: self.gap,
            work_fraction: fraction,
        }
    }

    pub fn axis_values(&self) -> Axis {
        Axis::linspace("", self.range[0], self.range[1], self.points)
    }

    /// Infidelity of the optimal `n`-copy conversion at one grid point.
    pub fn infidelity(
        &self,
        solver: &dyn ConversionSolver,
        t_cold: f64,
        t_cold_final: f64,
        fraction: f64,
    ) -> Result<f64> {
        let cell = self.engine(fraction).cell(t_cold, t_cold_final, fraction)?;
        let initial = AtomDist::iid_power(&cell.initial, self.n)?;
        let target = AtomDist::iid_power(&cell.target, self.n)?;
        let result = solver.solve(&initial, &target)?;
        Ok(match self.figure_of_merit {
            FigureOfMerit::Joint => result.infidelity,
            FigureOfMerit::Battery => result.mass_outside_target,
        })
    }

    /// Largest fraction (to [`BISECT_TOL`]) meeting the threshold, scanning down from 1.
    fn best_fraction(
        &self,
        solver: &dyn ConversionSolver,
        t_cold: f64,
        t_cold_final: f64,
        threshold: f64,
    ) -> Result<Option<f64>> {
        let steps = (1.0 / SCAN_STEP).round() as usize;
        let mut previous = f64::INFINITY;
        for k in 0..=steps {
            let x = 1.0 - k as f64 * SCAN_STEP;
            let eps = self.infidelity(solver, t_cold, t_cold_final, x)?;
            if eps > previous * (1.0 + 1e-9) {
                log::warn!(
                    "infidelity grew as the work fraction fell (T_c = {t_cold}, T_c' = {t_cold_final}, x = {x})"
                );
            }
            previous = eps;
            if eps < threshold {
                if k == 0 {
                    return Ok(Some(1.0));
                }
                let (mut ok, mut bad) = (x, x + SCAN_STEP);
                while bad - ok > BISECT_TOL {
                    let mid = 0.5 * (ok + bad);
                    if self.infidelity(solver, t_cold, t_cold_final, mid)? < threshold {
                        ok = mid;
                    } else {
                        bad = mid;
                    }
                }
                return Ok(Some(ok));
            }
        }
        Ok(None)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HeatEngineSweep;

impl HeatEngineSweep {
    pub fn sweep(&self, spec: &HeatEngineSpec, ctx: &SweepContext) -> Result<SweepGrid> {
        spec.validate()?;
        let label = spec.axis.label();
        let values = spec.axis_values().values;
        let rows = Axis::new(format!("{label}_c"), values.clone());
        let cols = Axis::new(format!("{label}_c'"), values.clone());
        let width = values.len();
        let family_fraction = match spec.mode {
            HeatEngineMode::FixedWork { fraction } => fraction,
            HeatEngineMode::FixedError { .. } => 1.0,
        };
        let family = HeatEngineFamily {
            engine: spec.engine(family_fraction),
            axis: spec.axis,
        };
        let solver = ctx.solver.as_ref();

        let cells = ctx.map_cells(width * width, |idx| {
            let (tc, tcp) = family.temperatures(values[idx / width], values[idx % width]);
            if !(tc < tcp && tcp < spec.t_hot) {
                return Cell::Masked(MaskReason::OutOfOrder);
            }
            match spec.engine(family_fraction).work_capacity(tc, tcp) {
                Ok(w) if w > 0.0 => {}
                Ok(_) => return Cell::Masked(MaskReason::NonPositiveWork),
                Err(e) => return mask_error("work capacity", &e),
            }
            let context = format!("heat engine cell T_c = {tc}, T_c' = {tcp}");
            match spec.mode {
                HeatEngineMode::FixedWork { fraction } => {
                    match spec.infidelity(solver, tc, tcp, fraction) {
                        Ok(v) => Cell::Value(v),
                        Err(e) => mask_error(&context, &e),
                    }
                }
                HeatEngineMode::FixedError { threshold } => {
                    match spec.best_fraction(solver, tc, tcp, threshold) {
                        Ok(Some(x)) => Cell::Value(x),
                        Ok(None) => Cell::Masked(MaskReason::Infeasible),
                        Err(e) => mask_error(&context, &e),
                    }
                }
            }
        });

        let (title, quantity) = match spec.mode {
            HeatEngineMode::FixedWork { .. } => ("heat engine, fixed work", "infidelity"),
            HeatEngineMode::FixedError { .. } => ("heat engine, fixed error", "work fraction"),
        };
        let mut grid = SweepGrid::from_cells(title, quantity, rows.clone(), cols.clone(), cells)?;
        grid.overlay = nu_contour(&family, rows, cols)?.overlay;
        Ok(grid)
    }
}

impl Experiment for HeatEngineSweep {
    fn name(&self) -> &'static str {
        "heat-engine"
    }

    fn summary(&self) -> &'static str {
        "work quality or work fraction of an n-qubit engine over (T_c, T_c')"
    }

    fn run(&self, params: &serde_json::Value, ctx: &SweepContext) -> Result<SweepGrid> {
        self.sweep(&parse_params(params)?, ctx)
    }
}
