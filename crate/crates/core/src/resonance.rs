//! Where the irreversibility parameter equals one.
//!
//! Content and variance are additive over independent copies, so a mixture of `λn`
//! copies of one state and `(1-λ)n` of another has per-copy content
//! `λH₁ + (1-λ)H₂` and variance `λV₁ + (1-λ)V₂`. Matching its ratio to the target's
//! is a linear equation in `λ`.

use serde::{Deserialize, Serialize};

use crate::dist::{
    gibbs_qubit, irreversibility_parameter, relative_entropy, resource_content, resource_variance,
    ProbVec, ResourceTheory,
};
use crate::error::{Error, Result};
use crate::grid::{Axis, Cell, MaskReason, SweepGrid};

/// Cells with `|ν - 1|` below this lie on the contour themselves.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceQuery {
    pub p1: ProbVec,
    pub p2: ProbVec,
    pub q: ProbVec,
    pub theory: ResourceTheory,
    /// Overrides the Gibbs weights of all three states (thermodynamics only).
    pub gibbs: Option<ProbVec>,
}

impl ResonanceQuery {
    fn states(&self) -> Result<[ProbVec; 3]> {
        let prepare = |p: &ProbVec| -> Result<ProbVec> {
            match (&self.gibbs, self.theory.uses_gibbs()) {
                (Some(g), true) => p.clone().set_gibbs(g.probs().to_vec()),
                _ => Ok(p.clone()),
            }
        };
        Ok([prepare(&self.p1)?, prepare(&self.p2)?, prepare(&self.q)?])
    }
}

/// Mixing fraction `λ*` of species 1 at which the mixture is resonant with the target.
///
/// `None` if the resonance lies outside `[0, 1]`. When every `λ` is resonant (both
/// species already resonant and indistinguishable in ratio) returns `0.5`.
pub fn resonant_lambda(rq: &ResonanceQuery) -> Result<Option<f64>> {
    let [p1, p2, q] = rq.states()?;
    let t = rq.theory;
    let hq = resource_content(&q, t)?;
    if hq.abs() <= 1e-14 {
        return Err(Error::DegenerateTarget("target has no resource content"));
    }
    let c = resource_variance(&q, t)? / hq;
    let (h1, v1) = (resource_content(&p1, t)?, resource_variance(&p1, t)?);
    let (h2, v2) = (resource_content(&p2, t)?, resource_variance(&p2, t)?);

    let num = c * h2 - v2;
    let den = (v1 - v2) - c * (h1 - h2);
    let scale = v1.abs() + v2.abs() + c * (h1.abs() + h2.abs());
    if den.abs() <= 1e-12 * scale.max(1e-300) {
        return Ok((num.abs() <= 1e-12 * scale.max(1e-300)).then_some(0.5));
    }
    let lambda = num / den;
    Ok((-1e-12..=1.0 + 1e-12)
        .contains(&lambda)
        .then_some(lambda.clamp(0.0, 1.0)))
}

/// Maps a grid point to an (initial, target) pair and its irreversibility parameter.
pub trait StateFamily: Sync {
    /// `ν` at the grid point, or the reason it is undefined.
    fn nu(&self, row: f64, col: f64) -> std::result::Result<f64, MaskReason>;
}

/// Axis values are temperatures or inverse temperatures `ΔE/T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TemperatureAxis {
    #[default]
    Temperature,
    InverseTemperature,
}

impl TemperatureAxis {
    pub fn to_temperature(self, value: f64, gap: f64) -> f64 {
        match self {
            Self::Temperature => value,
            Self::InverseTemperature => gap / value,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Temperature => "T",
            Self::InverseTemperature => "gap/T",
        }
    }
}

/// Qubit heat engine: working qubit thermal at `T_c` turned into thermal at `T_c'`
/// against a bath at `T_h`, while a two-level battery of gap `x·W_C` is raised from
/// its ground to its excited level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatEngine {
    pub t_hot: f64,
    pub gap: f64,
    pub work_fraction: f64,
}

/// One cell of a heat-engine sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineCell {
    pub initial: ProbVec,
    pub target: ProbVec,
    /// `W_C = T_h [D(γ_c||γ_h) - D(γ_c'||γ_h)]`.
    pub work_capacity: f64,
    pub battery_gap: f64,
}

impl HeatEngine {
    /// Extractable work per copy in the asymptotic limit.
    pub fn work_capacity(&self, t_cold: f64, t_cold_final: f64) -> Result<f64> {
        let hot = gibbs_qubit(self.t_hot, self.gap)?;
        let d = |t: f64| relative_entropy(&gibbs_qubit(t, self.gap)?, &hot);
        Ok(self.t_hot * (d(t_cold)? - d(t_cold_final)?))
    }

    /// Per-copy initial and target states with joint Gibbs weights, for a given
    /// work fraction.
    pub fn cell(&self, t_cold: f64, t_cold_final: f64, fraction: f64) -> Result<EngineCell> {
        let work_capacity = self.work_capacity(t_cold, t_cold_final)?;
        let battery_gap = fraction * work_capacity;
        let hot = gibbs_qubit(self.t_hot, self.gap)?;
        let battery = gibbs_qubit(self.t_hot, battery_gap.max(0.0))?;
        let joint_gibbs = hot.tensor(&battery);
        let ground = ProbVec::point_mass(2, 0)?;
        let excited = ProbVec::point_mass(2, 1)?;
        let initial = gibbs_qubit(t_cold, self.gap)?
            .tensor(&ground)
            .set_gibbs(joint_gibbs.probs().to_vec())?;
        let target = gibbs_qubit(t_cold_final, self.gap)?
            .tensor(&excited)
            .set_gibbs(joint_gibbs.probs().to_vec())?;
        Ok(EngineCell {
            initial,
            target,
            work_capacity,
            battery_gap,
        })
    }
}

/// [`HeatEngine`] over a grid of `(T_c, T_c')` given on either axis type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatEngineFamily {
    pub engine: HeatEngine,
    pub axis: TemperatureAxis,
}

impl HeatEngineFamily {
    pub fn temperatures(&self, row: f64, col: f64) -> (f64, f64) {
        let g = self.engine.gap;
        (
            self.axis.to_temperature(row, g),
            self.axis.to_temperature(col, g),
        )
    }
}

impl StateFamily for HeatEngineFamily {
    fn nu(&self, row: f64, col: f64) -> std::result::Result<f64, MaskReason> {
        let (tc, tcp) = self.temperatures(row, col);
        if !(tc <= tcp && tcp < self.engine.t_hot) {
            return Err(MaskReason::OutOfOrder);
        }
        let cell = self
            .engine
            .cell(tc, tcp, self.engine.work_fraction)
            .map_err(|_| MaskReason::Failed)?;
        if cell.work_capacity < 0.0 {
            return Err(MaskReason::NonPositiveWork);
        }
        irreversibility_parameter(&cell.initial, &cell.target, ResourceTheory::Thermodynamic)
            .map_err(|_| MaskReason::Degenerate)
    }
}

/// `ν` over the grid, with its unit contour attached as the overlay.
pub fn nu_contour(family: &dyn StateFamily, rows: Axis, cols: Axis) -> Result<SweepGrid> {
    let cells: Vec<Cell> = rows
        .values
        .iter()
        .flat_map(|&r| cols.values.iter().map(move |&c| (r, c)))
        .map(|(r, c)| match family.nu(r, c) {
            Ok(v) => Cell::Value(v),
            Err(reason) => Cell::Masked(reason),
        })
        .collect();
    let mut grid = SweepGrid::from_cells("irreversibility parameter", "nu", rows, cols, cells)?;
    grid.overlay = unit_crossings(&grid);
    Ok(grid)
}

/// Points where `ν = 1` along each row, in axis coordinates: cells with `ν` within
/// [`EXACT_TOL`] of 1, and linear interpolation between horizontally adjacent cells
/// on opposite sides of 1.
pub fn unit_crossings(grid: &SweepGrid) -> Vec<(f64, f64)> {
    let (nr, nc) = grid.shape();
    let mut out = Vec::new();
    for i in 0..nr {
        let y = grid.rows.values[i];
        for j in 0..nc {
            let Some(a) = grid.get(i, j) else { continue };
            if (a - 1.0).abs() <= EXACT_TOL {
                out.push((grid.cols.values[j], y));
                continue;
            }
            if j + 1 < nc {
                if let Some(b) = grid.get(i, j + 1) {
                    if (b - 1.0).abs() > EXACT_TOL && (a - 1.0) * (b - 1.0) < 0.0 {
                        let t = (1.0 - a) / (b - a);
                        let (x0, x1) = (grid.cols.values[j], grid.cols.values[j + 1]);
                        out.push((x0 + t * (x1 - x0), y));
                    }
                }
            }
        }
    }
    out
}

/// Column positions (fractional index) of the `ν = 1` crossings in row `i`.
pub fn row_crossings(grid: &SweepGrid, i: usize) -> Vec<f64> {
    let nc = grid.cols.len();
    let mut out = Vec::new();
    for j in 0..nc {
        let Some(a) = grid.get(i, j) else { continue };
        if (a - 1.0).abs() <= EXACT_TOL {
            out.push(j as f64);
        } else if j + 1 < nc {
            if let Some(b) = grid.get(i, j + 1) {
                if (b - 1.0).abs() > EXACT_TOL && (a - 1.0) * (b - 1.0) < 0.0 {
                    out.push(j as f64 + (1.0 - a) / (b - a));
                }
            }
        }
    }
    out
}
