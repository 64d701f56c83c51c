//! Optimal finite-size conversion rates at a fixed error budget.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, Cell, SweepGrid};
use crate::solver::{max_rate, Direction};

use super::{mask_error, parse_params, require_nonempty, DistSpec, Experiment, SweepContext};

fn default_n_list() -> Vec<usize> {
    (5..=30).collect()
}
fn default_epsilon() -> f64 {
    0.01
}
fn default_direction() -> Direction {
    Direction::Sharpening
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSweepSpec {
    pub initials: Vec<DistSpec>,
    /// Row names; defaults to `1, 2, ...`.
    #[serde(default)]
    pub labels: Option<Vec<String>>,
    pub q: DistSpec,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Sharpening (entanglement, coherence) unless the states carry Gibbs weights.
    #[serde(default)]
    pub direction: Option<Direction>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RateSweep;

impl RateSweep {
    pub fn sweep(&self, spec: &RateSweepSpec, ctx: &SweepContext) -> Result<SweepGrid> {
        let base = ctx.base_dir();
        let initials = spec
            .initials
            .iter()
            .map(|d| d.load(base))
            .collect::<Result<Vec<_>>>()?;
        let q = spec.q.load(base)?;
        require_nonempty("initials", initials.len())?;
        require_nonempty("n_list", spec.n_list.len())?;
        if spec.n_list.contains(&0) {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        if !(spec.epsilon > 0.0 && spec.epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "error budget {} outside (0, 1)",
                spec.epsilon
            )));
        }
        let labels = match &spec.labels {
            Some(l) if l.len() != initials.len() => {
                return Err(Error::InvalidParameter(format!(
                    "{} labels for {} initial states",
                    l.len(),
                    initials.len()
                )))
            }
            Some(l) => l.clone(),
            None => (1..=initials.len()).map(|i| i.to_string()).collect(),
        };

        let direction = spec.direction.unwrap_or(if q.gibbs().is_some() {
            Direction::Mixing
        } else {
            default_direction()
        });
        let width = spec.n_list.len();
        let solver = ctx.solver.as_ref();
        let cells = ctx.map_cells(initials.len() * width, |idx| {
            let (p, n) = (&initials[idx / width], spec.n_list[idx % width]);
            match max_rate(solver, p, &q, n, spec.epsilon, direction) {
                Ok(r) => Cell::Value(r.rate),
                // no copy at all reaches the budget: rate 0
                Err(Error::NoFeasibleRate) => Cell::Value(0.0),
                Err(e) => mask_error(&format!("initial {}, n = {n}", labels[idx / width]), &e),
            }
        });

        let rows = Axis::labelled(
            "initial",
            (1..=initials.len()).map(|i| i as f64).collect(),
            labels,
        );
        let cols = Axis::new("n", spec.n_list.iter().map(|&n| n as f64).collect());
        SweepGrid::from_cells("optimal conversion rate", "rate", rows, cols, cells)
    }
}

impl Experiment for RateSweep {
    fn name(&self) -> &'static str {
        "rate-sweep"
    }

    fn summary(&self) -> &'static str {
        "largest m/n with infidelity below epsilon, per initial state and n"
    }

    fn run(&self, params: &serde_json::Value, ctx: &SweepContext) -> Result<SweepGrid> {
        self.sweep(&parse_params(params)?, ctx)
    }
}
