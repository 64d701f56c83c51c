//! Infidelity of converting a two-species mixture into `n` copies of a target.

use serde::{Deserialize, Serialize};

use crate::atoms::{split_count, AtomDist};
use crate::dist::ResourceTheory;
use crate::error::Result;
use crate::grid::{Axis, Cell, SweepGrid};
use crate::resonance::{resonant_lambda, ResonanceQuery};
use crate::solver::Direction;

use super::{mask_error, parse_params, require_nonempty, DistSpec, Experiment, SweepContext};

fn default_n_list() -> Vec<usize> {
    vec![5, 10, 15, 20, 25, 30]
}
fn default_lambda_points() -> usize {
    31
}
fn default_direction() -> Direction {
    Direction::Sharpening
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSweepSpec {
    pub p1: DistSpec,
    pub p2: DistSpec,
    pub q: DistSpec,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    /// Explicit mixing fractions; otherwise `lambda_points` evenly spaced over `[0, 1]`.
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default = "default_lambda_points")]
    pub lambda_points: usize,
    #[serde(default = "default_direction")]
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LambdaSweep;

impl LambdaSweep {
    pub fn sweep(&self, spec: &LambdaSweepSpec, ctx: &SweepContext) -> Result<SweepGrid> {
        let base = ctx.base_dir();
        let (p1, p2, q) = (spec.p1.load(base)?, spec.p2.load(base)?, spec.q.load(base)?);
        let lambdas = match &spec.lambdas {
            Some(l) => l.clone(),
            None => Axis::linspace("", 0.0, 1.0, spec.lambda_points).values,
        };
        require_nonempty("n_list", spec.n_list.len())?;
        require_nonempty("lambda grid", lambdas.len())?;
        if let Some(bad) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(crate::Error::InvalidParameter(format!(
                "mixing fraction {bad} outside [0, 1]"
            )));
        }
        if spec.n_list.contains(&0) {
            return Err(crate::Error::InvalidParameter("n must be positive".into()));
        }

        let width = lambdas.len();
        let solver = ctx.solver.as_ref();
        let cells = ctx.map_cells(spec.n_list.len() * width, |idx| {
            let (n, lambda) = (spec.n_list[idx / width], lambdas[idx % width]);
            let run = || -> Result<f64> {
                let initial = AtomDist::mixed_power(&p1, &p2, n, lambda)?;
                let target = AtomDist::iid_power(&q, n)?;
                Ok(solver
                    .solve_in(&initial, &target, spec.direction)?
                    .infidelity)
            };
            match run() {
                Ok(v) => Cell::Value(v),
                Err(e) => mask_error(
                    &format!(
                        "n = {n}, lambda = {lambda} (split {})",
                        split_count(n, lambda)
                    ),
                    &e,
                ),
            }
        });

        let rows = Axis::new("n", spec.n_list.iter().map(|&n| n as f64).collect());
        let cols = Axis::new("lambda", lambdas);
        let mut grid =
            SweepGrid::from_cells("mixture conversion", "infidelity", rows, cols, cells)?;

        let query = ResonanceQuery {
            p1,
            p2,
            q,
            theory: ResourceTheory::Entanglement,
            gibbs: None,
        };
        if let Ok(Some(star)) = resonant_lambda(&query) {
            let (lo, hi) = spec
                .n_list
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &n| {
                    (lo.min(n as f64), hi.max(n as f64))
                });
            grid.overlay = vec![(star, lo), (star, hi)];
        }
        Ok(grid)
    }
}

impl Experiment for LambdaSweep {
    fn name(&self) -> &'static str {
        "lambda-sweep"
    }

    fn summary(&self) -> &'static str {
        "infidelity of mixed_power(p1, p2, n, lambda) -> q^n over (n, lambda)"
    }

    fn run(&self, params: &serde_json::Value, ctx: &SweepContext) -> Result<SweepGrid> {
        self.sweep(&parse_params(params)?, ctx)
    }
}
