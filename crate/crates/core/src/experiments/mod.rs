//! Parameter sweeps over conversion problems.
//!
//! Each sweep is an [`Experiment`] registered by name. Parameters arrive as JSON and
//! are validated by the experiment itself; cells are evaluated in parallel by a
//! [`SweepContext`] and assembled in grid order, so output does not depend on the
//! number of workers.

mod heat_engine;
mod lambda;
mod rate;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use heat_engine::{FigureOfMerit, HeatEngineMode, HeatEngineSpec, HeatEngineSweep};
pub use lambda::{LambdaSweep, LambdaSweepSpec};
pub use rate::{RateSweep, RateSweepSpec};

use crate::dist::ProbVec;
use crate::error::{Error, Result};
use crate::grid::{Cell, MaskReason, SweepGrid};
use crate::solver::ConversionSolver;

/// A distribution given inline or as a path to a file of numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistSpec {
    Inline(Vec<f64>),
    File(PathBuf),
}

impl DistSpec {
    /// Raw entries. Relative paths are taken from `base`.
    pub fn entries(&self, base: Option<&Path>) -> Result<Vec<f64>> {
        match self {
            DistSpec::Inline(v) => Ok(v.clone()),
            DistSpec::File(path) => {
                let path = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                parse_numbers(&std::fs::read_to_string(&path)?)
            }
        }
    }

    pub fn load(&self, base: Option<&Path>) -> Result<ProbVec> {
        ProbVec::new(self.entries(base)?)
    }
}

/// Numbers from a JSON array or from text separated by commas and whitespace.
pub fn parse_numbers(text: &str) -> Result<Vec<f64>> {
    let trimmed = text.trim();
    if trimmed.starts_with('[') {
        return Ok(serde_json::from_str(trimmed)?);
    }
    trimmed
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidDistribution(format!("not a number: `{s}`")))
        })
        .collect()
}

/// Shared state of one sweep run: solver, worker pool and interruption flag.
pub struct SweepContext {
    pub solver: Arc<dyn ConversionSolver>,
    pool: rayon::ThreadPool,
    cancel: Arc<AtomicBool>,
    base_dir: Option<PathBuf>,
}

impl SweepContext {
    /// `jobs = None` uses the available parallelism.
    pub fn new(solver: Arc<dyn ConversionSolver>, jobs: Option<usize>) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.unwrap_or(0))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
        Ok(Self {
            solver,
            pool,
            cancel: Arc::new(AtomicBool::new(false)),
            base_dir: None,
        })
    }

    pub fn with_cancel_flag(mut self, flag: Arc<AtomicBool>) -> Self {
        self.cancel = flag;
        self
    }

    /// Directory that relative input paths are resolved against.
    pub fn with_base_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.base_dir = Some(dir.into());
        self
    }

    pub fn base_dir(&self) -> Option<&Path> {
        self.base_dir.as_deref()
    }

    pub fn jobs(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn cancelled(&self) -> bool {
        self.cancel.load(Ordering::Relaxed)
    }

    /// Evaluates `f` on `0..count` in parallel, results in index order. Once the cancel
    /// flag is raised, cells not yet started come back masked as cancelled.
    pub fn map_cells<F>(&self, count: usize, f: F) -> Vec<Cell>
    where
        F: Fn(usize) -> Cell + Sync + Send,
    {
        self.pool.install(|| {
            (0..count)
                .into_par_iter()
                .map(|i| {
                    if self.cancelled() {
                        Cell::Masked(MaskReason::Cancelled)
                    } else {
                        f(i)
                    }
                })
                .collect()
        })
    }
}

pub trait Experiment: Send + Sync {
    fn name(&self) -> &'static str;

    /// One-line summary for help output.
    fn summary(&self) -> &'static str;

    fn run(&self, params: &serde_json::Value, ctx: &SweepContext) -> Result<SweepGrid>;
}

/// Experiments keyed by name.
pub struct ExperimentRegistry {
    experiments: BTreeMap<&'static str, Arc<dyn Experiment>>,
}

impl ExperimentRegistry {
    pub fn empty() -> Self {
        Self {
            experiments: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, experiment: Arc<dyn Experiment>) {
        self.experiments.insert(experiment.name(), experiment);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Experiment>> {
        self.experiments
            .get(name)
            .cloned()
            .ok_or_else(|| Error::Unknown {
                kind: "experiment",
                name: name.to_string(),
            })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.experiments.keys().copied()
    }
}

impl Default for ExperimentRegistry {
    fn default() -> Self {
        let mut registry = Self::empty();
        registry.register(Arc::new(HeatEngineSweep));
        registry.register(Arc::new(LambdaSweep));
        registry.register(Arc::new(RateSweep));
        registry
    }
}

fn parse_params<T: serde::de::DeserializeOwned>(params: &serde_json::Value) -> Result<T> {
    let value = if params.is_null() {
        serde_json::Value::Object(Default::default())
    } else {
        params.clone()
    };
    Ok(serde_json::from_value(value)?)
}

fn require_nonempty(what: &str, len: usize) -> Result<()> {
    if len == 0 {
        return Err(Error::InvalidParameter(format!("{what} is empty")));
    }
    Ok(())
}

/// Maps a cell-level error onto a mask, logging it.
fn mask_error(context: &str, err: &Error) -> Cell {
    log::debug!("{context}: {err}");
    Cell::Masked(match err {
        Error::DegenerateTarget(_) | Error::MissingGibbs | Error::Support { .. } => {
            MaskReason::Degenerate
        }
        Error::NoFeasibleRate => MaskReason::Infeasible,
        _ => MaskReason::Failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_from_text_or_json() {
        assert_eq!(parse_numbers("[0.5, 0.5]").unwrap(), vec![0.5, 0.5]);
        assert_eq!(
            parse_numbers("0.2, 0.3\n0.5 ").unwrap(),
            vec![0.2, 0.3, 0.5]
        );
        assert!(parse_numbers("0.2, x").is_err());
    }

    #[test]
    fn dist_spec_accepts_both_forms() {
        let inline: DistSpec = serde_json::from_str("[0.25, 0.75]").unwrap();
        assert_eq!(inline, DistSpec::Inline(vec![0.25, 0.75]));
        let file: DistSpec = serde_json::from_str("\"states/phi.txt\"").unwrap();
        assert_eq!(file, DistSpec::File("states/phi.txt".into()));
    }

    #[test]
    fn registry_has_all_sweeps() {
        let reg = ExperimentRegistry::default();
        let names: Vec<_> = reg.names().collect();
        assert_eq!(names, ["heat-engine", "lambda-sweep", "rate-sweep"]);
        assert!(reg.get("fig3").is_err());
    }
}
