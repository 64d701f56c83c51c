//! Optimal approximate interconversion.
//!
//! A [`ConversionSolver`] finds, for an initial and a target distribution, the final
//! distribution reachable from the initial one with maximal fidelity to the target.
//! Which final states count as reachable depends on the [`Direction`]. Solvers are
//! interchangeable and looked up by name in a [`SolverRegistry`].

mod envelope;
mod frank_wolfe;
mod rate;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use envelope::LorenzEnvelope;
pub use frank_wolfe::{
    maximize_fidelity, maximize_fidelity_sharpening, oracle_optimal_fidelity,
    oracle_optimal_fidelity_in, FrankWolfe, FwOptions, FwSolution,
};
pub use rate::{max_rate, RateOutcome, MAX_TARGET_COPIES};

use crate::atoms::AtomDist;
use crate::dist::ResourceTheory;
use crate::error::{Error, Result};

pub const DEFAULT_SOLVER: &str = LorenzEnvelope::NAME;

/// Which way free operations move a distribution in the majorization order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// The final state is (thermo-)majorized by the initial one. Thermal operations.
    #[default]
    Mixing,
    /// The final state majorizes the initial one. Pure-state LOCC on Schmidt
    /// coefficients, and incoherent operations on pure states. Uniform reference only.
    Sharpening,
}

impl Direction {
    pub fn for_theory(theory: ResourceTheory) -> Self {
        match theory {
            ResourceTheory::Thermodynamic => Self::Mixing,
            ResourceTheory::Entanglement | ResourceTheory::Coherence => Self::Sharpening,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Mixing => "mixing",
            Self::Sharpening => "sharpening",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mixing" => Ok(Self::Mixing),
            "sharpening" => Ok(Self::Sharpening),
            other => Err(Error::Unknown {
                kind: "direction",
                name: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConversionResult {
    /// The optimal final distribution.
    pub final_state: AtomDist,
    pub fidelity: f64,
    pub infidelity: f64,
    /// `true` iff the target itself is reachable (`infidelity == 0`).
    pub feasible_exact: bool,
    /// Probability the final state leaves outside the target's support.
    pub mass_outside_target: f64,
}

pub trait ConversionSolver: Send + Sync {
    fn name(&self) -> &'static str;

    fn solve_in(
        &self,
        initial: &AtomDist,
        target: &AtomDist,
        direction: Direction,
    ) -> Result<ConversionResult>;

    /// [`Direction::Mixing`] conversion.
    fn solve(&self, initial: &AtomDist, target: &AtomDist) -> Result<ConversionResult> {
        self.solve_in(initial, target, Direction::Mixing)
    }
}

impl fmt::Debug for dyn ConversionSolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConversionSolver({})", self.name())
    }
}

/// Solvers keyed by name.
#[derive(Clone)]
pub struct SolverRegistry {
    solvers: BTreeMap<&'static str, Arc<dyn ConversionSolver>>,
}

impl SolverRegistry {
    pub fn empty() -> Self {
        Self {
            solvers: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, solver: Arc<dyn ConversionSolver>) {
        self.solvers.insert(solver.name(), solver);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn ConversionSolver>> {
        self.solvers
            .get(name)
            .cloned()
            .ok_or_else(|| Error::Unknown {
                kind: "solver",
                name: name.to_string(),
            })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.solvers.keys().copied()
    }
}

impl Default for SolverRegistry {
    fn default() -> Self {
        let mut registry = Self::empty();
        registry.register(Arc::new(LorenzEnvelope));
        registry.register(Arc::new(FrankWolfe::default()));
        registry
    }
}

/// Optimal final state majorized by `initial`, using the exact envelope solver.
pub fn optimal_final_state(initial: &AtomDist, target: &AtomDist) -> Result<ConversionResult> {
    LorenzEnvelope.solve(initial, target)
}

pub(crate) fn require_uniform(initial: &AtomDist, target: &AtomDist) -> Result<()> {
    use crate::atoms::Reference;
    match (initial.reference(), target.reference()) {
        (Reference::Uniform { .. }, Reference::Uniform { .. }) => Ok(()),
        _ => Err(Error::InvalidParameter(
            "sharpening conversions need uniform reference weights".into(),
        )),
    }
}
