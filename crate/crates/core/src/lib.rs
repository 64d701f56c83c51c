//! Optimal approximate conversions between many copies of classical resource states.
//!
//! Distributions are probability vectors, optionally paired with Gibbs weights
//! (thermodynamics). Many-copy states are handled through type classes ([`atoms`]),
//! the conversion order through Lorenz curves ([`lorenz`]), and the optimal lossy
//! conversion through interchangeable solvers ([`solver`]).

pub mod atoms;
pub mod dist;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod logspace;
pub mod lorenz;
pub mod resonance;
pub mod solver;
pub mod svg;
mod viridis;

pub use atoms::{Atom, AtomDist, Reference};
pub use dist::{ProbVec, ResourceTheory};
pub use error::{Error, ErrorClass, Result};
pub use grid::{Axis, Cell, MaskReason, SweepGrid};
pub use lorenz::{majorizes, LorenzCurve};
pub use solver::{ConversionResult, ConversionSolver, SolverRegistry};
