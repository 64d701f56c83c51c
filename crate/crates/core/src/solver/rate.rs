//! Largest number of target copies reachable within an error budget.

use std::collections::BTreeMap;

use crate::atoms::AtomDist;
use crate::dist::{asymptotic_rate, ProbVec, ResourceTheory};
use crate::error::{Error, Result};

use super::{ConversionSolver, Direction};

/// Upper limit on `m` explored by [`max_rate`].
pub const MAX_TARGET_COPIES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateOutcome {
    /// Largest `m` with `ε(p^n → q^m) < ε₀`.
    pub copies: usize,
    /// `copies / n`.
    pub rate: f64,
    /// Number of distinct `m` evaluated.
    pub evaluations: usize,
    /// `false` if feasibility was found not to be monotone in `m` and a linear scan
    /// decided the answer.
    pub monotone: bool,
}

/// Maximal `m` such that `n` copies of `initial` convert to `m` copies of `target` with
/// infidelity strictly below `epsilon`.
///
/// Both distributions carry Gibbs weights (thermodynamic setting) or neither does.
pub fn max_rate(
    solver: &dyn ConversionSolver,
    initial: &ProbVec,
    target: &ProbVec,
    n: usize,
    epsilon: f64,
    direction: Direction,
) -> Result<RateOutcome> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "error budget must lie in (0, 1], got {epsilon}"
        )));
    }
    let theory = match (initial.gibbs(), target.gibbs()) {
        (Some(_), Some(_)) => ResourceTheory::Thermodynamic,
        (None, None) => ResourceTheory::Entanglement,
        _ => {
            return Err(Error::InvalidParameter(
                "either both distributions carry Gibbs weights or neither does".into(),
            ))
        }
    };
    let asymptotic = asymptotic_rate(initial, target, theory)?;

    let source = AtomDist::iid_power(initial, n)?;
    let mut cache: BTreeMap<usize, bool> = BTreeMap::new();
    let feasible = |cache: &mut BTreeMap<usize, bool>, m: usize| -> Result<bool> {
        if let Some(&hit) = cache.get(&m) {
            return Ok(hit);
        }
        let goal = AtomDist::iid_power(target, m)?;
        let ok = solver.solve_in(&source, &goal, direction)?.infidelity < epsilon;
        cache.insert(m, ok);
        Ok(ok)
    };

    if !feasible(&mut cache, 1)? {
        return Err(Error::NoFeasibleRate);
    }
    let mut lo = 1;
    let mut hi = ((1.5 * asymptotic * n as f64).ceil() as usize).clamp(2, MAX_TARGET_COPIES);
    while feasible(&mut cache, hi)? {
        if hi >= MAX_TARGET_COPIES {
            return Err(Error::InvalidParameter(format!(
                "more than {MAX_TARGET_COPIES} target copies are reachable"
            )));
        }
        lo = hi;
        hi = (2 * hi).min(MAX_TARGET_COPIES);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if feasible(&mut cache, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // feasibility should switch from true to false exactly once
    let flips = cache
        .values()
        .collect::<Vec<_>>()
        .windows(2)
        .filter(|w| w[0] != w[1])
        .count();
    let mut monotone = true;
    if flips > 1 {
        monotone = false;
        log::warn!("feasibility not monotone in m for n = {n}; scanning");
        let last = *cache.keys().last().unwrap();
        lo = 0;
        for m in 1..=last {
            if feasible(&mut cache, m)? {
                lo = m;
            }
        }
    }
    Ok(RateOutcome {
        copies: lo,
        rate: lo as f64 / n as f64,
        evaluations: cache.len(),
        monotone,
    })
}
