//! Iterative fidelity maximization over the (thermo-)majorization polytope.
//!
//! The set of distributions majorized by a fixed initial state is a polytope whose
//! vertices come from a greedy fill: order the outcomes, then give each one the increase
//! of the initial Lorenz curve over its reference weight. Fidelity with the target is
//! concave in the final state, so away-step Frank-Wolfe with exact line search converges
//! to the optimum. Slow, but it shares no code with the envelope construction, which
//! makes it a useful cross-check.
//!
//! For the sharpening direction the outcomes are fixed in decreasing target order, and
//! a final state is feasible iff each of its prefix sums is at least the matching
//! prefix sum of the sorted initial state. Vertices then send the `k`-th largest initial
//! probability to the best of the first `k` positions.

use crate::atoms::{ratio_order, Atom, AtomDist, Reference};
use crate::dist::ProbVec;
use crate::error::{Error, Result};
use crate::lorenz::{align, majorizes};

use super::{require_uniform, ConversionResult, ConversionSolver, Direction};

/// Stand-in for the infinite gradient at a zero coordinate.
const STEEP: f64 = 1e300;
const LINE_SEARCH_STEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwOptions {
    /// Stop once the duality gap falls below this.
    pub gap_tol: f64,
    pub max_iter: usize,
}

impl Default for FwOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-10,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FwSolution {
    /// Final probability per target coordinate (plus one trailing coordinate for
    /// reference weight the target leaves uncovered, if any).
    pub weights: Vec<f64>,
    pub fidelity: f64,
    pub gap: f64,
    pub iterations: usize,
}

/// Piecewise-linear initial curve, built independently of [`crate::lorenz`].
struct Curve {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Curve {
    fn new(pairs: &[(f64, f64)]) -> Self {
        let mut sorted = pairs.to_vec();
        sorted.sort_by(|a, b| (b.0 * a.1).total_cmp(&(a.0 * b.1)));
        let (mut x, mut y) = (0.0, 0.0);
        let mut xs = vec![0.0];
        let mut ys = vec![0.0];
        for (p, g) in sorted {
            x += g;
            y += p;
            xs.push(x);
            ys.push(y);
        }
        Self { xs, ys }
    }

    fn eval(&self, x: f64) -> f64 {
        let top = *self.ys.last().unwrap();
        if x >= *self.xs.last().unwrap() {
            return top;
        }
        let j = self.xs.partition_point(|&v| v <= x).max(1);
        let (x0, x1) = (self.xs[j - 1], self.xs[j]);
        let (y0, y1) = (self.ys[j - 1], self.ys[j]);
        if x1 <= x0 {
            return y1;
        }
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn objective(q: &[f64], r: &[f64]) -> f64 {
    q.iter().zip(r).map(|(q, r)| (q * r.max(0.0)).sqrt()).sum()
}

fn gradient(q: &[f64], r: &[f64]) -> Vec<f64> {
    q.iter()
        .zip(r)
        .map(|(&q, &r)| {
            if q == 0.0 {
                0.0
            } else if r <= 0.0 {
                STEEP
            } else {
                0.5 * (q / r).sqrt()
            }
        })
        .collect()
}

/// Best vertex for linear objective `c`.
fn vertex(curve: &Curve, g: &[f64], c: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&a, &b| c[b].total_cmp(&c[a]).then(a.cmp(&b)));
    let mut v = vec![0.0; c.len()];
    let (mut x, mut y) = (0.0, 0.0);
    for i in order {
        x += g[i];
        let next = curve.eval(x);
        v[i] = (next - y).max(0.0);
        y = next;
    }
    v
}

/// Maximizes `φ(γ) = Σ √(q (x + γ d))` over `[0, max]` by bisection on `φ'`.
fn line_search(q: &[f64], x: &[f64], d: &[f64], max: f64) -> f64 {
    let slope = |t: f64| -> f64 {
        q.iter()
            .zip(x.iter().zip(d))
            .filter(|(&q, (_, &d))| q > 0.0 && d != 0.0)
            .map(|(&q, (&x, &d))| {
                let r = x + t * d;
                if r <= 0.0 {
                    if d < 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        f64::INFINITY
                    }
                } else {
                    q.sqrt() * d / (2.0 * r.sqrt())
                }
            })
            .sum()
    };
    if slope(max) >= 0.0 {
        return max;
    }
    let (mut lo, mut hi) = (0.0, max);
    for _ in 0..LINE_SEARCH_STEPS {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Maximizes `Σ √(q_i r_i)` over final states `r` majorized by the initial state.
///
/// Both sides are explicit `(probability, reference weight)` lists; coordinates may be
/// coarse-grained classes, provided all members of a class share one ratio.
pub fn maximize_fidelity(
    initial: &[(f64, f64)],
    target: &[(f64, f64)],
    opts: FwOptions,
) -> Result<FwSolution> {
    let curve = Curve::new(initial);
    let mut q: Vec<f64> = target.iter().map(|t| t.0).collect();
    let mut g: Vec<f64> = target.iter().map(|t| t.1).collect();
    let uncovered = 1.0 - g.iter().sum::<f64>();
    if uncovered > 1e-15 {
        q.push(0.0);
        g.push(uncovered);
    }

    // start from the vertex that follows the target's own order
    let start_key: Vec<f64> = q.iter().zip(&g).map(|(q, g)| q / g).collect();
    let start = vertex(&curve, &g, &start_key);
    away_steps(&q, start, |c| vertex(&curve, &g, c), opts)
}

/// Maximizes `Σ √(q_i r_i)` over final states `r` that majorize `initial`.
///
/// Plain probability vectors with uniform reference; `weights` in the result follow
/// the order of `target`.
pub fn maximize_fidelity_sharpening(
    initial: &[f64],
    target: &[f64],
    opts: FwOptions,
) -> Result<FwSolution> {
    let mut items: Vec<f64> = initial.iter().copied().filter(|&p| p > 0.0).collect();
    items.sort_by(|a, b| b.total_cmp(a));
    let mut order: Vec<usize> = (0..target.len()).filter(|&i| target[i] > 0.0).collect();
    order.sort_by(|&a, &b| target[b].total_cmp(&target[a]).then(a.cmp(&b)));
    if order.is_empty() {
        return Err(Error::InvalidDistribution("target has no support".into()));
    }
    let q: Vec<f64> = order.iter().map(|&i| target[i]).collect();

    let lmo = |c: &[f64]| -> Vec<f64> {
        let mut v = vec![0.0; q.len()];
        let mut best = 0;
        for (k, &mass) in items.iter().enumerate() {
            if k < q.len() && c[k] > c[best] {
                best = k;
            }
            v[best] += mass;
        }
        v
    };
    // the sorted initial state itself, laid along the target order
    let mut start = vec![0.0; q.len()];
    for (k, &mass) in items.iter().enumerate() {
        start[k.min(q.len() - 1)] += mass;
    }
    let sol = away_steps(&q, start, lmo, opts)?;
    let mut weights = vec![0.0; target.len()];
    for (&i, &w) in order.iter().zip(&sol.weights) {
        weights[i] = w;
    }
    Ok(FwSolution { weights, ..sol })
}

fn away_steps(
    q: &[f64],
    start: Vec<f64>,
    lmo: impl Fn(&[f64]) -> Vec<f64>,
    opts: FwOptions,
) -> Result<FwSolution> {
    let mut active: Vec<(Vec<f64>, f64)> = vec![(start, 1.0)];
    let mut x = active[0].0.clone();
    let mut gap = f64::INFINITY;

    for iter in 0..opts.max_iter {
        let c = gradient(q, &x);
        let s = lmo(&c);
        let cx = dot(&c, &x);
        gap = dot(&c, &s) - cx;
        if gap <= opts.gap_tol {
            let fid = objective(q, &x);
            return Ok(FwSolution {
                weights: x,
                fidelity: fid * fid,
                gap,
                iterations: iter,
            });
        }

        let (away, away_score) = active
            .iter()
            .enumerate()
            .map(|(i, (v, _))| (i, dot(&c, v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let away_gap = cx - away_score;
        let alpha_away = active[away].1;

        if gap >= away_gap || alpha_away >= 1.0 {
            let d: Vec<f64> = s.iter().zip(&x).map(|(s, x)| s - x).collect();
            let step = line_search(q, &x, &d, 1.0);
            for entry in &mut active {
                entry.1 *= 1.0 - step;
            }
            match active.iter_mut().find(|(v, _)| *v == s) {
                Some(entry) => entry.1 += step,
                None => active.push((s, step)),
            }
        } else {
            let v = active[away].0.clone();
            let d: Vec<f64> = x.iter().zip(&v).map(|(x, v)| x - v).collect();
            let max = alpha_away / (1.0 - alpha_away);
            let step = line_search(q, &x, &d, max);
            for entry in &mut active {
                entry.1 *= 1.0 + step;
            }
            active[away].1 -= step;
            if step >= max {
                active[away].1 = 0.0;
            }
        }
        active.retain(|(_, w)| *w > 0.0);
        let total: f64 = active.iter().map(|e| e.1).sum();
        x = vec![0.0; q.len()];
        for (v, w) in &active {
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi += w / total * vi;
            }
        }
    }
    log::debug!("frank-wolfe stopped with gap {gap}");
    Err(Error::IterationLimit(opts.max_iter))
}

/// Optimal fidelity between small explicit distributions that share a reference.
///
/// Returns the optimal final state and its fidelity with the target. Intended for
/// dimensions up to 6.
pub fn oracle_optimal_fidelity(initial: &ProbVec, target: &ProbVec) -> Result<(Vec<f64>, f64)> {
    oracle_optimal_fidelity_in(initial, target, Direction::Mixing)
}

/// [`oracle_optimal_fidelity`] in either direction. Sharpening needs uniform reference.
pub fn oracle_optimal_fidelity_in(
    initial: &ProbVec,
    target: &ProbVec,
    direction: Direction,
) -> Result<(Vec<f64>, f64)> {
    if initial.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            left: initial.dim(),
            right: target.dim(),
        });
    }
    if initial.dim() > 6 {
        return Err(Error::InvalidParameter(format!(
            "oracle supports dimension up to 6, got {}",
            initial.dim()
        )));
    }
    let g = initial.gibbs_or_uniform();
    let h = target.gibbs_or_uniform();
    if g.iter().zip(h.iter()).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::InvalidParameter(
            "initial and target use different reference weights".into(),
        ));
    }
    if direction == Direction::Sharpening {
        if initial.gibbs().is_some() || target.gibbs().is_some() {
            return Err(Error::InvalidParameter(
                "sharpening conversions need uniform reference weights".into(),
            ));
        }
        let sol =
            maximize_fidelity_sharpening(initial.probs(), target.probs(), FwOptions::default())?;
        return Ok((sol.weights, sol.fidelity));
    }
    let pairs =
        |p: &[f64]| -> Vec<(f64, f64)> { p.iter().copied().zip(g.iter().copied()).collect() };
    let sol = maximize_fidelity(
        &pairs(initial.probs()),
        &pairs(target.probs()),
        FwOptions::default(),
    )?;
    Ok((sol.weights, sol.fidelity))
}

/// Frank-Wolfe over the coarse atoms of the target.
#[derive(Debug, Clone, Copy)]
pub struct FrankWolfe {
    pub options: FwOptions,
    /// Refuses targets with more atoms than this.
    pub max_atoms: usize,
}

impl FrankWolfe {
    pub const NAME: &'static str = "frank-wolfe";
}

impl Default for FrankWolfe {
    fn default() -> Self {
        Self {
            options: FwOptions::default(),
            max_atoms: 64,
        }
    }
}

impl FrankWolfe {
    /// Works on explicit outcomes: the optimum need not be uniform within a type class.
    fn sharpening(&self, initial: &AtomDist, target: &AtomDist) -> Result<ConversionResult> {
        require_uniform(initial, target)?;
        let (initial, target) = align(initial, target);
        if majorizes(&target, &initial) {
            return Ok(ConversionResult {
                final_state: target.into_owned(),
                fidelity: 1.0,
                infidelity: 0.0,
                feasible_exact: true,
                mass_outside_target: 0.0,
            });
        }
        let outcomes = target.expand()?;
        if outcomes.len() > self.max_atoms * self.max_atoms {
            return Err(Error::InvalidParameter(format!(
                "{} supports at most {} target outcomes when sharpening, got {}",
                Self::NAME,
                self.max_atoms * self.max_atoms,
                outcomes.len()
            )));
        }
        let p: Vec<f64> = initial.expand()?.iter().map(|o| o.0).collect();
        let q: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
        let sol = maximize_fidelity_sharpening(&p, &q, self.options)?;
        let norm: f64 = sol.weights.iter().sum();
        let out: Vec<Atom> = outcomes
            .iter()
            .zip(&sol.weights)
            .map(|(o, &w)| Atom {
                log_p: (w / norm).ln(),
                log_g: o.1.ln(),
                log_mult: 0.0,
            })
            .collect();
        let infidelity = (1.0 - sol.fidelity).clamp(0.0, 1.0);
        Ok(ConversionResult {
            final_state: AtomDist::from_atoms(out, target.reference())?,
            fidelity: 1.0 - infidelity,
            infidelity,
            feasible_exact: false,
            mass_outside_target: 0.0,
        })
    }
}

impl ConversionSolver for FrankWolfe {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn solve_in(
        &self,
        initial: &AtomDist,
        target: &AtomDist,
        direction: Direction,
    ) -> Result<ConversionResult> {
        if direction == Direction::Sharpening {
            return self.sharpening(initial, target);
        }
        let (initial, target) = align(initial, target);
        if target.len() > self.max_atoms {
            return Err(Error::InvalidParameter(format!(
                "{} supports at most {} target atoms, got {}",
                Self::NAME,
                self.max_atoms,
                target.len()
            )));
        }
        if majorizes(&initial, &target) {
            return Ok(ConversionResult {
                final_state: target.into_owned(),
                fidelity: 1.0,
                infidelity: 0.0,
                feasible_exact: true,
                mass_outside_target: 0.0,
            });
        }
        let mut atoms: Vec<Atom> = target.atoms().to_vec();
        atoms.sort_by(ratio_order);
        let pairs: Vec<(f64, f64)> = atoms
            .iter()
            .map(|a| (a.log_mass().exp(), a.log_gibbs_mass().exp()))
            .collect();
        let sol = maximize_fidelity(&initial.coarse(), &pairs, self.options)?;

        let mut out: Vec<Atom> = atoms
            .iter()
            .zip(&sol.weights)
            .map(|(a, &w)| Atom {
                log_p: w.ln() - a.log_mult,
                ..*a
            })
            .collect();
        let mut outside = 0.0;
        if sol.weights.len() > atoms.len() {
            outside = sol.weights[atoms.len()];
            let room = 1.0 - pairs.iter().map(|p| p.1).sum::<f64>();
            out.push(Atom {
                log_p: outside.ln(),
                log_g: room.ln(),
                log_mult: 0.0,
            });
        }
        let norm: f64 = sol.weights.iter().sum();
        for a in &mut out {
            a.log_p -= norm.ln();
        }
        let infidelity = (1.0 - sol.fidelity).clamp(0.0, 1.0);
        Ok(ConversionResult {
            final_state: AtomDist::from_atoms(out, Reference::Gibbs)?,
            fidelity: 1.0 - infidelity,
            infidelity,
            feasible_exact: false,
            mass_outside_target: outside,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qubit_example() {
        let p = ProbVec::new(vec![0.6, 0.4]).unwrap();
        let q = ProbVec::new(vec![0.9, 0.1]).unwrap();
        let (r, f) = oracle_optimal_fidelity(&p, &q).unwrap();
        assert!((f - 0.8739387691).abs() < 1e-8, "{f}");
        assert!((r[0] - 0.6).abs() < 1e-6);
    }

    #[test]
    fn reachable_target_gives_unit_fidelity() {
        let p = ProbVec::new(vec![0.7, 0.2, 0.1]).unwrap();
        let q = ProbVec::new(vec![0.5, 0.3, 0.2]).unwrap();
        let (_, f) = oracle_optimal_fidelity(&p, &q).unwrap();
        assert!(f > 1.0 - 1e-9);
    }

    #[test]
    fn sharpening_qubit_closed_form() {
        // r must satisfy r_0 >= 0.9 while staying close to [0.6, 0.4]
        let p = ProbVec::new(vec![0.9, 0.1]).unwrap();
        let q = ProbVec::new(vec![0.6, 0.4]).unwrap();
        let (r, f) = oracle_optimal_fidelity_in(&p, &q, Direction::Sharpening).unwrap();
        let expect = ((0.6f64 * 0.9).sqrt() + (0.4f64 * 0.1).sqrt()).powi(2);
        assert!((f - expect).abs() < 1e-9, "{f} vs {expect}");
        assert!((r[0] - 0.9).abs() < 1e-6);
    }

    #[test]
    fn rejects_mismatched_reference() {
        let p = ProbVec::with_gibbs(vec![0.7, 0.3], vec![0.6, 0.4]).unwrap();
        let q = ProbVec::new(vec![0.5, 0.5]).unwrap();
        assert!(oracle_optimal_fidelity(&p, &q).is_err());
    }
}
