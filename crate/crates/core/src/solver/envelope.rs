//! Exact solver: convex minorant of the initial Lorenz curve sampled along the target.
//!
//! Walk the target's atoms in decreasing `q/g` order. After `k` groups the target has
//! placed probability `Q_k` on reference mass `G_k`, while anything reachable from the
//! initial state can place at most `L(G_k)` there. The optimal final state rescales the
//! target block-wise, `r = λ_j q`, where the blocks and scales come from the greatest
//! convex minorant of the points `(Q_k, L(G_k))`. Probability that cannot be placed on
//! the target's support (`1 - L(G_K)`) goes to the complement in proportion to its
//! reference weight; it does not change the fidelity.
//!
//! The points are tracked as deficits `D_k = Q_k - L(G_k)`, read from whichever end of
//! both curves keeps them accurate, so infidelities far below `f64::EPSILON` survive.
//!
//! In the sharpening direction the final state must instead lie above the initial curve,
//! and the relevant envelope is the least concave majorant of `(Q(x), L(x))`. That set
//! is not symmetric under averaging within a type class, so the points include the
//! initial curve's breakpoints and a target class may be split between two blocks.

use crate::atoms::{ratio_order, Atom, AtomDist, Reference};
use crate::error::{Error, Result};
use crate::logspace::{close_scaled, log_add_exp, log_sum_exp};
use crate::lorenz::{align, LorenzCurve};

use super::{require_uniform, ConversionResult, ConversionSolver, Direction};

/// Allowed disagreement between the closed-form and the summed fidelity.
const VERIFY_TOL: f64 = 1e-8;
const NOISE: f64 = 8.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, Default)]
pub struct LorenzEnvelope;

impl LorenzEnvelope {
    pub const NAME: &'static str = "lorenz-envelope";
}

struct Group {
    start: usize,
    end: usize,
    mass: f64,
    gibbs: f64,
}

/// Cumulative target masses, from the front and from the back.
struct Profile {
    head: Vec<f64>,
    tail: Vec<f64>,
}

impl Profile {
    fn new(masses: &[f64]) -> Self {
        let (head, tail) = cumulative(masses);
        Self { head, tail }
    }

    /// Mass between points `a < b`.
    fn between(&self, a: usize, b: usize) -> f64 {
        if self.head[b] <= 0.5 || self.head[a] < 0.5 {
            self.head[b] - self.head[a]
        } else {
            self.tail[a] - self.tail[b]
        }
    }
}

fn cumulative(masses: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut head = vec![0.0; masses.len() + 1];
    let mut tail = vec![0.0; masses.len() + 1];
    for (k, m) in masses.iter().enumerate() {
        head[k + 1] = head[k] + m;
    }
    for (k, m) in masses.iter().enumerate().rev() {
        tail[k] = tail[k + 1] + m;
    }
    (head, tail)
}

/// `a - b`, or zero when the difference is within rounding noise of the operands.
fn denoised(a: f64, b: f64) -> f64 {
    let d = a - b;
    if d.abs() <= NOISE * a.abs().max(b.abs()) {
        0.0
    } else {
        d
    }
}

/// Target atoms in ratio order, cut into runs of equal ratio.
fn group_target(target: &AtomDist) -> (Vec<Atom>, Vec<Group>) {
    let mut atoms = target.atoms().to_vec();
    atoms.sort_by(ratio_order);
    let log_total = log_sum_exp(atoms.iter().map(Atom::log_mass));
    let mut groups = Vec::new();
    let mut i = 0;
    while i < atoms.len() {
        let ratio = atoms[i].log_ratio();
        let mut j = i + 1;
        while j < atoms.len() && close_scaled(atoms[j].log_ratio(), ratio, 1e-12) {
            j += 1;
        }
        let run = &atoms[i..j];
        groups.push(Group {
            start: i,
            end: j,
            mass: (log_sum_exp(run.iter().map(Atom::log_mass)) - log_total).exp(),
            gibbs: log_sum_exp(run.iter().map(Atom::log_gibbs_mass)).exp(),
        });
        i = j;
    }
    (atoms, groups)
}

fn exact(target: AtomDist) -> ConversionResult {
    ConversionResult {
        final_state: target,
        fidelity: 1.0,
        infidelity: 0.0,
        feasible_exact: true,
        mass_outside_target: 0.0,
    }
}

impl ConversionSolver for LorenzEnvelope {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn solve_in(
        &self,
        initial: &AtomDist,
        target: &AtomDist,
        direction: Direction,
    ) -> Result<ConversionResult> {
        match direction {
            Direction::Mixing => mixing(initial, target),
            Direction::Sharpening => sharpening(initial, target),
        }
    }
}

fn mixing(initial: &AtomDist, target: &AtomDist) -> Result<ConversionResult> {
    let (initial, target) = align(initial, target);
    let curve = LorenzCurve::new(&initial);
    let (atoms, groups) = group_target(&target);

    let mut gibbs_cum = vec![0.0];
    for g in &groups {
        gibbs_cum.push(gibbs_cum.last().unwrap() + g.gibbs);
    }
    // reference weight to the right of each point, summed from the far end
    let covered = target.total_gibbs();
    let uncovered = if 1.0 - covered > 1e-12 {
        1.0 - covered
    } else {
        0.0
    };
    let mut rests = vec![uncovered; groups.len() + 1];
    for k in (0..groups.len()).rev() {
        rests[k] = rests[k + 1] + groups[k].gibbs;
    }
    let masses: Vec<f64> = groups.iter().map(|g| g.mass).collect();
    let profile = Profile::new(&masses);

    let deficits: Vec<f64> = (0..=groups.len())
        .map(|k| {
            if k == 0 {
                0.0
            } else if profile.head[k] <= 0.5 {
                denoised(profile.head[k], curve.eval(gibbs_cum[k]))
            } else {
                denoised(tail_of(&curve, gibbs_cum[k], rests[k]), profile.tail[k])
            }
        })
        .collect();

    if deficits.iter().all(|&d| d <= 0.0) {
        return Ok(exact(target.into_owned()));
    }

    let hull = lower_hull(&deficits, &profile);

    let mut scaled = atoms.clone();
    let mut hellinger = 0.0;
    let mut overlap = 0.0;
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        let width = profile.between(a, b);
        let excess = (deficits[b] - deficits[a]) / width;
        let lambda = (1.0 - excess).max(0.0);
        let root = lambda.sqrt();
        hellinger += width * (excess / (1.0 + root)).powi(2);
        let ln_lambda = lambda.ln();
        for g in &groups[a..b] {
            overlap += g.mass * root;
            for atom in &mut scaled[g.start..g.end] {
                atom.log_p += ln_lambda;
            }
        }
    }

    let outside = deficits[*hull.last().unwrap()].max(0.0);
    let half_gap = 0.5 * (outside + hellinger);
    let infidelity = (half_gap * (2.0 - half_gap)).clamp(0.0, 1.0);
    let fidelity = 1.0 - infidelity;
    verify_overlap(fidelity, overlap)?;

    // the closed-form total can drift from the atoms' own normalization; rescale
    let mut log_norm = log_sum_exp(scaled.iter().map(Atom::log_mass));
    if uncovered > 0.0 && outside > 0.0 {
        scaled.push(Atom {
            log_p: outside.ln(),
            log_g: uncovered.ln(),
            log_mult: 0.0,
        });
        log_norm = log_add_exp(log_norm, outside.ln());
    } else if outside > 1e-12 {
        return Err(Error::Convergence(format!(
            "mass {outside} left over but the target covers all reference weight"
        )));
    }
    for atom in &mut scaled {
        atom.log_p -= log_norm;
    }
    let final_state = AtomDist::from_atoms(scaled, Reference::Gibbs)?;

    let slack = curve.max_deficit(&LorenzCurve::new(&final_state));
    if slack > crate::lorenz::DOMINATION_TOL {
        return Err(Error::Convergence(format!(
            "final state escapes the initial Lorenz curve by {slack}"
        )));
    }

    Ok(ConversionResult {
        final_state,
        fidelity,
        infidelity,
        feasible_exact: infidelity == 0.0,
        mass_outside_target: outside,
    })
}

/// `1 - L(x)`, reading the position from whichever end keeps it accurate.
fn tail_of(curve: &LorenzCurve, x: f64, rest: f64) -> f64 {
    if x <= 0.5 {
        curve.eval_tail(x)
    } else {
        curve.tail_at_rest(rest)
    }
}

fn verify_overlap(fidelity: f64, overlap: f64) -> Result<()> {
    let summed = overlap * overlap;
    if (summed - fidelity).abs() > VERIFY_TOL {
        return Err(Error::Convergence(format!(
            "closed-form fidelity {fidelity} disagrees with summed overlap {summed}"
        )));
    }
    Ok(())
}

/// A point of the sharpening envelope: fraction `frac` of the way through target
/// group `group` (`group == K` for the end of the support).
struct Site {
    x: f64,
    rest: f64,
    group: usize,
    frac: f64,
}

/// Below this fraction of a group's width an initial breakpoint is merged into the
/// group boundary.
const SITE_MERGE: f64 = 1e-12;
/// Largest class size whose outcome counts are exact in `f64`.
const SNAP_LIMIT: f64 = 4503599627370496.0;
/// A split piece holding more than half an outcome holds at least one.
const SPLIT_ROUNDING: f64 = std::f64::consts::LN_2;

fn sharpening(initial: &AtomDist, target: &AtomDist) -> Result<ConversionResult> {
    require_uniform(initial, target)?;
    let (initial, target) = align(initial, target);
    let curve = LorenzCurve::new(&initial);
    let target_curve = LorenzCurve::new(&target);
    let (atoms, groups) = group_target(&target);
    let k_max = groups.len();
    let (txs, trests) = (target_curve.xs(), target_curve.rests());

    let mut sites: Vec<Site> = (0..=k_max)
        .map(|k| Site {
            x: txs[k],
            rest: trests[k],
            group: k,
            frac: 0.0,
        })
        .collect();
    for (&x, &rest) in curve.xs().iter().zip(curve.rests()) {
        if x <= 0.0 || x >= txs[k_max] {
            continue;
        }
        let k = txs[..=k_max].partition_point(|&v| v <= x) - 1;
        let frac = if x <= 0.5 {
            (x - txs[k]) / (txs[k + 1] - txs[k])
        } else {
            (trests[k] - rest) / (trests[k] - trests[k + 1])
        };
        // breakpoints sit on whole outcomes of the class
        let count = log_sum_exp(
            atoms[groups[k].start..groups[k].end]
                .iter()
                .map(|a| a.log_mult),
        )
        .exp();
        let inside = (frac * count).round();
        let frac = if count < SNAP_LIMIT {
            inside / count
        } else {
            frac
        };
        if inside >= 0.5 && count - inside >= 0.5 && frac > SITE_MERGE && frac < 1.0 - SITE_MERGE {
            sites.push(Site {
                x,
                rest,
                group: k,
                frac,
            });
        }
    }
    sites.sort_by(|a, b| a.group.cmp(&b.group).then(a.frac.total_cmp(&b.frac)));

    let masses: Vec<f64> = groups.iter().map(|g| g.mass).collect();
    let (head, tail) = cumulative(&masses);
    let mut profile = Profile {
        head: Vec::with_capacity(sites.len()),
        tail: Vec::with_capacity(sites.len()),
    };
    for s in &sites {
        if s.group == k_max {
            profile.head.push(1.0);
            profile.tail.push(0.0);
        } else {
            let m = masses[s.group];
            profile.head.push(head[s.group] + s.frac * m);
            profile.tail.push(tail[s.group + 1] + (1.0 - s.frac) * m);
        }
    }

    // how far the initial curve rises above the target's
    let excess: Vec<f64> = sites
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if i == 0 || s.group == k_max {
                0.0
            } else if profile.head[i] <= 0.5 {
                denoised(curve.eval(s.x), profile.head[i])
            } else {
                denoised(profile.tail[i], tail_of(&curve, s.x, s.rest))
            }
        })
        .collect();

    if excess.iter().all(|&e| e <= 0.0) {
        return Ok(exact(target.into_owned()));
    }

    // lower hull of (Q, -E) is the upper hull of (Q, E)
    let hull = lower_hull(&excess, &profile);

    let mut pieces: Vec<Atom> = Vec::with_capacity(atoms.len() + hull.len());
    let mut hellinger = 0.0;
    let mut overlap = 0.0;
    for w in hull.windows(2) {
        let (a, b) = (&sites[w[0]], &sites[w[1]]);
        let width = profile.between(w[0], w[1]);
        let slope = (excess[w[1]] - excess[w[0]]) / width;
        let lambda = (1.0 + slope).max(0.0);
        let root = lambda.sqrt();
        hellinger += width * (slope / (1.0 + root)).powi(2);
        let ln_lambda = lambda.ln();
        for k in a.group..=b.group.min(k_max - 1) {
            let lo = if k == a.group { a.frac } else { 0.0 };
            let hi = if k == b.group { b.frac } else { 1.0 };
            if hi <= lo {
                continue;
            }
            let share = hi - lo;
            overlap += groups[k].mass * share * root;
            // under a uniform reference a group is one class; split it as a whole so
            // that every piece keeps at least one outcome
            let run = &atoms[groups[k].start..groups[k].end];
            let mut log_mult = log_sum_exp(run.iter().map(|a| a.log_mult)) + share.ln();
            if log_mult > -SPLIT_ROUNDING {
                // a single outcome, up to rounding in `share`
                log_mult = log_mult.max(0.0);
            }
            pieces.push(Atom {
                log_p: run[0].log_p + ln_lambda,
                log_g: run[0].log_g,
                log_mult,
            });
        }
    }

    let half_gap = 0.5 * hellinger;
    let infidelity = (half_gap * (2.0 - half_gap)).clamp(0.0, 1.0);
    let fidelity = 1.0 - infidelity;
    verify_overlap(fidelity, overlap)?;

    let log_norm = log_sum_exp(pieces.iter().map(Atom::log_mass));
    for atom in &mut pieces {
        atom.log_p -= log_norm;
    }
    let final_state = AtomDist::from_atoms(pieces, target.reference())?;

    let slack = LorenzCurve::new(&final_state).max_deficit(&curve);
    if slack > crate::lorenz::DOMINATION_TOL {
        return Err(Error::Convergence(format!(
            "initial Lorenz curve escapes the final state by {slack}"
        )));
    }

    Ok(ConversionResult {
        final_state,
        fidelity,
        infidelity,
        feasible_exact: infidelity == 0.0,
        mass_outside_target: 0.0,
    })
}

/// Vertices of the greatest convex minorant of `(Q_k, -D_k)`.
fn lower_hull(deficits: &[f64], profile: &Profile) -> Vec<usize> {
    let mut hull: Vec<usize> = vec![0];
    for k in 1..deficits.len() {
        let last = *hull.last().unwrap();
        if profile.between(last, k) <= 0.0 {
            // zero-width step (underflowed mass): keep the lower point
            if deficits[k] >= deficits[last] && hull.len() > 1 {
                hull.pop();
            } else {
                continue;
            }
        }
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let lhs = (deficits[a] - deficits[b]) * profile.between(a, k);
            let rhs = (deficits[a] - deficits[k]) * profile.between(a, b);
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    hull
}
