//! Lorenz curves and the (thermo-)majorization order.

use std::borrow::Cow;

use crate::atoms::{ratio_order, AtomDist, Reference};
use crate::logspace::{close_scaled, log_sum_exp};

/// Curve deficits up to this absolute amount still count as dominated.
pub const DOMINATION_TOL: f64 = 1e-9;
const RATIO_TIE_TOL: f64 = 1e-12;

/// Concave piecewise-linear curve of cumulative probability against cumulative
/// reference weight, atoms taken in decreasing order of `p/g`.
///
/// Besides the breakpoints it keeps the complementary masses `1 - y`, summed from
/// the far end, so that values of the curve very close to 1 can be read without
/// cancellation.
#[derive(Debug, Clone, PartialEq)]
pub struct LorenzCurve {
    xs: Vec<f64>,
    ys: Vec<f64>,
    tails: Vec<f64>,
    /// `1 - x` at each breakpoint, summed from the far end.
    rests: Vec<f64>,
    log_slopes: Vec<f64>,
}

impl LorenzCurve {
    pub fn new(dist: &AtomDist) -> Self {
        let mut atoms = dist.atoms().to_vec();
        atoms.sort_by(ratio_order);

        // (log prob mass, log gibbs mass) per group of equal ratio
        let mut groups: Vec<(f64, f64)> = Vec::new();
        let mut i = 0;
        while i < atoms.len() {
            let ratio = atoms[i].log_ratio();
            let mut j = i + 1;
            while j < atoms.len() && close_scaled(atoms[j].log_ratio(), ratio, RATIO_TIE_TOL) {
                j += 1;
            }
            let run = &atoms[i..j];
            groups.push((
                log_sum_exp(run.iter().map(|a| a.log_mass())),
                log_sum_exp(run.iter().map(|a| a.log_gibbs_mass())),
            ));
            i = j;
        }

        let total = log_sum_exp(groups.iter().map(|g| g.0));
        let mut xs = Vec::with_capacity(groups.len() + 2);
        let mut ys = Vec::with_capacity(groups.len() + 2);
        let mut log_slopes = Vec::with_capacity(groups.len() + 1);
        xs.push(0.0);
        ys.push(0.0);
        for &(lm, lg) in &groups {
            xs.push(xs.last().unwrap() + lg.exp());
            ys.push(ys.last().unwrap() + (lm - total).exp());
            log_slopes.push(lm - total - lg);
        }
        let mut tails = vec![0.0; groups.len() + 1];
        for k in (0..groups.len()).rev() {
            tails[k] = tails[k + 1] + (groups[k].0 - total).exp();
        }
        *ys.last_mut().unwrap() = 1.0;

        let last_x = *xs.last().unwrap();
        let missing = 1.0 - last_x;
        let padded = missing > RATIO_TIE_TOL;
        let mut rests = vec![0.0; groups.len() + 1];
        rests[groups.len()] = if padded { missing } else { 0.0 };
        for k in (0..groups.len()).rev() {
            rests[k] = rests[k + 1] + groups[k].1.exp();
        }
        if padded {
            // zero-probability outcomes fill the remaining reference weight
            xs.push(1.0);
            ys.push(1.0);
            tails.push(0.0);
            rests.push(0.0);
            log_slopes.push(f64::NEG_INFINITY);
        } else {
            *xs.last_mut().unwrap() = 1.0;
        }
        Self {
            xs,
            ys,
            tails,
            rests,
            log_slopes,
        }
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// `1 - x` for each breakpoint, accurate near `x = 1`.
    pub fn rests(&self) -> &[f64] {
        &self.rests
    }

    /// Log slope of each segment, in order.
    pub fn log_slopes(&self) -> &[f64] {
        &self.log_slopes
    }

    fn segment(&self, x: f64) -> usize {
        self.xs.partition_point(|&v| v <= x) - 1
    }

    /// Curve value at reference mass `x` (clamped to `[0, 1]`).
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let j = self.segment(x);
        let dx = x - self.xs[j];
        if dx == 0.0 || j + 1 == self.xs.len() {
            return self.ys[j];
        }
        (self.ys[j] + (self.log_slopes[j] + dx.ln()).exp()).min(self.ys[j + 1])
    }

    /// `1 - eval(x)`, computed from the far end of the curve.
    pub fn eval_tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        if x >= 1.0 {
            return 0.0;
        }
        let j = self.segment(x);
        if x == self.xs[j] || j + 1 == self.xs.len() {
            return self.tails[j];
        }
        let rest = self.xs[j + 1] - x;
        if rest <= 0.0 {
            return self.tails[j + 1];
        }
        (self.tails[j + 1] + (self.log_slopes[j] + rest.ln()).exp()).min(self.tails[j])
    }

    /// `1 - eval(1 - rest)`, with the position also given from the far end.
    pub fn tail_at_rest(&self, rest: f64) -> f64 {
        if rest <= 0.0 {
            return 0.0;
        }
        if rest >= 1.0 {
            return 1.0;
        }
        // rests are decreasing; first breakpoint strictly closer to the end than `rest`
        let j = self.rests.partition_point(|&r| r >= rest);
        if j == 0 {
            return 1.0;
        }
        if rest >= self.rests[j - 1] {
            return self.tails[j - 1];
        }
        let inside = rest - self.rests[j];
        if inside <= 0.0 || j >= self.tails.len() {
            return self.tails[j.min(self.tails.len() - 1)];
        }
        (self.tails[j] + (self.log_slopes[j - 1] + inside.ln()).exp()).min(self.tails[j - 1])
    }

    /// Largest amount by which `other` rises above `self`, over all breakpoints of both.
    pub fn max_deficit(&self, other: &LorenzCurve) -> f64 {
        self.xs
            .iter()
            .chain(other.xs.iter())
            .map(|&x| other.eval(x) - self.eval(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn dominates(&self, other: &LorenzCurve) -> bool {
        self.max_deficit(other) <= DOMINATION_TOL
    }
}

/// Brings two uniform-reference distributions of different dimension into the larger
/// space; anything else is returned as is.
pub fn align<'a>(a: &'a AtomDist, b: &'a AtomDist) -> (Cow<'a, AtomDist>, Cow<'a, AtomDist>) {
    if let (Reference::Uniform { log_dim: da }, Reference::Uniform { log_dim: db }) =
        (a.reference(), b.reference())
    {
        if !close_scaled(da, db, 1e-12) {
            let target = da.max(db);
            // embedding into a larger space cannot fail
            let embed = |d: &'a AtomDist| match d.embed_uniform(target) {
                Ok(e) => Cow::Owned(e),
                Err(_) => Cow::Borrowed(d),
            };
            return (embed(a), embed(b));
        }
    }
    (Cow::Borrowed(a), Cow::Borrowed(b))
}

/// `true` iff `a` (thermo-)majorizes `b`, with [`DOMINATION_TOL`] slack.
pub fn majorizes(a: &AtomDist, b: &AtomDist) -> bool {
    let (a, b) = align(a, b);
    LorenzCurve::new(&a).dominates(&LorenzCurve::new(&b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{gibbs_qubit, ProbVec};

    fn dist(p: &[f64]) -> AtomDist {
        AtomDist::from_prob_vec(&ProbVec::new(p.to_vec()).unwrap()).unwrap()
    }

    fn thermal(p: &[f64], g: &[f64]) -> AtomDist {
        AtomDist::from_prob_vec(&ProbVec::with_gibbs(p.to_vec(), g.to_vec()).unwrap()).unwrap()
    }

    fn assert_points(curve: &LorenzCurve, expected: &[(f64, f64)]) {
        let got: Vec<_> = curve.points().collect();
        assert_eq!(got.len(), expected.len(), "{got:?}");
        for ((x, y), (ex, ey)) in got.iter().zip(expected) {
            assert!((x - ex).abs() < 1e-12 && (y - ey).abs() < 1e-12, "{got:?}");
        }
    }

    #[test]
    fn point_mass_curve() {
        assert_points(
            &LorenzCurve::new(&dist(&[1.0, 0.0])),
            &[(0.0, 0.0), (0.5, 1.0), (1.0, 1.0)],
        );
    }

    #[test]
    fn free_states_are_diagonal() {
        assert_points(
            &LorenzCurve::new(&dist(&[0.25; 4])),
            &[(0.0, 0.0), (1.0, 1.0)],
        );
        let g = [0.5, 0.3, 0.2];
        assert_points(
            &LorenzCurve::new(&thermal(&g, &g)),
            &[(0.0, 0.0), (1.0, 1.0)],
        );
    }

    #[test]
    fn curve_is_concave_and_monotone() {
        let d = AtomDist::iid_power(
            &ProbVec::with_gibbs(vec![0.6, 0.3, 0.1], vec![0.2, 0.3, 0.5]).unwrap(),
            12,
        )
        .unwrap();
        let c = LorenzCurve::new(&d);
        assert!(c.xs.windows(2).all(|w| w[1] > w[0]));
        assert!(c.ys.windows(2).all(|w| w[1] >= w[0]));
        assert!(c.log_slopes.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(c.points().last(), Some((1.0, 1.0)));
    }

    #[test]
    fn tail_matches_complement() {
        let c = LorenzCurve::new(&thermal(&[0.6, 0.3, 0.1], &[0.2, 0.3, 0.5]));
        for x in [0.0, 0.05, 0.2, 0.33, 0.5, 0.77, 0.99, 1.0] {
            assert!((c.eval(x) + c.eval_tail(x) - 1.0).abs() < 1e-14);
            assert!((c.eval_tail(x) - c.tail_at_rest(1.0 - x)).abs() < 1e-14);
        }
        // deep in the tail the complement keeps relative precision
        let p = ProbVec::with_gibbs(vec![1.0 - 1e-20, 1e-20], vec![0.5, 0.5]).unwrap();
        let c = LorenzCurve::new(&AtomDist::from_prob_vec(&p).unwrap());
        assert!((c.eval_tail(0.75) - 0.5e-20).abs() < 1e-32);
        assert!((c.tail_at_rest(1e-30) - 2e-50).abs() < 1e-62);
    }

    #[test]
    fn majorization_examples() {
        let x = dist(&[0.5, 0.3, 0.2]);
        assert!(majorizes(&x, &x));
        assert!(majorizes(&dist(&[1.0, 0.0, 0.0]), &x));
        assert!(!majorizes(&x, &dist(&[1.0, 0.0, 0.0])));
        let g = gibbs_qubit(2.0, 1.0).unwrap();
        let gamma = thermal(g.probs(), g.probs());
        assert!(majorizes(&thermal(&[0.1, 0.9], g.probs()), &gamma));
    }

    #[test]
    fn plain_majorization_pads_dimensions() {
        // [0.6, 0.4] majorizes [0.5, 0.3, 0.2] once zero-padded
        assert!(majorizes(&dist(&[0.6, 0.4]), &dist(&[0.5, 0.3, 0.2])));
        assert!(!majorizes(&dist(&[0.5, 0.3, 0.2]), &dist(&[0.6, 0.4])));
        assert!(!majorizes(&dist(&[0.4, 0.35, 0.25]), &dist(&[0.5, 0.5])));
    }
}
