//! Exact compact representation of i.i.d. powers and products via type classes.
//!
//! An [`Atom`] groups outcomes that share the same probability and the same reference
//! weight. Everything is stored in log space: a 200-fold product of qubits has
//! multiplicities around `2^200` and probabilities far below `f64::MIN_POSITIVE`
//! before they are aggregated.

use std::cmp::Ordering;

use statrs::function::factorial::ln_factorial;

use crate::dist::ProbVec;
use crate::error::{Error, Result};
use crate::logspace::{close_scaled, log_sum_exp};

pub const DEFAULT_ATOM_CAP: usize = 10_000_000;
/// Largest explicit expansion handed out by [`AtomDist::expand`].
pub const EXPAND_LIMIT: usize = 1 << 16;
const MERGE_TOL: f64 = 1e-12;

/// A class of equiprobable outcomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    /// Log-probability of each outcome in the class.
    pub log_p: f64,
    /// Log reference (Gibbs) weight of each outcome in the class.
    pub log_g: f64,
    /// Log of the number of outcomes in the class.
    pub log_mult: f64,
}

impl Atom {
    /// `ln(p/g)`, the slope of this atom's Lorenz segment.
    pub fn log_ratio(&self) -> f64 {
        self.log_p - self.log_g
    }

    pub fn log_mass(&self) -> f64 {
        self.log_mult + self.log_p
    }

    pub fn log_gibbs_mass(&self) -> f64 {
        self.log_mult + self.log_g
    }
}

/// What the reference weights of an [`AtomDist`] are.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    /// Every outcome of a space of dimension `exp(log_dim)` has weight `exp(-log_dim)`.
    /// Plain majorization; distributions over different dimensions can be embedded into
    /// a common one.
    Uniform { log_dim: f64 },
    /// Explicit Gibbs weights.
    Gibbs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Factor {
    pub dim: usize,
    pub copies: usize,
}

/// Distribution over type classes.
///
/// Total probability is 1. Total reference weight is at most 1: outcomes outside the
/// support are never enumerated, and the missing weight stands for zero-probability
/// outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomDist {
    atoms: Vec<Atom>,
    reference: Reference,
    factors: Vec<Factor>,
}

/// `C(n + s - 1, s - 1)`, the number of compositions of `n` into `s` parts, as a float.
pub fn composition_count(n: usize, parts: usize) -> f64 {
    if parts == 0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (1..parts).fold(1.0, |acc, i| acc * (n + i) as f64 / i as f64)
}

fn for_each_composition(n: usize, parts: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(remaining: usize, slot: usize, k: &mut [usize], f: &mut impl FnMut(&[usize])) {
        if slot + 1 == k.len() {
            k[slot] = remaining;
            f(k);
            return;
        }
        for take in (0..=remaining).rev() {
            k[slot] = take;
            rec(remaining - take, slot + 1, k, f);
        }
    }
    let mut k = vec![0; parts];
    rec(n, 0, &mut k, f);
}

impl AtomDist {
    /// `base^{⊗n}` with the default atom cap.
    pub fn iid_power(base: &ProbVec, n: usize) -> Result<Self> {
        Self::iid_power_capped(base, n, DEFAULT_ATOM_CAP)
    }

    pub fn iid_power_capped(base: &ProbVec, n: usize, cap: usize) -> Result<Self> {
        let (atoms, log_dim) = Self::raw_power(base, n, cap)?;
        let reference = match base.gibbs() {
            None => Reference::Uniform { log_dim },
            Some(_) => Reference::Gibbs,
        };
        Ok(Self {
            atoms: merge(atoms),
            reference,
            factors: vec![Factor {
                dim: base.dim(),
                copies: n,
            }],
        })
    }

    /// Unmerged type-class atoms of `base^{⊗n}`, restricted to the support of `base`.
    fn raw_power(base: &ProbVec, n: usize, cap: usize) -> Result<(Vec<Atom>, f64)> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "copy count must be at least 1".into(),
            ));
        }
        let weights = base.gibbs_or_uniform();
        let support: Vec<(f64, f64)> = base
            .probs()
            .iter()
            .zip(weights.iter())
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, g)| (p.ln(), g.ln()))
            .collect();
        let projected = composition_count(n, support.len());
        if projected > cap as f64 {
            return Err(Error::OverflowGuard { projected, cap });
        }
        let ln_fact: Vec<f64> = (0..=n as u64).map(ln_factorial).collect();
        let mut atoms = Vec::with_capacity(projected as usize);
        for_each_composition(n, support.len(), &mut |k| {
            let mut atom = Atom {
                log_p: 0.0,
                log_g: 0.0,
                log_mult: ln_fact[n],
            };
            for (&ki, &(lp, lg)) in k.iter().zip(&support) {
                if ki > 0 {
                    atom.log_p += ki as f64 * lp;
                    atom.log_g += ki as f64 * lg;
                    atom.log_mult -= ln_fact[ki];
                }
            }
            atoms.push(atom);
        });
        Ok((atoms, n as f64 * (base.dim() as f64).ln()))
    }

    /// Number of atoms `iid_power` enumerates before merging.
    pub fn projected_atoms(base: &ProbVec, n: usize) -> f64 {
        let support = base.probs().iter().filter(|p| **p > 0.0).count();
        composition_count(n, support)
    }

    pub fn from_prob_vec(p: &ProbVec) -> Result<Self> {
        Self::iid_power(p, 1)
    }

    pub fn product(&self, other: &AtomDist) -> Result<Self> {
        self.product_capped(other, DEFAULT_ATOM_CAP)
    }

    /// Tensor product: log fields add, then atoms are canonically merged.
    pub fn product_capped(&self, other: &AtomDist, cap: usize) -> Result<Self> {
        let projected = self.atoms.len() as f64 * other.atoms.len() as f64;
        if projected > cap as f64 {
            return Err(Error::OverflowGuard { projected, cap });
        }
        let mut atoms = Vec::with_capacity(projected as usize);
        for a in &self.atoms {
            for b in &other.atoms {
                atoms.push(Atom {
                    log_p: a.log_p + b.log_p,
                    log_g: a.log_g + b.log_g,
                    log_mult: a.log_mult + b.log_mult,
                });
            }
        }
        let reference = match (self.reference, other.reference) {
            (Reference::Uniform { log_dim: a }, Reference::Uniform { log_dim: b }) => {
                Reference::Uniform { log_dim: a + b }
            }
            _ => Reference::Gibbs,
        };
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        Ok(Self {
            atoms: merge(atoms),
            reference,
            factors,
        })
    }

    /// `base1^{⊗k} ⊗ base2^{⊗(n-k)}` with `k = round(λn)`, ties to even.
    pub fn mixed_power(base1: &ProbVec, base2: &ProbVec, n: usize, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!(
                "mixing factor must lie in [0, 1], got {lambda}"
            )));
        }
        let k = split_count(n, lambda);
        match k {
            0 => Self::iid_power(base2, n),
            k if k == n => Self::iid_power(base1, n),
            k => Self::iid_power(base1, k)?.product(&Self::iid_power(base2, n - k)?),
        }
    }

    /// Builds a distribution from explicit atoms.
    ///
    /// Atoms with zero probability are dropped. Fails unless probabilities sum to 1
    /// and reference weights to at most 1 (relative tolerance 1e-9).
    pub fn from_atoms(atoms: Vec<Atom>, reference: Reference) -> Result<Self> {
        let atoms: Vec<Atom> = atoms
            .into_iter()
            .filter(|a| a.log_mass() > f64::NEG_INFINITY)
            .collect();
        if atoms.iter().any(|a| {
            a.log_p.is_nan() || a.log_g.is_nan() || !a.log_g.is_finite() || a.log_mult < -1e-12
        }) {
            return Err(Error::InvalidDistribution("malformed atom".into()));
        }
        let dist = Self {
            atoms: merge(atoms),
            reference,
            factors: Vec::new(),
        };
        let p = dist.total_probability();
        if (p - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "atoms carry total probability {p}"
            )));
        }
        if dist.total_gibbs() > 1.0 + 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "atoms carry total reference weight {}",
                dist.total_gibbs()
            )));
        }
        Ok(dist)
    }

    /// Re-expresses a uniform-reference distribution inside a larger space of dimension
    /// `exp(log_dim)`; the added outcomes carry zero probability.
    pub fn embed_uniform(&self, log_dim: f64) -> Result<Self> {
        match self.reference {
            Reference::Uniform { log_dim: current } if log_dim >= current - 1e-12 => Ok(Self {
                atoms: self
                    .atoms
                    .iter()
                    .map(|a| Atom {
                        log_g: -log_dim,
                        ..*a
                    })
                    .collect(),
                reference: Reference::Uniform { log_dim },
                factors: self.factors.clone(),
            }),
            Reference::Uniform { log_dim: current } => Err(Error::InvalidParameter(format!(
                "cannot embed dimension e^{current} into smaller e^{log_dim}"
            ))),
            Reference::Gibbs => Err(Error::InvalidParameter(
                "only uniform-reference distributions can be embedded".into(),
            )),
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn reference(&self) -> Reference {
        self.reference
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn total_probability(&self) -> f64 {
        log_sum_exp(self.atoms.iter().map(Atom::log_mass)).exp()
    }

    pub fn total_gibbs(&self) -> f64 {
        log_sum_exp(self.atoms.iter().map(Atom::log_gibbs_mass)).exp()
    }

    /// Per-atom `(probability mass, reference mass)`.
    pub fn coarse(&self) -> Vec<(f64, f64)> {
        self.atoms
            .iter()
            .map(|a| (a.log_mass().exp(), a.log_gibbs_mass().exp()))
            .collect()
    }

    /// Explicit per-outcome `(p, g)` pairs over the enumerated support.
    pub fn expand(&self) -> Result<Vec<(f64, f64)>> {
        let mut out = Vec::new();
        for a in &self.atoms {
            let count = a.log_mult.exp().round();
            if out.len() as f64 + count > EXPAND_LIMIT as f64 {
                return Err(Error::OverflowGuard {
                    projected: out.len() as f64 + count,
                    cap: EXPAND_LIMIT,
                });
            }
            let (p, g) = (a.log_p.exp(), a.log_g.exp());
            out.extend(std::iter::repeat_n((p, g), count as usize));
        }
        Ok(out)
    }
}

/// Number of species-1 copies used by [`AtomDist::mixed_power`].
pub fn split_count(n: usize, lambda: f64) -> usize {
    ((lambda * n as f64).round_ties_even() as usize).min(n)
}

/// Descending by ratio `p/g`, ties by descending `p`.
pub(crate) fn ratio_order(a: &Atom, b: &Atom) -> Ordering {
    b.log_ratio()
        .total_cmp(&a.log_ratio())
        .then(b.log_p.total_cmp(&a.log_p))
}

/// Canonical merge: atoms agreeing in both `log_p` and `log_g` collapse into one whose
/// multiplicity is the log-sum of theirs. Output is in [`ratio_order`].
fn merge(mut atoms: Vec<Atom>) -> Vec<Atom> {
    atoms.sort_by(|a, b| {
        a.log_p
            .total_cmp(&b.log_p)
            .then(a.log_g.total_cmp(&b.log_g))
    });
    let mut merged = Vec::with_capacity(atoms.len());
    let mut start = 0;
    while start < atoms.len() {
        let head = atoms[start].log_p;
        let mut end = start + 1;
        while end < atoms.len() && close_scaled(atoms[end].log_p, head, MERGE_TOL) {
            end += 1;
        }
        let cluster = &mut atoms[start..end];
        cluster.sort_by(|a, b| a.log_g.total_cmp(&b.log_g));
        let mut i = 0;
        while i < cluster.len() {
            let rep = cluster[i];
            let mut j = i + 1;
            while j < cluster.len() && close_scaled(cluster[j].log_g, rep.log_g, MERGE_TOL) {
                j += 1;
            }
            merged.push(Atom {
                log_mult: log_sum_exp(cluster[i..j].iter().map(|a| a.log_mult)),
                ..rep
            });
            i = j;
        }
        start = end;
    }
    merged.sort_by(ratio_order);
    merged
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{relative_entropy, shannon_entropy};

    fn pv(v: &[f64]) -> ProbVec {
        ProbVec::new(v.to_vec()).unwrap()
    }

    #[test]
    fn binomial_merge_to_single_atom() {
        let d = AtomDist::iid_power(&pv(&[0.5, 0.5]), 2).unwrap();
        assert_eq!(d.len(), 1);
        let a = d.atoms()[0];
        assert!((a.log_p.exp() - 0.25).abs() < 1e-15);
        assert!((a.log_mult.exp() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn single_copy_is_identity() {
        let base = pv(&[0.2, 0.5, 0.3]);
        let d = AtomDist::iid_power(&base, 1).unwrap();
        let mut probs: Vec<f64> = d.atoms().iter().map(|a| a.log_p.exp()).collect();
        probs.sort_by(f64::total_cmp);
        assert!((probs[0] - 0.2).abs() < 1e-15 && (probs[2] - 0.5).abs() < 1e-15);
        assert!(d.atoms().iter().all(|a| a.log_mult == 0.0));
    }

    #[test]
    fn composition_counts() {
        assert_eq!(composition_count(30, 3), 496.0);
        assert_eq!(
            AtomDist::projected_atoms(&pv(&[0.4309, 0.43, 0.1391]), 30),
            496.0
        );
        // support restriction: four outcomes, two in the support
        assert_eq!(
            AtomDist::projected_atoms(&pv(&[0.7, 0.0, 0.3, 0.0]), 200),
            201.0
        );
        let a = AtomDist::iid_power(&pv(&[0.4309, 0.43, 0.1391]), 30).unwrap();
        assert!(a.len() <= 496);
        assert!(a.len() as f64 * a.len() as f64 <= 246_016.0);
        let mut n = 0;
        for_each_composition(30, 3, &mut |_| n += 1);
        assert_eq!(n, 496);
    }

    #[test]
    fn overflow_guard() {
        let err = AtomDist::iid_power_capped(&pv(&[0.2, 0.3, 0.5]), 30, 100).unwrap_err();
        assert!(matches!(err, Error::OverflowGuard { .. }));
        let a = AtomDist::iid_power(&pv(&[0.2, 0.8]), 20).unwrap();
        assert!(matches!(
            a.product_capped(&a, 100),
            Err(Error::OverflowGuard { .. })
        ));
    }

    #[test]
    fn product_with_point_mass_shifts_reference() {
        let work = ProbVec::with_gibbs(vec![0.7, 0.3], vec![0.55, 0.45]).unwrap();
        let battery = ProbVec::with_gibbs(vec![1.0, 0.0], vec![0.6, 0.4]).unwrap();
        let x = AtomDist::iid_power(&work, 3).unwrap();
        let y = x
            .product(&AtomDist::from_prob_vec(&battery).unwrap())
            .unwrap();
        assert_eq!(x.len(), y.len());
        for (a, b) in x.atoms().iter().zip(y.atoms()) {
            assert!((a.log_p - b.log_p).abs() < 1e-14);
            assert!((b.log_g - a.log_g - 0.6f64.ln()).abs() < 1e-14);
        }
        assert!((y.total_gibbs() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn products_stay_normalized() {
        let p = pv(&[0.5436, 0.4264, 0.03]);
        let d = AtomDist::iid_power(&p, 7)
            .unwrap()
            .product(&AtomDist::iid_power(&p, 5).unwrap())
            .unwrap();
        assert!((d.total_probability() - 1.0).abs() < 1e-9);
        assert!((d.total_gibbs() - 1.0).abs() < 1e-9);
        let Reference::Uniform { log_dim } = d.reference() else {
            panic!("expected uniform reference")
        };
        assert!((log_dim - 12.0 * 3f64.ln()).abs() < 1e-12);
        let direct = AtomDist::iid_power(&p, 12).unwrap();
        assert_eq!(d.len(), direct.len());
        for (a, b) in d.atoms().iter().zip(direct.atoms()) {
            assert!((a.log_p - b.log_p).abs() < 1e-11);
            assert!((a.log_g - b.log_g).abs() < 1e-11);
            assert!((a.log_mult - b.log_mult).abs() < 1e-11);
        }
    }

    #[test]
    fn mixed_power_edges() {
        let a = pv(&[0.4309, 0.43, 0.1391]);
        let b = pv(&[0.5499, 0.23, 0.2201]);
        assert_eq!(
            AtomDist::mixed_power(&a, &b, 6, 0.0).unwrap(),
            AtomDist::iid_power(&b, 6).unwrap()
        );
        assert_eq!(
            AtomDist::mixed_power(&a, &b, 6, 1.0).unwrap(),
            AtomDist::iid_power(&a, 6).unwrap()
        );
        let same = AtomDist::mixed_power(&a, &a, 6, 0.5).unwrap();
        let direct = AtomDist::iid_power(&a, 6).unwrap();
        assert_eq!(same.len(), direct.len());
        for (x, y) in same.atoms().iter().zip(direct.atoms()) {
            assert!((x.log_p - y.log_p).abs() < 1e-12);
            assert!((x.log_mult - y.log_mult).abs() < 1e-12);
        }
        assert!(AtomDist::mixed_power(&a, &b, 6, 1.5).is_err());
        // 2.5 rounds to 2
        assert_eq!(split_count(5, 0.5), 2);
        assert_eq!(split_count(7, 0.5), 4);
    }

    #[test]
    fn entropy_additivity_on_expansion() {
        let base = ProbVec::with_gibbs(vec![0.6, 0.3, 0.1], vec![0.5, 0.3, 0.2]).unwrap();
        for n in [1, 2, 5, 8] {
            let d = AtomDist::iid_power(&base, n).unwrap();
            let outcomes = d.expand().unwrap();
            assert_eq!(outcomes.len(), 3usize.pow(n as u32));
            let h: f64 = outcomes.iter().map(|(p, _)| -p * p.ln()).sum();
            assert!((h - n as f64 * shannon_entropy(&base)).abs() < 1e-8);
            let dr: f64 = outcomes.iter().map(|(p, g)| p * (p / g).ln()).sum();
            let single = relative_entropy(
                &base,
                &ProbVec::new(base.gibbs().unwrap().to_vec()).unwrap(),
            )
            .unwrap();
            assert!((dr - n as f64 * single).abs() < 1e-8);
        }
    }

    #[test]
    fn merge_is_idempotent() {
        let p = pv(&[0.25, 0.25, 0.5]);
        let d = AtomDist::iid_power(&p, 6).unwrap();
        let again = merge(d.atoms().to_vec());
        assert_eq!(again, d.atoms());
        // equal-probability outcomes collapse: type classes of (k1+k2, k3) only
        assert_eq!(d.len(), 7);
    }

    #[test]
    fn embedding_pads_reference() {
        let d = AtomDist::iid_power(&pv(&[0.7, 0.3]), 2).unwrap();
        let e = d.embed_uniform(3.0 * 2f64.ln()).unwrap();
        assert!((e.total_gibbs() - 0.5).abs() < 1e-12);
        assert!((e.total_probability() - 1.0).abs() < 1e-12);
        assert!(d.embed_uniform(0.5).is_err());
    }

    #[test]
    fn from_atoms_validates() {
        let ok = AtomDist::from_atoms(
            vec![
                Atom {
                    log_p: 0.5f64.ln(),
                    log_g: 0.25f64.ln(),
                    log_mult: 0.0,
                },
                Atom {
                    log_p: 0.25f64.ln(),
                    log_g: 0.25f64.ln(),
                    log_mult: 2f64.ln(),
                },
            ],
            Reference::Gibbs,
        );
        assert!(ok.is_ok());
        let bad = AtomDist::from_atoms(
            vec![Atom {
                log_p: 0.5f64.ln(),
                log_g: 0.25f64.ln(),
                log_mult: 0.0,
            }],
            Reference::Gibbs,
        );
        assert!(bad.is_err());
    }
}
