//! Probability vectors and the entropic functionals used to compare resource states.
//!
//! All logarithms are natural; entropies are in nats. `0 · ln 0` is taken as `0`.

use std::borrow::Cow;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs whose total mass is within this distance of 1 are renormalized, anything further is rejected.
const SUM_ACCEPT: f64 = 1e-6;
/// Negative entries above `-NEG_CLAMP` are treated as round-off and clamped to zero.
const NEG_CLAMP: f64 = 1e-15;

/// A finite distribution, optionally paired with the Gibbs weights of the thermal reference state.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVec {
    probs: Vec<f64>,
    gibbs: Option<Vec<f64>>,
}

impl ProbVec {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Ok(Self {
            probs: normalize(probs, "probabilities", false)?,
            gibbs: None,
        })
    }

    /// A distribution together with positive Gibbs weights of equal length.
    pub fn with_gibbs(probs: Vec<f64>, gibbs: Vec<f64>) -> Result<Self> {
        if probs.len() != gibbs.len() {
            return Err(Error::DimensionMismatch {
                left: probs.len(),
                right: gibbs.len(),
            });
        }
        Ok(Self {
            probs: normalize(probs, "probabilities", false)?,
            gibbs: Some(normalize(gibbs, "gibbs weights", true)?),
        })
    }

    pub fn uniform(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        Self::new(vec![1.0 / dim as f64; dim])
    }

    pub fn point_mass(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidParameter(format!(
                "point mass index {index} out of range for dimension {dim}"
            )));
        }
        let mut probs = vec![0.0; dim];
        probs[index] = 1.0;
        Self::new(probs)
    }

    /// Replaces (or sets) the Gibbs weights.
    pub fn set_gibbs(self, gibbs: Vec<f64>) -> Result<Self> {
        Self::with_gibbs(self.probs, gibbs)
    }

    /// Drops the Gibbs weights, keeping the probabilities.
    pub fn without_gibbs(&self) -> Self {
        Self {
            probs: self.probs.clone(),
            gibbs: None,
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn gibbs(&self) -> Option<&[f64]> {
        self.gibbs.as_deref()
    }

    /// Gibbs weights, or the uniform vector when none are attached.
    pub fn gibbs_or_uniform(&self) -> Cow<'_, [f64]> {
        match &self.gibbs {
            Some(g) => Cow::Borrowed(g),
            None => Cow::Owned(vec![1.0 / self.dim() as f64; self.dim()]),
        }
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    /// Tensor (Kronecker) product. Gibbs weights multiply; a missing side counts as uniform.
    pub fn tensor(&self, other: &ProbVec) -> ProbVec {
        let probs = kron(&self.probs, &other.probs);
        let gibbs = match (&self.gibbs, &other.gibbs) {
            (None, None) => None,
            _ => Some(kron(&self.gibbs_or_uniform(), &other.gibbs_or_uniform())),
        };
        ProbVec { probs, gibbs }
    }
}

impl fmt::Display for ProbVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, p) in self.probs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "]")
    }
}

fn kron(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| x * y))
        .collect()
}

fn normalize(mut v: Vec<f64>, what: &str, strictly_positive: bool) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::InvalidDistribution(format!("{what}: empty vector")));
    }
    for (i, x) in v.iter_mut().enumerate() {
        if !x.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "{what}: entry {i} is not finite"
            )));
        }
        if *x < -NEG_CLAMP {
            return Err(Error::InvalidDistribution(format!(
                "{what}: entry {i} is negative ({x})"
            )));
        }
        if *x < 0.0 {
            *x = 0.0;
        }
        if strictly_positive && *x == 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "{what}: entry {i} must be positive"
            )));
        }
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > SUM_ACCEPT {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entries sum to {total}, expected 1"
        )));
    }
    v.iter_mut().for_each(|x| *x /= total);
    Ok(v)
}

/// The three majorization-based resource theories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResourceTheory {
    Entanglement,
    Coherence,
    Thermodynamic,
}

impl ResourceTheory {
    /// Entanglement and coherence compare against uniform reference weights.
    pub fn uses_gibbs(self) -> bool {
        matches!(self, ResourceTheory::Thermodynamic)
    }

    pub fn name(self) -> &'static str {
        match self {
            ResourceTheory::Entanglement => "entanglement",
            ResourceTheory::Coherence => "coherence",
            ResourceTheory::Thermodynamic => "thermodynamic",
        }
    }
}

impl std::str::FromStr for ResourceTheory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entanglement" => Ok(Self::Entanglement),
            "coherence" => Ok(Self::Coherence),
            "thermodynamic" | "thermo" => Ok(Self::Thermodynamic),
            other => Err(Error::Unknown {
                kind: "resource theory",
                name: other.to_string(),
            }),
        }
    }
}

fn xlogx_terms(p: &[f64]) -> impl Iterator<Item = (f64, f64)> + '_ {
    p.iter().filter(|&&x| x > 0.0).map(|&x| (x, x.ln()))
}

pub fn shannon_entropy(p: &ProbVec) -> f64 {
    -xlogx_terms(p.probs()).map(|(x, l)| x * l).sum::<f64>()
}

/// Variance of the surprisal `-ln p`.
pub fn entropy_variance(p: &ProbVec) -> f64 {
    let h = shannon_entropy(p);
    xlogx_terms(p.probs())
        .map(|(x, l)| x * (l + h).powi(2))
        .sum()
}

fn log_ratios(p: &ProbVec, g: &ProbVec) -> Result<Vec<(f64, f64)>> {
    if p.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            left: p.dim(),
            right: g.dim(),
        });
    }
    let mut out = Vec::with_capacity(p.dim());
    for (index, (&pi, &gi)) in p.probs().iter().zip(g.probs()).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if gi == 0.0 {
            return Err(Error::Support { index, prob: pi });
        }
        out.push((pi, pi.ln() - gi.ln()));
    }
    Ok(out)
}

pub fn relative_entropy(p: &ProbVec, g: &ProbVec) -> Result<f64> {
    Ok(log_ratios(p, g)?.iter().map(|(x, l)| x * l).sum())
}

/// Variance of the log-likelihood ratio `ln(p/g)` under `p`.
pub fn relative_entropy_variance(p: &ProbVec, g: &ProbVec) -> Result<f64> {
    let terms = log_ratios(p, g)?;
    let d: f64 = terms.iter().map(|(x, l)| x * l).sum();
    Ok(terms.iter().map(|(x, l)| x * (l - d).powi(2)).sum())
}

fn gibbs_of(p: &ProbVec) -> Result<ProbVec> {
    let g = p.gibbs().ok_or(Error::MissingGibbs)?;
    Ok(ProbVec {
        probs: g.to_vec(),
        gibbs: None,
    })
}

/// Asymptotic resource content: `H(p)` for entanglement/coherence, `D(p||γ)` for thermodynamics.
pub fn resource_content(p: &ProbVec, theory: ResourceTheory) -> Result<f64> {
    if theory.uses_gibbs() {
        relative_entropy(p, &gibbs_of(p)?)
    } else {
        Ok(shannon_entropy(p))
    }
}

/// Single-copy fluctuation of the resource: `V(p)` or `V(p||γ)`.
pub fn resource_variance(p: &ProbVec, theory: ResourceTheory) -> Result<f64> {
    if theory.uses_gibbs() {
        relative_entropy_variance(p, &gibbs_of(p)?)
    } else {
        Ok(entropy_variance(p))
    }
}

/// Content below this is treated as a free state.
const FREE_TOL: f64 = 1e-14;

pub fn asymptotic_rate(p: &ProbVec, q: &ProbVec, theory: ResourceTheory) -> Result<f64> {
    let target = resource_content(q, theory)?;
    if target.abs() <= FREE_TOL {
        return Err(Error::DegenerateTarget("target has no resource content"));
    }
    Ok(resource_content(p, theory)? / target)
}

/// Ratio of the relative fluctuation strengths `V/H` (or `V/D`) of initial and target.
pub fn irreversibility_parameter(p: &ProbVec, q: &ProbVec, theory: ResourceTheory) -> Result<f64> {
    let target = relative_fluctuation(q, theory)?
        .ok_or(Error::DegenerateTarget("target has no resource content"))?;
    if target <= 0.0 {
        return Err(Error::DegenerateTarget("target has vanishing fluctuations"));
    }
    // A free initial state has V = 0 as well; its relative fluctuation is taken as 0.
    Ok(relative_fluctuation(p, theory)?.unwrap_or(0.0) / target)
}

/// `V/H` (or `V/D`); `None` when the content vanishes.
pub fn relative_fluctuation(p: &ProbVec, theory: ResourceTheory) -> Result<Option<f64>> {
    let content = resource_content(p, theory)?;
    if content.abs() <= FREE_TOL {
        return Ok(None);
    }
    Ok(Some(resource_variance(p, theory)? / content))
}

/// Squared Bhattacharyya overlap `(Σ √(p_i q_i))²`. The shorter vector is zero-padded.
pub fn fidelity(p: &ProbVec, q: &ProbVec) -> f64 {
    let overlap: f64 = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(a, b)| (a * b).sqrt())
        .sum();
    (overlap * overlap).min(1.0)
}

pub fn infidelity(p: &ProbVec, q: &ProbVec) -> f64 {
    1.0 - fidelity(p, q)
}

/// Thermal qubit `[1, e^{-gap/T}] / (1 + e^{-gap/T})` in units with `k_B = 1`.
pub fn gibbs_qubit(temperature: f64, gap: f64) -> Result<ProbVec> {
    if temperature <= 0.0 || !temperature.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    if gap < 0.0 || !gap.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gap must be non-negative, got {gap}"
        )));
    }
    let boltzmann = (-gap / temperature).exp();
    let z = 1.0 + boltzmann;
    ProbVec::new(vec![1.0 / z, boltzmann / z])
}
