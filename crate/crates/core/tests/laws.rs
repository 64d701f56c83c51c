use std::sync::Arc;

use majorant_core::dist::{
    asymptotic_rate, entropy_variance, irreversibility_parameter, relative_entropy,
    relative_entropy_variance, shannon_entropy, ProbVec, ResourceTheory,
};
use majorant_core::experiments::{DistSpec, LambdaSweep, LambdaSweepSpec, SweepContext};
use majorant_core::lorenz::majorizes;
use majorant_core::resonance::{resonant_lambda, ResonanceQuery};
use majorant_core::solver::{optimal_final_state, Direction, LorenzEnvelope};
use majorant_core::AtomDist;
use proptest::prelude::*;

fn simplex(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, dim).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

/// Moves a fraction `t` of the gap between entries `i` and `j` towards their mean.
/// The result is majorized by the input.
fn t_transform(p: &[f64], i: usize, j: usize, t: f64) -> Vec<f64> {
    let mut out = p.to_vec();
    let (a, b) = (p[i], p[j]);
    out[i] = (1.0 - t) * a + t * b;
    out[j] = t * a + (1.0 - t) * b;
    out
}

fn plain(p: &[f64]) -> AtomDist {
    AtomDist::from_prob_vec(&ProbVec::new(p.to_vec()).unwrap()).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn majorization_is_reflexive_and_transitive(
        a in simplex(4),
        steps in prop::collection::vec((0usize..4, 0usize..4, 0.0f64..1.0), 2..6),
        split in 1usize..5,
    ) {
        let mut chain = vec![a.clone()];
        for &(i, j, t) in &steps {
            chain.push(t_transform(chain.last().unwrap(), i, j, t));
        }
        let b = &chain[split.min(chain.len() - 1)];
        let c = chain.last().unwrap();
        let (da, db, dc) = (plain(&a), plain(b), plain(c));
        prop_assert!(majorizes(&da, &da));
        prop_assert!(majorizes(&da, &db) && majorizes(&db, &dc));
        prop_assert!(majorizes(&da, &dc));
    }

    #[test]
    fn majorization_is_transitive_on_random_triples(a in simplex(3), b in simplex(3), c in simplex(3)) {
        let (da, db, dc) = (plain(&a), plain(&b), plain(&c));
        if majorizes(&da, &db) && majorizes(&db, &dc) {
            prop_assert!(majorizes(&da, &dc));
        }
    }
}

proptest! {
    #[test]
    fn rate_and_nu_are_reciprocal(p in simplex(3), q in simplex(3), g in simplex(3)) {
        let cases = [
            (ProbVec::new(p.clone()).unwrap(), ProbVec::new(q.clone()).unwrap(), ResourceTheory::Entanglement),
            (
                ProbVec::with_gibbs(p.clone(), g.clone()).unwrap(),
                ProbVec::with_gibbs(q.clone(), g.clone()).unwrap(),
                ResourceTheory::Thermodynamic,
            ),
        ];
        for (p, q, theory) in cases {
            let (Ok(r), Ok(back)) = (asymptotic_rate(&p, &q, theory), asymptotic_rate(&q, &p, theory)) else {
                continue;
            };
            prop_assert!((r * back - 1.0).abs() < 1e-10, "{r} {back}");
            if let (Ok(nu), Ok(back)) = (
                irreversibility_parameter(&p, &q, theory),
                irreversibility_parameter(&q, &p, theory),
            ) {
                prop_assert!((nu * back - 1.0).abs() < 1e-10, "{nu} {back}");
            }
        }
    }

    #[test]
    fn functionals_add_over_products(p in simplex(3), q in simplex(2), g in simplex(3), h in simplex(2)) {
        let (pp, qq) = (ProbVec::new(p.clone()).unwrap(), ProbVec::new(q.clone()).unwrap());
        let pq = pp.tensor(&qq);
        prop_assert!(close(shannon_entropy(&pq), shannon_entropy(&pp) + shannon_entropy(&qq), 1e-12));
        prop_assert!(close(entropy_variance(&pq), entropy_variance(&pp) + entropy_variance(&qq), 1e-12));

        let (gg, hh) = (ProbVec::new(g).unwrap(), ProbVec::new(h).unwrap());
        let gh = gg.tensor(&hh);
        let d = relative_entropy(&pq, &gh).unwrap();
        let v = relative_entropy_variance(&pq, &gh).unwrap();
        prop_assert!(close(d, relative_entropy(&pp, &gg).unwrap() + relative_entropy(&qq, &hh).unwrap(), 1e-12));
        prop_assert!(close(v, relative_entropy_variance(&pp, &gg).unwrap() + relative_entropy_variance(&qq, &hh).unwrap(), 1e-12));
    }

    #[test]
    fn resonance_swaps_with_species(p1 in simplex(3), p2 in simplex(3), q in simplex(3)) {
        let query = |a: &[f64], b: &[f64]| ResonanceQuery {
            p1: ProbVec::new(a.to_vec()).unwrap(),
            p2: ProbVec::new(b.to_vec()).unwrap(),
            q: ProbVec::new(q.clone()).unwrap(),
            theory: ResourceTheory::Entanglement,
            gibbs: None,
        };
        let forward = resonant_lambda(&query(&p1, &p2));
        let backward = resonant_lambda(&query(&p2, &p1));
        match (forward, backward) {
            (Ok(Some(f)), Ok(Some(b))) => prop_assert!((f + b - 1.0).abs() < 1e-9, "{f} {b}"),
            (Ok(None), Ok(None)) | (Err(_), Err(_)) => {}
            (f, b) => prop_assert!(false, "asymmetric: {f:?} vs {b:?}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn self_conversion_is_exact(p in simplex(3), g in simplex(3), thermal in any::<bool>()) {
        let base = if thermal {
            ProbVec::with_gibbs(p, g).unwrap()
        } else {
            ProbVec::new(p).unwrap()
        };
        for n in [1, 10, 100] {
            let d = AtomDist::iid_power(&base, n).unwrap();
            let r = optimal_final_state(&d, &d).unwrap();
            prop_assert_eq!(r.infidelity, 0.0, "n = {}", n);
            prop_assert!(r.feasible_exact);
        }
    }

    #[test]
    fn lambda_enters_only_through_the_split(n in 2usize..12, k in 0usize..12, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let k = k.min(n);
        // two fractions in the rounding window of k, ties excluded
        let width = if k == 0 || k == n { 0.49 } else { 0.98 };
        let lam = |t: f64| ((k as f64 + (t - 0.5) * width) / n as f64).clamp(0.0, 1.0);
        let spec = LambdaSweepSpec {
            p1: DistSpec::Inline(vec![0.4309, 0.43, 0.1391]),
            p2: DistSpec::Inline(vec![0.5499, 0.23, 0.2201]),
            q: DistSpec::Inline(vec![0.5121, 0.33, 0.1579]),
            n_list: vec![n],
            lambdas: Some(vec![lam(a), lam(b)]),
            lambda_points: 2,
            direction: Direction::Sharpening,
        };
        let ctx = SweepContext::new(Arc::new(LorenzEnvelope), Some(1)).unwrap();
        let grid = LambdaSweep.sweep(&spec, &ctx).unwrap();
        prop_assert_eq!(grid.get(0, 0).map(f64::to_bits), grid.get(0, 1).map(f64::to_bits));
    }
}

#[test]
fn resonant_mixture_has_unit_nu() {
    let p1 = ProbVec::new(vec![0.4309, 0.43, 0.1391]).unwrap();
    let p2 = ProbVec::new(vec![0.5499, 0.23, 0.2201]).unwrap();
    let q = ProbVec::new(vec![0.5121, 0.33, 0.1579]).unwrap();
    let query = ResonanceQuery {
        p1: p1.clone(),
        p2: p2.clone(),
        q: q.clone(),
        theory: ResourceTheory::Entanglement,
        gibbs: None,
    };
    let star = resonant_lambda(&query).unwrap().unwrap();
    // per-copy content and variance of the mixture, from additivity
    let h = star * shannon_entropy(&p1) + (1.0 - star) * shannon_entropy(&p2);
    let v = star * entropy_variance(&p1) + (1.0 - star) * entropy_variance(&p2);
    let nu = (v / h) / (entropy_variance(&q) / shannon_entropy(&q));
    assert!((nu - 1.0).abs() < 1e-6, "{nu}");

    // additivity itself, on an explicit product small enough to expand
    let mix = p1.tensor(&p1).tensor(&p2);
    let h3 = 2.0 * shannon_entropy(&p1) + shannon_entropy(&p2);
    let v3 = 2.0 * entropy_variance(&p1) + entropy_variance(&p2);
    assert!((shannon_entropy(&mix) - h3).abs() < 1e-12);
    assert!((entropy_variance(&mix) - v3).abs() < 1e-12);
}
