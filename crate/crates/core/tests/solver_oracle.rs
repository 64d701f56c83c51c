use majorant_core::dist::{fidelity, ProbVec};
use majorant_core::lorenz::majorizes;
use majorant_core::solver::ConversionSolver;
use majorant_core::solver::{
    optimal_final_state, oracle_optimal_fidelity, oracle_optimal_fidelity_in, Direction,
    LorenzEnvelope, SolverRegistry,
};
use majorant_core::AtomDist;
use proptest::prelude::*;

fn simplex(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, dim).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

fn atoms(p: &ProbVec) -> AtomDist {
    AtomDist::from_prob_vec(p).unwrap()
}

#[test]
fn qubit_example_closed_form() {
    let p = ProbVec::new(vec![0.6, 0.4]).unwrap();
    let q = ProbVec::new(vec![0.9, 0.1]).unwrap();
    let r = optimal_final_state(&atoms(&p), &atoms(&q)).unwrap();
    assert!((r.fidelity - 0.8739387691).abs() < 1e-9, "{}", r.fidelity);
    // the optimum is p itself here
    assert!((r.fidelity - fidelity(&p, &q)).abs() < 1e-12);
    assert!(!r.feasible_exact);
}

#[test]
fn reachable_target_is_exact() {
    let p = ProbVec::new(vec![0.7, 0.2, 0.1]).unwrap();
    let q = ProbVec::new(vec![0.5, 0.3, 0.2]).unwrap();
    let r = optimal_final_state(&atoms(&p), &atoms(&q)).unwrap();
    assert!(r.feasible_exact);
    assert_eq!(r.infidelity, 0.0);
    let same = optimal_final_state(&atoms(&q), &atoms(&q)).unwrap();
    assert!(same.feasible_exact);
}

#[test]
fn point_mass_target_from_uniform_qubit() {
    let p = ProbVec::with_gibbs(vec![0.5, 0.5], vec![0.5, 0.5]).unwrap();
    let q = ProbVec::with_gibbs(vec![1.0, 0.0], vec![0.5, 0.5]).unwrap();
    let r = optimal_final_state(&atoms(&p), &atoms(&q)).unwrap();
    assert!((r.fidelity - 0.5).abs() < 1e-12);
    assert!((r.mass_outside_target - 0.5).abs() < 1e-12);
    assert!(majorizes(&atoms(&p), &r.final_state));
}

#[test]
fn sharpening_splits_a_type_class() {
    // the flat target has one class; the optimum fills two of its three outcomes
    let p = AtomDist::from_prob_vec(&ProbVec::new(vec![0.5, 0.5]).unwrap()).unwrap();
    let q = AtomDist::iid_power(&ProbVec::uniform(3).unwrap(), 1).unwrap();
    let r = LorenzEnvelope
        .solve_in(&p, &q, Direction::Sharpening)
        .unwrap();
    assert!((r.fidelity - 2.0 / 3.0).abs() < 1e-12, "{}", r.fidelity);
    assert!(majorizes(&r.final_state, &p));
}

#[test]
fn sharpening_rejects_gibbs_reference() {
    let p = ProbVec::with_gibbs(vec![0.7, 0.3], vec![0.6, 0.4]).unwrap();
    assert!(LorenzEnvelope
        .solve_in(&atoms(&p), &atoms(&p), Direction::Sharpening)
        .is_err());
}

#[test]
fn registry_lookup() {
    let reg = SolverRegistry::default();
    assert!(reg.get("lorenz-envelope").is_ok());
    assert!(reg.get("frank-wolfe").is_ok());
    assert!(reg.get("simplex").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn envelope_matches_oracle_plain(dim in 2usize..=6, seed in any::<u64>()) {
        let _ = seed;
        let (p, q) = {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut draw = || {
                let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.01..1.0)).collect();
                let s: f64 = v.iter().sum();
                v.into_iter().map(|x| x / s).collect::<Vec<_>>()
            };
            (draw(), draw())
        };
        let p = ProbVec::new(p).unwrap();
        let q = ProbVec::new(q).unwrap();
        let exact = optimal_final_state(&atoms(&p), &atoms(&q)).unwrap();
        let (_, oracle) = oracle_optimal_fidelity(&p, &q).unwrap();
        prop_assert!((exact.fidelity - oracle).abs() < 1e-6, "{} vs {}", exact.fidelity, oracle);
        prop_assert!(majorizes(&atoms(&p), &exact.final_state));
    }

    #[test]
    fn envelope_matches_oracle_thermal(p in simplex(4), q in simplex(4), g in simplex(4)) {
        let p = ProbVec::with_gibbs(p, g.clone()).unwrap();
        let q = ProbVec::with_gibbs(q, g).unwrap();
        let exact = optimal_final_state(&atoms(&p), &atoms(&q)).unwrap();
        let (_, oracle) = oracle_optimal_fidelity(&p, &q).unwrap();
        prop_assert!((exact.fidelity - oracle).abs() < 1e-6, "{} vs {}", exact.fidelity, oracle);
        prop_assert!(majorizes(&atoms(&p), &exact.final_state));
        prop_assert_eq!(exact.feasible_exact, majorizes(&atoms(&p), &atoms(&q)));
    }

    #[test]
    fn frank_wolfe_solver_agrees_on_powers(p in simplex(2), q in simplex(2), n in 1usize..6, m in 1usize..6) {
        let p = ProbVec::new(p).unwrap();
        let q = ProbVec::new(q).unwrap();
        let a = AtomDist::iid_power(&p, n).unwrap();
        let b = AtomDist::iid_power(&q, m).unwrap();
        let reg = SolverRegistry::default();
        let exact = reg.get("lorenz-envelope").unwrap().solve(&a, &b).unwrap();
        let fw = reg.get("frank-wolfe").unwrap().solve(&a, &b).unwrap();
        prop_assert!((exact.fidelity - fw.fidelity).abs() < 1e-6, "{} vs {}", exact.fidelity, fw.fidelity);
    }

    #[test]
    fn sharpening_envelope_matches_oracle(
        dp in 2usize..=6,
        dq in 2usize..=6,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |dim: usize| {
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.01..1.0)).collect();
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect::<Vec<_>>()
        };
        let (pv, qv) = (draw(dp), draw(dq));
        let p = ProbVec::new(pv.clone()).unwrap();
        let q = ProbVec::new(qv.clone()).unwrap();
        let exact = LorenzEnvelope.solve_in(&atoms(&p), &atoms(&q), Direction::Sharpening).unwrap();
        // the oracle works in one explicit space
        let d = dp.max(dq);
        let pad = |mut v: Vec<f64>| { v.resize(d, 0.0); ProbVec::new(v).unwrap() };
        let (_, oracle) = oracle_optimal_fidelity_in(&pad(pv), &pad(qv), Direction::Sharpening).unwrap();
        prop_assert!((exact.fidelity - oracle).abs() < 1e-6, "{} vs {}", exact.fidelity, oracle);
        prop_assert!(majorizes(&exact.final_state, &atoms(&p)));
        prop_assert_eq!(exact.feasible_exact, majorizes(&atoms(&q), &atoms(&p)));
    }

    #[test]
    fn sharpening_agrees_on_powers(p in simplex(3), q in simplex(2), n in 1usize..4, m in 1usize..6) {
        let a = AtomDist::iid_power(&ProbVec::new(p).unwrap(), n).unwrap();
        let b = AtomDist::iid_power(&ProbVec::new(q).unwrap(), m).unwrap();
        let reg = SolverRegistry::default();
        let exact = reg.get("lorenz-envelope").unwrap().solve_in(&a, &b, Direction::Sharpening).unwrap();
        let fw = reg.get("frank-wolfe").unwrap().solve_in(&a, &b, Direction::Sharpening).unwrap();
        prop_assert!((exact.fidelity - fw.fidelity).abs() < 1e-6, "{} vs {}", exact.fidelity, fw.fidelity);
        prop_assert!(majorizes(&exact.final_state, &a));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solvers_agree_on_heat_engine_cells(
        beta in 0.6f64..4.5,
        shift in 0.05f64..0.9,
        fraction in 0.5f64..1.0,
        n in 1usize..4,
    ) {
        use majorant_core::resonance::HeatEngine;
        let engine = HeatEngine { t_hot: 10.0, gap: 1.0, work_fraction: fraction };
        let (tc, tcp) = (1.0 / beta, 1.0 / (beta * (1.0 - shift)));
        let cell = engine.cell(tc, tcp, fraction).unwrap();
        let a = AtomDist::iid_power(&cell.initial, n).unwrap();
        let b = AtomDist::iid_power(&cell.target, n).unwrap();
        let reg = SolverRegistry::default();
        let exact = reg.get("lorenz-envelope").unwrap().solve(&a, &b).unwrap();
        let fw = reg.get("frank-wolfe").unwrap().solve(&a, &b).unwrap();
        prop_assert!((exact.fidelity - fw.fidelity).abs() < 1e-6, "{} vs {}", exact.fidelity, fw.fidelity);
        prop_assert!(majorizes(&a, &exact.final_state));
    }
}
