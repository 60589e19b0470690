mod common;

use common::*;
use isingrbm_core::{exhaustive_ground_state, Convention, InstanceSpec, SpinState};
use proptest::prelude::*;
use proptest::strategy::ValueTree;

#[test]
fn n10_maxcut_minimizer_matches_enumeration() {
    let p = InstanceSpec::maxcut(10, 0x5eed).generate().unwrap();
    let (best, argmin) = brute_force(&p);
    for s in &argmin {
        assert_eq!(p.energy(&spins(s)).unwrap(), best);
    }
    let gt = exhaustive_ground_state(&p).unwrap();
    assert_eq!(gt.best_energy, best);
    assert!(argmin.contains(&gt.witness.values().to_vec()));
}

#[test]
fn corpus_instance_zero_max_cut_matches_enumeration() {
    let spec = InstanceSpec::in_corpus(isingrbm_core::ProblemKind::MaxCut, 10, 0, 2024, 0.5);
    let p = spec.generate().unwrap();
    let gt = exhaustive_ground_state(&p).unwrap();
    assert_eq!(gt.best_cut, Some(brute_max_cut(&p)));
    assert_eq!(p.cut_value(&gt.witness).unwrap(), brute_max_cut(&p));
}

#[test]
fn binary_transform_shifts_energy_by_recorded_constant() {
    let strategy = problem(6, true);
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for _ in 0..20 {
        let p = strategy.new_tree(&mut runner).unwrap().current();
        let q = p.to_binary_convention().unwrap();
        let n = p.n();
        let shifts: Vec<f64> = (0..1u64 << n)
            .map(|idx| {
                let s = bipolar_of(n, idx);
                let v: Vec<i8> = s.iter().map(|&x| (x + 1) / 2).collect();
                energy_ref(&p, &s) - energy_ref(&q, &v)
            })
            .collect();
        for d in &shifts {
            assert!((d - shifts[0]).abs() < 1e-9);
        }
        assert!((shifts[0] - q.offset()).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn energy_is_flip_symmetric_without_fields(p in problem(9, false), idx in any::<u64>()) {
        let s = spins(&bipolar_of(p.n(), idx));
        prop_assert_eq!(p.energy(&s).unwrap(), p.energy(&s.flipped()).unwrap());
    }

    #[test]
    fn energy_matches_reference(p in problem(9, true), idx in any::<u64>()) {
        let s = bipolar_of(p.n(), idx);
        prop_assert!((p.energy(&spins(&s)).unwrap() - energy_ref(&p, &s)).abs() < 1e-9);
    }

    #[test]
    fn cut_and_pairwise_energy_add_to_edge_count(p in graph(12), idx in any::<u64>()) {
        let s = spins(&bipolar_of(p.n(), idx));
        let cut = p.cut_value(&s).unwrap() as f64;
        prop_assert_eq!(2.0 * cut + p.pairwise_energy(&s).unwrap(), p.edge_count() as f64);
    }

    #[test]
    fn binary_transform_preserves_argmin(p in problem(10, true)) {
        let q = p.to_binary_convention().unwrap();
        let (_, argmin) = brute_force(&p);
        let n = p.n();
        let binary: Vec<f64> = (0..1u64 << n)
            .map(|idx| q.energy(&SpinState::from_index(Convention::Binary, n, idx)).unwrap())
            .collect();
        let min = binary.iter().cloned().fold(f64::INFINITY, f64::min);
        for s in &argmin {
            let v = spins(s).to_convention(Convention::Binary);
            prop_assert!((q.energy(&v).unwrap() - min).abs() < 1e-9);
        }
    }
}
