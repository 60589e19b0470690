mod common;

use common::*;
use isingrbm_core::{
    embed, quantize, Convention, CouplingSign, EmbedOptions, FixedPointGrid, InstanceSpec, IsingProblem, PairScaling,
    RbmModel,
};
use proptest::prelude::*;

fn pair() -> IsingProblem {
    IsingProblem::from_edges(2, Convention::Bipolar, &[(0, 1, 1.0)], &[]).unwrap()
}

fn diagonal_energy(m: &RbmModel, s: &[i8]) -> f64 {
    let bits: Vec<u8> = s.iter().map(|&x| u8::from(x > 0)).collect();
    rbm_energy_ref(m, &bits, &bits)
}

fn joint_argmin(m: &RbmModel) -> (f64, Vec<(Vec<u8>, Vec<u8>)>) {
    let n = m.n_vis();
    let mut best = f64::INFINITY;
    let mut at = Vec::new();
    for vi in 0..1u64 << n {
        for hi in 0..1u64 << n {
            let (v, h) = (bits_of(n, vi), bits_of(n, hi));
            let e = rbm_energy_ref(m, &v, &h);
            if e < best - 1e-9 {
                best = e;
                at.clear();
            }
            if (e - best).abs() <= 1e-9 {
                at.push((v, h));
            }
        }
    }
    (best, at)
}

#[test]
fn pair_joint_mode_is_the_two_cut_states() {
    let m = embed(&pair(), 2.0, 1.0, &EmbedOptions::default()).unwrap();
    let (best, at) = joint_argmin(&m);
    assert_eq!(best, -4.0);
    let mut states: Vec<_> = at.into_iter().collect();
    states.sort();
    assert_eq!(states, vec![(vec![0, 1], vec![0, 1]), (vec![1, 0], vec![1, 0])]);
}

#[test]
fn opposing_pair_joint_mode_splits_the_layers() {
    let opts = EmbedOptions {
        sign: CouplingSign::Opposing,
        ..EmbedOptions::default()
    };
    let m = embed(&pair(), 2.0, 1.0, &opts).unwrap();
    assert_eq!(rbm_energy_ref(&m, &[1, 0], &[1, 0]), -4.0);
    let (best, at) = joint_argmin(&m);
    assert!(best < -4.0);
    assert!(at.iter().all(|(v, h)| v != h));
}

#[test]
fn stored_energy_matches_reference_on_four_spins() {
    let p = InstanceSpec::sk(4, 9).generate().unwrap();
    let m = embed(&p, 3.0, 0.25, &EmbedOptions::default()).unwrap();
    let marginal = exact_visible_marginal(&m);
    for vi in 0..16u64 {
        let v = bits_of(4, vi);
        for hi in 0..16u64 {
            let h = bits_of(4, hi);
            assert!((m.energy_bits(&v, &h).unwrap() - rbm_energy_ref(&m, &v, &h)).abs() < 1e-12);
        }
        for wi in 0..16u64 {
            let w = bits_of(4, wi);
            let by_energy = m.log_marginal(&v) > m.log_marginal(&w);
            let by_probability = marginal[vi as usize] > marginal[wi as usize];
            if (m.log_marginal(&v) - m.log_marginal(&w)).abs() > 1e-9 {
                assert_eq!(by_energy, by_probability);
            }
        }
    }
}

#[test]
fn large_maxcut_embedding_lies_on_default_grid() {
    let p = InstanceSpec::maxcut(150, 3).generate().unwrap();
    let m = embed(&p, 12.0, 0.25, &EmbedOptions::default()).unwrap();
    let grid = FixedPointGrid::default();
    for x in m.weights().iter().chain(m.vis_bias()).chain(m.hid_bias()) {
        assert!(grid.contains(*x), "{x} is off the grid");
    }
    let q = quantize(&m, grid).unwrap();
    assert_eq!(q.weights(), m.weights());
    assert_eq!(q.vis_bias(), m.vis_bias());
    assert_eq!(q.hid_bias(), m.hid_bias());
}

#[test]
fn grid_ties_round_to_even() {
    let g = FixedPointGrid::new(9, 3, true).unwrap();
    assert_eq!(g.round(0.30), Some(0.25));
    assert_eq!(g.round(0.3125), Some(0.25));
    assert_eq!(g.round(0.4375), Some(0.5));
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn diagonal_states_preserve_ising_order(p in problem(8, false), c in 0.0f64..20.0, beta in 0.05f64..2.0) {
        let m = embed(&p, c, beta, &EmbedOptions::default()).unwrap();
        let n = p.n();
        for a in 0..1u64 << n {
            let b = (a * 2654435761) % (1 << n);
            let (s, t) = (bipolar_of(n, a), bipolar_of(n, b));
            let (es, et) = (energy_ref(&p, &s), energy_ref(&p, &t));
            let (rs, rt) = (diagonal_energy(&m, &s), diagonal_energy(&m, &t));
            if es < et {
                prop_assert!(rs < rt);
            } else if es > et {
                prop_assert!(rs > rt);
            }
        }
    }

    #[test]
    fn exact_affine_tracks_energy_with_fields(p in problem(7, true), c in 0.0f64..10.0, beta in 0.05f64..2.0) {
        let opts = EmbedOptions { pairs: PairScaling::ExactAffine, ..EmbedOptions::default() };
        let m = embed(&p, c, beta, &opts).unwrap();
        let n = p.n();
        let shift = |idx: u64| {
            let s = bipolar_of(n, idx);
            diagonal_energy(&m, &s) - beta * energy_ref(&p, &s)
        };
        let base = shift(0);
        for idx in 1..1u64 << n {
            prop_assert!((shift(idx) - base).abs() < 1e-9);
        }
    }

    #[test]
    fn flipping_a_hidden_copy_pays_the_coupling(p in problem(6, false), c in 0.0f64..16.0, beta in 0.05f64..1.0, idx in any::<u64>(), k in 0usize..6) {
        let n = p.n();
        let k = k % n;
        let with = embed(&p, c, beta, &EmbedOptions::default()).unwrap();
        let without = embed(&p, 0.0, beta, &EmbedOptions::default()).unwrap();
        let v = bits_of(n, idx);
        let mut h = v.clone();
        h[k] ^= 1;
        let delta = |m: &RbmModel| rbm_energy_ref(m, &v, &h) - rbm_energy_ref(m, &v, &v);
        prop_assert!((delta(&with) - delta(&without) - 2.0 * beta * c).abs() < 1e-9);
    }

    #[test]
    fn strong_coupling_puts_the_joint_minimum_on_the_diagonal(p in graph(6), extra in 0.0f64..4.0) {
        let c = p.max_degree().max(1) as f64 + extra;
        let m = embed(&p, c, 0.25, &EmbedOptions::default()).unwrap();
        let (best, _) = joint_argmin(&m);
        let n = p.n();
        let diag = (0..1u64 << n).map(|i| diagonal_energy(&m, &bipolar_of(n, i))).fold(f64::INFINITY, f64::min);
        prop_assert!((best - diag).abs() < 1e-9);
    }

    #[test]
    fn beta_is_a_linear_scale(p in problem(8, true), c in 0.0f64..16.0, beta in 0.01f64..4.0) {
        let a = embed(&p, c, beta, &EmbedOptions::default()).unwrap();
        let b = embed(&p, c, 1.0, &EmbedOptions::default()).unwrap().scaled(beta);
        prop_assert_eq!(a.weights(), b.weights());
        prop_assert_eq!(a.vis_bias(), b.vis_bias());
        prop_assert_eq!(a.hid_bias(), b.hid_bias());
    }

    #[test]
    fn quantization_is_idempotent(p in problem(8, true), c in 0.0f64..16.0, beta in 0.01f64..1.0, frac in 0u32..5) {
        let g = FixedPointGrid::new(9, frac, true).unwrap();
        let m = embed(&p, c, beta, &EmbedOptions::default()).unwrap();
        let once = quantize(&m, g).unwrap();
        let twice = quantize(&once, g).unwrap();
        prop_assert_eq!(&once, &twice);
        for x in once.weights().iter().chain(once.vis_bias()).chain(once.hid_bias()) {
            prop_assert!(g.contains(*x));
        }
    }
}
