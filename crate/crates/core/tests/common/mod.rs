//! Reference computations written directly from the definitions, without
//! going through the library's own evaluation paths.

#![allow(dead_code)]

use isingrbm_core::{Convention, IsingProblem, RbmModel, SpinState};
use proptest::prelude::*;

/// `0.5 * sum_ij J_ij s_i s_j + sum_i a_i s_i` over plain slices; works for
/// either alphabet.
pub fn energy_ref(p: &IsingProblem, s: &[i8]) -> f64 {
    let n = p.n();
    let mut e = 0.0;
    for i in 0..n {
        for j in 0..n {
            e += 0.5 * p.coupling(i, j) * f64::from(s[i]) * f64::from(s[j]);
        }
        e += p.fields()[i] * f64::from(s[i]);
    }
    e
}

pub fn bipolar_of(n: usize, index: u64) -> Vec<i8> {
    (0..n).map(|i| if index >> i & 1 == 1 { 1 } else { -1 }).collect()
}

pub fn bits_of(n: usize, index: u64) -> Vec<u8> {
    (0..n).map(|i| (index >> i & 1) as u8).collect()
}

/// Minimum energy over all `2^n` bipolar states and every state attaining it.
pub fn brute_force(p: &IsingProblem) -> (f64, Vec<Vec<i8>>) {
    let n = p.n();
    let mut best = f64::INFINITY;
    let mut argmin = Vec::new();
    for idx in 0..1u64 << n {
        let s = bipolar_of(n, idx);
        let e = energy_ref(p, &s);
        if e < best - 1e-9 {
            best = e;
            argmin.clear();
        }
        if (e - best).abs() <= 1e-9 {
            argmin.push(s);
        }
    }
    (best, argmin)
}

/// Maximum cut over all bipartitions of a {0,1}-coupling instance.
pub fn brute_max_cut(p: &IsingProblem) -> u64 {
    let n = p.n();
    (0..1u64 << n)
        .map(|idx| {
            let mut cut = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if p.coupling(i, j) == 1.0 && (idx >> i & 1) != (idx >> j & 1) {
                        cut += 1;
                    }
                }
            }
            cut
        })
        .max()
        .unwrap()
}

/// `-(v^T W h + b^T h + c^T v)` from the stored parameters.
pub fn rbm_energy_ref(m: &RbmModel, v: &[u8], h: &[u8]) -> f64 {
    let mut e = 0.0;
    for i in 0..m.n_vis() {
        for j in 0..m.n_hid() {
            e += m.weight(i, j) * f64::from(v[i]) * f64::from(h[j]);
        }
        e += m.vis_bias()[i] * f64::from(v[i]);
    }
    for j in 0..m.n_hid() {
        e += m.hid_bias()[j] * f64::from(h[j]);
    }
    -e
}

/// Exact visible marginal `p(v)` by summing `exp(-E)` over every hidden state.
/// Indexed by the little-endian integer of `v`.
pub fn exact_visible_marginal(m: &RbmModel) -> Vec<f64> {
    let (nv, nh) = (m.n_vis(), m.n_hid());
    let mut weights: Vec<f64> = (0..1u64 << nv)
        .map(|vi| {
            let v = bits_of(nv, vi);
            (0..1u64 << nh).map(|hi| (-rbm_energy_ref(m, &v, &bits_of(nh, hi))).exp()).sum()
        })
        .collect();
    let z: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= z;
    }
    weights
}

pub fn index_of(bits: &[u8]) -> usize {
    bits.iter().enumerate().map(|(i, &b)| usize::from(b) << i).sum()
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Random bipolar problem with small integer couplings and optional fields.
pub fn problem(max_n: usize, with_fields: bool) -> impl Strategy<Value = IsingProblem> {
    (2..=max_n).prop_flat_map(move |n| {
        let pairs = n * (n - 1) / 2;
        let fields = if with_fields { -2i8..=2 } else { 0i8..=0 };
        (
            proptest::collection::vec(-2i8..=2, pairs),
            proptest::collection::vec(fields, n),
        )
            .prop_map(move |(w, a)| {
                let mut edges = Vec::new();
                let mut k = 0;
                for i in 0..n {
                    for j in i + 1..n {
                        edges.push((i, j, f64::from(w[k])));
                        k += 1;
                    }
                }
                let fields: Vec<(usize, f64)> = a.iter().enumerate().map(|(i, &x)| (i, f64::from(x))).collect();
                IsingProblem::from_edges(n, Convention::Bipolar, &edges, &fields).unwrap()
            })
    })
}

/// Random unweighted graph as a MAX-CUT problem.
pub fn graph(max_n: usize) -> impl Strategy<Value = IsingProblem> {
    (2..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |mask| {
            let mut edges = Vec::new();
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if mask[k] {
                        edges.push((i, j, 1.0));
                    }
                    k += 1;
                }
            }
            IsingProblem::from_edges(n, Convention::Bipolar, &edges, &[]).unwrap()
        })
    })
}

pub fn spins(values: &[i8]) -> SpinState {
    SpinState::bipolar(values.to_vec()).unwrap()
}

/// Default proptest settings without on-disk regression files.
pub fn config() -> ProptestConfig {
    ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}
