//! Block Gibbs sampling on a binary RBM.
//!
//! One sample is a full sweep: every hidden unit is redrawn from
//! `sigma(b_j + sum_i W_ij v_i)`, then every visible unit from
//! `sigma(c_i + sum_j W_ij h_j)`. Unit `u` of layer `L` at step `t` decides
//! with word `u` of the Philox stream at `(L, t)`, so the chain is a pure
//! function of the model and the seed, whatever order units are visited in.

use alloc::vec;
use alloc::vec::Vec;

use crate::embed::RbmModel;
use crate::error::{invalid, Error, Result};
use crate::rng::{
    word_to_open_unit, Stream, DOMAIN_HIDDEN, DOMAIN_INIT_HIDDEN, DOMAIN_INIT_VISIBLE, DOMAIN_VISIBLE,
};

/// How activation probabilities are evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SigmoidMode {
    /// `1 / (1 + e^-x)`.
    #[default]
    Exact,
    /// Piecewise-constant table with `2^log2_entries` cells over `[-clip, clip]`,
    /// each holding the sigmoid at its midpoint; 0 below and 1 above the range.
    Table { log2_entries: u32, clip: f64 },
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// `p(unit = 1)` for pre-activation `x` (inverse temperature already folded in).
pub fn activation_prob(mode: &SigmoidMode, x: f64) -> f64 {
    match *mode {
        SigmoidMode::Exact => sigmoid(x),
        SigmoidMode::Table { log2_entries, clip } => table_lookup(log2_entries, clip, x),
    }
}

fn table_lookup(log2_entries: u32, clip: f64, x: f64) -> f64 {
    if x < -clip {
        return 0.0;
    }
    if x >= clip {
        return 1.0;
    }
    let cells = (1u64 << log2_entries) as f64;
    let width = 2.0 * clip / cells;
    let idx = libm::floor((x + clip) / width).min(cells - 1.0);
    sigmoid(-clip + (idx + 0.5) * width)
}

const LUT_RANGE: f64 = 16.0;
const LUT_PER_UNIT: f64 = 128.0;
// Linear interpolation error of the sigmoid at step 1/128 is below 7.3e-7.
const LUT_MARGIN: f64 = 4e-6;
// sigmoid(-16) < 1.2e-7.
const TAIL: f64 = 2e-7;

/// Decides `u < p(x)` for a uniform `u`, bit-identical to evaluating `p` directly.
#[derive(Clone, Debug)]
pub struct SigmoidEval {
    mode: SigmoidMode,
    table: Vec<f64>,
}

impl SigmoidEval {
    pub fn new(mode: SigmoidMode) -> Result<Self> {
        let table = match mode {
            SigmoidMode::Exact => {
                let points = (2.0 * LUT_RANGE * LUT_PER_UNIT) as usize + 1;
                (0..points)
                    .map(|k| sigmoid(-LUT_RANGE + k as f64 / LUT_PER_UNIT))
                    .collect()
            }
            SigmoidMode::Table { log2_entries, clip } => {
                if log2_entries == 0 || log2_entries > 24 {
                    return Err(invalid("log2_entries", "must be in 1..=24"));
                }
                if !(clip > 0.0 && clip.is_finite()) {
                    return Err(invalid("clip", "must be positive"));
                }
                let cells = 1usize << log2_entries;
                let width = 2.0 * clip / cells as f64;
                (0..cells)
                    .map(|k| sigmoid(-clip + (k as f64 + 0.5) * width))
                    .collect()
            }
        };
        Ok(Self { mode, table })
    }

    pub fn mode(&self) -> SigmoidMode {
        self.mode
    }

    pub fn prob(&self, x: f64) -> f64 {
        activation_prob(&self.mode, x)
    }

    /// `word_to_open_unit(word) < prob(x)`.
    #[inline]
    pub fn decide(&self, x: f64, word: u32) -> bool {
        let u = word_to_open_unit(word);
        match self.mode {
            SigmoidMode::Exact => {
                if x >= LUT_RANGE {
                    return u < 1.0 - TAIL || u < sigmoid(x);
                }
                if x <= -LUT_RANGE {
                    return u <= TAIL && u < sigmoid(x);
                }
                let pos = (x + LUT_RANGE) * LUT_PER_UNIT;
                let k = pos as usize;
                let frac = pos - k as f64;
                let lo = self.table[k];
                let hi = self.table[(k + 1).min(self.table.len() - 1)];
                let approx = lo + frac * (hi - lo);
                if u < approx - LUT_MARGIN {
                    true
                } else if u > approx + LUT_MARGIN {
                    false
                } else {
                    u < sigmoid(x)
                }
            }
            SigmoidMode::Table { clip, .. } => {
                if x < -clip {
                    return false;
                }
                if x >= clip {
                    return true;
                }
                let cells = self.table.len();
                let width = 2.0 * clip / cells as f64;
                let idx = (libm::floor((x + clip) / width) as usize).min(cells - 1);
                u < self.table[idx]
            }
        }
    }
}

/// Starting point of a chain.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Init {
    /// Every visible and hidden bit is a fair coin.
    #[default]
    UniformRandom,
    AllZero,
    /// Both layers start at the given 0/1 vector.
    Given(Vec<u8>),
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SamplerConfig {
    /// Number of full hidden-then-visible sweeps.
    pub n_samples: u64,
    pub seed: u64,
    pub init: Init,
    pub sigmoid: SigmoidMode,
}

impl SamplerConfig {
    pub fn new(n_samples: u64, seed: u64) -> Self {
        Self {
            n_samples,
            seed,
            init: Init::UniformRandom,
            sigmoid: SigmoidMode::Exact,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(invalid("n_samples", "must be at least 1"));
        }
        Ok(())
    }
}

/// Live layers of a chain.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainState {
    pub v: Vec<u8>,
    pub h: Vec<u8>,
    /// Samples produced so far.
    pub step: u64,
    /// Key of the chain's counter-based stream; the counter is `step`.
    pub seed: u64,
}

/// One post-step visible state, with the hidden pre-activations it induces.
#[derive(Clone, Copy, Debug)]
pub struct Sample<'a> {
    /// 1-based index of this sample in the chain.
    pub step: u64,
    pub visible: &'a [u8],
    /// `b_j + sum_i W_ij v_i` for this `visible`, accumulated the same way as
    /// [`RbmModel::hidden_input`].
    pub hidden_input: &'a [f64],
}

/// Receives samples in chain order.
pub trait SampleSink {
    fn accept(&mut self, sample: &Sample<'_>);
}

impl<F: FnMut(&Sample<'_>)> SampleSink for F {
    fn accept(&mut self, sample: &Sample<'_>) {
        self(sample)
    }
}

/// Keeps every visible state.
#[derive(Clone, Debug, Default)]
pub struct CollectSink(pub Vec<Vec<u8>>);

impl SampleSink for CollectSink {
    fn accept(&mut self, sample: &Sample<'_>) {
        self.0.push(sample.visible.to_vec());
    }
}

/// Fans one sample stream out to several sinks.
pub struct Tee<'s>(pub Vec<&'s mut dyn SampleSink>);

impl SampleSink for Tee<'_> {
    fn accept(&mut self, sample: &Sample<'_>) {
        for s in self.0.iter_mut() {
            s.accept(sample);
        }
    }
}

/// Precomputed per-model data shared by every chain on that model.
#[derive(Clone, Debug)]
pub struct Kernel<'m> {
    model: &'m RbmModel,
    /// Row-major `n_hid x n_vis`.
    transposed: Vec<f64>,
    sigmoid: SigmoidEval,
    incremental: bool,
}

/// A chain plus its cached pre-activations.
#[derive(Clone, Debug)]
pub struct Chain {
    state: ChainState,
    stream: Stream,
    hidden_input: Vec<f64>,
    visible_input: Vec<f64>,
}

impl Chain {
    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn into_state(self) -> ChainState {
        self.state
    }

    pub fn hidden_input(&self) -> &[f64] {
        &self.hidden_input
    }
}

impl<'m> Kernel<'m> {
    pub fn new(model: &'m RbmModel, sigmoid: SigmoidMode) -> Result<Self> {
        let (nv, nh) = (model.n_vis(), model.n_hid());
        let mut transposed = vec![0.0; nv * nh];
        for i in 0..nv {
            for j in 0..nh {
                transposed[j * nv + i] = model.weight(i, j);
            }
        }
        Ok(Self {
            model,
            transposed,
            sigmoid: SigmoidEval::new(sigmoid)?,
            incremental: model.is_dyadic(),
        })
    }

    pub fn model(&self) -> &RbmModel {
        self.model
    }

    /// Whether pre-activations are updated from flipped units only. Chosen
    /// when the model is dyadic, where both strategies give identical sums.
    pub fn is_incremental(&self) -> bool {
        self.incremental
    }

    pub fn start(&self, seed: u64, init: &Init) -> Result<Chain> {
        let (nv, nh) = (self.model.n_vis(), self.model.n_hid());
        let stream = Stream::new(seed);
        let (v, h) = match init {
            Init::UniformRandom => (
                (0..nv)
                    .map(|i| (stream.word(DOMAIN_INIT_VISIBLE, 0, i as u32) >> 31) as u8)
                    .collect(),
                (0..nh)
                    .map(|j| (stream.word(DOMAIN_INIT_HIDDEN, 0, j as u32) >> 31) as u8)
                    .collect(),
            ),
            Init::AllZero => (vec![0; nv], vec![0; nh]),
            Init::Given(bits) => {
                if bits.len() != nv || nv != nh {
                    return Err(Error::Dimension {
                        what: "initial state",
                        expected: nv,
                        found: bits.len(),
                    });
                }
                let b: Vec<u8> = bits.iter().map(|&x| u8::from(x != 0)).collect();
                (b.clone(), b)
            }
        };
        Ok(self.resume(ChainState { v, h, step: 0, seed }))
    }

    /// Rebuilds caches for an existing state.
    pub fn resume(&self, state: ChainState) -> Chain {
        let hidden_input = self.model.hidden_input(&state.v);
        let visible_input = self.model.visible_input(&state.h);
        Chain {
            stream: Stream::new(state.seed),
            state,
            hidden_input,
            visible_input,
        }
    }

    /// One hidden-then-visible sweep.
    pub fn step(&self, chain: &mut Chain) {
        let nv = self.model.n_vis();
        let nh = self.model.n_hid();
        let position = chain.state.step + 1;

        // Hidden layer given v.
        let mut flipped = false;
        for block in 0..nh.div_ceil(4) {
            let words = chain.stream.block(DOMAIN_HIDDEN, position, block as u32);
            for (k, &word) in words.iter().enumerate() {
                let j = 4 * block + k;
                if j >= nh {
                    break;
                }
                let bit = u8::from(self.sigmoid.decide(chain.hidden_input[j], word));
                if bit != chain.state.h[j] {
                    chain.state.h[j] = bit;
                    flipped = true;
                    if self.incremental {
                        let row = &self.transposed[j * nv..(j + 1) * nv];
                        add_signed(&mut chain.visible_input, row, bit);
                    }
                }
            }
        }
        if flipped && !self.incremental {
            self.recompute_visible_input(chain);
        }

        // Visible layer given h.
        let mut flipped = false;
        for block in 0..nv.div_ceil(4) {
            let words = chain.stream.block(DOMAIN_VISIBLE, position, block as u32);
            for (k, &word) in words.iter().enumerate() {
                let i = 4 * block + k;
                if i >= nv {
                    break;
                }
                let bit = u8::from(self.sigmoid.decide(chain.visible_input[i], word));
                if bit != chain.state.v[i] {
                    chain.state.v[i] = bit;
                    flipped = true;
                    if self.incremental {
                        add_signed(&mut chain.hidden_input, self.model.weight_row(i), bit);
                    }
                }
            }
        }
        if flipped && !self.incremental {
            self.model
                .hidden_input_into(&chain.state.v, &mut chain.hidden_input);
        }
        chain.state.step = position;
    }

    fn recompute_visible_input(&self, chain: &mut Chain) {
        let nv = self.model.n_vis();
        chain.visible_input.copy_from_slice(self.model.vis_bias());
        for (j, &bit) in chain.state.h.iter().enumerate() {
            if bit != 0 {
                let row = &self.transposed[j * nv..(j + 1) * nv];
                for (o, &w) in chain.visible_input.iter_mut().zip(row) {
                    *o += w;
                }
            }
        }
    }

    /// Runs `cfg.n_samples` sweeps, handing each visible state to `sink`.
    pub fn run(&self, cfg: &SamplerConfig, sink: &mut dyn SampleSink) -> Result<ChainState> {
        cfg.validate()?;
        let mut chain = self.start(cfg.seed, &cfg.init)?;
        self.advance(&mut chain, cfg.n_samples, sink);
        Ok(chain.into_state())
    }

    /// `count` more sweeps on an existing chain.
    pub fn advance(&self, chain: &mut Chain, count: u64, sink: &mut dyn SampleSink) {
        for _ in 0..count {
            self.step(chain);
            sink.accept(&Sample {
                step: chain.state.step,
                visible: &chain.state.v,
                hidden_input: &chain.hidden_input,
            });
        }
    }
}

#[inline]
fn add_signed(acc: &mut [f64], row: &[f64], bit: u8) {
    if bit == 1 {
        for (a, &w) in acc.iter_mut().zip(row) {
            *a += w;
        }
    } else {
        for (a, &w) in acc.iter_mut().zip(row) {
            *a -= w;
        }
    }
}

/// One sweep from `state` with exact sigmoids.
pub fn step(model: &RbmModel, state: &ChainState) -> Result<ChainState> {
    step_with(model, state, SigmoidMode::Exact)
}

pub fn step_with(model: &RbmModel, state: &ChainState, sigmoid: SigmoidMode) -> Result<ChainState> {
    if state.v.len() != model.n_vis() || state.h.len() != model.n_hid() {
        return Err(Error::Dimension {
            what: "chain state",
            expected: model.n_vis(),
            found: state.v.len(),
        });
    }
    let kernel = Kernel::new(model, sigmoid)?;
    let mut chain = kernel.resume(state.clone());
    kernel.step(&mut chain);
    Ok(chain.into_state())
}

/// Runs a chain from `cfg.init` for `cfg.n_samples` sweeps.
pub fn run_chain(model: &RbmModel, cfg: &SamplerConfig, sink: &mut dyn SampleSink) -> Result<ChainState> {
    Kernel::new(model, cfg.sigmoid)?.run(cfg, sink)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{embed, EmbedOptions};
    use crate::ising::{Convention, IsingProblem};

    fn zero_model(n: usize) -> RbmModel {
        RbmModel::new(n, n, vec![0.0; n * n], vec![0.0; n], vec![0.0; n]).unwrap()
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(activation_prob(&SigmoidMode::Exact, 0.0), 0.5);
        assert!((activation_prob(&SigmoidMode::Exact, -0.5) - 0.37754).abs() < 1e-5);
    }

    #[test]
    fn table_error_within_bound() {
        let (k, clip) = (10u32, 8.0);
        let mode = SigmoidMode::Table { log2_entries: k, clip };
        let bound = 0.25 * (2.0 * clip / f64::from(1u32 << k)) / 2.0 + sigmoid(-clip);
        let mut worst: f64 = 0.0;
        let mut prev = 0.0;
        for s in 0..=400_000 {
            let x = -12.0 + 24.0 * f64::from(s) / 400_000.0;
            let t = activation_prob(&mode, x);
            assert!(t >= prev, "table must be monotone");
            prev = t;
            worst = worst.max((t - sigmoid(x)).abs());
        }
        assert!(worst <= bound, "worst {worst} bound {bound}");
    }

    #[test]
    fn fast_decision_matches_direct_comparison() {
        let eval = SigmoidEval::new(SigmoidMode::Exact).unwrap();
        let stream = Stream::new(42);
        for k in 0..400_000u64 {
            let r = stream.block(0x77, k, 0);
            let x = (f64::from(r[0]) / f64::from(u32::MAX) - 0.5) * 60.0;
            // Half the cases put the uniform right at the decision boundary.
            let word = if k % 2 == 0 {
                r[1]
            } else {
                let target = sigmoid(x) * 4_294_967_296.0 - 0.5;
                let base = target.clamp(0.0, 4_294_967_295.0) as u32;
                base.wrapping_add(r[1] % 5).wrapping_sub(2)
            };
            let direct = word_to_open_unit(word) < sigmoid(x);
            assert_eq!(eval.decide(x, word), direct, "x={x} word={word}");
        }
    }

    #[test]
    fn table_decision_matches_lookup() {
        let mode = SigmoidMode::Table { log2_entries: 6, clip: 4.0 };
        let eval = SigmoidEval::new(mode).unwrap();
        let stream = Stream::new(1);
        for k in 0..50_000u64 {
            let r = stream.block(0x78, k, 0);
            let x = (f64::from(r[0]) / f64::from(u32::MAX) - 0.5) * 12.0;
            assert_eq!(eval.decide(x, r[1]), word_to_open_unit(r[1]) < activation_prob(&mode, x));
        }
    }

    #[test]
    fn zero_model_units_are_fair_coins() {
        let m = zero_model(6);
        let mut ones = [0u64; 6];
        let mut sink = |s: &Sample<'_>| {
            for (o, &b) in ones.iter_mut().zip(s.visible) {
                *o += u64::from(b);
            }
        };
        run_chain(&m, &SamplerConfig::new(10_000, 3), &mut sink).unwrap();
        for o in ones {
            let mean = o as f64 / 10_000.0;
            assert!((0.47..=0.53).contains(&mean), "{mean}");
        }
    }

    #[test]
    fn ferromagnetic_pair_locks() {
        // Two-state chain v -> h -> v: with W = 10, biases -5, each transfer
        // copies with probability sigma(5), so disagreement runs at ~0.7%.
        let m = RbmModel::new(1, 1, vec![10.0], vec![-5.0], vec![-5.0]).unwrap();
        let cfg = SamplerConfig::new(10_000, 9);
        let kernel = Kernel::new(&m, SigmoidMode::Exact).unwrap();
        let mut chain = kernel.start(cfg.seed, &cfg.init).unwrap();
        let mut disagree = 0;
        for _ in 0..cfg.n_samples {
            kernel.step(&mut chain);
            disagree += u32::from(chain.state().v[0] != chain.state().h[0]);
        }
        let frac = f64::from(disagree) / 10_000.0;
        let expected = 1.0 - sigmoid(5.0);
        assert!(frac < 0.01, "{frac}");
        assert!((frac - expected).abs() < 0.004, "{frac} vs {expected}");
    }

    #[test]
    fn counting_and_determinism() {
        let p = IsingProblem::from_edges(3, Convention::Bipolar, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], &[])
            .unwrap();
        let m = embed(&p, 2.0, 0.5, &EmbedOptions::default()).unwrap();
        let mut one = CollectSink::default();
        run_chain(&m, &SamplerConfig::new(1, 1), &mut one).unwrap();
        assert_eq!(one.0.len(), 1);

        let mut a = CollectSink::default();
        let mut b = CollectSink::default();
        let mut c = CollectSink::default();
        run_chain(&m, &SamplerConfig::new(200, 17), &mut a).unwrap();
        run_chain(&m, &SamplerConfig::new(200, 17), &mut b).unwrap();
        run_chain(&m, &SamplerConfig::new(200, 18), &mut c).unwrap();
        assert_eq!(a.0, b.0);
        assert_ne!(a.0[..100], c.0[..100]);
    }

    #[test]
    fn stepping_by_hand_matches_run() {
        let p = IsingProblem::from_edges(4, Convention::Bipolar, &[(0, 1, 1.0), (1, 2, -1.0), (2, 3, 1.0)], &[])
            .unwrap();
        let m = embed(&p, 1.5, 0.3, &EmbedOptions::default()).unwrap();
        let cfg = SamplerConfig::new(50, 5);
        let mut all = CollectSink::default();
        let end = run_chain(&m, &cfg, &mut all).unwrap();
        let mut st = Kernel::new(&m, SigmoidMode::Exact)
            .unwrap()
            .start(5, &Init::UniformRandom)
            .unwrap()
            .into_state();
        for expected in &all.0 {
            st = step(&m, &st).unwrap();
            assert_eq!(&st.v, expected);
        }
        assert_eq!(st, end);
    }

    #[test]
    fn incremental_and_recomputed_inputs_agree() {
        let p = IsingProblem::from_edges(
            5,
            Convention::Bipolar,
            &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (0, 4, 1.0), (1, 3, 1.0)],
            &[],
        )
        .unwrap();
        let m = embed(&p, 3.0, 0.25, &EmbedOptions::default()).unwrap();
        let kernel = Kernel::new(&m, SigmoidMode::Exact).unwrap();
        assert!(kernel.is_incremental());
        let mut chain = kernel.start(8, &Init::UniformRandom).unwrap();
        for _ in 0..500 {
            kernel.step(&mut chain);
            assert_eq!(chain.hidden_input(), m.hidden_input(&chain.state().v).as_slice());
        }
    }

    #[test]
    fn non_dyadic_models_recompute() {
        let m = RbmModel::new(2, 2, vec![0.1, 0.2, 0.3, 0.7], vec![0.1, 0.0], vec![0.0, -0.3]).unwrap();
        assert!(!Kernel::new(&m, SigmoidMode::Exact).unwrap().is_incremental());
        let mut sink = |s: &Sample<'_>| assert_eq!(s.hidden_input, m.hidden_input(s.visible).as_slice());
        run_chain(&m, &SamplerConfig::new(300, 2), &mut sink).unwrap();
    }

    #[test]
    fn hidden_update_order_is_irrelevant() {
        // Each unit reads its own word, so visiting units in any order gives the same layer.
        let m = RbmModel::new(3, 5, (0..15).map(|k| f64::from(k % 4) - 1.5).collect(), vec![0.0; 3], vec![0.5; 5])
            .unwrap();
        let eval = SigmoidEval::new(SigmoidMode::Exact).unwrap();
        let stream = Stream::new(77);
        let v = [1u8, 0, 1];
        let hin = m.hidden_input(&v);
        let forward: Vec<u8> = (0..5)
            .map(|j| u8::from(eval.decide(hin[j], stream.word(DOMAIN_HIDDEN, 1, j as u32))))
            .collect();
        let mut backward = vec![0u8; 5];
        for j in (0..5).rev() {
            backward[j] = u8::from(eval.decide(hin[j], stream.word(DOMAIN_HIDDEN, 1, j as u32)));
        }
        assert_eq!(forward, backward);
    }

    #[test]
    fn rejects_zero_samples_and_bad_init() {
        let m = zero_model(2);
        let mut sink = CollectSink::default();
        assert!(run_chain(&m, &SamplerConfig::new(0, 1), &mut sink).is_err());
        let mut cfg = SamplerConfig::new(1, 1);
        cfg.init = Init::Given(vec![1]);
        assert!(run_chain(&m, &cfg, &mut sink).is_err());
        cfg.init = Init::AllZero;
        assert!(run_chain(&m, &cfg, &mut sink).is_ok());
    }
}
