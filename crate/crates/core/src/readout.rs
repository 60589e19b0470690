//! Turning a sample stream into an answer.
//!
//! The hitting-time readout keeps the visible state with the highest
//! approximate unnormalized log-probability
//!
//! ```text
//! score(v) = sum_i c_i v_i + sum_j max(0, b_j + sum_i W_ij v_i)
//! ```
//!
//! which is `log p(v) + log Z` with `log(1 + e^x)` replaced by `max(0, x)`.
//! The mixing-time readout counts states and reports the most frequent one.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::embed::RbmModel;
use crate::error::{Error, Result};
use crate::sampler::{Sample, SampleSink};

/// Bit-packed 0/1 vector. Bit `i` is stored most-significant-first in word
/// `i / 64`, so the derived ordering is lexicographic with bit 0 leading.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut b = Self::default();
        b.assign(bits);
        b
    }

    /// Overwrites `self` with `bits`, reusing the allocation.
    pub fn assign(&mut self, bits: &[u8]) {
        self.len = bits.len();
        self.words.clear();
        self.words.resize(bits.len().div_ceil(64), 0);
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                self.words[i / 64] |= 1 << (63 - i % 64);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (63 - i % 64)) & 1 == 1
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| u8::from(self.get(i))).collect()
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// All zeros or all ones: the zero-cut states of a MAX-CUT embedding.
    pub fn is_constant(&self) -> bool {
        let ones = self.count_ones();
        ones == 0 || ones == self.len
    }

    /// Hex digits, four bits per digit with bit `4k` as the digit's high bit,
    /// zero-padded at the end; `ceil(len / 4)` digits.
    pub fn to_hex(&self) -> String {
        const DIGITS: &[u8; 16] = b"0123456789abcdef";
        let digits = self.len.div_ceil(4);
        let mut s = String::with_capacity(digits);
        for d in 0..digits {
            let word = self.words[d / 16];
            let nibble = (word >> (60 - 4 * (d % 16))) & 0xf;
            s.push(DIGITS[nibble as usize] as char);
        }
        s
    }

    pub fn from_hex(hex: &str, len: usize) -> Option<Self> {
        if hex.len() != len.div_ceil(4) {
            return None;
        }
        let mut bits = vec![0u8; hex.len() * 4];
        for (d, ch) in hex.chars().enumerate() {
            let nibble = ch.to_digit(16)?;
            for k in 0..4 {
                bits[4 * d + k] = ((nibble >> (3 - k)) & 1) as u8;
            }
        }
        if bits[len..].iter().any(|&b| b != 0) {
            return None;
        }
        bits.truncate(len);
        Some(Self::from_bits(&bits))
    }

    /// `'0'`/`'1'` characters, bit 0 first.
    pub fn to_bitstring(&self) -> String {
        (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }
}

/// Score from precomputed hidden inputs. Shared by the fused and unfused paths
/// so both produce bit-identical values.
#[inline]
pub fn score_from_hidden_input(vis_bias: &[f64], v: &[u8], hidden_input: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&c, &bit) in vis_bias.iter().zip(v) {
        if bit != 0 {
            s += c;
        }
    }
    for &x in hidden_input {
        if x > 0.0 {
            s += x;
        }
    }
    s
}

/// Approximate unnormalized `log p(v)`, computed from scratch.
pub fn approx_log_prob(m: &RbmModel, v: &[u8]) -> f64 {
    let hin = m.hidden_input(v);
    score_from_hidden_input(m.vis_bias(), v, &hin)
}

/// Running argmax of the score over a sample stream.
#[derive(Clone, Debug, PartialEq)]
pub struct HittingState {
    pub best_v: Option<BitString>,
    pub best_score: f64,
    pub samples_seen: u64,
    pub exclude_zero_cut: bool,
    /// Sample index at which `best_v` was recorded.
    pub first_hit_step: Option<u64>,
}

impl HittingState {
    pub fn new(exclude_zero_cut: bool) -> Self {
        Self {
            best_v: None,
            best_score: f64::NEG_INFINITY,
            samples_seen: 0,
            exclude_zero_cut,
            first_hit_step: None,
        }
    }

    /// Scores `v` from scratch and offers it at the next sample index.
    pub fn observe(&mut self, m: &RbmModel, v: &[u8]) {
        let score = approx_log_prob(m, v);
        let step = self.samples_seen + 1;
        self.offer(v, score, step);
    }

    /// Offers a scored state seen at sample index `step`.
    #[inline]
    pub fn offer(&mut self, v: &[u8], score: f64, step: u64) {
        self.samples_seen += 1;
        if score <= self.best_score {
            return;
        }
        if self.exclude_zero_cut && is_constant(v) {
            return;
        }
        match &mut self.best_v {
            Some(b) => b.assign(v),
            None => self.best_v = Some(BitString::from_bits(v)),
        }
        self.best_score = score;
        self.first_hit_step = Some(step);
    }

    /// Combines two readouts over disjoint parts of a stream. Higher score
    /// wins, then the earlier hit, then the smaller bitstring.
    pub fn merge(&self, other: &HittingState) -> HittingState {
        let pick_self = match (&self.best_v, &other.best_v) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(a), Some(b)) => {
                if self.best_score != other.best_score {
                    self.best_score > other.best_score
                } else if self.first_hit_step != other.first_hit_step {
                    self.first_hit_step < other.first_hit_step
                } else {
                    a <= b
                }
            }
        };
        let winner = if pick_self { self } else { other };
        HittingState {
            best_v: winner.best_v.clone(),
            best_score: winner.best_score,
            samples_seen: self.samples_seen + other.samples_seen,
            exclude_zero_cut: self.exclude_zero_cut,
            first_hit_step: winner.first_hit_step,
        }
    }
}

#[inline]
fn is_constant(v: &[u8]) -> bool {
    match v.first() {
        None => true,
        Some(&first) => v.iter().all(|&b| b == first),
    }
}

/// Visit counts of visible states.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModeState {
    pub counts: BTreeMap<BitString, u64>,
    pub samples_seen: u64,
    scratch: BitString,
}

impl ModeState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, v: &[u8]) {
        self.samples_seen += 1;
        self.scratch.assign(v);
        if let Some(c) = self.counts.get_mut(&self.scratch) {
            *c += 1;
        } else {
            self.counts.insert(self.scratch.clone(), 1);
        }
    }

    /// Most frequent state; ties go to the lexicographically smallest.
    pub fn mode_estimate(&self) -> Result<BitString> {
        let mut best: Option<(&BitString, u64)> = None;
        for (state, &count) in &self.counts {
            if best.map_or(true, |(_, c)| count > c) {
                best = Some((state, count));
            }
        }
        best.map(|(s, _)| s.clone()).ok_or(Error::Empty)
    }

    pub fn count_of(&self, v: &[u8]) -> u64 {
        self.counts.get(&BitString::from_bits(v)).copied().unwrap_or(0)
    }
}

/// Hitting readout attached to a chain.
pub struct HittingSink<'m> {
    model: &'m RbmModel,
    pub state: HittingState,
    /// Reuse the sampler's hidden inputs instead of recomputing them.
    pub fused: bool,
}

impl<'m> HittingSink<'m> {
    pub fn new(model: &'m RbmModel, exclude_zero_cut: bool) -> Self {
        Self {
            model,
            state: HittingState::new(exclude_zero_cut),
            fused: true,
        }
    }

    pub fn unfused(model: &'m RbmModel, exclude_zero_cut: bool) -> Self {
        Self {
            fused: false,
            ..Self::new(model, exclude_zero_cut)
        }
    }
}

impl SampleSink for HittingSink<'_> {
    #[inline]
    fn accept(&mut self, sample: &Sample<'_>) {
        let score = if self.fused {
            score_from_hidden_input(self.model.vis_bias(), sample.visible, sample.hidden_input)
        } else {
            approx_log_prob(self.model, sample.visible)
        };
        self.state.offer(sample.visible, score, sample.step);
    }
}

/// Mixing-time readout attached to a chain.
#[derive(Default)]
pub struct ModeSink {
    pub state: ModeState,
}

impl SampleSink for ModeSink {
    fn accept(&mut self, sample: &Sample<'_>) {
        self.state.observe(sample.visible);
    }
}
