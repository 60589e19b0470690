//! Counter-based random numbers.
//!
//! Every random draw in the crate is a pure function of a 64-bit seed and a
//! 128-bit counter, computed with Philox4x32-10. Consumers never hold a
//! sequential generator; they address the draw they need. This makes sample
//! streams independent of evaluation order and thread count.
//!
//! Counter layout used throughout: `[block, lo, hi, domain]`, where `domain`
//! is one of the `DOMAIN_*` tags below, `lo`/`hi` split a 64-bit position
//! (step, trial, pair, ...) and `block` selects a group of four 32-bit outputs.

const MUL0: u32 = 0xD251_1F53;
const MUL1: u32 = 0xCD9E_8D57;
const WEYL0: u32 = 0x9E37_79B9;
const WEYL1: u32 = 0xBB67_AE85;

/// Hidden-layer update draws, position = step.
pub const DOMAIN_HIDDEN: u32 = 0x0001;
/// Visible-layer update draws, position = step.
pub const DOMAIN_VISIBLE: u32 = 0x0002;
/// Initial hidden layer.
pub const DOMAIN_INIT_HIDDEN: u32 = 0x0003;
/// Initial visible layer.
pub const DOMAIN_INIT_VISIBLE: u32 = 0x0004;
/// Per-trial seed derivation, position = trial index.
pub const DOMAIN_TRIAL: u32 = 0x0010;
/// Edge draws during instance generation, position = `i << 32 | j`.
pub const DOMAIN_EDGE: u32 = 0x0020;
/// Per-instance seed derivation inside a corpus.
pub const DOMAIN_INSTANCE: u32 = 0x0021;
/// Simulated annealing: initial spins (position = restart).
pub const DOMAIN_SA_INIT: u32 = 0x0030;
/// Simulated annealing: acceptance draws (position = restart << 32 | sweep).
pub const DOMAIN_SA_SWEEP: u32 = 0x0031;
/// Bootstrap resampling indices (position = resample).
pub const DOMAIN_BOOTSTRAP: u32 = 0x0040;
/// Per-instance base seeds of a benchmark run.
pub const DOMAIN_BENCH: u32 = 0x0050;

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

/// The Philox4x32 bijection with 10 rounds.
#[inline]
pub fn philox4x32(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(WEYL0);
            k[1] = k[1].wrapping_add(WEYL1);
        }
        let (hi0, lo0) = mulhilo(MUL0, c[0]);
        let (hi1, lo1) = mulhilo(MUL1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// A keyed view over the Philox output space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Stream {
    key: [u32; 2],
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            key: [seed as u32, (seed >> 32) as u32],
        }
    }

    #[inline]
    pub fn block(&self, domain: u32, position: u64, block: u32) -> [u32; 4] {
        philox4x32(
            [block, position as u32, (position >> 32) as u32, domain],
            self.key,
        )
    }

    /// The `index`-th 32-bit word at `(domain, position)`.
    #[inline]
    pub fn word(&self, domain: u32, position: u64, index: u32) -> u32 {
        self.block(domain, position, index >> 2)[(index & 3) as usize]
    }

    /// Two words joined into a 64-bit value.
    pub fn word64(&self, domain: u32, position: u64) -> u64 {
        let b = self.block(domain, position, 0);
        u64::from(b[0]) | (u64::from(b[1]) << 32)
    }

    /// Uniform in the open interval (0, 1), from one 32-bit word.
    #[inline]
    pub fn uniform(&self, domain: u32, position: u64, index: u32) -> f64 {
        word_to_open_unit(self.word(domain, position, index))
    }

    /// Derive an independent seed for the child `position` in `domain`.
    pub fn child_seed(&self, domain: u32, position: u64) -> u64 {
        self.word64(domain, position)
    }
}

/// Maps a 32-bit word to the midpoint of its 2^-32 cell: `(w + 0.5) / 2^32`.
#[inline(always)]
pub fn word_to_open_unit(w: u32) -> f64 {
    (f64::from(w) + 0.5) * (1.0 / 4_294_967_296.0)
}
