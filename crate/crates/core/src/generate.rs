//! Seeded MAX-CUT and SK instance generation.
//!
//! Edge `(i, j)` with `i < j` draws word 0 of the Philox block at
//! `(DOMAIN_EDGE, i << 32 | j)` under the instance seed, so every pair has its
//! own substream and an instance does not depend on generation order.

use alloc::format;
use alloc::string::String;
use alloc::vec;

use crate::error::{invalid, Result};
use crate::ising::{Convention, IsingProblem};
use crate::rng::{word_to_open_unit, Stream, DOMAIN_EDGE, DOMAIN_INSTANCE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ProblemKind {
    MaxCut,
    Sk,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::MaxCut => "maxcut",
            ProblemKind::Sk => "sk",
        }
    }

    fn tag(self) -> u64 {
        match self {
            ProblemKind::MaxCut => 1,
            ProblemKind::Sk => 2,
        }
    }
}

impl core::str::FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "maxcut" | "max-cut" => Ok(ProblemKind::MaxCut),
            "sk" => Ok(ProblemKind::Sk),
            other => Err(format!("unknown problem kind `{other}` (expected maxcut or sk)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InstanceSpec {
    pub kind: ProblemKind,
    pub n: usize,
    pub seed: u64,
    /// Edge probability; only MAX-CUT reads it.
    pub density: f64,
}

impl InstanceSpec {
    pub fn maxcut(n: usize, seed: u64) -> Self {
        Self {
            kind: ProblemKind::MaxCut,
            n,
            seed,
            density: 0.5,
        }
    }

    pub fn sk(n: usize, seed: u64) -> Self {
        Self {
            kind: ProblemKind::Sk,
            n,
            seed,
            density: 0.5,
        }
    }

    /// Spec of the `index`-th instance of size `n` in a corpus rooted at `corpus_seed`.
    pub fn in_corpus(kind: ProblemKind, n: usize, index: u32, corpus_seed: u64, density: f64) -> Self {
        let position = (kind.tag() << 56) | ((n as u64) << 24) | u64::from(index);
        Self {
            kind,
            n,
            seed: Stream::new(corpus_seed).child_seed(DOMAIN_INSTANCE, position),
            density,
        }
    }

    pub fn generate(&self) -> Result<IsingProblem> {
        match self.kind {
            ProblemKind::MaxCut => generate_maxcut(self),
            ProblemKind::Sk => generate_sk(self),
        }
    }
}

fn pair_uniform(stream: &Stream, i: usize, j: usize) -> f64 {
    word_to_open_unit(stream.word(DOMAIN_EDGE, ((i as u64) << 32) | j as u64, 0))
}

/// Unit-weight random graph: each pair is an edge with probability `density`.
pub fn generate_maxcut(spec: &InstanceSpec) -> Result<IsingProblem> {
    if spec.kind != ProblemKind::MaxCut {
        return Err(invalid("kind", "generate_maxcut needs a MAX-CUT spec"));
    }
    if spec.n < 2 {
        return Err(invalid("n", format!("need at least 2 nodes, got {}", spec.n)));
    }
    if !(0.0..=1.0).contains(&spec.density) {
        return Err(invalid("density", format!("{} not in [0, 1]", spec.density)));
    }
    let n = spec.n;
    let stream = Stream::new(spec.seed);
    let mut j = vec![0.0; n * n];
    for a in 0..n {
        for b in (a + 1)..n {
            if pair_uniform(&stream, a, b) < spec.density {
                j[a * n + b] = 1.0;
                j[b * n + a] = 1.0;
            }
        }
    }
    IsingProblem::new(Convention::Bipolar, j, vec![0.0; n])
}

/// Fully connected +/-1 couplings with equal probability.
pub fn generate_sk(spec: &InstanceSpec) -> Result<IsingProblem> {
    if spec.kind != ProblemKind::Sk {
        return Err(invalid("kind", "generate_sk needs an SK spec"));
    }
    if spec.n < 2 {
        return Err(invalid("n", format!("need at least 2 nodes, got {}", spec.n)));
    }
    let n = spec.n;
    let stream = Stream::new(spec.seed);
    let mut j = vec![0.0; n * n];
    for a in 0..n {
        for b in (a + 1)..n {
            let w = if pair_uniform(&stream, a, b) < 0.5 { 1.0 } else { -1.0 };
            j[a * n + b] = w;
            j[b * n + a] = w;
        }
    }
    IsingProblem::new(Convention::Bipolar, j, vec![0.0; n])
}
