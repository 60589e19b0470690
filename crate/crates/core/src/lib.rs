//! Ising problems, their restricted Boltzmann machine embedding, a seeded Gibbs
//! sampler with streaming readouts, and the benchmark statistics around them.
//!
//! The crate is `no_std` with `alloc`; file formats, parallel runners and the
//! command line live in the `isingrbm` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bench;
pub mod embed;
pub mod error;
pub mod generate;
pub mod ising;
pub mod oracle;
pub mod readout;
pub mod rng;
pub mod sampler;
pub mod stats;

pub use embed::{embed, quantize, CouplingSign, EmbedOptions, FixedPointGrid, PairScaling, RbmModel};
pub use error::{Error, Result};
pub use generate::{InstanceSpec, ProblemKind};
pub use ising::{Convention, IsingProblem, SpinState};
pub use oracle::{exhaustive_ground_state, sa_best, GroundSource, GroundTruth, SaSchedule};
pub use readout::{BitString, HittingState, ModeState};
pub use rng::Stream;
pub use sampler::{run_chain, ChainState, Init, Kernel, SampleSink, SamplerConfig, SigmoidMode};
