//! File formats, corpora, parallel benchmarking and the command line around
//! `isingrbm-core`.

pub mod benchmark;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod format;
pub mod parallel;
pub mod report;

pub use error::{Error, Result};
