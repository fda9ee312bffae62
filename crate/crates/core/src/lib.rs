//! Spiking-neural-network early turn-taking prediction.
//!
//! The crate is `no_std` and only needs an allocator. Everything that
//! touches files, threads or the command line lives in the `ttsnet`
//! companion crate.
//!
//! Pipeline overview:
//!
//! * [`dataset`] holds turn events, preprocessing (EWMA, z-normalization,
//!   filter bank, chi-square selection, resampling) and a seeded synthetic
//!   corpus generator.
//! * [`snn`] is the Izhikevich network: kernels, delayed synapses, input
//!   quantization, stimulus scheduling, millisecond simulation and STDP.
//! * [`descriptors`] turns firing maps into NHNF histograms and PNG
//!   sequences.
//! * [`ttsnet`] wires the above into the two-stage model with a classifier
//!   from [`classify`].
//! * [`baselines`], [`objects`], [`metrics`] and [`eval`] cover the
//!   comparison methods, next-object prediction and the evaluation protocol.
#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the matrix notation of the numerics.
#![allow(clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod classify;
pub mod dataset;
pub mod descriptors;
pub mod error;
pub mod eval;
pub mod exec;
pub mod hmm;
pub mod metrics;
pub mod objects;
pub mod rng;
pub mod snn;
pub mod stats;
pub mod ttsnet;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
