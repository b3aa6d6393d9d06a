//! Numerical core for approximate message passing experiments.
//!
//! Everything here is `no_std` with `alloc`: random matrix ensembles and
//! structured operators, tensor-network evaluation, partition-lattice
//! combinatorics for limit values, state evolution, the AMP iterations and
//! the diagnostics that compare the two. IO and parallel scheduling live in
//! the `amplab` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod amp;
pub mod combinat;
pub mod diagnostics;
pub mod ensembles;
pub mod error;
pub mod exec;
pub mod fastops;
pub mod linalg;
pub mod math;
pub mod moments;
pub mod nonlin;
pub mod operator;
pub mod poly;
pub mod rng;
pub mod spectral;
pub mod stateevo;
pub mod tensornet;

pub use error::{Error, Result};
