//! Top-k and full-ranking recovery from noisy pairwise comparisons.
//!
//! The crate is organised around the objects of the random-design
//! comparison model:
//!
//! - [`model`]: the pairwise win-probability matrix and its generators
//!   (parametric BTL/Thurstone, outliers, SST, mixtures and the adversarial
//!   planted constructions).
//! - [`analysis`]: scores, separation thresholds, the repetition count
//!   needed for a target separation constant, and the KL/Fano calculators.
//! - [`sample`]: drawing observations, thinning them, and ingesting
//!   externally collected comparisons.
//! - [`rank`]: the Copeland counting estimator and a spectral + likelihood
//!   baseline.
//! - [`setfamily`]: monotone families of allowed position sets and the
//!   generalised separation threshold.
//! - [`metrics`]: exact, Hamming and allowed-set success criteria.
//!
//! Everything here is `no_std` (with `alloc`); file formats, the benchmark
//! harness and the CLI live in the `copeland` crate.
#![no_std]

extern crate alloc;

pub mod analysis;
mod error;
pub mod metrics;
pub mod model;
pub mod rank;
pub mod sample;
pub mod seed;
pub mod setfamily;
mod special;

pub use error::{Error, Result};
pub use special::{logistic, normal_cdf};
