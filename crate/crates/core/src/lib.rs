//! Fixed-size unequal-probability sampling along an ordered population.
//!
//! The crate covers two algorithms that select exactly `n` units with
//! prescribed inclusion probabilities while respecting the population order:
//! ordered pivotal sampling and Deville's systematic sampling. Both induce
//! the same sampling design, which the [`design`] module can enumerate
//! exactly for small populations. The [`inclusion`] module computes the
//! joint inclusion probabilities of that design in closed form, and
//! [`analytics`] compares designs through entropy, Horvitz-Thompson
//! variance, design effects and the spectrum of the covariance matrix.
//!
//! Units are indexed from `0` throughout the API. The crate is `no_std`
//! and needs only `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analytics;
pub mod design;
mod error;
pub mod inclusion;
pub mod linalg;
mod math;
pub mod rng;
pub mod samplers;
pub mod strata;

pub use crate::design::SamplingDesign;
pub use crate::error::{Error, Result};
pub use crate::inclusion::PiklMatrix;
pub use crate::rng::RandomSource;
pub use crate::samplers::{Algorithm, Sample};
pub use crate::strata::{ClusterPopulation, ProbabilityVector, StrataDecomposition};

/// Tolerance under which a cumulative sum is treated as the nearest integer.
pub const SNAP_TOLERANCE: f64 = 1e-9;
