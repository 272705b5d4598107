//! Simulation toolkit for batch-normalised random ReLU networks.
//!
//! Modules cover batch geometry, the forward pass with separable batch
//! normalisation components, the neuron count needed for full rank, the
//! `+I / -I` tree model and invariant batch representations.

pub mod batch;
pub mod error;
pub mod invariant;
pub mod layers;
pub mod rank_probe;
pub mod seed;
pub mod stats;
pub mod tree;

pub use batch::{Batch, RankTol};
pub use error::{Error, Result};
pub use seed::{SeedSpec, RNG_ALGORITHM};
