//! Proximal sampler with exact (rejection-sampling) and smoothed restricted
//! Gaussian oracle implementations, plus a deterministic grid oracle that
//! evolves the sampler's law and certifies its Fisher-information
//! convergence guarantees at desk scale (1D/2D).

pub mod chain;
pub mod divergences;
pub mod error;
pub mod grid;
pub mod grid_oracle;
pub mod harness;
pub mod inner;
pub mod prox;
pub mod rgo;
pub mod targets;

pub use error::{Error, Result};
