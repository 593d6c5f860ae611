//! Feature-mapping RNN: a scalar-input LSTM whose parameters are shared
//! across every coordinate of a frame feature vector, with linear or
//! Gaussian RBF readouts, L2 + adversarial training, and a pooled
//! action-anticipation inference pipeline.
//!
//! The crate is `no_std` (it needs `alloc`). All arithmetic is `f64` and all
//! transcendental functions come from `libm`, so results are reproducible
//! across platforms for a fixed seed. File formats, the CLI and anything
//! touching the filesystem live in the `fmrnn` companion crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod checks;
pub mod data;
pub mod engine;
mod error;
pub mod featmap;
pub mod layers;
pub mod models;
pub mod numcore;
pub mod pipeline;

pub use error::{Error, Result};
