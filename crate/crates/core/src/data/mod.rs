//! Feature sequences, the block-correlated synthetic generator, splits and
//! segment correlation analysis.

mod correlation;
mod sequence;
mod synth;

pub use correlation::{avg_correlation_vs_stepsize, correlation_matrix, mean_abs_off_diagonal};
pub use sequence::{dataset_dim, FeatureSequence, Split};
pub use synth::{synth_generate, SynthDynamics, SynthSpec};
