//! Segmentation of frame features into shared-parameter sub-vectors, the
//! scalar LSTM forecaster and its baselines, overlap-averaged reassembly
//! and recursive rollout.

mod forecaster;
mod plan;

pub use forecaster::{
    ForecastMode, ForecasterConfig, ForecasterModel, ParamCount, Readout, ReadoutKind, SegmentTrace,
};
pub use plan::{flatten_scalars, plan_segments, unflatten_scalars, SegmentationPlan};
