use fmrnn_core::data::FeatureSequence;
use fmrnn_core::featmap::ForecasterModel;
use fmrnn_core::models::ClassifierModel;
use fmrnn_core::pipeline::{anticipate, AnticipationConfig, Evaluation};
use fmrnn_core::Result;
use rayon::prelude::*;

/// Same result as `pipeline::evaluate`, with videos spread over the rayon
/// pool. Traces come back in split order.
pub fn evaluate_parallel(
    split: &[FeatureSequence],
    forecaster: Option<&ForecasterModel>,
    classifier: &ClassifierModel,
    cfg: &AnticipationConfig,
) -> Result<Evaluation> {
    let traces = split
        .par_iter()
        .map(|v| anticipate(v, forecaster, classifier, cfg))
        .collect::<Result<Vec<_>>>()?;
    Evaluation::from_traces(traces)
}
