use alloc::vec::Vec;

use super::{epoch_batches, LossHistory, StepRecord, TrainConfig, STREAM_CLASSIFIER_BATCHES, STREAM_CLASSIFIER_INIT};
use crate::data::{dataset_dim, FeatureSequence};
use crate::models::{ClassifierConfig, ClassifierModel};
use crate::numcore::{sgd_step, HasParams, OptimState, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct ClassifierRun {
    pub classifier: ClassifierModel,
    pub history: LossHistory,
}

/// Cross-entropy training on individual real frames.
pub fn train_classifier(
    dataset: &[FeatureSequence],
    model_config: &ClassifierConfig,
    config: &TrainConfig,
) -> Result<ClassifierRun> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let dim = dataset_dim(dataset)?;
    if dim != model_config.feature_dim {
        return Err(Error::DimensionMismatch {
            context: "dataset feature dimension vs classifier config",
            expected: model_config.feature_dim,
            actual: dim,
        });
    }
    if let Some(v) = dataset.iter().find(|v| v.label >= model_config.classes) {
        return Err(Error::LabelOutOfRange {
            label: v.label,
            classes: model_config.classes,
        });
    }
    if dataset.iter().all(|v| v.label == dataset[0].label) {
        return Err(Error::SingleClass);
    }
    let mut model = ClassifierModel::new(model_config.clone(), &mut Rng::stream(config.seed, STREAM_CLASSIFIER_INIT))?;
    let frames: Vec<(usize, usize)> = dataset
        .iter()
        .enumerate()
        .flat_map(|(v, seq)| (0..seq.len()).map(move |t| (v, t)))
        .collect();
    let mut opt = OptimState::new(config.base_lr, config.decay_rate)?;
    let mut history = LossHistory::default();
    let mut step = 0;
    for epoch in 0..config.epochs {
        opt.epoch = epoch;
        let mut rng = Rng::stream(config.seed, STREAM_CLASSIFIER_BATCHES + epoch as u64);
        for batch in epoch_batches(frames.len(), config.batch_classifier, config.steps_per_epoch, &mut rng) {
            let scale = 1.0 / batch.len() as f64;
            let mut loss = 0.0;
            for &i in &batch {
                let (v, t) = frames[i];
                let seq = &dataset[v];
                loss += model.accumulate_loss(seq.frames.row(t), seq.label, scale)?.0;
            }
            sgd_step(model.params_mut(), &opt)?;
            let ce = loss * scale;
            history.push(StepRecord {
                epoch,
                step,
                l2: None,
                adv: None,
                disc: None,
                ce: Some(ce),
                total: ce,
            })?;
            step += 1;
        }
    }
    Ok(ClassifierRun { classifier: model, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::argmax;
    use alloc::vec;

    fn two_clusters() -> Vec<FeatureSequence> {
        let mut rng = Rng::new(8);
        (0..20)
            .map(|i| {
                let label = i % 2;
                let centre = if label == 0 { -1.0 } else { 1.0 };
                let rows: Vec<Vec<f64>> = (0..5)
                    .map(|_| (0..4).map(|_| centre + 0.3 * rng.gaussian()).collect())
                    .collect();
                FeatureSequence::new(
                    alloc::format!("v{i}"),
                    label,
                    crate::numcore::Matrix::from_rows(&rows).unwrap(),
                )
                .unwrap()
            })
            .collect()
    }

    fn configs() -> (ClassifierConfig, TrainConfig) {
        (
            ClassifierConfig {
                feature_dim: 4,
                hidden: vec![8],
                kernels: 4,
                classes: 2,
            },
            TrainConfig {
                base_lr: 0.1,
                decay_rate: 1.0,
                epochs: 50,
                batch_classifier: 20,
                seed: 4,
                ..TrainConfig::default()
            },
        )
    }

    #[test]
    fn separable_frames_are_learned() {
        let data = two_clusters();
        let (mc, tc) = configs();
        let run = train_classifier(&data, &mc, &tc).unwrap();
        let means = run.history.epoch_means();
        assert!((means[0].ce.unwrap() - libm::log(2.0)).abs() < 0.2);
        let total: usize = data.iter().map(|v| v.len()).sum();
        let correct: usize = data
            .iter()
            .map(|v| {
                v.frames
                    .iter_rows()
                    .filter(|r| argmax(&run.classifier.classify_frame(r).unwrap()) == v.label)
                    .count()
            })
            .sum();
        assert!(correct as f64 / total as f64 >= 0.99, "{correct}/{total}");
    }

    #[test]
    fn deterministic_and_single_class_rejected() {
        let data = two_clusters();
        let (mc, mut tc) = configs();
        tc.epochs = 2;
        let a = train_classifier(&data, &mc, &tc).unwrap();
        let b = train_classifier(&data, &mc, &tc).unwrap();
        assert_eq!(a.classifier, b.classifier);
        let one: Vec<_> = data.into_iter().filter(|v| v.label == 0).collect();
        assert_eq!(train_classifier(&one, &mc, &tc).unwrap_err(), Error::SingleClass);
    }
}
