use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{
    epoch_batches, LossHistory, StepRecord, TrainConfig, STREAM_DISCRIMINATOR_INIT, STREAM_FORECASTER_BATCHES,
    STREAM_FORECASTER_INIT,
};
use crate::data::{dataset_dim, FeatureSequence};
use crate::featmap::{ForecastMode, ForecasterModel, ReadoutKind};
use crate::layers::{disc_loss, disc_loss_grad, gen_adv_loss, gen_adv_loss_grad, l2_loss, l2_loss_grad};
use crate::models::DiscriminatorModel;
use crate::numcore::{sgd_step, HasParams, Matrix, OptimState, Rng};
use crate::{Error, Result};

/// One training example: frames `0..rows` of segment `segment` of video
/// `video` predict that segment at frame `rows - 1 + k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingPair {
    pub video: usize,
    pub rows: usize,
    pub segment: usize,
}

/// Every valid `(video, t, segment)` triple, in that nesting order.
pub fn training_pairs(dataset: &[FeatureSequence], model: &ForecasterModel) -> Result<Vec<TrainingPair>> {
    let k = model.horizon();
    let segments = model.plan().segment_count();
    let mut pairs = Vec::new();
    for (video, seq) in dataset.iter().enumerate() {
        if seq.len() < k + 1 {
            return Err(Error::SequenceTooShort {
                video: seq.video_id.clone(),
                frames: seq.len(),
                needed: k + 1,
            });
        }
        for rows in 1..=seq.len() - k {
            for segment in 0..segments {
                pairs.push(TrainingPair { video, rows, segment });
            }
        }
    }
    Ok(pairs)
}

fn pair_data(dataset: &[FeatureSequence], model: &ForecasterModel, pair: TrainingPair) -> (Matrix, Vec<f64>) {
    let plan = model.plan();
    let offset = plan.offsets()[pair.segment];
    let frames = &dataset[pair.video].frames;
    let history = frames.column_block(pair.rows, offset, plan.step());
    let target = frames.row(pair.rows - 1 + model.horizon())[offset..offset + plan.step()].to_vec();
    (history, target)
}

#[derive(Debug, Clone)]
pub struct ForecasterRun {
    pub forecaster: ForecasterModel,
    /// present only when the adversarial weight is positive
    pub discriminator: Option<DiscriminatorModel>,
    pub history: LossHistory,
    pub warnings: Vec<String>,
}

/// Train a forecaster on every `(history, next sub-vector)` pair of the
/// dataset. With a positive adversarial weight each batch first takes one
/// discriminator step, then one generator step against the updated
/// discriminator.
pub fn train_forecaster(dataset: &[FeatureSequence], config: &TrainConfig) -> Result<ForecasterRun> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let dim = dataset_dim(dataset)?;
    if dim != config.forecaster.feature_dim {
        return Err(Error::DimensionMismatch {
            context: "dataset feature dimension vs forecaster config",
            expected: config.forecaster.feature_dim,
            actual: dim,
        });
    }
    let mut model = ForecasterModel::new(config.forecaster, &mut Rng::stream(config.seed, STREAM_FORECASTER_INIT))?;
    let mut warnings = Vec::new();
    if config.adversarial() && model.mode() == ForecastMode::Vanilla && config.forecaster.readout == ReadoutKind::Rbf {
        warnings.push(String::from(
            "vanilla LSTM with RBF readout and adversarial loss is known to train unstably",
        ));
    }
    let mut disc = if config.adversarial() {
        Some(DiscriminatorModel::new(
            model.unit_width(),
            &mut Rng::stream(config.seed, STREAM_DISCRIMINATOR_INIT),
        )?)
    } else {
        None
    };
    let pairs = training_pairs(dataset, &model)?;
    let mut opt = OptimState::new(config.base_lr, config.decay_rate)?;
    let mut history = LossHistory::default();
    let mut step = 0;
    for epoch in 0..config.epochs {
        opt.epoch = epoch;
        let mut rng = Rng::stream(config.seed, STREAM_FORECASTER_BATCHES + epoch as u64);
        for batch in epoch_batches(pairs.len(), config.batch_forecaster, config.steps_per_epoch, &mut rng) {
            let record = forecaster_step(dataset, &pairs, &batch, &mut model, disc.as_mut(), config, &opt)
                .map_err(|e| match e {
                    Error::NonFiniteGradient(p) => Error::NonFiniteGradient(format!("{p} (epoch {epoch}, step {step})")),
                    e => e,
                })?;
            history.push(StepRecord { epoch, step, ..record })?;
            step += 1;
        }
    }
    Ok(ForecasterRun {
        forecaster: model,
        discriminator: disc,
        history,
        warnings,
    })
}

fn forecaster_step(
    dataset: &[FeatureSequence],
    pairs: &[TrainingPair],
    batch: &[usize],
    model: &mut ForecasterModel,
    mut disc: Option<&mut DiscriminatorModel>,
    config: &TrainConfig,
    opt: &OptimState,
) -> Result<StepRecord> {
    let scale = 1.0 / batch.len() as f64;
    let mut forwards = Vec::with_capacity(batch.len());
    let mut l2_sum = 0.0;
    for &i in batch {
        let (history, target) = pair_data(dataset, model, pairs[i]);
        let (pred, trace) = model.segment_forward(&history)?;
        l2_sum += l2_loss(&target, &pred)?;
        forwards.push((target, pred, trace));
    }

    let mut disc_sum = None;
    if let Some(d) = disc.as_deref_mut() {
        let mut sum = 0.0;
        for (target, pred, _) in &forwards {
            let real = d.forward(target)?;
            let fake = d.forward(pred)?;
            sum += disc_loss(real.prob(), fake.prob());
            let (gr, gf) = disc_loss_grad(real.prob(), fake.prob());
            d.backward(&real, gr * scale);
            d.backward(&fake, gf * scale);
        }
        sgd_step(d.params_mut(), opt)?;
        disc_sum = Some(sum);
    }

    let mut adv_sum = disc.is_some().then_some(0.0);
    for (target, pred, trace) in &forwards {
        let mut dpred = l2_loss_grad(target, pred)?;
        dpred.iter_mut().for_each(|v| *v *= config.w_l2 * scale);
        if let (Some(d), Some(adv)) = (disc.as_deref_mut(), adv_sum.as_mut()) {
            let fake = d.forward(pred)?;
            *adv += gen_adv_loss(fake.prob());
            let dx = d.backward(&fake, gen_adv_loss_grad(fake.prob()) * config.w_adv * scale);
            for (a, b) in dpred.iter_mut().zip(dx) {
                *a += b;
            }
        }
        model.segment_backward(trace, &dpred);
    }
    if let Some(d) = disc {
        // the generator step only borrows the discriminator's input gradient
        d.params_mut().zero_grads();
    }
    sgd_step(model.params_mut(), opt)?;

    let l2 = l2_sum * scale;
    let adv = adv_sum.map(|a| a * scale);
    Ok(StepRecord {
        epoch: 0,
        step: 0,
        l2: Some(l2),
        adv,
        disc: disc_sum.map(|s| s * scale),
        ce: None,
        total: config.w_l2 * l2 + adv.map_or(0.0, |a| config.w_adv * a),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_generate, SynthSpec};
    use crate::featmap::ForecasterConfig;

    fn linear_dynamics() -> Vec<FeatureSequence> {
        synth_generate(&SynthSpec {
            classes: 2,
            feature_dim: 8,
            frames: 8,
            videos_per_class: 4,
            block: 2,
            decay: 0.8,
            noise: 0.0,
            latent_noise: 0.0,
            seed: 5,
            ..SynthSpec::default()
        })
        .unwrap()
    }

    fn config(w_adv: f64) -> TrainConfig {
        TrainConfig {
            w_adv,
            base_lr: 0.05,
            decay_rate: 0.95,
            epochs: 4,
            batch_forecaster: 16,
            steps_per_epoch: Some(50),
            seed: 11,
            forecaster: ForecasterConfig {
                feature_dim: 8,
                step: 4,
                stride: 2,
                ..ForecasterConfig::default()
            },
            ..TrainConfig::default()
        }
    }

    #[test]
    fn pairs_enumerate_all_positions() {
        let data = linear_dynamics();
        let m = ForecasterModel::new(config(0.0).forecaster, &mut Rng::new(0)).unwrap();
        let pairs = training_pairs(&data, &m).unwrap();
        // 8 videos, 7 histories each, 3 segments
        assert_eq!(pairs.len(), 8 * 7 * 3);
        let (h, t) = pair_data(&data, &m, TrainingPair { video: 1, rows: 3, segment: 2 });
        assert_eq!(h.rows(), 3);
        assert_eq!(h.row(2), &data[1].frames.row(2)[4..8]);
        assert_eq!(t, &data[1].frames.row(3)[4..8]);
    }

    #[test]
    fn too_short_sequences_rejected() {
        let mut data = linear_dynamics();
        data[3] = FeatureSequence::new("short", 0, data[3].frames.head(1)).unwrap();
        match train_forecaster(&data, &config(0.0)) {
            Err(Error::SequenceTooShort { video, .. }) => assert_eq!(video, "short"),
            other => panic!("{other:?}"),
        }
        assert!(train_forecaster(&[], &config(0.0)).is_err());
    }

    #[test]
    fn l2_training_reduces_loss() {
        let run = train_forecaster(&linear_dynamics(), &config(0.0)).unwrap();
        assert!(run.discriminator.is_none());
        assert!(run.history.steps.iter().all(|r| r.adv.is_none() && r.disc.is_none()));
        let means = run.history.epoch_means();
        let (first, last) = (means[0].l2.unwrap(), means[means.len() - 1].l2.unwrap());
        assert!(last < first, "{first} -> {last}");
    }

    #[test]
    fn deterministic_history() {
        let a = train_forecaster(&linear_dynamics(), &config(1.0)).unwrap();
        let b = train_forecaster(&linear_dynamics(), &config(1.0)).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.forecaster, b.forecaster);
        assert!(a.discriminator.is_some());
        assert!(a.history.steps.iter().all(|r| r.adv.is_some() && r.disc.is_some()));
        let steps: Vec<usize> = a.history.steps.iter().map(|r| r.step).collect();
        assert!(steps.windows(2).all(|w| w[1] == w[0] + 1));
    }

    #[test]
    fn vanilla_rbf_gan_warns() {
        let mut c = config(1.0);
        c.forecaster.mode = ForecastMode::Vanilla;
        c.epochs = 1;
        c.steps_per_epoch = Some(2);
        let run = train_forecaster(&linear_dynamics(), &c).unwrap();
        assert_eq!(run.warnings.len(), 1);
        c.w_adv = 0.0;
        assert!(train_forecaster(&linear_dynamics(), &c).unwrap().warnings.is_empty());
    }
}
