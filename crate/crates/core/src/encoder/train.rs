use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::loss::mse_multi_loss;
use super::model::{EncoderModel, ModelGrads, HEAD_OUTPUTS};
use super::sgd::SgdMomentumConfig;
use super::tensor::VolumeTensor;
use crate::error::{invalid, Result};
use crate::exec::Executor;
use crate::rng;

/// One training pair: a normalized volume and its covariate targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: VolumeTensor,
    pub target: Vec<f64>,
}

/// Epoch 0 is the untrained model evaluated on both sets. For later epochs
/// `train_mse` is the sample-weighted mean of the minibatch losses seen during
/// the epoch and `val_mse` is evaluated after the epoch's last update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Snapshot from the epoch with the lowest validation MSE (earliest on ties).
    pub model: EncoderModel,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
}

/// Mean squared error of `model` over `set`.
pub fn evaluate<E: Executor>(model: &EncoderModel, set: &[Example], exec: &E) -> Result<f64> {
    let preds = exec.map(set.len(), |i| model.predict(&set[i].input));
    let preds = preds.into_iter().collect::<Result<Vec<_>>>()?;
    let targets: Vec<Vec<f64>> = set.iter().map(|e| e.target.clone()).collect();
    Ok(mse_multi_loss(&preds, &targets)?.0)
}

/// Minibatch momentum SGD with per-epoch shuffling and best-validation
/// checkpointing. Per-sample gradients are summed in batch order, so any
/// executor yields the same trajectory.
pub fn train<E: Executor>(
    model: EncoderModel,
    train_set: &[Example],
    val_set: &[Example],
    cfg: &SgdMomentumConfig,
    exec: &E,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(invalid!(
            "training needs non-empty sets, got {} train and {} validation samples",
            train_set.len(),
            val_set.len()
        ));
    }
    if let Some((i, e)) = train_set.iter().chain(val_set).enumerate().find(|(_, e)| e.target.len() != HEAD_OUTPUTS) {
        return Err(invalid!("example {i} has {} targets, expected {HEAD_OUTPUTS}", e.target.len()));
    }

    let mut model = model;
    let mut log = Vec::with_capacity(cfg.epochs + 1);
    let first =
        EpochLog { epoch: 0, train_mse: evaluate(&model, train_set, exec)?, val_mse: evaluate(&model, val_set, exec)? };
    log.push(first);
    let mut best = (first.val_mse, 0usize, model.clone());

    let mut shuffle_rng = rng::stream(cfg.seed, rng::streams::ENCODER_SHUFFLE);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let fwd = exec.map(batch.len(), |i| model.forward_sample(&train_set[batch[i]].input));
            let (preds, caches): (Vec<_>, Vec<_>) = fwd.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
            let targets: Vec<Vec<f64>> = batch.iter().map(|&i| train_set[i].target.clone()).collect();
            let (loss, grad_pred) = mse_multi_loss(&preds, &targets)?;
            loss_sum += loss * batch.len() as f64;

            let per_sample = exec.map(batch.len(), |i| model.backward_sample(&caches[i], &grad_pred[i]));
            let mut grads = ModelGrads::zeros_like(&model);
            for g in per_sample {
                grads.add_assign(&g?);
            }
            model.apply_sgd(&grads, cfg.learning_rate, cfg.momentum)?;
        }
        let entry =
            EpochLog { epoch, train_mse: loss_sum / train_set.len() as f64, val_mse: evaluate(&model, val_set, exec)? };
        log.push(entry);
        if entry.val_mse < best.0 {
            best = (entry.val_mse, epoch, model.clone());
        }
    }
    Ok(TrainOutcome { model: best.2, best_epoch: best.1, log })
}
