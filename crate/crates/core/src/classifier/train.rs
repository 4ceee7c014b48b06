use log::info;
use serde::{Deserialize, Serialize};

use super::network::Workspace;
use super::params::NetworkParams;
use super::predict::evaluate_accuracy;
use crate::data::{batched_indices, ImageTensor, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 64,
            epochs: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate {} must be positive", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Accuracy over the epoch's own forward passes, before each update.
    pub running_accuracy: f64,
    /// Accuracy of the end-of-epoch parameters on the evaluation set.
    pub eval_accuracy: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: NetworkParams,
    pub epochs: Vec<EpochStats>,
}

/// `params <- params - lr * grad`.
pub fn sgd_step(params: &mut NetworkParams, grad: &NetworkParams, learning_rate: f64) {
    params.axpy(-learning_rate, grad);
}

/// Plain minibatch SGD on mean cross-entropy.
///
/// Parameters start from [`NetworkParams::init`] with the run seed; epoch
/// `e` visits the batches of `batched_indices(n, batch_size,
/// derive_seed(seed, [e]))`. When `eval` is given its accuracy is logged
/// after every epoch.
pub fn train(dataset: &LabeledDataset, cfg: &TrainConfig, eval: Option<&LabeledDataset>) -> Result<TrainOutcome> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let mut params = NetworkParams::init(cfg.seed);
    let mut grad = NetworkParams::zeros();
    let mut ws = Workspace::default();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let batches = batched_indices(dataset.len(), cfg.batch_size, rng::derive_seed(cfg.seed, &[epoch as u64]));
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for (b, batch) in batches.iter().enumerate() {
            let images: Vec<&ImageTensor> = batch.iter().map(|&i| &dataset.images[i]).collect();
            let labels: Vec<u8> = batch.iter().map(|&i| dataset.labels[i]).collect();
            ws.forward(&params, &images, true)?;
            let (loss, hits) = ws.backward(&params, &labels, &mut grad);
            if !loss.is_finite() {
                return Err(Error::DivergedLoss { epoch, batch: b, loss });
            }
            sgd_step(&mut params, &grad, cfg.learning_rate);
            loss_sum += loss * batch.len() as f64;
            correct += hits;
        }
        let stats = EpochStats {
            epoch: epoch + 1,
            mean_loss: loss_sum / dataset.len() as f64,
            running_accuracy: correct as f64 / dataset.len() as f64,
            eval_accuracy: eval.map(|e| evaluate_accuracy(&params, e)).transpose()?,
        };
        info!(
            "epoch {}/{}: loss {:.5}, running accuracy {:.4}{}",
            stats.epoch,
            cfg.epochs,
            stats.mean_loss,
            stats.running_accuracy,
            stats.eval_accuracy.map(|a| format!(", eval accuracy {a:.4}")).unwrap_or_default()
        );
        history.push(stats);
    }
    Ok(TrainOutcome { params, epochs: history })
}
