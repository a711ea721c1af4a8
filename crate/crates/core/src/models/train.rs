use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::network::{backward, cross_entropy, forward, predict_batch};
use super::optim::Optimizer;
use super::{init_model, Example, ModelConfig, ModelParams};
use crate::error::{Error, Result};
use crate::eval::{metrics, ConfusionMatrix};
use crate::features::EmbeddingMatrix;
use crate::seed;

/// Encoded examples with gold class indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub examples: Vec<Example>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss over the epoch's batches.
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub dev_accuracy: Option<f64>,
    pub dev_macro_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned.
    pub best_epoch: usize,
}

fn accuracy_and_f1(params: &ModelParams, data: &Dataset) -> Result<(f64, f64)> {
    let preds: Vec<usize> = predict_batch(params, &data.examples)?
        .into_iter()
        .map(|(p, _)| p)
        .collect();
    let labels = (0..params.config.class_count)
        .map(|i| i.to_string())
        .collect();
    let report = metrics(&ConfusionMatrix::from_indices(
        &data.labels,
        &preds,
        labels,
    )?)?;
    Ok((report.accuracy, report.macro_f1))
}

/// Mini-batch training on a mean cross-entropy loss. Returns the
/// parameters of the epoch with the best dev macro-F1 (earliest on ties),
/// or of the last epoch when `dev` is empty. Stops early after
/// `patience` epochs without improvement.
pub fn train(
    config: &ModelConfig,
    train_set: &Dataset,
    dev: &Dataset,
    embeddings: Option<&EmbeddingMatrix>,
) -> Result<(ModelParams, TrainHistory)> {
    if train_set.is_empty() {
        return Err(Error::EmptyInput("training set".into()));
    }
    if train_set.labels.len() != train_set.len() || dev.labels.len() != dev.len() {
        return Err(Error::Shape("every example needs exactly one label".into()));
    }
    let mut params = init_model(config, embeddings)?;
    let mut opt = Optimizer::new(&params);
    let mut shuffle_rng = seed::rng(config.seed, seed::SHUFFLE);
    let mut dropout_rng = seed::rng(config.seed, seed::DROPOUT);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let mut epochs = Vec::new();
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut since_best = 0;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for (bi, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<Example> = chunk
                .iter()
                .map(|&i| train_set.examples[i].clone())
                .collect();
            let golds: Vec<usize> = chunk.iter().map(|&i| train_set.labels[i]).collect();
            let diverged = || Error::Diverged {
                epoch,
                batch: bi + 1,
            };
            let (logits, cache) = match forward(&params, &batch, true, Some(&mut dropout_rng)) {
                Err(Error::NonFinite(_)) => return Err(diverged()),
                other => other?,
            };
            let loss = cross_entropy(&params, &logits, &golds) / batch.len() as f64;
            if !loss.is_finite() {
                return Err(diverged());
            }
            let grads = backward(&params, &cache, &golds)?;
            opt.step(&mut params, &grads, 1.0 / batch.len() as f64)?;
            if !params.all_finite() {
                return Err(diverged());
            }
            loss_sum += loss;
            batches += 1;
        }
        let (train_accuracy, _) = accuracy_and_f1(&params, train_set)?;
        let (dev_accuracy, dev_macro_f1) = if dev.is_empty() {
            (None, None)
        } else {
            let (a, f) = accuracy_and_f1(&params, dev)?;
            (Some(a), Some(f))
        };
        epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / batches as f64,
            train_accuracy,
            dev_accuracy,
            dev_macro_f1,
        });
        match dev_macro_f1 {
            None => best = Some((0.0, epoch, params.clone())),
            Some(f) => {
                if best.as_ref().is_none_or(|(b, _, _)| f > *b) {
                    best = Some((f, epoch, params.clone()));
                    since_best = 0;
                } else {
                    since_best += 1;
                    if since_best >= config.patience {
                        break;
                    }
                }
            }
        }
    }
    let (_, best_epoch, params) = best.expect("at least one epoch runs");
    Ok((params, TrainHistory { epochs, best_epoch }))
}

#[cfg(test)]
mod tests {
    use super::super::ModelKind;
    use super::*;
    use crate::synthetic;

    #[test]
    fn separable_logreg_reaches_full_train_accuracy() {
        let (train_set, vocab_size) = synthetic::separable(40, 3);
        let config = ModelConfig {
            kind: ModelKind::Logreg,
            vocab_size,
            max_len: synthetic::SEPARABLE_LEN,
            class_count: 2,
            epochs: 50,
            learning_rate: 0.05,
            batch_size: 8,
            ..ModelConfig::default()
        };
        let (params, history) = train(&config, &train_set, &Dataset::default(), None).unwrap();
        assert_eq!(history.epochs.last().unwrap().train_accuracy, 1.0);
        for (ex, &y) in train_set.examples.iter().zip(&train_set.labels) {
            assert_eq!(super::super::predict(&params, ex).unwrap().0, y);
        }
        let (_, again) = train(&config, &train_set, &Dataset::default(), None).unwrap();
        assert_eq!(history, again);
    }

    #[test]
    fn empty_training_set_is_an_error() {
        let config = ModelConfig::default();
        assert!(train(&config, &Dataset::default(), &Dataset::default(), None).is_err());
    }
}
