use serde::{Deserialize, Serialize};

use super::boost::{
    classifier_weight, fuse_votes, init_distribution, update_distribution, weak_error,
};
use super::weak::{WeakClassifier, WeakTrainer};
use super::{Example, HyperParams};
use crate::corpus::{EncodedDocument, Label, Trait};
use crate::embedding::ChannelSpec;
use crate::error::{Error, Result};
use crate::neural::ConvNet;
use crate::rng;

/// Number of softmax classes per trait.
pub const CLASSES: usize = 2;

/// Boosting statistics of one epoch, one entry per weak classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub errors: Vec<f64>,
    pub weights: Vec<f64>,
    pub train_loss: Vec<f64>,
    pub val_accuracy: f64,
}

/// Strong classifier for one trait.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    pub trait_: Trait,
    pub classifiers: Vec<WeakClassifier>,
    /// One vote weight per classifier.
    pub weights: Vec<f64>,
    /// Epoch (1-based) the classifiers and weights were taken from.
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
}

impl EnsembleModel {
    pub fn votes(&self, doc: &EncodedDocument) -> Result<Vec<Label>> {
        self.classifiers.iter().map(|c| c.predict(doc)).collect()
    }

    pub fn predict(&self, doc: &EncodedDocument) -> Result<Label> {
        Ok(fuse_votes(&self.weights, &self.votes(doc)?))
    }

    /// Fraction of `examples` the fused classifier gets right.
    pub fn accuracy(&self, examples: &[Example<'_>]) -> Result<f64> {
        fused_accuracy(&self.classifiers, &self.weights, examples)
    }
}

/// `sign(Σ a_m G_m(doc))`, zero counted as positive.
pub fn ensemble_predict(model: &EnsembleModel, doc: &EncodedDocument) -> Result<Label> {
    model.predict(doc)
}

fn fused_accuracy(
    classifiers: &[WeakClassifier],
    weights: &[f64],
    examples: &[Example<'_>],
) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut correct = 0usize;
    for ex in examples {
        let votes = classifiers
            .iter()
            .map(|c| c.predict(ex.doc))
            .collect::<Result<Vec<_>>>()?;
        if fuse_votes(weights, &votes) == ex.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / examples.len() as f64)
}

/// Trains one weak classifier per filter height under AdaBoost.
///
/// Each epoch every classifier makes one mini-batch pass with per-sample
/// loss scale `n * D_i`. Then, in filter-size order, each classifier's
/// weighted training error sets its vote weight and reweights the
/// distribution, which the next epoch trains on. The fused model is scored
/// on `validation` after every epoch and the best epoch (earliest on ties)
/// is returned.
pub fn train_adaboost_cnn(
    trait_: Trait,
    train: &[Example<'_>],
    validation: &[Example<'_>],
    channels: &ChannelSpec,
    hyper: &HyperParams,
    seed: u64,
) -> Result<EnsembleModel> {
    hyper.validate()?;
    if train.is_empty() || validation.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let labels: Vec<Label> = train.iter().map(|e| e.label).collect();
    let dim = channels.dim();

    let mut trainers: Vec<WeakTrainer> = hyper
        .filter_sizes
        .iter()
        .enumerate()
        .map(|(m, &h)| {
            let mut init = rng::substream(seed, &["weak-init", &m.to_string(), &h.to_string()]);
            let net = ConvNet::new(
                h,
                hyper.filters,
                channels.channels.len(),
                dim,
                CLASSES,
                &mut init,
            );
            WeakTrainer::new(WeakClassifier {
                net,
                channels: channels.clone(),
            })
        })
        .collect();

    let mut dist = init_distribution(train.len())?;
    let mut log = Vec::with_capacity(hyper.epochs);
    let mut best: Option<(f64, usize, Vec<WeakClassifier>, Vec<f64>)> = None;

    for epoch in 1..=hyper.epochs {
        let scales = dist.loss_scales();
        let mut train_loss = Vec::with_capacity(trainers.len());
        for (m, trainer) in trainers.iter_mut().enumerate() {
            let h = trainer.classifier.height().to_string();
            let mut r = rng::substream(
                seed,
                &["weak-train", &m.to_string(), &h, &epoch.to_string()],
            );
            train_loss.push(trainer.train_epoch(train, &scales, hyper, epoch, &mut r)?);
        }

        let mut errors = Vec::with_capacity(trainers.len());
        let mut weights = Vec::with_capacity(trainers.len());
        for trainer in &trainers {
            let preds = train
                .iter()
                .map(|e| trainer.classifier.predict(e.doc))
                .collect::<Result<Vec<_>>>()?;
            let e = weak_error(&preds, &labels, &dist)?;
            let a = classifier_weight(e);
            dist = update_distribution(&dist, a, &preds, &labels)?;
            errors.push(e);
            weights.push(a);
        }

        let classifiers: Vec<WeakClassifier> =
            trainers.iter().map(|t| t.classifier.clone()).collect();
        let val_accuracy = fused_accuracy(&classifiers, &weights, validation)?;
        log.push(EpochLog {
            epoch,
            errors,
            weights: weights.clone(),
            train_loss,
            val_accuracy,
        });
        if best.as_ref().is_none_or(|b| val_accuracy > b.0) {
            best = Some((val_accuracy, epoch, classifiers, weights));
        }
    }

    let (_, best_epoch, classifiers, weights) = best.expect("at least one epoch");
    Ok(EnsembleModel {
        trait_,
        classifiers,
        weights,
        best_epoch,
        log,
    })
}
