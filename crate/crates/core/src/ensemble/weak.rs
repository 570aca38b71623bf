use std::sync::Arc;

use rand::seq::SliceRandom;

use super::{Example, HyperParams};
use crate::corpus::{EncodedDocument, Label};
use crate::embedding::ChannelSpec;
use crate::error::{Error, Result};
use crate::neural::{adadelta_step, AdadeltaState, ConvNet, Gradients, RowAdadelta};
use crate::rng::Rng;

/// A per-filter-height network together with the channels it reads.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakClassifier {
    pub net: ConvNet,
    pub channels: ChannelSpec,
}

impl WeakClassifier {
    pub fn height(&self) -> usize {
        self.net.height()
    }

    pub fn probs(&self, doc: &EncodedDocument) -> Result<Vec<f64>> {
        self.net
            .predict_probs(&doc.ids, doc.valid_len, &self.channels)
    }

    /// Argmax of the softmax, ties to class 0 (positive).
    pub fn predict(&self, doc: &EncodedDocument) -> Result<Label> {
        let p = self.probs(doc)?;
        let best = p
            .iter()
            .enumerate()
            .fold(0, |best, (k, &v)| if v > p[best] { k } else { best });
        Ok(Label::from_class_index(best))
    }

    fn is_finite(&self) -> bool {
        self.net.is_finite()
            && self
                .channels
                .channels
                .iter()
                .filter(|c| c.trainable)
                .all(|c| c.table.is_finite())
    }
}

/// Optimizer state for one weak classifier.
pub(crate) struct WeakTrainer {
    pub classifier: WeakClassifier,
    filters: AdadeltaState,
    biases: AdadeltaState,
    head_weights: AdadeltaState,
    head_bias: AdadeltaState,
    rows: Vec<Option<RowAdadelta>>,
    grads: Gradients,
}

impl WeakTrainer {
    pub fn new(classifier: WeakClassifier) -> Self {
        let net = &classifier.net;
        let rows = classifier
            .channels
            .channels
            .iter()
            .map(|c| {
                c.trainable
                    .then(|| RowAdadelta::new(c.table.n_rows(), c.table.dim()))
            })
            .collect();
        Self {
            filters: AdadeltaState::new(net.bank.weights.len()),
            biases: AdadeltaState::new(net.bank.biases.len()),
            head_weights: AdadeltaState::new(net.head.weights.len()),
            head_bias: AdadeltaState::new(net.head.bias.len()),
            grads: Gradients::zeros(net, &classifier.channels),
            rows,
            classifier,
        }
    }

    /// One shuffled pass over `train` in mini-batches. `scales` holds the
    /// per-sample loss multipliers. Returns the mean weighted loss.
    pub fn train_epoch(
        &mut self,
        train: &[Example<'_>],
        scales: &[f64],
        hyper: &HyperParams,
        epoch: usize,
        rng: &mut Rng,
    ) -> Result<f64> {
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(rng);
        let mut total_loss = 0.0;

        for batch in order.chunks(hyper.batch_size) {
            self.grads.clear();
            let per_sample = 1.0 / batch.len() as f64;
            for &i in batch {
                let ex = &train[i];
                let net = &self.classifier.net;
                let trace = net.forward(
                    &ex.doc.ids,
                    ex.doc.valid_len,
                    &self.classifier.channels,
                    Some((hyper.dropout, &mut *rng)),
                )?;
                let class = ex.label.class_index();
                total_loss += ConvNet::loss(&trace, class, scales[i]);
                net.backward(&trace, class, scales[i] * per_sample, &mut self.grads);
            }
            self.apply(hyper)?;
        }

        if !self.classifier.is_finite() || !total_loss.is_finite() {
            return Err(Error::Diverged {
                height: self.classifier.height(),
                epoch,
            });
        }
        Ok(total_loss / train.len() as f64)
    }

    fn apply(&mut self, hyper: &HyperParams) -> Result<()> {
        let cfg = &hyper.adadelta;
        let net = &mut self.classifier.net;
        let g = &self.grads;
        adadelta_step(&mut net.bank.weights, &g.filters, &mut self.filters, cfg)?;
        adadelta_step(&mut net.bank.biases, &g.biases, &mut self.biases, cfg)?;
        adadelta_step(
            &mut net.head.weights,
            &g.head_weights,
            &mut self.head_weights,
            cfg,
        )?;
        adadelta_step(&mut net.head.bias, &g.head_bias, &mut self.head_bias, cfg)?;

        for ((channel, opt), rows) in self
            .classifier
            .channels
            .channels
            .iter_mut()
            .zip(&mut self.rows)
            .zip(&g.embeddings)
        {
            let (Some(opt), Some(rows)) = (opt.as_mut(), rows.as_ref()) else {
                continue;
            };
            opt.begin_step();
            if rows.is_empty() {
                continue;
            }
            let table = Arc::make_mut(&mut channel.table);
            for (&id, grad) in rows {
                opt.update_row(id as usize, table.row_mut(id), grad, cfg);
            }
        }
        Ok(())
    }
}
