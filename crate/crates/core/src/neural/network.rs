//! One filter size's network: embedding lookup, convolution, ReLU, max
//! pooling, dropout and a softmax head, with hand-derived gradients.

use std::collections::BTreeMap;

use super::kernels::{
    axpy, bias_activation, conv_forward_channels, dropout, max_pool, softmax, weighted_nll_loss,
    FilterBank, SoftmaxHead,
};
use crate::corpus::PAD_ID;
use crate::embedding::{lookup, ChannelSpec, SentenceMatrix};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Half-width of the uniform initialization of filters and head weights.
pub const PARAM_INIT_RANGE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvNet {
    pub bank: FilterBank,
    pub head: SoftmaxHead,
}

/// Intermediates of one forward pass kept for [`ConvNet::backward`].
#[derive(Debug, Clone)]
pub struct Trace {
    ids: Vec<u32>,
    inputs: Vec<SentenceMatrix>,
    pooled: Vec<f64>,
    argmax: Vec<usize>,
    dropout_mask: Vec<f64>,
    features: Vec<f64>,
    pub probs: Vec<f64>,
}

/// Gradient buffers matching a [`ConvNet`] and its trainable channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub filters: Vec<f64>,
    pub biases: Vec<f64>,
    pub head_weights: Vec<f64>,
    pub head_bias: Vec<f64>,
    /// Per channel: `None` if frozen, else row id -> gradient row.
    pub embeddings: Vec<Option<BTreeMap<u32, Vec<f64>>>>,
}

impl Gradients {
    pub fn zeros(net: &ConvNet, channels: &ChannelSpec) -> Self {
        Self {
            filters: vec![0.0; net.bank.weights.len()],
            biases: vec![0.0; net.bank.count],
            head_weights: vec![0.0; net.head.weights.len()],
            head_bias: vec![0.0; net.head.classes],
            embeddings: channels
                .channels
                .iter()
                .map(|c| c.trainable.then(BTreeMap::new))
                .collect(),
        }
    }

    pub fn clear(&mut self) {
        for v in [
            &mut self.filters,
            &mut self.biases,
            &mut self.head_weights,
            &mut self.head_bias,
        ] {
            v.fill(0.0);
        }
        for rows in self.embeddings.iter_mut().flatten() {
            rows.clear();
        }
    }
}

impl ConvNet {
    pub fn new(
        height: usize,
        filters: usize,
        channels: usize,
        dim: usize,
        classes: usize,
        rng: &mut Rng,
    ) -> Self {
        Self {
            bank: FilterBank::uniform(filters, height, channels, dim, PARAM_INIT_RANGE, rng),
            head: SoftmaxHead::uniform(filters, classes, PARAM_INIT_RANGE, rng),
        }
    }

    pub fn height(&self) -> usize {
        self.bank.height
    }

    pub fn is_finite(&self) -> bool {
        self.bank.is_finite() && self.head.is_finite()
    }

    /// Runs the network on the first `valid_len` ids of a document.
    ///
    /// Only the unpadded prefix is looked up, so every window is valid; this
    /// is the same as pooling the full padded matrix with the validity mask.
    /// `dropout` carries the rate and generator for training passes.
    pub fn forward(
        &self,
        ids: &[u32],
        valid_len: usize,
        channels: &ChannelSpec,
        dropout_with: Option<(f64, &mut Rng)>,
    ) -> Result<Trace> {
        if channels.channels.len() != self.bank.channels {
            return Err(Error::Shape(format!(
                "{} channels for a {}-channel network",
                channels.channels.len(),
                self.bank.channels
            )));
        }
        let prefix = &ids[..valid_len.min(ids.len())];
        let inputs = channels
            .channels
            .iter()
            .map(|c| lookup(prefix, &c.table))
            .collect::<Result<Vec<_>>>()?;
        let pre = conv_forward_channels(&inputs, &self.bank)?;
        let fmap = bias_activation(&pre, &self.bank.biases, self.bank.height, prefix.len())?;
        let pooled = max_pool(&fmap)?;
        let dropped = match dropout_with {
            Some((rate, rng)) => dropout(&pooled.values, rate, rng, true)?,
            None => dropout(&pooled.values, 0.0, &mut crate::rng::seeded(0), false)?,
        };
        let probs = softmax(&self.head.logits(&dropped.values)?);
        Ok(Trace {
            ids: prefix.to_vec(),
            inputs,
            pooled: pooled.values,
            argmax: pooled.argmax,
            dropout_mask: dropped.mask,
            features: dropped.values,
            probs,
        })
    }

    pub fn predict_probs(
        &self,
        ids: &[u32],
        valid_len: usize,
        channels: &ChannelSpec,
    ) -> Result<Vec<f64>> {
        Ok(self.forward(ids, valid_len, channels, None)?.probs)
    }

    /// Loss of a finished forward pass.
    pub fn loss(trace: &Trace, label: usize, weight: f64) -> f64 {
        weighted_nll_loss(&trace.probs, label, weight)
    }

    /// Accumulates the gradient of `weight * -ln p[label]` into `grads`.
    ///
    /// Pooling routes the gradient to the argmax window only; a ReLU output
    /// of exactly 0 passes no gradient. Frozen channels get nothing.
    pub fn backward(&self, trace: &Trace, label: usize, weight: f64, grads: &mut Gradients) {
        if weight == 0.0 {
            return;
        }
        let classes = self.head.classes;
        let dz: Vec<f64> = trace
            .probs
            .iter()
            .enumerate()
            .map(|(k, &p)| weight * (p - if k == label { 1.0 } else { 0.0 }))
            .collect();

        axpy(1.0, &dz, &mut grads.head_bias);
        let bank = &self.bank;
        let span = bank.window_len();
        for (j, (&x, w_row)) in trace
            .features
            .iter()
            .zip(self.head.weights.chunks_exact(classes))
            .enumerate()
        {
            axpy(
                x,
                &dz,
                &mut grads.head_weights[j * classes..(j + 1) * classes],
            );

            if trace.pooled[j] <= 0.0 || trace.dropout_mask[j] == 0.0 {
                continue;
            }
            let d_pre: f64 =
                trace.dropout_mask[j] * w_row.iter().zip(&dz).map(|(w, d)| w * d).sum::<f64>();
            grads.biases[j] += d_pre;

            let pos = trace.argmax[j];
            for (c, input) in trace.inputs.iter().enumerate() {
                let start = (j * bank.channels + c) * span;
                let window = &input.data[pos * bank.dim..pos * bank.dim + span];
                axpy(d_pre, window, &mut grads.filters[start..start + span]);

                if let Some(rows) = grads.embeddings[c].as_mut() {
                    let filter = bank.filter(j, c);
                    for r in 0..bank.height {
                        let id = trace.ids[pos + r];
                        if id == PAD_ID {
                            continue;
                        }
                        let g = rows.entry(id).or_insert_with(|| vec![0.0; bank.dim]);
                        axpy(d_pre, &filter[r * bank.dim..(r + 1) * bank.dim], g);
                    }
                }
            }
        }
    }
}
