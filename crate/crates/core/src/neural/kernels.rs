//! Layer kernels: convolution, bias + ReLU, masked max pooling, dropout,
//! softmax and the weighted negative log-likelihood.

use rand::Rng as _;

use crate::embedding::SentenceMatrix;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Probability floor inside the log of the loss.
pub const PROB_FLOOR: f64 = 1e-12;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let (ca, ra) = a.split_at(a.len() - a.len() % 4);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(4).zip(cb.chunks_exact(4)) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `count` filters of `height` rows over `channels` input matrices of width
/// `dim`, plus one bias per filter.
///
/// Weights are laid out `[filter][channel][row][col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub height: usize,
    pub dim: usize,
    pub channels: usize,
    pub count: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl FilterBank {
    pub fn zeros(count: usize, height: usize, channels: usize, dim: usize) -> Self {
        Self {
            height,
            dim,
            channels,
            count,
            weights: vec![0.0; count * channels * height * dim],
            biases: vec![0.0; count],
        }
    }

    /// Weights uniform in `[-range, range]`, zero biases.
    pub fn uniform(
        count: usize,
        height: usize,
        channels: usize,
        dim: usize,
        range: f64,
        rng: &mut Rng,
    ) -> Self {
        let mut bank = Self::zeros(count, height, channels, dim);
        for w in &mut bank.weights {
            *w = rng.gen_range(-range..=range);
        }
        bank
    }

    pub fn window_len(&self) -> usize {
        self.height * self.dim
    }

    pub fn filter(&self, f: usize, channel: usize) -> &[f64] {
        let n = self.window_len();
        let start = (f * self.channels + channel) * n;
        &self.weights[start..start + n]
    }

    pub fn filter_mut(&mut self, f: usize, channel: usize) -> &mut [f64] {
        let n = self.window_len();
        let start = (f * self.channels + channel) * n;
        &mut self.weights[start..start + n]
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.biases)
            .all(|v| v.is_finite())
    }
}

/// Convolution outputs before bias, `[filter][position]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Preactivations {
    pub count: usize,
    pub len: usize,
    pub values: Vec<f64>,
}

impl Preactivations {
    pub fn filter(&self, f: usize) -> &[f64] {
        &self.values[f * self.len..(f + 1) * self.len]
    }
}

/// Single-channel convolution: `O[f][i]` is the elementwise product of filter
/// `f` with rows `i..i+h` of `a`, summed.
pub fn conv_forward(a: &SentenceMatrix, bank: &FilterBank) -> Result<Preactivations> {
    conv_forward_channels(std::slice::from_ref(a), bank)
}

/// Multi-channel convolution; per-channel outputs are summed.
pub fn conv_forward_channels(
    inputs: &[SentenceMatrix],
    bank: &FilterBank,
) -> Result<Preactivations> {
    if inputs.len() != bank.channels {
        return Err(Error::Shape(format!(
            "{} input channels for a {}-channel filter bank",
            inputs.len(),
            bank.channels
        )));
    }
    let rows = inputs[0].rows;
    for a in inputs {
        if a.dim != bank.dim || a.rows != rows {
            return Err(Error::Shape(format!(
                "input {}x{} vs filter width {} and {rows} rows",
                a.rows, a.dim, bank.dim
            )));
        }
    }
    if rows < bank.height {
        return Err(Error::TooShort {
            len: rows,
            height: bank.height,
        });
    }
    let len = rows - bank.height + 1;
    let span = bank.window_len();
    let mut values = vec![0.0; bank.count * len];
    for f in 0..bank.count {
        let out = &mut values[f * len..(f + 1) * len];
        for (c, a) in inputs.iter().enumerate() {
            let w = bank.filter(f, c);
            for (i, o) in out.iter_mut().enumerate() {
                let start = i * bank.dim;
                *o += dot(w, &a.data[start..start + span]);
            }
        }
    }
    Ok(Preactivations {
        count: bank.count,
        len,
        values,
    })
}

/// `max(x, 0)`; NaN passes through.
pub fn relu(x: f64) -> f64 {
    if x > 0.0 || x.is_nan() {
        x
    } else {
        0.0
    }
}

/// `C = ReLU(O + b)` per filter, with a mask of the windows that lie inside
/// the first `valid_len` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub count: usize,
    pub len: usize,
    pub values: Vec<f64>,
    pub valid_mask: Vec<bool>,
}

impl FeatureMap {
    pub fn filter(&self, f: usize) -> &[f64] {
        &self.values[f * self.len..(f + 1) * self.len]
    }
}

pub fn bias_activation(
    o: &Preactivations,
    biases: &[f64],
    height: usize,
    valid_len: usize,
) -> Result<FeatureMap> {
    if biases.len() != o.count {
        return Err(Error::Shape(format!(
            "{} biases for {} filters",
            biases.len(),
            o.count
        )));
    }
    let values = o
        .values
        .chunks(o.len.max(1))
        .zip(biases)
        .flat_map(|(row, &b)| row.iter().map(move |&v| relu(v + b)))
        .collect();
    let valid_mask = (0..o.len).map(|i| i + height <= valid_len).collect();
    Ok(FeatureMap {
        count: o.count,
        len: o.len,
        values,
        valid_mask,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pooled {
    pub values: Vec<f64>,
    /// Position of each maximum; ties go to the lowest index.
    pub argmax: Vec<usize>,
}

/// Max over the valid positions of each filter's feature map.
pub fn max_pool(c: &FeatureMap) -> Result<Pooled> {
    let valid: Vec<usize> = (0..c.len).filter(|&i| c.valid_mask[i]).collect();
    if valid.is_empty() {
        return Err(Error::AllMasked);
    }
    let mut values = Vec::with_capacity(c.count);
    let mut argmax = Vec::with_capacity(c.count);
    for f in 0..c.count {
        let row = c.filter(f);
        let best = valid.iter().copied().fold(valid[0], |best, i| {
            if row[i] > row[best] || row[i].is_nan() && !row[best].is_nan() {
                i
            } else {
                best
            }
        });
        values.push(row[best]);
        argmax.push(best);
    }
    Ok(Pooled { values, argmax })
}

/// Output of [`dropout`]: the kept values and the per-coordinate factor
/// (0 or `1/(1-rate)`) used for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Dropped {
    pub values: Vec<f64>,
    pub mask: Vec<f64>,
}

/// Inverted dropout. Identity when `training` is false or `rate` is 0.
pub fn dropout(v: &[f64], rate: f64, rng: &mut Rng, training: bool) -> Result<Dropped> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
    }
    if !training || rate == 0.0 {
        return Ok(Dropped {
            values: v.to_vec(),
            mask: vec![1.0; v.len()],
        });
    }
    let scale = 1.0 / (1.0 - rate);
    let mask: Vec<f64> = v
        .iter()
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { scale })
        .collect();
    let values = v.iter().zip(&mask).map(|(x, m)| x * m).collect();
    Ok(Dropped { values, mask })
}

/// Fully connected softmax classifier: `inputs x classes` weights
/// (row-major, `[input][class]`) and one bias per class.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxHead {
    pub inputs: usize,
    pub classes: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl SoftmaxHead {
    pub fn zeros(inputs: usize, classes: usize) -> Self {
        Self {
            inputs,
            classes,
            weights: vec![0.0; inputs * classes],
            bias: vec![0.0; classes],
        }
    }

    pub fn uniform(inputs: usize, classes: usize, range: f64, rng: &mut Rng) -> Self {
        let mut head = Self::zeros(inputs, classes);
        for w in &mut head.weights {
            *w = rng.gen_range(-range..=range);
        }
        head
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.inputs {
            return Err(Error::Shape(format!(
                "{} features for a {}-input head",
                x.len(),
                self.inputs
            )));
        }
        let mut z = self.bias.clone();
        for (xj, row) in x.iter().zip(self.weights.chunks_exact(self.classes)) {
            axpy(*xj, row, &mut z);
        }
        Ok(z)
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

/// Max-shifted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn softmax_forward(x: &[f64], head: &SoftmaxHead) -> Result<Vec<f64>> {
    Ok(softmax(&head.logits(x)?))
}

/// `weight * -ln(max(p[label], 1e-12))`.
pub fn weighted_nll_loss(probs: &[f64], label: usize, weight: f64) -> f64 {
    if weight == 0.0 {
        return 0.0;
    }
    -weight * probs[label].max(PROB_FLOOR).ln()
}
