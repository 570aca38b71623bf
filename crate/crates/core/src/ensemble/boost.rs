//! AdaBoost bookkeeping: sample distribution, weighted error, classifier
//! weight and the weighted-vote fusion.

use crate::corpus::Label;
use crate::error::{Error, Result};

/// Bounds applied to the weighted error before taking the log-odds.
pub const ERROR_CLAMP: f64 = 1e-10;

/// Per-sample weights over the training set, summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleDistribution {
    pub weights: Vec<f64>,
    /// 1 after initialization, incremented by every update.
    pub round: usize,
}

impl SampleDistribution {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Loss scale per sample: `n * D_i`, mean 1.
    pub fn loss_scales(&self) -> Vec<f64> {
        let n = self.weights.len() as f64;
        self.weights.iter().map(|w| w * n).collect()
    }
}

pub fn init_distribution(n: usize) -> Result<SampleDistribution> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(SampleDistribution {
        weights: vec![1.0 / n as f64; n],
        round: 1,
    })
}

fn check_lengths(d: &SampleDistribution, preds: &[Label], labels: &[Label]) -> Result<()> {
    if preds.len() != labels.len() || preds.len() != d.len() {
        return Err(Error::Shape(format!(
            "{} predictions, {} labels, {} sample weights",
            preds.len(),
            labels.len(),
            d.len()
        )));
    }
    Ok(())
}

/// Distribution mass of the misclassified samples.
pub fn weak_error(preds: &[Label], labels: &[Label], d: &SampleDistribution) -> Result<f64> {
    check_lengths(d, preds, labels)?;
    Ok(preds
        .iter()
        .zip(labels)
        .zip(&d.weights)
        .filter(|((p, y), _)| p != y)
        .map(|(_, w)| w)
        .sum())
}

/// `½ ln((1 - e) / e)` with `e` clamped to `[1e-10, 1 - 1e-10]`.
pub fn classifier_weight(e: f64) -> f64 {
    let e = e.clamp(ERROR_CLAMP, 1.0 - ERROR_CLAMP);
    0.5 * ((1.0 - e) / e).ln()
}

/// Multiplies each weight by `exp(-a * y_i * G_i)` and renormalizes.
pub fn update_distribution(
    d: &SampleDistribution,
    a: f64,
    preds: &[Label],
    labels: &[Label],
) -> Result<SampleDistribution> {
    check_lengths(d, preds, labels)?;
    let mut weights: Vec<f64> = d
        .weights
        .iter()
        .zip(preds.iter().zip(labels))
        .map(|(w, (p, y))| w * (-a * f64::from(y.sign() * p.sign())).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Shape(format!("distribution normalizer {z}")));
    }
    weights.iter_mut().for_each(|w| *w /= z);
    Ok(SampleDistribution {
        weights,
        round: d.round + 1,
    })
}

/// `sign(Σ a_m G_m)`, with a zero sum counted as positive.
pub fn fuse_votes(weights: &[f64], votes: &[Label]) -> Label {
    let score: f64 = weights
        .iter()
        .zip(votes)
        .map(|(a, v)| a * f64::from(v.sign()))
        .sum();
    if score >= 0.0 {
        Label::Positive
    } else {
        Label::Negative
    }
}
