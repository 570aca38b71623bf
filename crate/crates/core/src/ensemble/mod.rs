//! Three filter-height weak classifiers fused by AdaBoost.

mod boost;
mod checkpoint;
mod train;
mod weak;

use serde::{Deserialize, Serialize};

use crate::corpus::{EncodedDocument, Label};
use crate::error::{Error, Result};
use crate::neural::AdadeltaConfig;

pub use boost::{
    classifier_weight, fuse_votes, init_distribution, update_distribution, weak_error,
    SampleDistribution, ERROR_CLAMP,
};
pub use checkpoint::{load_ensemble, save_ensemble, ENSEMBLE_MANIFEST};
pub use train::{ensemble_predict, train_adaboost_cnn, EnsembleModel, EpochLog};
pub use weak::WeakClassifier;

/// A document paired with the label of the trait being learned.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub doc: &'a EncodedDocument,
    pub label: Label,
}

/// Classifier training hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Filter heights, one weak classifier each, boosted in this order.
    pub filter_sizes: Vec<usize>,
    /// Filters per weak classifier.
    pub filters: usize,
    pub dropout: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub adadelta: AdadeltaConfig,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            filter_sizes: vec![3, 4, 5],
            filters: 150,
            dropout: 0.05,
            batch_size: 25,
            epochs: 60,
            adadelta: AdadeltaConfig::default(),
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.filter_sizes.is_empty() || self.filter_sizes.contains(&0) {
            return fail(format!(
                "filter sizes {:?} must be non-empty and positive",
                self.filter_sizes
            ));
        }
        if self.filters == 0 {
            return fail("number of filters must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.batch_size == 0 {
            return fail("batch size must be positive".into());
        }
        if self.epochs == 0 {
            return fail("epochs must be positive".into());
        }
        self.adadelta.validate()
    }

    pub fn max_filter_size(&self) -> usize {
        self.filter_sizes.iter().copied().max().unwrap_or(0)
    }
}
