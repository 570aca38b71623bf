//! Ensemble checkpoint directory.
//!
//! `ensemble.json` holds the trait, variant, vote weights, the best epoch and
//! the per-epoch training log, and names one binary weak-classifier
//! checkpoint per filter height (see [`crate::neural::encode_checkpoint`]).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EnsembleModel, EpochLog, WeakClassifier};
use crate::corpus::Trait;
use crate::embedding::{ChannelSpec, Variant};
use crate::error::{Error, Result};
use crate::io::{read, write_atomic};
use crate::neural::{decode_checkpoint, encode_checkpoint};

pub const ENSEMBLE_MANIFEST: &str = "ensemble.json";
const FORMAT: &str = "boostcnn-ensemble";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    version: u32,
    #[serde(rename = "trait")]
    trait_: Trait,
    variant: Variant,
    best_epoch: usize,
    classifiers: Vec<ClassifierEntry>,
    log: Vec<EpochLog>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifierEntry {
    height: usize,
    weight: f64,
    checkpoint: String,
}

/// Writes the manifest and one `weak-<m>-h<height>.bin` per classifier into
/// `dir`. `base` is the channel layout training started from.
pub fn save_ensemble(dir: &Path, model: &EnsembleModel, base: &ChannelSpec) -> Result<()> {
    let mut classifiers = Vec::with_capacity(model.classifiers.len());
    for (m, (clf, &weight)) in model.classifiers.iter().zip(&model.weights).enumerate() {
        let name = format!("weak-{m}-h{}.bin", clf.height());
        write_atomic(
            &dir.join(&name),
            &encode_checkpoint(&clf.net, &clf.channels, base)?,
        )?;
        classifiers.push(ClassifierEntry {
            height: clf.height(),
            weight,
            checkpoint: name,
        });
    }
    let manifest = Manifest {
        format: FORMAT.into(),
        version: VERSION,
        trait_: model.trait_,
        variant: base.variant,
        best_epoch: model.best_epoch,
        classifiers,
        log: model.log.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    write_atomic(&dir.join(ENSEMBLE_MANIFEST), (json + "\n").as_bytes())
}

pub fn load_ensemble(dir: &Path, base: &ChannelSpec) -> Result<EnsembleModel> {
    let path = dir.join(ENSEMBLE_MANIFEST);
    let manifest: Manifest = serde_json::from_slice(&read(&path)?)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if manifest.format != FORMAT || manifest.version != VERSION {
        return Err(Error::Format(format!(
            "{}: {} v{}, expected {FORMAT} v{VERSION}",
            path.display(),
            manifest.format,
            manifest.version
        )));
    }
    if manifest.variant != base.variant {
        return Err(Error::Format(format!(
            "checkpoint variant {} does not match {}",
            manifest.variant, base.variant
        )));
    }
    let mut classifiers = Vec::with_capacity(manifest.classifiers.len());
    let mut weights = Vec::with_capacity(manifest.classifiers.len());
    for entry in &manifest.classifiers {
        let (net, channels) = decode_checkpoint(&read(&dir.join(&entry.checkpoint))?, base)?;
        if net.height() != entry.height {
            return Err(Error::Format(format!(
                "{} has height {}",
                entry.checkpoint,
                net.height()
            )));
        }
        classifiers.push(WeakClassifier { net, channels });
        weights.push(entry.weight);
    }
    Ok(EnsembleModel {
        trait_: manifest.trait_,
        classifiers,
        weights,
        best_epoch: manifest.best_epoch,
        log: manifest.log,
    })
}
