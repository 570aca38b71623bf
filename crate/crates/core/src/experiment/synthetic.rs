use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Document, Label, TraitLabels};
use crate::error::{Error, Result};
use crate::rng;

/// Shape of a planted n-gram corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_docs: usize,
    pub doc_len: usize,
    pub vocab_size: usize,
    pub planted_len: usize,
    pub noise: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_docs: 500,
            doc_len: 40,
            vocab_size: 50,
            planted_len: 3,
            noise: 0.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.n_docs < 2 {
            return fail(format!(
                "synthetic corpus needs at least 2 documents, got {}",
                self.n_docs
            ));
        }
        if self.planted_len == 0 {
            return fail("planted n-gram length must be positive".into());
        }
        if self.doc_len < self.planted_len {
            return fail(format!(
                "document length {} is shorter than the planted n-gram ({})",
                self.doc_len, self.planted_len
            ));
        }
        if self.vocab_size < 2 {
            return fail(format!(
                "synthetic vocabulary needs at least 2 words, got {}",
                self.vocab_size
            ));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return fail(format!("noise rate {} is outside [0, 1]", self.noise));
        }
        Ok(())
    }

    /// Number of documents whose label is flipped.
    pub fn flipped(&self) -> usize {
        (self.noise * self.n_docs as f64).round() as usize
    }
}

/// The planted n-gram: `w0 w1 ... w{len-1}`, cycling when the vocabulary is
/// smaller than the n-gram.
pub fn planted_ngram(spec: &SyntheticSpec) -> Vec<String> {
    (0..spec.planted_len)
        .map(|i| word(i % spec.vocab_size))
        .collect()
}

fn word(i: usize) -> String {
    format!("w{i}")
}

fn contains(haystack: &[usize], needle: &[usize]) -> bool {
    haystack.windows(needle.len()).any(|w| w == needle)
}

/// Builds a corpus whose clean label is +1 exactly when the planted n-gram
/// occurs. Half of the documents (rounded down) are positive. Then
/// `round(noise * n_docs)` labels are flipped. All five traits share the label.
pub fn generate_synthetic_corpus(spec: &SyntheticSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let planted: Vec<usize> = (0..spec.planted_len).map(|i| i % spec.vocab_size).collect();
    let mut r = rng::substream(seed, &["synthetic"]);
    let n_pos = spec.n_docs / 2;
    let mut clean: Vec<Label> = (0..spec.n_docs)
        .map(|i| {
            if i < n_pos {
                Label::Positive
            } else {
                Label::Negative
            }
        })
        .collect();
    clean.shuffle(&mut r);

    let mut bodies = Vec::with_capacity(spec.n_docs);
    for &label in &clean {
        let mut ids: Vec<usize> = Vec::with_capacity(spec.doc_len);
        loop {
            ids.clear();
            ids.extend((0..spec.doc_len).map(|_| r.gen_range(0..spec.vocab_size)));
            if label == Label::Positive {
                let at = r.gen_range(0..=spec.doc_len - spec.planted_len);
                ids[at..at + spec.planted_len].copy_from_slice(&planted);
                break;
            }
            if !contains(&ids, &planted) {
                break;
            }
        }
        bodies.push(ids);
    }

    let mut order: Vec<usize> = (0..spec.n_docs).collect();
    order.shuffle(&mut r);
    let mut labels = clean;
    for &i in &order[..spec.flipped()] {
        labels[i] = labels[i].flip();
    }

    let documents = bodies
        .into_iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (ids, label))| {
            let words: Vec<String> = ids.into_iter().map(word).collect();
            Document {
                id: format!("syn{i:05}"),
                raw_text: format!("{}.", words.join(" ")),
                labels: TraitLabels::uniform(label),
            }
        })
        .collect();
    Ok(Dataset { documents })
}
