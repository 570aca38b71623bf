use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{ClassCounts, Label, Labeled, Trait};
use crate::error::{Error, Result};
use crate::rng;

/// Seeded partition of `n` items into `k` near-equal chunks.
///
/// Round `r` tests on chunk `r`, validates on chunk `(r + 1) mod k` and trains
/// on the rest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Chunk index of every item.
    pub assignments: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldRound {
    pub round: usize,
    pub test: Vec<usize>,
    pub validation: Vec<usize>,
    pub train: Vec<usize>,
}

impl FoldPlan {
    pub fn n(&self) -> usize {
        self.assignments.len()
    }

    pub fn chunk(&self, c: usize) -> Vec<usize> {
        (0..self.n())
            .filter(|&i| self.assignments[i] == c)
            .collect()
    }

    pub fn chunk_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignments {
            sizes[c] += 1;
        }
        sizes
    }

    pub fn round(&self, r: usize) -> FoldRound {
        let test_chunk = r % self.k;
        let val_chunk = (r + 1) % self.k;
        let mut round = FoldRound {
            round: r,
            test: Vec::new(),
            validation: Vec::new(),
            train: Vec::new(),
        };
        for (i, &c) in self.assignments.iter().enumerate() {
            if c == test_chunk {
                round.test.push(i);
            } else if c == val_chunk {
                round.validation.push(i);
            } else {
                round.train.push(i);
            }
        }
        round
    }

    pub fn rounds(&self) -> impl Iterator<Item = FoldRound> + '_ {
        (0..self.k).map(|r| self.round(r))
    }
}

/// Shuffles `0..n` with `seed` and cuts it into `k` contiguous chunks, the
/// first `n % k` of them one item larger.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 3 {
        return Err(Error::Config(format!(
            "{k} folds leave no training chunk; need at least 3"
        )));
    }
    if n < k {
        return Err(Error::Config(format!("{n} items cannot fill {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded(seed));
    let (base, extra) = (n / k, n % k);
    let mut assignments = vec![0; n];
    let mut pos = 0;
    for c in 0..k {
        let size = base + usize::from(c < extra);
        for &i in &order[pos..pos + size] {
            assignments[i] = c;
        }
        pos += size;
    }
    Ok(FoldPlan {
        k,
        seed,
        assignments,
    })
}

/// Per-trait labeled subset with equal class counts.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedView {
    pub trait_: Trait,
    /// Indices into the source documents, ascending.
    pub indices: Vec<usize>,
    pub labels: Vec<Label>,
    /// Class counts before balancing.
    pub original: ClassCounts,
}

impl BalancedView {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn downsampled(&self) -> bool {
        self.original.positive != self.original.negative
    }

    pub fn counts(&self) -> ClassCounts {
        let positive = self
            .labels
            .iter()
            .filter(|&&l| l == Label::Positive)
            .count();
        ClassCounts {
            positive,
            negative: self.labels.len() - positive,
        }
    }
}

/// Labels of `trait_`; a majority class is randomly down-sampled to the
/// minority size with `seed`.
pub fn stratify_binary<T: Labeled>(docs: &[T], trait_: Trait, seed: u64) -> Result<BalancedView> {
    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) =
        (0..docs.len()).partition(|&i| docs[i].labels().get(trait_) == Label::Positive);
    let original = ClassCounts {
        positive: pos.len(),
        negative: neg.len(),
    };
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Config(format!(
            "trait {trait_} has {} positive and {} negative documents",
            pos.len(),
            neg.len()
        )));
    }
    let keep = pos.len().min(neg.len());
    let mut r = rng::seeded(seed);
    for class in [&mut pos, &mut neg] {
        if class.len() > keep {
            class.shuffle(&mut r);
            class.truncate(keep);
        }
    }
    let mut indices: Vec<usize> = pos.into_iter().chain(neg).collect();
    indices.sort_unstable();
    let labels = indices
        .iter()
        .map(|&i| docs[i].labels().get(trait_))
        .collect();
    Ok(BalancedView {
        trait_,
        indices,
        labels,
        original,
    })
}
