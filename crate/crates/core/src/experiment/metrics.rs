use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

/// Binary confusion counts with [`Label::Positive`] as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn record(&mut self, predicted: Label, actual: Label) {
        match (predicted, actual) {
            (Label::Positive, Label::Positive) => self.tp += 1,
            (Label::Negative, Label::Negative) => self.tn += 1,
            (Label::Positive, Label::Negative) => self.fp += 1,
            (Label::Negative, Label::Positive) => self.fn_ += 1,
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> Self {
        let mut c = Self::default();
        for (p, a) in pairs {
            c.record(p, a);
        }
        c
    }
}

/// `(TP + TN) / (TP + FP + FN + TN)`.
pub fn accuracy(counts: &ConfusionCounts) -> Result<f64> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok((counts.tp + counts.tn) as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let c = ConfusionCounts {
            tp: 2,
            tn: 3,
            fp: 1,
            fn_: 4,
        };
        assert_eq!(accuracy(&c).unwrap(), 0.5);
        let c = ConfusionCounts {
            tp: 7,
            tn: 0,
            fp: 0,
            fn_: 0,
        };
        assert_eq!(accuracy(&c).unwrap(), 1.0);
        assert!(accuracy(&ConfusionCounts::default()).is_err());
    }

    #[test]
    fn record_quadrants() {
        use Label::*;
        let c = ConfusionCounts::from_pairs([
            (Positive, Positive),
            (Negative, Negative),
            (Negative, Negative),
            (Positive, Negative),
            (Negative, Positive),
        ]);
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 1,
                tn: 2,
                fp: 1,
                fn_: 1
            }
        );
    }
}
