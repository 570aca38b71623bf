use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::ConfusionCounts;
use crate::corpus::{ClassCounts, Trait};
use crate::embedding::Variant;
use crate::ensemble::HyperParams;
use crate::error::{Error, Result};
use crate::{io, rng};

pub const REPORT_FORMAT: &str = "boostcnn-report";
pub const REPORT_VERSION: u32 = 1;

/// Trait column order of the printed table.
pub const TABLE_TRAITS: [Trait; 5] = [Trait::Ext, Trait::Neu, Trait::Agr, Trait::Opn, Trait::Con];

/// Published accuracies (percent) of the boosted CNN on the Essays corpus,
/// for display next to measured values.
pub fn published_accuracy(variant: Variant, trait_: Trait) -> Option<f64> {
    let row: [Option<f64>; 5] = match variant {
        Variant::Rand => [Some(60.05), Some(60.91), Some(58.11), Some(59.34), None],
        Variant::Static => [
            Some(60.12),
            Some(61.05),
            Some(58.35),
            Some(59.68),
            Some(64.05),
        ],
        Variant::NonStatic => [
            Some(60.45),
            Some(61.71),
            Some(58.61),
            Some(60.01),
            Some(64.18),
        ],
        Variant::TwoChannel => [
            Some(61.25),
            Some(61.93),
            Some(59.02),
            Some(60.16),
            Some(64.63),
        ],
    };
    let col = TABLE_TRAITS.iter().position(|&t| t == trait_)?;
    row[col]
}

/// Test-chunk result of one cross-validation round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundRecord {
    pub variant: Variant,
    #[serde(rename = "trait")]
    pub trait_: Trait,
    pub round: usize,
    pub accuracy: f64,
    pub seed: u64,
    pub best_epoch: usize,
    pub counts: ConfusionCounts,
}

/// Class balancing applied to one trait before splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceRecord {
    #[serde(rename = "trait")]
    pub trait_: Trait,
    pub original: ClassCounts,
    pub kept: ClassCounts,
}

impl BalanceRecord {
    pub fn downsampled(&self) -> bool {
        self.original != self.kept
    }
}

/// Mean over the rounds of one (variant, trait) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSummary {
    pub variant: Variant,
    #[serde(rename = "trait")]
    pub trait_: Trait,
    pub accuracies: Vec<f64>,
    pub seeds: Vec<u64>,
    pub mean: f64,
    pub reference_percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentReport {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub folds: usize,
    pub embedding_dim: usize,
    pub hyper: HyperParams,
    /// FNV-1a digest of the training parameters, in hex.
    pub hyper_digest: String,
    pub balance: Vec<BalanceRecord>,
    pub cells: Vec<CellSummary>,
    pub rounds: Vec<RoundRecord>,
}

pub fn hyper_digest(hyper: &HyperParams, embedding_dim: usize, folds: usize) -> String {
    let json =
        serde_json::to_string(&(hyper, embedding_dim, folds)).expect("plain data serializes");
    format!("{:016x}", rng::fnv1a(json.as_bytes()))
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

impl ExperimentReport {
    /// Sorts `rounds` by (variant, trait, round) and summarizes each cell.
    pub fn assemble(
        seed: u64,
        folds: usize,
        embedding_dim: usize,
        hyper: HyperParams,
        mut balance: Vec<BalanceRecord>,
        mut rounds: Vec<RoundRecord>,
    ) -> Result<Self> {
        rounds.sort_by_key(|r| (r.variant, r.trait_, r.round));
        if rounds.windows(2).any(|w| {
            (w[0].variant, w[0].trait_, w[0].round) == (w[1].variant, w[1].trait_, w[1].round)
        }) {
            return Err(Error::Format(
                "duplicate (variant, trait, round) result".into(),
            ));
        }
        balance.sort_by_key(|b| b.trait_);
        balance.dedup();
        let mut cells: Vec<CellSummary> = Vec::new();
        for r in &rounds {
            match cells.last_mut() {
                Some(c) if c.variant == r.variant && c.trait_ == r.trait_ => {
                    c.accuracies.push(r.accuracy);
                    c.seeds.push(r.seed);
                }
                _ => cells.push(CellSummary {
                    variant: r.variant,
                    trait_: r.trait_,
                    accuracies: vec![r.accuracy],
                    seeds: vec![r.seed],
                    mean: 0.0,
                    reference_percent: published_accuracy(r.variant, r.trait_),
                }),
            }
        }
        for c in &mut cells {
            c.mean = mean(&c.accuracies);
        }
        Ok(Self {
            format: REPORT_FORMAT.into(),
            version: REPORT_VERSION,
            seed,
            folds,
            embedding_dim,
            hyper_digest: hyper_digest(&hyper, embedding_dim, folds),
            hyper,
            balance,
            cells,
            rounds,
        })
    }

    /// Combines partial reports of the same run.
    pub fn merge(parts: Vec<ExperimentReport>) -> Result<Self> {
        let first = parts.first().ok_or(Error::EmptyDataset)?;
        let (seed, folds, dim, hyper, digest) = (
            first.seed,
            first.folds,
            first.embedding_dim,
            first.hyper.clone(),
            first.hyper_digest.clone(),
        );
        let mut balance = Vec::new();
        let mut rounds = Vec::new();
        for p in parts {
            if p.seed != seed || p.folds != folds || p.hyper_digest != digest {
                return Err(Error::Format(format!(
                    "cannot merge reports of different runs (digest {} vs {digest})",
                    p.hyper_digest
                )));
            }
            balance.extend(p.balance);
            rounds.extend(p.rounds);
        }
        Self::assemble(seed, folds, dim, hyper, balance, rounds)
    }

    pub fn cell(&self, variant: Variant, trait_: Trait) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.variant == variant && c.trait_ == trait_)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != REPORT_FORMAT || self.version != REPORT_VERSION {
            return Err(Error::Format(format!(
                "expected {REPORT_FORMAT} v{REPORT_VERSION}, found {} v{}",
                self.format, self.version
            )));
        }
        let rebuilt = Self::assemble(
            self.seed,
            self.folds,
            self.embedding_dim,
            self.hyper.clone(),
            self.balance.clone(),
            self.rounds.clone(),
        )?;
        if rebuilt.hyper_digest != self.hyper_digest {
            return Err(Error::Format(
                "hyper-parameter digest does not match".into(),
            ));
        }
        if rebuilt.cells.len() != self.cells.len()
            || rebuilt
                .cells
                .iter()
                .zip(&self.cells)
                .any(|(a, b)| a.accuracies != b.accuracies || (a.mean - b.mean).abs() > 1e-12)
        {
            return Err(Error::Format(
                "cell summaries disagree with round results".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("report: {e}")))?;
        report.validate()?;
        Ok(report)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = io::read(path)?;
        Self::from_json(&String::from_utf8_lossy(&bytes))
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    /// Aligned table of mean test accuracy in percent, one row per variant,
    /// with the published value in parentheses where one exists.
    pub fn render_table(&self) -> String {
        let mut variants: Vec<Variant> = self.cells.iter().map(|c| c.variant).collect();
        variants.dedup();
        let traits: Vec<Trait> = TABLE_TRAITS
            .into_iter()
            .filter(|t| self.cells.iter().any(|c| c.trait_ == *t))
            .collect();

        let text = |c: Option<&CellSummary>| match c {
            None => "-".to_string(),
            Some(c) => match c.reference_percent {
                Some(r) => format!("{:.2} ({r:.2})", 100.0 * c.mean),
                None => format!("{:.2} (n/a)", 100.0 * c.mean),
            },
        };
        let mut rows: Vec<Vec<String>> = vec![std::iter::once("variant".to_string())
            .chain(traits.iter().map(|t| t.code().to_string()))
            .collect()];
        for &v in &variants {
            rows.push(
                std::iter::once(v.name().to_string())
                    .chain(traits.iter().map(|&t| text(self.cell(v, t))))
                    .collect(),
            );
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|j| rows.iter().map(|r| r[j].len()).max().unwrap_or(0))
            .collect();

        let mut out = String::new();
        for row in &rows {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(j, (cell, &w))| {
                    if j == 0 {
                        format!("{cell:<w$}")
                    } else {
                        format!("{cell:>w$}")
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        let _ = writeln!(
            out,
            "mean {}-fold test accuracy %, published value in parentheses; seed {}, params {}",
            self.folds, self.seed, self.hyper_digest
        );
        for b in self.balance.iter().filter(|b| b.downsampled()) {
            let _ = writeln!(
                out,
                "{}: down-sampled {}/{} to {}/{}",
                b.trait_,
                b.original.positive,
                b.original.negative,
                b.kept.positive,
                b.kept.negative
            );
        }
        out
    }
}
