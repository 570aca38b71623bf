//! Run configuration: a flat TOML file plus `key=value` overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use boostcnn::corpus::Trait;
use boostcnn::embedding::{SkipGramConfig, Variant};
use boostcnn::ensemble::HyperParams;
use boostcnn::experiment::{ExperimentConfig, SyntheticSpec};
use boostcnn::neural::AdadeltaConfig;
use boostcnn::Error;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Essays CSV. Ignored when `synthetic` is set.
    pub dataset: Option<PathBuf>,
    pub cache_dir: PathBuf,
    pub min_count: usize,
    pub max_len: usize,
    pub window: usize,
    pub dim: usize,
    pub skipgram_lr: f64,
    pub skipgram_min_lr: f64,
    pub skipgram_epochs: usize,
    pub negative: usize,
    pub filter_sizes: Vec<usize>,
    pub filters: usize,
    pub activation: String,
    pub cnn_step: f64,
    pub rho: f64,
    pub eps: f64,
    pub dropout: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub update_rule: String,
    pub variants: Vec<Variant>,
    pub traits: Vec<Trait>,
    pub seed: u64,
    pub folds: usize,
    /// Worker threads for the grid; 0 uses every core.
    pub jobs: usize,
    pub synthetic: Option<SyntheticSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sg = SkipGramConfig::default();
        let hyper = HyperParams::default();
        Self {
            dataset: None,
            cache_dir: PathBuf::from("cache"),
            min_count: 2,
            max_len: 400,
            window: sg.window,
            dim: sg.dim,
            skipgram_lr: sg.learning_rate,
            skipgram_min_lr: sg.min_learning_rate,
            skipgram_epochs: sg.epochs,
            negative: sg.negative,
            filter_sizes: hyper.filter_sizes,
            filters: hyper.filters,
            activation: "relu".into(),
            cnn_step: hyper.adadelta.step_scale,
            rho: hyper.adadelta.rho,
            eps: hyper.adadelta.eps,
            dropout: hyper.dropout,
            batch_size: hyper.batch_size,
            epochs: hyper.epochs,
            update_rule: "adadelta".into(),
            variants: Variant::ALL.to_vec(),
            traits: Trait::ALL.to_vec(),
            seed: 0,
            folds: 5,
            jobs: 0,
            synthetic: None,
        }
    }
}

impl RunConfig {
    /// Reads `path` (or starts from defaults) and applies `overrides`.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                    path: p.to_path_buf(),
                    source: e,
                })?;
                text.parse::<toml::Table>()
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for kv in overrides {
            apply_override(&mut table, kv)?;
        }
        let cfg = Self::from_table(table)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        Ok(toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table = text
            .parse::<toml::Table>()
            .map_err(|e| Error::Config(e.to_string()))?;
        let cfg = Self::from_table(table)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| -> Result<()> { Err(Error::Config(m).into()) };
        if self.activation != "relu" {
            return fail(format!(
                "activation {:?} is not supported (only \"relu\")",
                self.activation
            ));
        }
        if self.update_rule != "adadelta" {
            return fail(format!(
                "update rule {:?} is not supported (only \"adadelta\")",
                self.update_rule
            ));
        }
        if self.min_count == 0 {
            return fail("min_count must be at least 1".into());
        }
        if self.variants.is_empty() || self.traits.is_empty() {
            return fail("variants and traits must be non-empty".into());
        }
        if self.folds < 3 {
            return fail(format!("folds = {} (need at least 3)", self.folds));
        }
        self.skipgram().validate()?;
        let hyper = self.hyper();
        hyper.validate()?;
        if self.max_len < hyper.max_filter_size() {
            return fail(format!(
                "max_len {} is shorter than the largest filter ({})",
                self.max_len,
                hyper.max_filter_size()
            ));
        }
        if let Some(s) = &self.synthetic {
            s.validate()?;
        }
        Ok(())
    }

    pub fn skipgram(&self) -> SkipGramConfig {
        SkipGramConfig {
            window: self.window,
            dim: self.dim,
            learning_rate: self.skipgram_lr,
            min_learning_rate: self.skipgram_min_lr,
            epochs: self.skipgram_epochs,
            negative: self.negative,
            seed: boostcnn::rng::derive_seed(self.seed, &["skipgram"]),
        }
    }

    pub fn hyper(&self) -> HyperParams {
        HyperParams {
            filter_sizes: self.filter_sizes.clone(),
            filters: self.filters,
            dropout: self.dropout,
            batch_size: self.batch_size,
            epochs: self.epochs,
            adadelta: AdadeltaConfig {
                rho: self.rho,
                eps: self.eps,
                step_scale: self.cnn_step,
            },
        }
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            variants: self.variants.clone(),
            traits: self.traits.clone(),
            hyper: self.hyper(),
            folds: self.folds,
            embedding_dim: self.dim,
            seed: self.seed,
            jobs: self.jobs,
        }
    }
}

/// Sets `key=value` in `table`. Dotted keys reach into sub-tables. The value
/// is read as a TOML value, falling back to a bare string.
pub fn apply_override(table: &mut toml::Table, kv: &str) -> Result<()> {
    let Some((key, raw)) = kv.split_once('=') else {
        bail!(Error::Config(format!("override {kv:?} is not key=value")));
    };
    let key = key.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));

    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!(Error::Config(format!("bad override key {key:?}")));
    }
    let (last, parents) = parts.split_last().expect("split yields one part");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .with_context(|| Error::Config(format!("override {key:?}: {p} is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
