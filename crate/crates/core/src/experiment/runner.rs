use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{kfold_split, stratify_binary};
use super::metrics::{accuracy, ConfusionCounts};
use super::report::{BalanceRecord, ExperimentReport, RoundRecord};
use crate::corpus::{EncodedCorpus, Trait};
use crate::embedding::{build_input_channels, ChannelSpec, EmbeddingTable, Variant};
use crate::ensemble::{train_adaboost_cnn, EnsembleModel, Example, HyperParams};
use crate::error::{Error, Result};
use crate::rng;

/// The grid to run and how to run it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub variants: Vec<Variant>,
    pub traits: Vec<Trait>,
    pub hyper: HyperParams,
    pub folds: usize,
    /// Width of randomly initialized embedding channels.
    pub embedding_dim: usize,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            variants: Variant::ALL.to_vec(),
            traits: Trait::ALL.to_vec(),
            hyper: HyperParams::default(),
            folds: 5,
            embedding_dim: 150,
            seed: 0,
            jobs: 0,
        }
    }
}

/// One (variant, trait, round) cell of the grid. Index lists point into the
/// encoded corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Job {
    pub variant: Variant,
    #[serde(rename = "trait")]
    pub trait_: Trait,
    pub round: usize,
    pub seed: u64,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl Job {
    pub fn wrap(&self, e: Error) -> Error {
        Error::Job {
            variant: self.variant.to_string(),
            trait_: self.trait_.to_string(),
            round: self.round,
            source: Box::new(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub jobs: Vec<Job>,
    pub balance: Vec<BalanceRecord>,
}

/// Balances every trait, splits it into folds and lists the jobs in
/// (variant, trait, round) order. Splits depend on the trait only, so all
/// variants see the same chunks.
pub fn plan_experiment(corpus: &EncodedCorpus, cfg: &ExperimentConfig) -> Result<ExperimentPlan> {
    cfg.hyper.validate()?;
    if cfg.variants.is_empty() || cfg.traits.is_empty() {
        return Err(Error::Config(
            "need at least one variant and one trait".into(),
        ));
    }
    let shortest = corpus.min_valid_len();
    if shortest < cfg.hyper.max_filter_size() {
        return Err(Error::TooShort {
            len: shortest,
            height: cfg.hyper.max_filter_size(),
        });
    }
    let mut variants = cfg.variants.clone();
    variants.sort();
    variants.dedup();
    let mut traits = cfg.traits.clone();
    traits.sort();
    traits.dedup();

    let mut splits = Vec::new();
    let mut balance = Vec::new();
    for &t in &traits {
        let view = stratify_binary(
            &corpus.documents,
            t,
            rng::derive_seed(cfg.seed, &["stratify", t.code()]),
        )?;
        let plan = kfold_split(
            view.len(),
            cfg.folds,
            rng::derive_seed(cfg.seed, &["folds", t.code()]),
        )?;
        balance.push(BalanceRecord {
            trait_: t,
            original: view.original,
            kept: view.counts(),
        });
        splits.push((t, view, plan));
    }

    let mut jobs = Vec::new();
    for &v in &variants {
        for (t, view, plan) in &splits {
            for round in plan.rounds() {
                let map = |ix: Vec<usize>| ix.into_iter().map(|i| view.indices[i]).collect();
                jobs.push(Job {
                    variant: v,
                    trait_: *t,
                    round: round.round,
                    seed: rng::derive_seed(
                        cfg.seed,
                        &["job", v.name(), t.code(), &round.round.to_string()],
                    ),
                    train: map(round.train),
                    validation: map(round.validation),
                    test: map(round.test),
                });
            }
        }
    }
    Ok(ExperimentPlan { jobs, balance })
}

fn examples<'a>(corpus: &'a EncodedCorpus, trait_: Trait, indices: &[usize]) -> Vec<Example<'a>> {
    indices
        .iter()
        .map(|&i| {
            let doc = &corpus.documents[i];
            Example {
                doc,
                label: doc.labels.get(trait_),
            }
        })
        .collect()
}

/// Builds the job's input channels and trains its ensemble. The returned
/// channel spec is the untrained base that checkpoints are relative to.
pub fn train_job(
    corpus: &EncodedCorpus,
    pretrained: Option<&EmbeddingTable>,
    cfg: &ExperimentConfig,
    job: &Job,
) -> Result<(EnsembleModel, ChannelSpec)> {
    let run = || {
        let dim = pretrained.map_or(cfg.embedding_dim, |p| p.dim());
        let channels =
            build_input_channels(job.variant, corpus.vocab_size, pretrained, dim, job.seed)?;
        let model = train_adaboost_cnn(
            job.trait_,
            &examples(corpus, job.trait_, &job.train),
            &examples(corpus, job.trait_, &job.validation),
            &channels,
            &cfg.hyper,
            job.seed,
        )?;
        Ok((model, channels))
    };
    run().map_err(|e| job.wrap(e))
}

/// Confusion counts of `model` on the listed documents.
pub fn score(
    model: &EnsembleModel,
    corpus: &EncodedCorpus,
    indices: &[usize],
) -> Result<ConfusionCounts> {
    let mut counts = ConfusionCounts::default();
    for ex in examples(corpus, model.trait_, indices) {
        counts.record(model.predict(ex.doc)?, ex.label);
    }
    Ok(counts)
}

pub fn round_record(
    job: &Job,
    model: &EnsembleModel,
    counts: ConfusionCounts,
) -> Result<RoundRecord> {
    Ok(RoundRecord {
        variant: job.variant,
        trait_: job.trait_,
        round: job.round,
        accuracy: accuracy(&counts)?,
        seed: job.seed,
        best_epoch: model.best_epoch,
        counts,
    })
}

/// Runs `f` over `items` on `threads` workers (0 = all cores), keeping input
/// order in the output.
pub fn parallel_map<T, R, F>(threads: usize, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

/// Trains and tests every (variant, trait, round) job and summarizes the
/// grid. The report does not depend on thread count or completion order.
pub fn run_experiment(
    corpus: &EncodedCorpus,
    pretrained: Option<&EmbeddingTable>,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    let plan = plan_experiment(corpus, cfg)?;
    let rounds = parallel_map(cfg.jobs, &plan.jobs, |job| {
        let (model, _) = train_job(corpus, pretrained, cfg, job)?;
        let counts = score(&model, corpus, &job.test).map_err(|e| job.wrap(e))?;
        round_record(job, &model, counts)
    })?;
    let dim = pretrained.map_or(cfg.embedding_dim, |p| p.dim());
    ExperimentReport::assemble(
        cfg.seed,
        cfg.folds,
        dim,
        cfg.hyper.clone(),
        plan.balance,
        rounds,
    )
}
