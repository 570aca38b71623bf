//! The pipeline stages behind each subcommand.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use boostcnn::corpus::{
    encode_sentences, load_essays, read_corpus_cache, read_sentences, write_corpus_cache,
    write_sentences, ClassCounts, CsvFormat, Dataset, EncodedCorpus, Trait, Vocabulary,
};
use boostcnn::embedding::{build_input_channels, EmbeddingTable, SkipGram};
use boostcnn::ensemble::{load_ensemble, save_ensemble, ENSEMBLE_MANIFEST};
use boostcnn::experiment::{
    generate_synthetic_corpus, parallel_map, plan_experiment, round_record, score, train_job,
    ExperimentReport, Job,
};
use boostcnn::{io, Error};

use crate::config::RunConfig;

/// Pairs used for the printed Skip-Gram objective estimate.
pub const OBJECTIVE_SAMPLE: usize = 2000;

pub const CORPUS_FILE: &str = "corpus.tsv";
pub const SENTENCES_FILE: &str = "sentences.txt";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const EMBEDDING_FILE: &str = "embedding.bin";
pub const MODELS_DIR: &str = "models";
pub const JOB_FILE: &str = "job.json";
pub const RESULTS_FILE: &str = "results.json";

/// File locations under the cache directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(cfg: &RunConfig) -> Self {
        Self {
            root: cfg.cache_dir.clone(),
        }
    }

    pub fn corpus(&self) -> PathBuf {
        self.root.join(CORPUS_FILE)
    }

    pub fn sentences(&self) -> PathBuf {
        self.root.join(SENTENCES_FILE)
    }

    pub fn vocab(&self) -> PathBuf {
        self.root.join(VOCAB_FILE)
    }

    pub fn embedding(&self) -> PathBuf {
        self.root.join(EMBEDDING_FILE)
    }

    pub fn model_dir(&self, job: &Job) -> PathBuf {
        self.root
            .join(MODELS_DIR)
            .join(job.variant.name())
            .join(job.trait_.code())
            .join(format!("round{}", job.round))
    }

    pub fn results(&self) -> PathBuf {
        self.root.join(RESULTS_FILE)
    }
}

fn require(path: &Path, stage: &str) -> Result<()> {
    if !path.exists() {
        return Err(Error::Config(format!(
            "{} not found; run `boostcnn {stage}` first",
            path.display()
        ))
        .into());
    }
    Ok(())
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    if let Some(spec) = &cfg.synthetic {
        return Ok(generate_synthetic_corpus(spec, cfg.seed)?);
    }
    let path = cfg.dataset.as_ref().ok_or_else(|| {
        Error::Config("no input: set `dataset` to an essays CSV or configure `synthetic`".into())
    })?;
    Ok(load_essays(path, &CsvFormat::default())?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessSummary {
    pub documents: usize,
    pub vocab_size: usize,
    pub counts: [ClassCounts; 5],
}

pub fn preprocess(cfg: &RunConfig, out: &mut dyn Write) -> Result<PreprocessSummary> {
    let dataset = load_dataset(cfg)?;
    let vocab = dataset.build_vocab(cfg.min_count)?;
    let corpus = EncodedCorpus::encode(&dataset, &vocab, cfg.max_len)?;
    let sentences = encode_sentences(&dataset, &vocab);
    let layout = Layout::new(cfg);
    write_corpus_cache(&layout.corpus(), &corpus)?;
    write_sentences(&layout.sentences(), &sentences)?;
    vocab.save(&layout.vocab())?;

    let summary = PreprocessSummary {
        documents: corpus.documents.len(),
        vocab_size: vocab.len(),
        counts: corpus.trait_counts(),
    };
    writeln!(
        out,
        "documents {}, vocabulary {} (min_count {}), max_len {}",
        summary.documents, summary.vocab_size, cfg.min_count, cfg.max_len
    )?;
    writeln!(out, "trait  positive  negative")?;
    for t in Trait::ALL {
        let c = summary.counts[t.index()];
        writeln!(out, "{:<5}  {:>8}  {:>8}", t.code(), c.positive, c.negative)?;
    }
    writeln!(out, "wrote {}", layout.root.display())?;
    Ok(summary)
}

/// Trains Skip-Gram vectors and returns the objective estimate after each
/// epoch, starting with the initial one.
pub fn train_embed(cfg: &RunConfig, out: &mut dyn Write) -> Result<Vec<f64>> {
    let layout = Layout::new(cfg);
    require(&layout.sentences(), "preprocess")?;
    require(&layout.vocab(), "preprocess")?;
    let vocab = Vocabulary::load(&layout.vocab())?;
    let sentences = read_sentences(&layout.sentences())?;
    let sg = cfg.skipgram();
    let epochs = sg.epochs;
    let mut model = SkipGram::new(sentences, vocab.len(), sg)?;
    let mut objectives = vec![model.objective(Some(OBJECTIVE_SAMPLE))?];
    writeln!(
        out,
        "skip-gram: {} pairs per epoch, vocabulary {}, dim {}",
        model.pairs_per_epoch(),
        vocab.len(),
        cfg.dim
    )?;
    writeln!(out, "epoch 0 objective {:.6}", objectives[0])?;
    for epoch in 1..=epochs {
        model.train_epoch();
        let obj = model.objective(Some(OBJECTIVE_SAMPLE))?;
        writeln!(out, "epoch {epoch} objective {obj:.6}")?;
        objectives.push(obj);
    }
    let table = model.into_input();
    table.save(&layout.embedding())?;
    writeln!(
        out,
        "final objective estimate {:.6}",
        objectives[objectives.len() - 1]
    )?;
    writeln!(out, "wrote {}", layout.embedding().display())?;
    Ok(objectives)
}

struct Inputs {
    corpus: EncodedCorpus,
    pretrained: Option<EmbeddingTable>,
}

fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let layout = Layout::new(cfg);
    require(&layout.corpus(), "preprocess")?;
    let corpus = read_corpus_cache(&layout.corpus())?;
    let pretrained = if cfg.variants.iter().any(|v| v.needs_pretrained()) {
        require(&layout.embedding(), "train-embed")?;
        let table = EmbeddingTable::load(&layout.embedding())?;
        if table.dim() != cfg.dim || table.n_rows() != corpus.vocab_size {
            return Err(Error::Config(format!(
                "{} is {}x{}, expected {}x{}; rerun `boostcnn train-embed`",
                layout.embedding().display(),
                table.n_rows(),
                table.dim(),
                corpus.vocab_size,
                cfg.dim
            ))
            .into());
        }
        Some(table)
    } else {
        None
    };
    Ok(Inputs { corpus, pretrained })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedJob {
    pub job: Job,
    pub best_epoch: usize,
    pub val_accuracy: f64,
}

/// Trains every grid job and writes its checkpoint directory.
pub fn train(cfg: &RunConfig, out: &mut dyn Write) -> Result<Vec<TrainedJob>> {
    let inputs = load_inputs(cfg)?;
    let exp = cfg.experiment();
    let plan = plan_experiment(&inputs.corpus, &exp)?;
    let layout = Layout::new(cfg);
    writeln!(out, "training {} jobs", plan.jobs.len())?;
    let done = parallel_map(cfg.jobs, &plan.jobs, |job| {
        let (model, base) = train_job(&inputs.corpus, inputs.pretrained.as_ref(), &exp, job)?;
        let dir = layout.model_dir(job);
        save_ensemble(&dir, &model, &base).map_err(|e| job.wrap(e))?;
        let job_json = serde_json::to_string_pretty(job).expect("job serializes") + "\n";
        io::write_atomic(&dir.join(JOB_FILE), job_json.as_bytes()).map_err(|e| job.wrap(e))?;
        Ok(TrainedJob {
            job: job.clone(),
            best_epoch: model.best_epoch,
            val_accuracy: model.log[model.best_epoch - 1].val_accuracy,
        })
    })?;
    for t in &done {
        writeln!(
            out,
            "{} {} round {}: best epoch {} validation accuracy {:.4}",
            t.job.variant, t.job.trait_, t.job.round, t.best_epoch, t.val_accuracy
        )?;
    }
    Ok(done)
}

/// Scores every checkpoint on its test chunk and writes the results file.
pub fn evaluate(cfg: &RunConfig, out: &mut dyn Write) -> Result<ExperimentReport> {
    let inputs = load_inputs(cfg)?;
    let exp = cfg.experiment();
    let plan = plan_experiment(&inputs.corpus, &exp)?;
    let layout = Layout::new(cfg);

    let missing: Vec<String> = plan
        .jobs
        .iter()
        .map(|j| layout.model_dir(j).join(ENSEMBLE_MANIFEST))
        .filter(|p| !p.exists())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Config(format!(
            "{} of {} checkpoints missing (run `boostcnn train`): {}",
            missing.len(),
            plan.jobs.len(),
            missing.join(", ")
        ))
        .into());
    }

    let rounds = parallel_map(cfg.jobs, &plan.jobs, |job| {
        let dir = layout.model_dir(job);
        let saved: Job = serde_json::from_slice(&io::read(&dir.join(JOB_FILE))?)
            .map_err(|e| Error::Format(format!("{}: {e}", dir.join(JOB_FILE).display())))?;
        if &saved != job {
            return Err(Error::Format(format!(
                "{} was trained with a different split or seed; rerun `boostcnn train`",
                dir.display()
            )));
        }
        let dim = inputs.pretrained.as_ref().map_or(cfg.dim, |p| p.dim());
        let base = build_input_channels(
            job.variant,
            inputs.corpus.vocab_size,
            inputs.pretrained.as_ref(),
            dim,
            job.seed,
        )?;
        let model = load_ensemble(&dir, &base).map_err(|e| job.wrap(e))?;
        let counts = score(&model, &inputs.corpus, &job.test)?;
        round_record(job, &model, counts)
    })?;
    let dim = inputs.pretrained.as_ref().map_or(cfg.dim, |p| p.dim());
    let report =
        ExperimentReport::assemble(cfg.seed, cfg.folds, dim, cfg.hyper(), plan.balance, rounds)?;
    report.save(&layout.results())?;
    write!(out, "{}", report.render_table())?;
    writeln!(out, "wrote {}", layout.results().display())?;
    Ok(report)
}

/// Merges result files and prints the table. Defaults to the cache's
/// results file.
pub fn report(
    cfg: &RunConfig,
    paths: &[PathBuf],
    save_to: Option<&Path>,
    out: &mut dyn Write,
) -> Result<ExperimentReport> {
    let paths = if paths.is_empty() {
        vec![Layout::new(cfg).results()]
    } else {
        paths.to_vec()
    };
    let parts = paths
        .iter()
        .map(|p| {
            require(p, "evaluate")?;
            ExperimentReport::load(p).with_context(|| format!("reading {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let merged = ExperimentReport::merge(parts)?;
    write!(out, "{}", merged.render_table())?;
    if let Some(path) = save_to {
        merged.save(path)?;
        writeln!(out, "wrote {}", path.display())?;
    }
    Ok(merged)
}
